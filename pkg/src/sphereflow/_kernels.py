"""JIT-compiled inner kernel for the flow's curvature stencil.

Numerically equivalent to the numpy route in `curves._curvature_arrays_np`
(verified by test); exists purely because the flow spends millions of steps
inside this stencil.  Falls back to a no-op flag when numba is unavailable.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except Exception:  # pragma: no cover
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


POLE_Z = 1.0 - 1e-8

FAMILY_ROUND = 0
FAMILY_ELLIPSOID = 1
FAMILY_ZOLL = 2


def pack_spec(spec) -> tuple:
    """(family_id, parameter vector) for the jitted kernels."""
    if spec.family == "round":
        return FAMILY_ROUND, np.array([spec.radius**2])
    if spec.family == "ellipsoid":
        return FAMILY_ELLIPSOID, np.array([spec.r**2 - 1.0])
    return FAMILY_ZOLL, np.asarray(spec.profile.coeffs, dtype=float)


@njit(cache=True)
def _beta(family, par, z):
    if family == FAMILY_ROUND:
        return 0.0
    if family == FAMILY_ELLIPSOID:
        return par[0] * (1.0 - z * z)
    z2 = z * z
    acc = 0.0
    for k in range(par.shape[0] - 1, -1, -1):
        acc = acc * z2 + par[k]
    h = z * acc
    return h * (2.0 + h)


@njit(cache=True)
def _beta_prime(family, par, z):
    if family == FAMILY_ROUND:
        return 0.0
    if family == FAMILY_ELLIPSOID:
        return -2.0 * z * par[0]
    z2 = z * z
    acc = 0.0
    dacc = 0.0
    for k in range(par.shape[0] - 1, -1, -1):
        acc = acc * z2 + par[k]
        dacc = dacc * z2 + (2 * k + 1) * par[k]
    h = z * acc
    return 2.0 * (1.0 + h) * dacc


@njit(cache=True)
def _gram(family, par, px, py, pz, ux, uy, uz, vx, vy, vz):
    dot = ux * vx + uy * vy + uz * vz
    if family == FAMILY_ROUND:
        return par[0] * dot
    if family == FAMILY_ELLIPSOID:
        return dot + par[0] * (uz * vz)
    if abs(pz) > POLE_Z:
        return dot
    rho = math.hypot(px, py)
    ex = pz * px / rho
    ey = pz * py / rho
    ez = -rho
    return dot + _beta(family, par, pz) * (
        (ux * ex + uy * ey + uz * ez) * (vx * ex + vy * ey + vz * ez)
    )


@njit(cache=True)
def _accel(family, par, px, py, pz, vx, vy, vz):
    if family == FAMILY_ROUND or abs(pz) > POLE_Z:
        return 0.0, 0.0, 0.0
    rho = math.hypot(px, py)
    ex = pz * px / rho
    ey = pz * py / rho
    ez = -rho
    vth = vx * ex + vy * ey + vz * ez
    vph = (px * vy - py * vx) / rho
    beta = _beta(family, par, pz)
    bp = _beta_prime(family, par, pz)
    E = 1.0 + beta
    a_th = rho * bp / (2.0 * E) * vth * vth - pz * beta / (E * rho) * vph * vph
    return a_th * ex, a_th * ey, a_th * ez


@njit(cache=True)
def curvature_kernel(P, family, par):
    """(kappa_nu, kappa_mag, weights, ds) of a closed polyline, fused."""
    n = P.shape[0]
    ds = np.empty(n)
    ch = np.empty((n, 3))
    for i in range(n):
        j = (i + 1) % n
        cx = P[j, 0] - P[i, 0]
        cy = P[j, 1] - P[i, 1]
        cz = P[j, 2] - P[i, 2]
        mx = P[i, 0] + P[j, 0]
        my = P[i, 1] + P[j, 1]
        mz = P[i, 2] + P[j, 2]
        mn = math.sqrt(mx * mx + my * my + mz * mz)
        mx /= mn
        my /= mn
        mz /= mn
        ds[i] = math.sqrt(_gram(family, par, mx, my, mz, cx, cy, cz, cx, cy, cz))
        ch[i, 0] = cx
        ch[i, 1] = cy
        ch[i, 2] = cz

    kn = np.empty((n, 3))
    kmag = np.empty(n)
    w = np.empty(n)
    for i in range(n):
        h = (i - 1) % n
        span = ds[i] + ds[h]
        px, py, pz = P[i, 0], P[i, 1], P[i, 2]

        dx = 2.0 * (ch[i, 0] / ds[i] - ch[h, 0] / ds[h]) / span
        dy = 2.0 * (ch[i, 1] / ds[i] - ch[h, 1] / ds[h]) / span
        dz = 2.0 * (ch[i, 2] / ds[i] - ch[h, 2] / ds[h]) / span
        dp = dx * px + dy * py + dz * pz
        dx -= dp * px
        dy -= dp * py
        dz -= dp * pz

        tx = ch[i, 0] + ch[h, 0]
        ty = ch[i, 1] + ch[h, 1]
        tz = ch[i, 2] + ch[h, 2]
        tp = tx * px + ty * py + tz * pz
        tx -= tp * px
        ty -= tp * py
        tz -= tp * pz
        tg = math.sqrt(_gram(family, par, px, py, pz, tx, ty, tz, tx, ty, tz))
        tx /= tg
        ty /= tg
        tz /= tg

        ax, ay, az = _accel(family, par, px, py, pz, tx, ty, tz)
        wx = dx - ax
        wy = dy - ay
        wz = dz - az
        wt = _gram(family, par, px, py, pz, wx, wy, wz, tx, ty, tz)
        wx -= wt * tx
        wy -= wt * ty
        wz -= wt * tz
        k2 = _gram(family, par, px, py, pz, wx, wy, wz, wx, wy, wz)
        kn[i, 0] = wx
        kn[i, 1] = wy
        kn[i, 2] = wz
        kmag[i] = math.sqrt(k2) if k2 > 0.0 else 0.0
        w[i] = 0.5 * span
    return kn, kmag, w, ds
