"""Rotationally symmetric metric families on the unit 2-sphere.

Points always live on the unit sphere S^2 in R^3; non-round geometry enters
only through the metric tensor evaluated on tangent vectors.  Three families
are supported:

* ``round``     -- the round metric of radius R, ``g = R^2 <u, v>``.
* ``ellipsoid`` -- pullback of the Euclidean metric under
  ``F(x, y, z) = (x, y, r z)`` with ``r`` in (0, 1].
* ``zoll``      -- a Zoll-type surface of revolution,
  ``g = <u, v> + ((1 + h(z))^2 - 1) <u, e_theta> <v, e_theta>``
  for an odd polynomial profile ``h`` with ``h(1) = 0`` and ``sup|h| < 1``.

In spherical coordinates (theta = polar angle, phi = azimuth) every family
reads ``g = E(theta) dtheta^2 + G(theta) dphi^2`` with
``E = alpha + beta(cos theta)`` and ``G = alpha sin^2(theta)``, where

* round:     alpha = R^2, beta = 0,
* ellipsoid: alpha = 1,   beta(z) = (r^2 - 1)(1 - z^2),
* zoll:      alpha = 1,   beta(z) = (1 + h(z))^2 - 1.

That shared profile powers the closed-form covariant acceleration, the
Clairaut first integral, and the meridian quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ParameterError, PreconditionError

#: |z| beyond which the meridional frame degenerates; revolution correction
#: terms take their (vanishing) pole limit there.
POLE_Z = 1.0 - 1e-8

#: tolerance for "on the sphere" / "tangent to the sphere" preconditions.
UNIT_TOL = 1e-9

#: central-difference step for the chart-based Christoffel data.
FD_STEP = 1e-5

FAMILIES = ("round", "ellipsoid", "zoll")


@dataclass(frozen=True)
class OddProfile:
    """Odd polynomial ``h(z) = sum_k a_k z^(2k+1)`` on [-1, 1].

    Only odd powers are stored, so oddness holds by construction.  Validity
    (``h(1) = 0`` and ``sup|h| < 1``) is checked once at construction by
    dense sampling; violations are construction errors.
    """

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        if not coeffs:
            raise ParameterError("profile needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)
        if abs(sum(coeffs)) > 1e-12:
            raise ParameterError(
                f"profile must vanish at z=1, got h(1)={sum(coeffs):.3e}"
            )
        z = np.linspace(-1.0, 1.0, 4001)
        sup = float(np.max(np.abs(self(z))))
        if sup >= 1.0:
            raise ParameterError(f"profile must satisfy sup|h| < 1, got {sup:.3f}")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return z * npoly.polyval(z * z, self.coeffs)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        dcoef = [(2 * k + 1) * a for k, a in enumerate(self.coeffs)]
        return npoly.polyval(z * z, dcoef)


@dataclass(frozen=True)
class MetricSpec:
    """One of the supported metric families with its parameters.

    Immutable after construction and safe to share across workers.  Use the
    ``round_sphere`` / ``ellipsoid`` / ``zoll`` constructors rather than the
    raw dataclass fields.
    """

    family: str
    radius: float = 1.0
    r: float = 1.0
    profile: OddProfile | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown metric family {self.family!r}")
        if self.family == "round" and not self.radius > 0.0:
            raise ParameterError("round radius must be positive")
        if self.family == "ellipsoid" and not 0.0 < self.r <= 1.0:
            raise ParameterError("ellipsoid parameter r must lie in (0, 1]")
        if self.family == "zoll" and self.profile is None:
            raise ParameterError("zoll family requires an OddProfile")

    # -- constructors -------------------------------------------------

    @classmethod
    def round_sphere(cls, radius: float = 1.0) -> "MetricSpec":
        return cls(family="round", radius=float(radius))

    @classmethod
    def ellipsoid(cls, r: float) -> "MetricSpec":
        return cls(family="ellipsoid", r=float(r))

    @classmethod
    def zoll(cls, coeffs) -> "MetricSpec":
        profile = coeffs if isinstance(coeffs, OddProfile) else OddProfile(tuple(coeffs))
        return cls(family="zoll", profile=profile)

    # -- revolution profile -------------------------------------------

    @property
    def alpha(self) -> float:
        return self.radius**2 if self.family == "round" else 1.0

    def beta(self, z):
        """Azimuthally invariant correction factor on <., e_theta> terms."""
        z = np.asarray(z, dtype=float)
        if self.family == "round":
            return np.zeros_like(z)
        if self.family == "ellipsoid":
            return (self.r**2 - 1.0) * (1.0 - z * z)
        h = self.profile(z)
        return h * (2.0 + h)

    def beta_prime(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "round":
            return np.zeros_like(z)
        if self.family == "ellipsoid":
            return -2.0 * z * (self.r**2 - 1.0)
        return 2.0 * (1.0 + self.profile(z)) * self.profile.derivative(z)

    def profile_E(self, theta):
        """Meridional metric coefficient E(theta)."""
        return self.alpha + self.beta(np.cos(theta))

    def profile_G(self, theta):
        """Azimuthal metric coefficient G(theta)."""
        return self.alpha * np.sin(np.asarray(theta, dtype=float)) ** 2

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        if self.family == "round":
            return {"family": "round", "radius": self.radius}
        if self.family == "ellipsoid":
            return {"family": "ellipsoid", "r": self.r}
        return {"family": "zoll", "h_coeffs": list(self.profile.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSpec":
        family = d.get("family")
        if family == "round":
            return cls.round_sphere(d.get("radius", 1.0))
        if family == "ellipsoid":
            return cls.ellipsoid(d["r"])
        if family == "zoll":
            return cls.zoll(d["h_coeffs"])
        raise ParameterError(f"unknown metric family {family!r}")


def parse_metric(source) -> MetricSpec:
    """Build a MetricSpec from a dict, JSON string, or JSON file path."""
    if isinstance(source, MetricSpec):
        return source
    if isinstance(source, dict):
        return MetricSpec.from_dict(source)
    path = Path(source)
    if path.exists():
        return MetricSpec.from_dict(json.loads(path.read_text()))
    return MetricSpec.from_dict(json.loads(str(source)))


# ---------------------------------------------------------------------------
# frames and tensor evaluation
# ---------------------------------------------------------------------------


def _as_rows(x) -> tuple:
    """Return (array of shape (n, 3), was_single)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    return a, False


def e_theta(p):
    """Unit meridional direction (increasing polar angle) at points ``p``.

    Returns zero rows where |z| > POLE_Z; the frame is singular there and
    every revolution correction using it vanishes in the limit.
    """
    P, single = _as_rows(p)
    z = P[:, 2]
    rho = np.hypot(P[:, 0], P[:, 1])
    out = np.zeros_like(P)
    ok = np.abs(z) <= POLE_Z
    rr = np.where(ok, rho, 1.0)
    out[:, 0] = np.where(ok, z * P[:, 0] / rr, 0.0)
    out[:, 1] = np.where(ok, z * P[:, 1] / rr, 0.0)
    out[:, 2] = np.where(ok, -rho, 0.0)
    return out[0] if single else out


def e_phi(p):
    """Unit azimuthal direction at points ``p`` (zero rows at the poles)."""
    P, single = _as_rows(p)
    z = P[:, 2]
    rho = np.hypot(P[:, 0], P[:, 1])
    out = np.zeros_like(P)
    ok = np.abs(z) <= POLE_Z
    rr = np.where(ok, rho, 1.0)
    out[:, 0] = np.where(ok, -P[:, 1] / rr, 0.0)
    out[:, 1] = np.where(ok, P[:, 0] / rr, 0.0)
    return out[0] if single else out


def gram(spec: MetricSpec, p, u, v):
    """g_p(u, v) without precondition checks; u, v assumed tangent at p.

    Accepts single vectors or (n, 3) batches and broadcasts rowwise.
    """
    P, single = _as_rows(p)
    U, _ = _as_rows(u)
    V, _ = _as_rows(v)
    dot = np.einsum("ij,ij->i", U, V)
    # corrections multiply the symmetric product first so that swapping the
    # arguments gives the bitwise-identical value
    if spec.family == "round":
        out = spec.radius**2 * dot
    elif spec.family == "ellipsoid":
        out = dot + (spec.r**2 - 1.0) * (U[:, 2] * V[:, 2])
    else:
        eth = e_theta(P)
        corr = spec.beta(P[:, 2])
        out = dot + corr * (
            np.einsum("ij,ij->i", U, eth) * np.einsum("ij,ij->i", V, eth)
        )
    return float(out[0]) if single else out


def metric_eval(spec: MetricSpec, p, u, v):
    """Evaluate the metric tensor g_p(u, v).

    Parameters
    ----------
    spec : MetricSpec
        Metric family.
    p : array_like, shape (3,) or (n, 3)
        Unit vectors on S^2 (within 1e-9).
    u, v : array_like
        Tangent vectors at ``p`` (orthogonal to ``p`` within 1e-9).

    Raises
    ------
    PreconditionError
        If ``p`` is off the sphere or ``u``/``v`` fail tangency beyond
        tolerance.
    """
    P, single = _as_rows(p)
    U, _ = _as_rows(u)
    V, _ = _as_rows(v)
    norms = np.linalg.norm(P, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise PreconditionError("point is off the unit sphere beyond 1e-9")
    for w, name in ((U, "u"), (V, "v")):
        scale = np.maximum(1.0, np.linalg.norm(w, axis=1))
        if np.any(np.abs(np.einsum("ij,ij->i", w, P)) > UNIT_TOL * scale):
            raise PreconditionError(f"{name} is not tangent to the sphere at p")
    out = gram(spec, P, U, V)
    return out if not single else float(np.asarray(out).reshape(-1)[0])


def tangent_basis(p):
    """Deterministic Euclidean-orthonormal basis (t1, t2) of each p^perp."""
    P, single = _as_rows(p)
    axes = np.eye(3)
    pick = np.argmin(np.abs(P), axis=1)
    e = axes[pick]
    t1 = np.cross(e, P)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(P, t1)
    if single:
        return t1[0], t2[0]
    return t1, t2


# ---------------------------------------------------------------------------
# covariant acceleration
# ---------------------------------------------------------------------------


def covariant_acceleration(spec: MetricSpec, p, v, method: str = "auto"):
    """Tangential Christoffel correction a(p, v) of the geodesic equation.

    Unit-speed geodesics of (S^2, g) satisfy, in ambient coordinates,
    ``gamma'' = a(gamma, gamma') - <gamma', gamma'> gamma`` where the second
    term is the normal component forced by the sphere constraint.  For the
    round metric a vanishes identically.

    ``method="auto"`` uses the closed revolution form (exact for all
    supported families); ``method="fd"`` differentiates ``metric_eval`` in a
    normalized chart with central step ``FD_STEP`` and serves as the
    independent cross-check route.
    """
    if method == "fd":
        return christoffel_fd(spec, p, v)
    if method != "auto":
        raise ParameterError(f"unknown method {method!r}")
    P, single = _as_rows(p)
    V, _ = _as_rows(v)
    z = P[:, 2]
    rho = np.hypot(P[:, 0], P[:, 1])
    ok = np.abs(z) <= POLE_Z
    rr = np.where(ok, rho, 1.0)
    eth = e_theta(P)
    vth = np.einsum("ij,ij->i", V, eth)
    vph_num = P[:, 0] * V[:, 1] - P[:, 1] * V[:, 0]  # rho * <v, e_phi>
    vph = np.where(ok, vph_num / rr, 0.0)
    beta = spec.beta(z)
    E = spec.alpha + beta
    a_th = rho * spec.beta_prime(z) / (2.0 * E) * vth**2
    a_th -= z * beta / (E * rr) * vph**2
    a_th = np.where(ok, a_th, 0.0)
    out = a_th[:, None] * eth
    return out[0] if single else out


def christoffel_fd(spec: MetricSpec, p, v, step: float = FD_STEP):
    """Finite-difference route for the tangential Christoffel correction.

    Builds a chart q -> normalize(p + q1 t1 + q2 t2); its second fundamental
    form at the origin is purely normal, so the tangential geodesic
    acceleration is exactly ``-Gamma^m_ij v^i v^j t_m`` with Gamma obtained
    from central differences of the metric components.
    """
    P, single = _as_rows(p)
    V, _ = _as_rows(v)
    t1, t2 = tangent_basis(P)
    basis = np.stack([t1, t2], axis=1)  # (n, 2, 3)

    def components_at(q1, q2):
        w = P + q1 * t1 + q2 * t2
        den = np.linalg.norm(w, axis=1, keepdims=True)
        x = w / den
        d1 = (t1 - x * np.einsum("ij,ij->i", x, t1)[:, None]) / den
        d2 = (t2 - x * np.einsum("ij,ij->i", x, t2)[:, None]) / den
        g11 = gram(spec, x, d1, d1)
        g12 = gram(spec, x, d1, d2)
        g22 = gram(spec, x, d2, d2)
        return np.stack([g11, g12, g12, g22], axis=-1).reshape(-1, 2, 2)

    dG = np.empty((P.shape[0], 2, 2, 2))  # dG[:, k, i, j] = d_k g_ij
    dG[:, 0] = (components_at(step, 0.0) - components_at(-step, 0.0)) / (2 * step)
    dG[:, 1] = (components_at(0.0, step) - components_at(0.0, -step)) / (2 * step)

    G0 = components_at(0.0, 0.0)
    Ginv = np.linalg.inv(G0)
    # Gamma_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (
        np.einsum("nijl->nlij", dG)
        + np.einsum("njil->nlij", dG)
        - np.einsum("nlij->nlij", dG)
    )
    Gamma = np.einsum("nml,nlij->nmij", Ginv, low)
    vc = np.einsum("nkj,nj->nk", basis, V)
    amb = -np.einsum("nmij,ni,nj,nmk->nk", Gamma, vc, vc, basis)
    return amb[0] if single else amb


# ---------------------------------------------------------------------------
# meridian quadrature
# ---------------------------------------------------------------------------


def _meridian_speed(spec: MetricSpec, theta):
    return np.sqrt(spec.profile_E(theta))


def meridian_length(spec: MetricSpec, tol: float = 1e-10) -> float:
    """Length of the full closed meridian (pole to pole and back).

    Trapezoid sums over one full period, doubled until two successive
    estimates differ by less than ``tol``; spectrally accurate for the
    smooth periodic integrand sqrt(E).
    """
    period = 2.0 * np.pi
    n = 8
    prev = None
    for _ in range(22):
        theta = np.arange(n) * (period / n)
        est = float(np.mean(_meridian_speed(spec, theta)) * period)
        if prev is not None and abs(est - prev) < tol:
            return est
        prev = est
        n *= 2
    return prev


def meridian_length_gauss(spec: MetricSpec, order: int = 64, panels: int = 4) -> float:
    """Second, independent quadrature rule (composite Gauss-Legendre)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    edges = np.linspace(0.0, 2.0 * np.pi, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.sum(weights * _meridian_speed(spec, mid + half * nodes)))
    return total
