"""Geodesic shooting oracle and the simple length spectrum.

The integrator is deliberately independent of the flow discretization: it
solves the second-order geodesic ODE in ambient coordinates with classical
RK4, projecting back to the sphere and to unit g-speed after every step, so
that flow limits can be certified against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .curves import DiscreteCurve, curvature_field, is_embedded, length
from .errors import ParameterError, PreconditionError
from .metrics import (
    MetricSpec,
    covariant_acceleration,
    e_phi,
    gram,
    meridian_length,
)

DEFAULT_STEP = 1e-3


@dataclass
class GeodesicTrajectory:
    """Arclength samples (s, p(s), v(s)) of a unit-speed geodesic."""

    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    spec: MetricSpec

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def state_at(self, s_probe: float):
        """Linearly interpolated (p, v) at arclength s_probe."""
        if s_probe < 0.0 or s_probe > self.s_max * (1.0 + 1e-12):
            raise ParameterError("probe arclength outside the trajectory extent")
        p = np.array([np.interp(s_probe, self.s, self.points[:, k]) for k in range(3)])
        v = np.array(
            [np.interp(s_probe, self.s, self.velocities[:, k]) for k in range(3)]
        )
        return p, v

    def polyline(self, s_end: float | None = None, spacing: float = 1e-2) -> np.ndarray:
        """Points subsampled at roughly `spacing` arclength up to s_end."""
        s_end = self.s_max if s_end is None else min(s_end, self.s_max)
        m = max(int(s_end / spacing), 8)
        probes = np.linspace(0.0, s_end, m, endpoint=False)
        cols = [np.interp(probes, self.s, self.points[:, k]) for k in range(3)]
        pts = np.stack(cols, axis=1)
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _rhs(spec: MetricSpec, P: np.ndarray, V: np.ndarray):
    """dP/ds = V, dV/ds = a(P, V) - <V, V> P (sphere-constrained)."""
    nrm = np.linalg.norm(P, axis=1, keepdims=True)
    Pn = P / nrm
    Vt = V - np.einsum("ij,ij->i", V, Pn)[:, None] * Pn
    acc = covariant_acceleration(spec, Pn, Vt)
    acc -= np.einsum("ij,ij->i", V, V)[:, None] * Pn
    return V, acc


def _integrate_batch(
    spec: MetricSpec, P0: np.ndarray, V0: np.ndarray, s_max: float, step: float
):
    """RK4 integration of k launches at once; returns (s, P, V) histories."""
    m = max(int(np.ceil(s_max / step)), 1)
    h = s_max / m
    k = P0.shape[0]
    S = np.empty(m + 1)
    Ps = np.empty((m + 1, k, 3))
    Vs = np.empty((m + 1, k, 3))
    P = np.array(P0, dtype=float)
    V = np.array(V0, dtype=float)
    S[0], Ps[0], Vs[0] = 0.0, P, V
    for i in range(m):
        k1p, k1v = _rhs(spec, P, V)
        k2p, k2v = _rhs(spec, P + 0.5 * h * k1p, V + 0.5 * h * k1v)
        k3p, k3v = _rhs(spec, P + 0.5 * h * k2p, V + 0.5 * h * k2v)
        k4p, k4v = _rhs(spec, P + h * k3p, V + h * k3v)
        P = P + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        V = V + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        # project back to the sphere and to unit g-speed each step
        P /= np.linalg.norm(P, axis=1, keepdims=True)
        V -= np.einsum("ij,ij->i", V, P)[:, None] * P
        V /= np.sqrt(gram(spec, P, V, V))[:, None]
        S[i + 1], Ps[i + 1], Vs[i + 1] = (i + 1) * h, P, V
    return S, Ps, Vs


def unit_tangent(spec: MetricSpec, p, v):
    """Project v to the tangent plane at p and normalize to unit g-speed."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    v = v - np.dot(v, p) * p
    speed = gram(spec, p, v, v)
    if speed <= 0.0:
        raise PreconditionError("velocity has no tangential component")
    return v / np.sqrt(speed)


def shoot(
    spec: MetricSpec, p, v, s_max: float, step: float = DEFAULT_STEP
) -> GeodesicTrajectory:
    """Integrate the geodesic through (p, v) to arclength s_max."""
    if s_max <= 0.0 or s_max > 100.0:
        raise ParameterError("s_max must lie in (0, 100]")
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise PreconditionError("launch point must lie on the unit sphere")
    v = unit_tangent(spec, p, v)
    S, Ps, Vs = _integrate_batch(spec, p[None, :], v[None, :], s_max, step)
    return GeodesicTrajectory(S, Ps[:, 0], Vs[:, 0], spec)


def clairaut_series(spec: MetricSpec, traj: GeodesicTrajectory) -> np.ndarray:
    """Azimuthal first integral G(theta) dphi/ds sampled along the trajectory.

    Values within polar distance 1e-3 of the poles are excluded; the
    azimuthal frame degenerates there.
    """
    P, V = traj.points, traj.velocities
    rho = np.hypot(P[:, 0], P[:, 1])
    keep = rho >= np.sin(1e-3)
    eph = e_phi(P[keep])
    return spec.alpha * rho[keep] * np.einsum("ij,ij->i", V[keep], eph)


def closure_defect(traj: GeodesicTrajectory, s_probe: float) -> float:
    """dist(p(s), p(0)) + dist(v(s), v(0)) in the ambient metric."""
    p, v = traj.state_at(s_probe)
    return float(
        np.linalg.norm(p - traj.points[0]) + np.linalg.norm(v - traj.velocities[0])
    )


def position_defect(traj: GeodesicTrajectory, s_probe: float) -> float:
    p, _ = traj.state_at(s_probe)
    return float(np.linalg.norm(p - traj.points[0]))


def refine_period(traj: GeodesicTrajectory, guess: float, window: float = 0.15):
    """Arclength near `guess` minimizing the position closure defect."""
    lo = max(guess * (1.0 - window), traj.s[1])
    hi = min(guess * (1.0 + window), traj.s_max)
    res = minimize_scalar(
        lambda s: position_defect(traj, s),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


# ---------------------------------------------------------------------------
# spectrum assembly
# ---------------------------------------------------------------------------


@dataclass
class SpectrumEntry:
    """One detected simple-geodesic length with its certification data."""

    length: float
    cluster_length: float
    count: int
    kappa_sup: float
    closure: float
    validated: bool
    representative: DiscreteCurve
    flags: list = field(default_factory=list)


@dataclass
class SpectrumReport:
    """Detected simple length spectrum with per-entry residuals.

    sigma_s lists the validated lengths only; failed clusters stay visible
    in `entries` with their flags, since disagreement between the flow and
    the shooting oracle is the most informative failure mode.
    """

    entries: list
    delta_len: float

    @property
    def sigma_s(self) -> list:
        return [e.length for e in self.entries if e.validated]

    def to_json_dict(self, spec: MetricSpec, representative_paths=None) -> dict:
        paths = representative_paths or {}
        return {
            "metric": spec.to_dict(),
            "delta_len": self.delta_len,
            "entries": [
                {
                    "length": e.length,
                    "cluster_length": e.cluster_length,
                    "count": e.count,
                    "residuals": {
                        "kappa_sup": e.kappa_sup,
                        "closure_defect": e.closure,
                        "refine_shift": e.length - e.cluster_length,
                    },
                    "representative_path": paths.get(id(e)),
                    "validated": e.validated,
                    "flags": e.flags,
                }
                for e in self.entries
            ],
            "sigma_s": self.sigma_s,
        }


def launch_from_curve(spec: MetricSpec, curve: DiscreteCurve):
    """Initial data (p, v) for shooting along a discrete closed curve."""
    P = curve.vertices
    p = P[0]
    v = P[1] - P[-1]
    return p, unit_tangent(spec, p, v)


def _polyline_simple(points: np.ndarray) -> bool:
    try:
        return is_embedded(DiscreteCurve(points))
    except Exception:
        return False


def simple_spectrum(
    spec: MetricSpec,
    outcomes,
    delta_len: float = 1e-2,
    validation_tol: float = 1e-2,
    step: float = DEFAULT_STEP,
) -> SpectrumReport:
    """Cluster converged flow limits and certify each against the oracle.

    Lengths within delta_len merge into one cluster.  Each cluster
    representative is re-shot: validation requires a closure defect at the
    cluster length below `validation_tol`, an embedded representative, and a
    self-intersection-free shot polyline.  Failing clusters are flagged and
    kept in the report but excluded from sigma_s.
    """
    if delta_len <= 0.0:
        raise ParameterError("delta_len must be positive")
    converged = [
        o for o in outcomes if o.status == "converged_geodesic" and o.curve is not None
    ]
    entries: list[SpectrumEntry] = []
    if not converged:
        return SpectrumReport(entries=entries, delta_len=delta_len)

    order = np.argsort([o.limit_length for o in converged])
    clusters: list[list] = [[converged[order[0]]]]
    for idx in order[1:]:
        o = converged[idx]
        if o.limit_length - clusters[-1][-1].limit_length <= delta_len:
            clusters[-1].append(o)
        else:
            clusters.append([o])

    for members in clusters:
        lens = np.array([m.limit_length for m in members])
        center = float(np.median(lens))
        rep = members[int(np.argmin(np.abs(lens - center)))]
        flags: list[str] = []
        geo = curvature_field(rep.curve, spec)
        kappa_sup = float(np.max(geo.curvature_magnitude))

        p0, v0 = launch_from_curve(spec, rep.curve)
        traj = shoot(spec, p0, v0, s_max=min(center * 1.35, 100.0), step=step)
        closure = closure_defect(traj, center)
        refined = refine_period(traj, center)

        ok = True
        if closure > validation_tol:
            ok = False
            flags.append("closure_defect_exceeds_tolerance")
        try:
            rep_embedded = is_embedded(rep.curve)
        except Exception:
            rep_embedded = False
        if not rep_embedded:
            ok = False
            flags.append("representative_not_embedded")
        if not _polyline_simple(traj.polyline(s_end=refined * (1.0 - 1e-3))):
            ok = False
            flags.append("shot_geodesic_not_simple")

        entries.append(
            SpectrumEntry(
                length=refined if ok else center,
                cluster_length=center,
                count=len(members),
                kappa_sup=kappa_sup,
                closure=closure,
                validated=ok,
                representative=rep.curve,
                flags=flags,
            )
        )

    entries.sort(key=lambda e: e.length)
    return SpectrumReport(entries=entries, delta_len=delta_len)


# ---------------------------------------------------------------------------
# theorem-level verdicts
# ---------------------------------------------------------------------------


def meridian_through(point, n: int = 1024) -> DiscreteCurve:
    """The meridian circle (through both poles) containing `point`."""
    q = np.asarray(point, dtype=float)
    rho = np.hypot(q[0], q[1])
    if rho < 1e-12:
        mu = np.array([1.0, 0.0, 0.0])
    else:
        mu = np.array([q[0] / rho, q[1] / rho, 0.0])
    ts = 2.0 * np.pi * np.arange(n) / n
    pts = np.outer(np.cos(ts), mu)
    pts[:, 2] += np.sin(ts)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return DiscreteCurve(pts)


def _point_to_polyline(q: np.ndarray, P: np.ndarray) -> float:
    from .curves import _segment_distances

    n = P.shape[0]
    A = P
    B = np.roll(P, -1, axis=0)
    Q = np.broadcast_to(q, (n, 3))
    return float(np.min(_segment_distances(Q, Q, A, B)))


def verify_cover(
    spec: MetricSpec,
    sigma_s,
    n_points: int = 50,
    n_vertices: int = 1024,
    seed: int = 0,
    tol: float = 1e-3,
) -> dict:
    """Check that every sampled point lies on a simple closed geodesic.

    For surfaces of revolution the meridian through a point is always a
    closed geodesic, so coverage is certified constructively: the meridian
    is built analytically and checked for point incidence, length, geodesic
    residual, and embeddedness.  Requires the simple length spectrum to have
    at most two values ("hypothesis_met" is False otherwise).
    """
    sigma = sorted(float(x) for x in sigma_s)
    result = {
        "theorem": "cover",
        "hypothesis_met": len(sigma) <= 2 and len(sigma) >= 1,
        "sigma_s": sigma,
        "samples": [],
        "passed": False,
    }
    if not result["hypothesis_met"]:
        return result
    target = meridian_length(spec)
    covering = [x for x in sigma if abs(x - target) <= 10 * tol]
    result["covering_length"] = covering[0] if covering else target
    rng = np.random.default_rng(seed)
    all_ok = True
    for _ in range(n_points):
        q = rng.normal(size=3)
        q /= np.linalg.norm(q)
        curve = meridian_through(q, n=n_vertices)
        dist = _point_to_polyline(q, curve.vertices)
        len_err = abs(length(curve, spec) - target)
        kappa_sup = float(np.max(curvature_field(curve, spec).curvature_magnitude))
        ok = dist <= tol and len_err <= tol and kappa_sup <= tol and is_embedded(curve)
        all_ok &= ok
        result["samples"].append(
            {
                "point": [float(x) for x in q],
                "distance_to_geodesic": dist,
                "length_error": len_err,
                "kappa_sup": kappa_sup,
                "ok": bool(ok),
            }
        )
    result["passed"] = bool(all_ok)
    return result


def verify_zoll(
    spec: MetricSpec,
    sigma_s,
    n_launches: int = 20,
    seed: int = 0,
    tol: float = 1e-3,
    step: float = DEFAULT_STEP,
) -> dict:
    """Check the all-geodesics-close signature of a one-value spectrum.

    Requires sigma_s to be a singleton, then fires random unit-speed
    launches and demands closure (position + velocity defect) at the
    spectrum value within `tol`.
    """
    sigma = sorted(float(x) for x in sigma_s)
    result = {
        "theorem": "zoll",
        "sigma_s": sigma,
        "singleton": len(sigma) == 1,
        "launches": [],
        "passed": False,
    }
    if not result["singleton"]:
        result["evidence"] = "simple length spectrum has %d values" % len(sigma)
        return result
    ell = sigma[0]
    rng = np.random.default_rng(seed)
    P0 = rng.normal(size=(n_launches, 3))
    P0 /= np.linalg.norm(P0, axis=1, keepdims=True)
    V0 = rng.normal(size=(n_launches, 3))
    V0 -= np.einsum("ij,ij->i", V0, P0)[:, None] * P0
    V0 /= np.sqrt(gram(spec, P0, V0, V0))[:, None]
    S, Ps, Vs = _integrate_batch(spec, P0, V0, s_max=ell * 1.02, step=step)
    all_ok = True
    for k in range(n_launches):
        traj = GeodesicTrajectory(S, Ps[:, k], Vs[:, k], spec)
        defect = closure_defect(traj, ell)
        ok = defect <= tol
        all_ok &= ok
        result["launches"].append(
            {
                "point": [float(x) for x in P0[k]],
                "closure_defect": defect,
                "ok": bool(ok),
            }
        )
    result["passed"] = bool(all_ok)
    return result
