"""Plane-section families of circles and minmax level estimation.

The family is indexed by a direction on the projective plane and an offset
in [-1, 1]; intersecting the sphere with the corresponding affine plane
yields a circle, degenerating to a constant curve at offset +-1.  Flowing
the members of three nested subfamilies (a loop of meridians, the
great-circle section, and the full family) produces empirical estimates of
the three minmax levels.  The estimates are upper bounds of the true values
up to discretization: they come from fixed representative subfamilies, not
from optimizing over all homologous families.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import DiscreteCurve
from .errors import FlowIntegrityError, ParameterError
from .flow import COLLAPSED, CONVERGED, EXHAUSTED, FlowOutcome, FlowParams, evolve
from .metrics import MetricSpec

SUBFAMILY_KINDS = ("meridian_loop", "great_circles", "full")


@dataclass(frozen=True)
class PlaneFamilyIndex:
    """Canonical index ([x], lambda x) of one plane section.

    (x, lam) and (-x, -lam) denote the same member; the canonical form has
    x_z > 0, or x_z = 0 with (x_x, x_y) lexicographically positive.
    """

    x: tuple
    lam: float

    @classmethod
    def make(cls, x, lam: float) -> "PlaneFamilyIndex":
        v = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(v)
        # keep already-unit input bitwise intact so canonicalization is an
        # exact idempotent and (x, lam) == (-x, -lam) as dataclasses
        if abs(nrm - 1.0) > 1e-12:
            v = v / nrm
        lam = float(lam)
        if not -1.0 <= lam <= 1.0:
            raise ParameterError("offset must lie in [-1, 1]")
        flip = v[2] < 0.0 or (
            v[2] == 0.0 and (v[0] < 0.0 or (v[0] == 0.0 and v[1] < 0.0))
        )
        if flip:
            v = -v
            lam = -lam
        return cls(x=(float(v[0]), float(v[1]), float(v[2])), lam=lam + 0.0)


def fibonacci_directions(m: int) -> np.ndarray:
    """Quasi-uniform directions on the upper hemisphere (projective plane).

    The first direction is the pole itself so that the distinguished z = 0
    section always belongs to the family; the rest follow the golden-angle
    spiral with z in (0, 1).
    """
    if m < 1:
        raise ParameterError("need at least one direction")
    out = np.zeros((m, 3))
    out[0] = (0.0, 0.0, 1.0)
    if m == 1:
        return out
    golden = math.pi * (3.0 - math.sqrt(5.0))
    j = np.arange(1, m)
    z = (j - 0.5) / (m - 1)
    rho = np.sqrt(1.0 - z * z)
    phi = golden * j
    out[1:, 0] = rho * np.cos(phi)
    out[1:, 1] = rho * np.sin(phi)
    out[1:, 2] = z
    return out


def circle_from_plane(x, lam: float, n: int, basis=None) -> DiscreteCurve:
    """Section of the sphere by the plane <p, x> = lam.

    Returns the circle of Euclidean radius sqrt(1 - lam^2) centered at
    lam * x sampled at n uniform points, or the constant curve at +-x when
    |lam| = 1.  An explicit (b1, b2) basis of x-perp may be supplied when a
    family of sections must vary continuously.
    """
    v = np.asarray(x, dtype=float)
    v = v / np.linalg.norm(v)
    lam = float(lam)
    if not -1.0 <= lam <= 1.0:
        raise ParameterError("offset must lie in [-1, 1]")
    if n < 8:
        raise ParameterError("circle sampling needs n >= 8")
    if abs(lam) == 1.0:
        return DiscreteCurve.constant(np.copysign(1.0, lam) * v)
    if basis is None:
        axis = np.eye(3)[int(np.argmin(np.abs(v)))]
        b1 = np.cross(axis, v)
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(v, b1)
    else:
        b1, b2 = (np.asarray(b, dtype=float) for b in basis)
    radius = math.sqrt(1.0 - lam * lam)
    ts = 2.0 * np.pi * np.arange(n) / n
    pts = lam * v + radius * (np.outer(np.cos(ts), b1) + np.outer(np.sin(ts), b2))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return DiscreteCurve(pts)


@dataclass(frozen=True)
class SweepoutGrid:
    """Discretization of the family: directions x offsets, plus subfamilies."""

    n_dir: int = 64
    n_off: int = 9

    def __post_init__(self):
        if self.n_dir < 1 or self.n_off < 2:
            raise ParameterError("grid needs n_dir >= 1 and n_off >= 2")

    def offsets(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_off)

    def section_offset(self) -> float:
        """Grid offset closest to 0: the level the 1- and 2-parameter
        subfamilies live at (a boundary-only grid degenerates them to
        constants)."""
        offs = self.offsets()
        return float(offs[int(np.argmin(np.abs(offs)))])

    def subfamily(self, kind: str) -> list:
        """Index lists of the 1-, 2-, and 3-parameter estimation supports."""
        lam0 = self.section_offset()
        if kind == "meridian_loop":
            # half-turn of planes through the poles: all sections contain them
            angles = np.pi * np.arange(self.n_dir) / self.n_dir
            return [
                PlaneFamilyIndex.make((math.cos(a), math.sin(a), 0.0), lam0)
                for a in angles
            ]
        if kind == "great_circles":
            return [
                PlaneFamilyIndex.make(d, lam0)
                for d in fibonacci_directions(self.n_dir)
            ]
        if kind == "full":
            dirs = fibonacci_directions(self.n_dir)
            return [
                PlaneFamilyIndex.make(d, lam)
                for d in dirs
                for lam in self.offsets()
            ]
        raise ParameterError(f"unknown subfamily kind {kind!r}")


def subfamily(kind: str, grid: SweepoutGrid) -> list:
    return grid.subfamily(kind)


@dataclass
class MemberRecord:
    """Slim per-member outcome kept in sweep tables and reports."""

    index: PlaneFamilyIndex
    status: str
    limit_length: float | None
    stop_time: float
    final_length: float
    mono_defect: float


@dataclass
class LSEstimates:
    """Empirical minmax estimates with the per-subfamily outcome tables."""

    l1: float
    l2: float
    l3: float
    members: dict
    records: dict
    warnings: list = field(default_factory=list)
    unreliable: bool = False
    converged: list = field(default_factory=list)

    def ordered(self) -> tuple:
        return (self.l1, self.l2, self.l3)


def _run_member(args):
    key, spec, params = args
    index = PlaneFamilyIndex.make(key[:3], key[3])
    curve = circle_from_plane(index.x, index.lam, params.n)
    try:
        outcome = evolve(curve, spec, params)
    except FlowIntegrityError as exc:
        return key, {"status": "integrity_error", "detail": str(exc)}
    payload = {
        "status": outcome.status,
        "limit_length": outcome.limit_length,
        "stop_time": outcome.stop_time,
        "final_length": float(outcome.trace.length[-1]),
        "mono_defect": outcome.trace.max_length_increase(),
    }
    if outcome.status == CONVERGED:
        payload["curve"] = np.asarray(outcome.curve.vertices)
    return key, payload


def estimate_ls_values(
    spec: MetricSpec,
    grid: SweepoutGrid,
    params: FlowParams,
    workers: int = 1,
) -> LSEstimates:
    """Flow every subfamily member and reduce to the three level estimates.

    Collapsed members contribute 0 to the subfamily maximum, matching the
    sublevel-set definition of the levels; converged members contribute
    their limit length.  A budget-exhausted member contributes its final
    length and flags a warning; an integrity error flags the whole estimate
    unreliable.  The reduction order is fixed, so the result is identical
    for any worker count.
    """
    families = {kind: grid.subfamily(kind) for kind in SUBFAMILY_KINDS}
    ordered_keys: list = []
    seen = set()
    for kind in SUBFAMILY_KINDS:
        for idx in families[kind]:
            key = idx.x + (idx.lam,)
            if key not in seen:
                seen.add(key)
                ordered_keys.append(key)

    non_constant = [k for k in ordered_keys if abs(k[3]) < 1.0]
    warnings: list[str] = []
    if not non_constant:
        warnings.append("degenerate-grid: all members are constant curves")

    jobs = [(key, spec, params) for key in ordered_keys]
    results: dict = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, payload in pool.map(_run_member, jobs, chunksize=8):
                results[key] = payload
    else:
        for job in jobs:
            key, payload = _run_member(job)
            results[key] = payload

    records: dict = {}
    unreliable = False
    converged: list = []
    for key in ordered_keys:
        payload = results[key]
        index = PlaneFamilyIndex.make(key[:3], key[3])
        if payload["status"] == "integrity_error":
            unreliable = True
            warnings.append(f"integrity_error at {key}: {payload['detail']}")
            records[key] = MemberRecord(index, "integrity_error", None, 0.0, 0.0, 0.0)
            continue
        rec = MemberRecord(
            index=index,
            status=payload["status"],
            limit_length=payload["limit_length"],
            stop_time=payload["stop_time"],
            final_length=payload["final_length"],
            mono_defect=payload["mono_defect"],
        )
        records[key] = rec
        if payload["status"] == CONVERGED:
            converged.append(
                FlowOutcome(
                    status=CONVERGED,
                    trace=None,
                    stop_time=payload["stop_time"],
                    curve=DiscreteCurve(payload["curve"]),
                    limit_length=payload["limit_length"],
                )
            )
        elif payload["status"] == EXHAUSTED:
            warnings.append(f"budget_exhausted at {key}")

    def level(kind: str) -> float:
        best = 0.0
        for idx in families[kind]:
            rec = records[idx.x + (idx.lam,)]
            if rec.status == CONVERGED:
                best = max(best, rec.limit_length)
            elif rec.status == EXHAUSTED:
                best = max(best, rec.final_length)
            # collapsed and constants contribute 0
        return best

    return LSEstimates(
        l1=level("meridian_loop"),
        l2=level("great_circles"),
        l3=level("full"),
        members={k: [i.x + (i.lam,) for i in v] for k, v in families.items()},
        records=records,
        warnings=warnings,
        unreliable=unreliable,
        converged=converged,
    )


def sweep_report(spec: MetricSpec, grid: SweepoutGrid, est: LSEstimates) -> dict:
    """JSON-ready sweep report with per-member outcomes and the estimates."""
    member_rows = []
    for key, rec in est.records.items():
        member_rows.append(
            {
                "x": list(rec.index.x),
                "lambda": rec.index.lam,
                "status": rec.status,
                "limit_length": rec.limit_length,
            }
        )
    return {
        "metric": spec.to_dict(),
        "grid": {"n_dir": grid.n_dir, "n_off": grid.n_off},
        "members": member_rows,
        "estimates": {"l1": est.l1, "l2": est.l2, "l3": est.l3},
        "warnings": est.warnings,
        "unreliable": est.unreliable,
    }
