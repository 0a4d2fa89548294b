"""Discrete closed curves on the unit sphere.

Curves are cyclic polylines of unit vectors; constants (single points) stand
in for collapsed loops.  All measurements are taken in a supplied metric and
every operation is pure, so curves are safe to share across workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (
    AmbiguousEmbeddingError,
    DegenerateCurveError,
    ParameterError,
    PreconditionError,
)
from .metrics import UNIT_TOL, MetricSpec, covariant_acceleration, gram

#: segment pairs closer than this cannot be classified as crossing or not.
SEGMENT_AMBIGUITY = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Cyclic polyline of points on S^2, or a single point when constant."""

    vertices: np.ndarray
    is_constant: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != 3:
            raise PreconditionError("vertices must have shape (n, 3)")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise PreconditionError("all vertices must lie on the unit sphere")
        if self.is_constant:
            if v.shape[0] != 1:
                raise PreconditionError("constant curves store a single point")
        else:
            if v.shape[0] < 3:
                raise PreconditionError("non-constant curves need n >= 3 vertices")
            edges = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
            if np.any(edges < 1e-12):
                raise DegenerateCurveError("consecutive vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def constant(cls, point) -> "DiscreteCurve":
        return cls(np.asarray(point, dtype=float), is_constant=True)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def max_edge(self) -> float:
        if self.is_constant:
            return 0.0
        v = self.vertices
        return float(np.max(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    def reversed(self) -> "DiscreteCurve":
        if self.is_constant:
            return self
        return DiscreteCurve(self.vertices[::-1])

    # -- CSV dump format: header `index,x,y,z`, loops implied closed --

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "x", "y", "z"])
            for i, (x, y, z) in enumerate(self.vertices):
                writer.writerow([i, repr(float(x)), repr(float(y)), repr(float(z))])

    @classmethod
    def from_csv(cls, path, is_constant: bool | None = None) -> "DiscreteCurve":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                rows.append((float(row["x"]), float(row["y"]), float(row["z"])))
        pts = np.asarray(rows, dtype=float)
        if is_constant is None:
            is_constant = pts.shape[0] == 1
        return cls(pts, is_constant=is_constant)


@dataclass(frozen=True)
class VertexGeometry:
    """Per-vertex arclength weights and the curvature vector field.

    ``curvature_normal`` holds the parametrization-invariant product
    (signed curvature) x (positive normal); ``curvature_magnitude`` its
    g-norm.  ``weights`` are the g-lengths of the two adjacent half-edges.
    """

    weights: np.ndarray
    curvature_normal: np.ndarray
    curvature_magnitude: np.ndarray


def _edge_data(P: np.ndarray, spec: MetricSpec):
    """Chords, normalized midpoints and g-edge-lengths of a closed polyline."""
    nxt = np.roll(P, -1, axis=0)
    chords = nxt - P
    mids = P + nxt
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    ds = np.sqrt(gram(spec, mids, chords, chords))
    return chords, mids, ds


def length(curve: DiscreteCurve, spec: MetricSpec) -> float:
    """Metric length of the curve (midpoint-evaluated chords, second order)."""
    if curve.is_constant:
        return 0.0
    _, _, ds = _edge_data(curve.vertices, spec)
    return float(np.sum(ds))


def _curvature_arrays(P: np.ndarray, spec: MetricSpec):
    """Core curvature stencil shared by `curvature_field` and the flow.

    Returns (kappa_nu, kappa_mag, weights, ds).  Dispatches to the fused
    jitted kernel when available; the numpy route below is the reference
    implementation the kernel is tested against.
    """
    if _kernels.NUMBA_AVAILABLE and P.shape[0] >= 3:
        family, par = _kernels.pack_spec(spec)
        kn, kmag, w, ds = _kernels.curvature_kernel(P, family, par)
        if np.min(ds) < 1e-10:
            raise DegenerateCurveError("edge length below 1e-10")
        return kn, kmag, w, ds
    return _curvature_arrays_np(P, spec)


def _curvature_arrays_np(P: np.ndarray, spec: MetricSpec):
    """Numpy reference for the curvature stencil.

    The covariant second derivative is assembled from the tangential part
    of the 3-point second difference plus the Christoffel correction, then
    projected g-orthogonal to the discrete tangent; the result is
    independent of orientation.
    """
    chords, _, ds = _edge_data(P, spec)
    if np.min(ds) < 1e-10:
        raise DegenerateCurveError("edge length below 1e-10")
    ds_prev = np.roll(ds, 1)
    chords_prev = np.roll(chords, 1, axis=0)
    span = ds + ds_prev

    d2 = 2.0 * (chords / ds[:, None] - chords_prev / ds_prev[:, None]) / span[:, None]
    d2 -= np.einsum("ij,ij->i", d2, P)[:, None] * P

    tang = chords + chords_prev
    tang -= np.einsum("ij,ij->i", tang, P)[:, None] * P
    tang /= np.sqrt(gram(spec, P, tang, tang))[:, None]

    w = d2 - covariant_acceleration(spec, P, tang)
    w -= gram(spec, P, w, tang)[:, None] * tang
    kmag = np.sqrt(np.maximum(gram(spec, P, w, w), 0.0))
    return w, kmag, 0.5 * span, ds


def curvature_field(curve: DiscreteCurve, spec: MetricSpec) -> VertexGeometry:
    """Per-vertex curvature-times-normal field of an embedded polyline."""
    if curve.is_constant or curve.n < 8:
        raise ParameterError("curvature stencil needs a non-constant curve, n >= 8")
    kn, kmag, weights, _ = _curvature_arrays(curve.vertices, spec)
    return VertexGeometry(weights, kn, kmag)


def resample(curve: DiscreteCurve, spec: MetricSpec, n: int) -> DiscreteCurve:
    """Redistribute ``n`` vertices at equal g-arclength along the polyline.

    New vertices lie on the great arcs joining consecutive old vertices;
    vertex 0 stays anchored, so an already-uniform curve resamples to itself
    up to rounding.
    """
    if n < 8:
        raise ParameterError("resample requires n >= 8")
    if curve.is_constant:
        raise ParameterError("cannot resample a constant curve")
    P = curve.vertices
    _, _, ds = _edge_data(P, spec)
    cum = np.concatenate([[0.0], np.cumsum(ds)])
    total = cum[-1]
    targets = np.arange(n) * (total / n)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, P.shape[0] - 1)
    frac = (targets - cum[idx]) / ds[idx]
    A = P[idx]
    B = P[(idx + 1) % P.shape[0]]
    new = _slerp_rows(A, B, frac)
    out = DiscreteCurve(new)
    _, _, nds = _edge_data(out.vertices, spec)
    if np.max(nds) > 4.0 * np.min(nds):
        raise DegenerateCurveError("resample could not reach quasi-uniform spacing")
    return out


def _slerp_rows(A: np.ndarray, B: np.ndarray, t: np.ndarray) -> np.ndarray:
    dots = np.clip(np.einsum("ij,ij->i", A, B), -1.0, 1.0)
    ang = np.arccos(dots)
    small = ang < 1e-9
    sin_ang = np.where(small, 1.0, np.sin(ang))
    wa = np.where(small, 1.0 - t, np.sin((1.0 - t) * ang) / sin_ang)
    wb = np.where(small, t, np.sin(t * ang) / sin_ang)
    out = wa[:, None] * A + wb[:, None] * B
    return out / np.linalg.norm(out, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# embeddedness
# ---------------------------------------------------------------------------


def _nonadjacent_pairs(n: int):
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def _segment_distances(P1, Q1, P2, Q2):
    """Min distances between 3D segments [P1,Q1] and [P2,Q2], rowwise."""
    d1 = Q1 - P1
    d2 = Q2 - P2
    r = P1 - P2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b
    s = np.where(denom > 1e-30, np.clip((b * f - c * e) / np.where(denom > 1e-30, denom, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / e
    t_cl = np.clip(t, 0.0, 1.0)
    s = np.where(t != t_cl, np.clip((b * t_cl - c) / a, 0.0, 1.0), s)
    diff = (P1 + s[:, None] * d1) - (P2 + t_cl[:, None] * d2)
    return np.linalg.norm(diff, axis=1)


def _on_arc(t, p, q, nrm, strict=False):
    s1 = np.einsum("ij,ij->i", np.cross(p, t), nrm)
    s2 = np.einsum("ij,ij->i", np.cross(t, q), nrm)
    if strict:
        return (s1 > 0.0) & (s2 > 0.0)
    return (s1 >= 0.0) & (s2 >= 0.0)


def _arcs_intersect(A, B, C, D):
    """Whether minor great-circle arcs (A,B) and (C,D) intersect, rowwise.

    Pairs lying on a common great circle (parallel plane normals) fall back
    to a strict angular-overlap test; exact touches there are left to the
    ambiguity distance check.
    """
    n1 = np.cross(A, B)
    n2 = np.cross(C, D)
    t = np.cross(n1, n2)
    tn = np.linalg.norm(t, axis=1)
    generic = tn > 1e-14 * np.linalg.norm(n1, axis=1) * np.linalg.norm(n2, axis=1)
    t = t / np.where(tn > 0.0, tn, 1.0)[:, None]

    hit = np.zeros(A.shape[0], dtype=bool)
    for sign in (1.0, -1.0):
        ts = sign * t
        hit |= generic & _on_arc(ts, A, B, n1) & _on_arc(ts, C, D, n2)

    coplanar = ~generic
    if np.any(coplanar):
        overlap = (
            _on_arc(C, A, B, n1, strict=True)
            | _on_arc(D, A, B, n1, strict=True)
            | _on_arc(A, C, D, n2, strict=True)
            | _on_arc(B, C, D, n2, strict=True)
        )
        hit |= coplanar & overlap
    return hit


def _near_pairs(P: np.ndarray):
    """Non-adjacent segment pairs whose chords could possibly interact.

    Two chord segments can only intersect (or pass within the ambiguity
    band) when their midpoints are closer than the sum of their half
    lengths, which a single Gram matrix evaluates for all pairs at once.
    """
    n = P.shape[0]
    nxt = np.roll(P, -1, axis=0)
    mids = 0.5 * (P + nxt)
    half = 0.5 * np.linalg.norm(nxt - P, axis=1)
    sq = np.einsum("ij,ij->i", mids, mids)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (mids @ mids.T)
    # half^2/2 covers the sagitta by which great arcs bulge past the chords
    span = half + 0.5 * half * half
    reach = span[:, None] + span[None, :] + 10.0 * SEGMENT_AMBIGUITY
    cand = d2 <= reach * reach
    iu, ju = np.triu_indices(n, k=2)
    keep = cand[iu, ju] & ~((iu == 0) & (ju == n - 1))
    return iu[keep], ju[keep]


def is_embedded(curve: DiscreteCurve) -> bool:
    """True iff no two non-adjacent segments intersect on the sphere.

    A clear crossing anywhere makes the curve non-embedded.  Otherwise, a
    non-adjacent pair passing within SEGMENT_AMBIGUITY raises
    AmbiguousEmbeddingError; the caller must refine instead of trusting a
    guess.
    """
    if curve.is_constant or curve.n < 4:
        return True
    P = curve.vertices
    n = curve.n
    i, j = _near_pairs(P)
    if i.size == 0:
        return True
    A, B = P[i], P[(i + 1) % n]
    C, D = P[j], P[(j + 1) % n]
    if bool(np.any(_arcs_intersect(A, B, C, D))):
        return False
    dists = _segment_distances(A, B, C, D)
    if np.any(dists < SEGMENT_AMBIGUITY):
        raise AmbiguousEmbeddingError(
            "non-adjacent segments pass within 1e-10; refine the curve"
        )
    return True
