"""Two-fold covering data over the space of embedded circles.

An embedded circle splits the sphere into two components; a choice of
component is tracked by a marker point kept well clear of the curve.  Near
constant curves the two sheets are encoded by a bit: 0 selects the collapsed
disk at the point, 1 the disk that fills the whole sphere.  Carrying this
datum around a loop of curves yields the Z_2 invariant of the loop.

Discrete loops cannot realize the topological path-lifting property
exactly; continuity of the lift is enforced combinatorially by a Hausdorff
step bound together with marker clearance, which makes the component
handoff between consecutive curves unambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import DiscreteCurve, _segment_distances, is_embedded
from .errors import ParameterError, PreconditionError, ProximityError, TrackingError
from .sweepout import circle_from_plane, fibonacci_directions

#: marker / probe admissibility: distance to the curve in units of max edge.
CLEARANCE_FACTOR = 10.0

#: fraction of the Hausdorff step a marker must clear for a certifiable
#: handoff; slightly below 1 because chord-to-segment clearances sit a hair
#: under the vertex-based step bound for graded cap families.
STEP_MARGIN = 0.8


def _needed_clearance(curve: DiscreteCurve, step: float) -> float:
    return max(_clearance_threshold(curve), STEP_MARGIN * step)


# ---------------------------------------------------------------------------
# component tests
# ---------------------------------------------------------------------------


def point_curve_distance(curve: DiscreteCurve, points) -> np.ndarray:
    """Euclidean distance from each probe point to the closed polyline."""
    Q, single = (points, False)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q, single = Q[None, :], True
    P = curve.vertices
    if curve.is_constant:
        d = np.linalg.norm(Q - P[0], axis=1)
        return float(d[0]) if single else d
    A = P[None, :, :]  # (1, n, 3)
    D = np.roll(P, -1, axis=0)[None, :, :] - A
    rel = Q[:, None, :] - A
    t = np.einsum("qnk,qnk->qn", rel, D) / np.einsum("qnk,qnk->qn", D, D)
    t = np.clip(t, 0.0, 1.0)
    diff = rel - t[:, :, None] * D
    d = np.sqrt(np.einsum("qnk,qnk->qn", diff, diff)).min(axis=1)
    return float(d[0]) if single else d


def _clearance_threshold(curve: DiscreteCurve) -> float:
    return CLEARANCE_FACTOR * curve.max_edge()


def _winding_parity_batch(curve: DiscreteCurve, pole, probes) -> np.ndarray:
    """Even/odd winding of the stereographic image around projected probes.

    Projection from `pole`; True where the parity is even, i.e. where the
    probe lies in the same complementary component as the pole.
    """
    p = np.asarray(pole, dtype=float)
    axis = np.eye(3)[int(np.argmin(np.abs(p)))]
    t1 = np.cross(axis, p)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(p, t1)

    def project(X):
        den = 1.0 - X @ p
        return np.stack([(X @ t1) / den, (X @ t2) / den], axis=-1)

    V = project(curve.vertices)
    W = np.roll(V, -1, axis=0)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    # probes at (or antipodal-degenerate to) the projection pole are
    # trivially on the pole's side
    near_pole = 1.0 - probes @ p < 1e-12
    Q = project(np.where(near_pole[:, None], p[None, :] * 0.0, probes))

    out = np.empty(Q.shape[0], dtype=bool)
    for k, q in enumerate(Q):
        if near_pole[k]:
            out[k] = True
            continue
        sy = V[:, 1] - q[1]
        ty = W[:, 1] - q[1]
        is_left = (W[:, 0] - V[:, 0]) * (q[1] - V[:, 1]) - (q[0] - V[:, 0]) * (
            W[:, 1] - V[:, 1]
        )
        up = (sy <= 0.0) & (ty > 0.0) & (is_left > 0.0)
        dn = (sy > 0.0) & (ty <= 0.0) & (is_left < 0.0)
        out[k] = (int(np.sum(up)) - int(np.sum(dn))) % 2 == 0
    return out


def same_component(curve: DiscreteCurve, p, q) -> bool:
    """Whether p and q lie in the same component of the curve's complement.

    Both probes must keep distance >= 10x the maximum edge length from the
    curve; closer probes raise ProximityError.  The test projects the curve
    stereographically from p and reduces to an even/odd winding count, which
    is robust to the projection's metric distortion.
    """
    if curve.is_constant:
        return True
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    thr = _clearance_threshold(curve)
    d = point_curve_distance(curve, np.stack([p, q]))
    if np.any(d < thr):
        raise ProximityError(
            f"probe at distance {float(np.min(d)):.3e} from the curve; "
            f"need >= {thr:.3e}"
        )
    return bool(_winding_parity_batch(curve, p, q[None, :])[0])


# ---------------------------------------------------------------------------
# loops of curves
# ---------------------------------------------------------------------------


def hausdorff_distance(a: DiscreteCurve, b: DiscreteCurve) -> float:
    """Symmetric vertex-based Hausdorff distance between two curves."""
    A, B = a.vertices, b.vertices
    d = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class MarkedCurve:
    """An embedded or constant curve with its selected-component marker."""

    curve: DiscreteCurve
    marker: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.marker, dtype=float)
        if not self.curve.is_constant:
            if point_curve_distance(self.curve, m) < _clearance_threshold(self.curve):
                raise PreconditionError("marker too close to the curve")
        object.__setattr__(self, "marker", m)


@dataclass(frozen=True)
class CurveLoop:
    """A closed discrete path of curves based at a constant curve."""

    curves: tuple
    delta_loop: float

    def __post_init__(self):
        cs = tuple(self.curves)
        if len(cs) < 2:
            raise ParameterError("a loop needs at least two curves")
        first, last = cs[0], cs[-1]
        if not (first.is_constant and last.is_constant):
            raise PreconditionError("loop endpoints must be constant curves")
        if not np.allclose(first.vertices[0], last.vertices[0], atol=1e-9):
            raise PreconditionError("loop endpoints must be the same constant")
        for c in cs:
            if not c.is_constant and not is_embedded(c):
                raise PreconditionError("every non-constant member must be embedded")
        for a, b in zip(cs[:-1], cs[1:]):
            h = hausdorff_distance(a, b)
            if h > self.delta_loop * (1.0 + 1e-9):
                raise PreconditionError(
                    f"consecutive curves at Hausdorff distance {h:.3e} "
                    f"exceed the step bound {self.delta_loop:.3e}"
                )
        object.__setattr__(self, "curves", cs)

    @classmethod
    def from_curves(cls, curves, slack: float = 1.05) -> "CurveLoop":
        cs = tuple(curves)
        h = max(
            (hausdorff_distance(a, b) for a, b in zip(cs[:-1], cs[1:])), default=0.0
        )
        return cls(curves=cs, delta_loop=max(h * slack, 1e-12))


def _marker_candidates(curve: DiscreteCurve, rng=None) -> np.ndarray:
    pts = [fibonacci_directions(64), -fibonacci_directions(64)]
    ctr = curve.vertices.mean(axis=0)
    nc = np.linalg.norm(ctr)
    if nc > 1e-9:
        pts.append((ctr / nc)[None, :])
        pts.append((-ctr / nc)[None, :])
    if rng is not None:
        extra = rng.normal(size=(32, 3))
        pts.append(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.concatenate(pts, axis=0)


def _best_marker(cur, nxt, marker, needed_next, rng=None):
    """Re-mark within the current component so the handoff to nxt is safe."""
    cands = _marker_candidates(nxt, rng)
    thr_cur = _clearance_threshold(cur)
    d_cur = point_curve_distance(cur, cands)
    d_nxt = point_curve_distance(nxt, cands)
    ok = (d_cur >= thr_cur) & (d_nxt >= needed_next)
    if not np.any(ok):
        return None
    cands, d_nxt = cands[ok], d_nxt[ok]
    side = _winding_parity_batch(cur, marker, cands)
    if not np.any(side):
        return None
    cands, d_nxt = cands[side], d_nxt[side]
    return cands[int(np.argmax(d_nxt))]


def a_invariant(loop: CurveLoop, rng=None) -> int:
    """The Z_2 invariant of a loop of curves based at a constant.

    The lift starts on sheet 0 at the base constant and the returned bit is
    the sheet reached after traversing the loop.  Transitions through
    constants use the neighborhood rule: near a constant, sheet 1
    corresponds to the complementary component containing a fixed far
    reference point, sheet 0 to the component not containing it.
    """
    state_bit = 0
    marker = None  # set while the state is an embedded curve
    curves = loop.curves

    for cur, nxt in zip(curves[:-1], curves[1:]):
        step = hausdorff_distance(cur, nxt)
        if cur.is_constant and nxt.is_constant:
            continue

        if cur.is_constant:
            c = cur.vertices[0]
            anchor = -c
            needed = _needed_clearance(nxt, step)
            if point_curve_distance(nxt, anchor) < needed:
                raise TrackingError("far reference too close to the entering curve")
            if state_bit == 1:
                marker = anchor
            else:
                marker = _near_side_marker(nxt, c, anchor, needed, rng)
            continue

        if nxt.is_constant:
            c = nxt.vertices[0]
            anchor = -c
            thr = _clearance_threshold(cur)
            if point_curve_distance(cur, anchor) < thr:
                raise TrackingError("far reference too close to the exiting curve")
            state_bit = 1 if same_component(cur, marker, anchor) else 0
            marker = None
            continue

        # embedded -> embedded: keep the marker if it stays certifiably
        # clear of the next curve, otherwise move it within its component.
        needed = _needed_clearance(nxt, step)
        if point_curve_distance(nxt, marker) < 2.0 * needed:
            better = _best_marker(cur, nxt, marker, needed, rng)
            if better is not None:
                marker = better
            elif point_curve_distance(nxt, marker) < needed:
                raise TrackingError(
                    "loop step too coarse to track the lift; refine the loop"
                )
    return state_bit


def _near_side_marker(curve, c, anchor, needed, rng=None):
    """A point in the component on the `c` side (the one not containing anchor)."""
    cands = [np.asarray(c, dtype=float)[None, :]]
    cands.append(_marker_candidates(curve, rng))
    cands = np.concatenate(cands, axis=0)
    d = point_curve_distance(curve, cands)
    ok = d >= needed
    if not np.any(ok):
        raise TrackingError("no admissible marker near the base constant")
    cands, d = cands[ok], d[ok]
    far_side = _winding_parity_batch(curve, anchor, cands)
    near = ~far_side
    if not np.any(near):
        raise TrackingError("could not find a marker on the collapsed-disk side")
    cands, d = cands[near], d[near]
    return cands[int(np.argmax(d))]


# ---------------------------------------------------------------------------
# loop constructors (plane-section paths with continuously varying frames)
# ---------------------------------------------------------------------------


def _section_frame(x, pole):
    b1 = np.asarray(pole, dtype=float)
    b2 = np.cross(np.asarray(x, dtype=float), b1)
    b2 /= np.linalg.norm(b2)
    return b1, b2


def _rotated(base, pole, angle):
    base = np.asarray(base, dtype=float)
    pole = np.asarray(pole, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return c * base + s * np.cross(pole, base) + (1.0 - c) * (pole @ base) * pole


def _grow_stage(x, pole, n, steps, reverse=False):
    thetas = np.linspace(0.0, np.pi / 2.0, steps + 1)
    if reverse:
        thetas = np.pi - thetas[::-1]
    curves = []
    for th in thetas:
        lam = float(np.cos(th))
        if abs(lam) >= 1.0 - 1e-15:
            curves.append(DiscreteCurve.constant(np.copysign(1.0, lam) * np.asarray(x)))
        else:
            curves.append(circle_from_plane(x, lam, n, basis=_section_frame(x, pole)))
    return curves


def rotation_loop(
    base=(1.0, 0.0, 0.0),
    pole=(0.0, 0.0, 1.0),
    n: int = 192,
    grow_steps: int = 24,
    rot_steps: int = 48,
) -> CurveLoop:
    """Generator loop: grow a circle to a great one through the poles,
    rotate the plane by a half turn about the pole axis, and shrink back to
    the base point through the antipodal sections."""
    base = np.asarray(base, dtype=float)
    pole = np.asarray(pole, dtype=float)
    if abs(base @ pole) > 1e-12:
        raise ParameterError("base direction must be orthogonal to the pole axis")
    curves = _grow_stage(base, pole, n, grow_steps)
    for j in range(1, rot_steps + 1):
        x = _rotated(base, pole, np.pi * j / rot_steps)
        curves.append(circle_from_plane(x, 0.0, n, basis=_section_frame(x, pole)))
    x_end = _rotated(base, pole, np.pi)
    curves.extend(_grow_stage(x_end, pole, n, grow_steps, reverse=True)[1:])
    return CurveLoop.from_curves(curves)


def pulse_loop(
    base=(1.0, 0.0, 0.0),
    pole=(0.0, 0.0, 1.0),
    depth: float = 0.8,
    n: int = 192,
    steps: int = 24,
) -> CurveLoop:
    """Null loop: grow sections toward offset cos(depth * pi/2), then retract."""
    base = np.asarray(base, dtype=float)
    thetas = np.linspace(0.0, depth * np.pi / 2.0, steps + 1)
    frame = _section_frame(base, pole)
    out = [DiscreteCurve.constant(base)]
    for th in thetas[1:]:
        out.append(circle_from_plane(base, float(np.cos(th)), n, basis=frame))
    out.extend(out[-2::-1])
    return CurveLoop.from_curves(out)


def swing_loop(
    base=(1.0, 0.0, 0.0),
    pole=(0.0, 0.0, 1.0),
    swing: float = 0.6,
    n: int = 192,
    grow_steps: int = 24,
    rot_steps: int = 32,
) -> CurveLoop:
    """Null loop: rotate the great section partway and swing back."""
    base = np.asarray(base, dtype=float)
    pole = np.asarray(pole, dtype=float)
    curves = _grow_stage(base, pole, n, grow_steps)
    path = list(range(1, rot_steps + 1)) + list(range(rot_steps - 1, -1, -1))
    for j in path:
        x = _rotated(base, pole, swing * np.pi * j / rot_steps)
        curves.append(circle_from_plane(x, 0.0, n, basis=_section_frame(x, pole)))
    curves.extend(_grow_stage(base, pole, n, grow_steps)[-2::-1])
    return CurveLoop.from_curves(curves)


def constant_loop(point=(1.0, 0.0, 0.0), k: int = 8) -> CurveLoop:
    cs = [DiscreteCurve.constant(point) for _ in range(k)]
    return CurveLoop(curves=tuple(cs), delta_loop=1e-12)


def concatenate_loops(first: CurveLoop, second: CurveLoop) -> CurveLoop:
    a, b = first.curves[-1], second.curves[0]
    if not np.allclose(a.vertices[0], b.vertices[0], atol=1e-9):
        raise PreconditionError("loops must share the base constant")
    return CurveLoop(
        curves=first.curves[:-1] + second.curves,
        delta_loop=max(first.delta_loop, second.delta_loop),
    )


def refine_loop(loop: CurveLoop, factor: int = 2) -> CurveLoop:
    """Insert vertexwise geodesic interpolants between consecutive curves."""
    if factor < 2:
        return loop
    out = [loop.curves[0]]
    for a, b in zip(loop.curves[:-1], loop.curves[1:]):
        for j in range(1, factor):
            t = j / factor
            out.append(_interpolate_curves(a, b, t))
        out.append(b)
    return CurveLoop.from_curves(out)


def _interpolate_curves(a: DiscreteCurve, b: DiscreteCurve, t: float) -> DiscreteCurve:
    from .curves import _slerp_rows

    A, B = a.vertices, b.vertices
    if a.is_constant and b.is_constant:
        return a
    if a.is_constant:
        A = np.broadcast_to(A[0], B.shape)
    if b.is_constant:
        B = np.broadcast_to(B[0], A.shape)
    if A.shape != B.shape:
        raise ParameterError("interpolation requires aligned vertex counts")
    ts = np.full(A.shape[0], t)
    if a.is_constant and t < 0.5:
        return a
    if b.is_constant and t >= 0.5:
        return b
    return DiscreteCurve(_slerp_rows(np.array(A), np.array(B), ts))


# ---------------------------------------------------------------------------
# manifest I/O
# ---------------------------------------------------------------------------


def load_loop(manifest_path) -> CurveLoop:
    """Load a loop from a manifest JSON listing curve CSVs and constants.

    Schema: {"delta_loop": <float, optional>, "curves": [
        {"path": "relative.csv"} | {"constant": [x, y, z]}, ...]}
    """
    path = Path(manifest_path)
    data = json.loads(path.read_text())
    curves = []
    for item in data["curves"]:
        if "constant" in item:
            curves.append(DiscreteCurve.constant(item["constant"]))
        else:
            curves.append(DiscreteCurve.from_csv(path.parent / item["path"]))
    if "delta_loop" in data:
        return CurveLoop(curves=tuple(curves), delta_loop=float(data["delta_loop"]))
    return CurveLoop.from_curves(curves)


def save_loop(loop: CurveLoop, directory) -> Path:
    """Write a loop as curve CSVs plus a manifest JSON; returns the manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = []
    for i, c in enumerate(loop.curves):
        if c.is_constant:
            items.append({"constant": [float(x) for x in c.vertices[0]]})
        else:
            name = f"curve_{i:04d}.csv"
            c.to_csv(directory / name)
            items.append({"path": name})
    manifest = directory / "loop.json"
    manifest.write_text(
        json.dumps({"delta_loop": loop.delta_loop, "curves": items}, indent=2)
    )
    return manifest
