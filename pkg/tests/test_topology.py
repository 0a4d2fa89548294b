import numpy as np
import pytest

from sphereflow import DiscreteCurve, PreconditionError, ProximityError
from sphereflow.sweepout import circle_from_plane
from sphereflow.topology import (
    CurveLoop,
    a_invariant,
    concatenate_loops,
    constant_loop,
    hausdorff_distance,
    load_loop,
    point_curve_distance,
    pulse_loop,
    refine_loop,
    rotation_loop,
    same_component,
    save_loop,
    swing_loop,
)

from conftest import latitude_circle

SMALL = dict(n=128, grow_steps=16, rot_steps=32)


def small_rotation(base=(1.0, 0.0, 0.0), pole=(0.0, 0.0, 1.0)):
    return rotation_loop(base=base, pole=pole, **SMALL)


class TestSameComponent:
    def test_equator_separates_poles(self):
        eq = circle_from_plane((0, 0, 1), 0.0, 256)
        assert same_component(eq, (0, 0, 1), (0, 0, -1)) is False

    def test_points_in_north_cap(self):
        eq = circle_from_plane((0, 0, 1), 0.0, 256)
        q = np.array([0.0, 0.1, 0.995])
        q /= np.linalg.norm(q)
        assert same_component(eq, (0, 0, 1), q) is True

    def test_small_cap_leaves_far_points_together(self):
        cap = circle_from_plane((0, 0, 1), 0.9, 256)
        assert same_component(cap, (0, 0, -1), (1, 0, 0)) is True

    def test_proximity_guard(self):
        eq = circle_from_plane((0, 0, 1), 0.0, 256)
        close = np.array([1.0, 0.0, 0.01])
        close /= np.linalg.norm(close)
        with pytest.raises(ProximityError):
            same_component(eq, (0, 0, 1), close)

    def test_relation_symmetric_two_classes(self, rng):
        curve = circle_from_plane((0.6, 0.0, 0.8), 0.35, 256)
        ref = np.array(curve.vertices.mean(axis=0))
        ref /= np.linalg.norm(ref)
        classes = {True: 0, False: 0}
        for _ in range(40):
            q = rng.normal(size=3)
            q /= np.linalg.norm(q)
            if point_curve_distance(curve, q) < 0.4:
                continue
            a = same_component(curve, ref, q)
            assert a == same_component(curve, q, ref)
            classes[a] += 1
        assert classes[True] > 0 and classes[False] > 0


class TestLoopValidation:
    def test_endpoints_must_be_constant(self):
        with pytest.raises(PreconditionError):
            CurveLoop(
                curves=(latitude_circle(0.3, 64), DiscreteCurve.constant((1, 0, 0))),
                delta_loop=10.0,
            )

    def test_step_bound_enforced(self):
        a = DiscreteCurve.constant((1, 0, 0))
        b = circle_from_plane((1, 0, 0), 0.0, 64)  # a great circle, far away
        with pytest.raises(PreconditionError):
            CurveLoop(curves=(a, b, a), delta_loop=0.05)

    def test_members_must_embed(self):
        from conftest import figure_eight

        a = DiscreteCurve.constant((0, 0, 1))
        with pytest.raises(PreconditionError):
            CurveLoop(curves=(a, figure_eight(), a), delta_loop=10.0)

    def test_hausdorff_symmetric(self):
        a = circle_from_plane((0, 0, 1), 0.2, 64)
        b = circle_from_plane((0, 0, 1), 0.4, 64)
        assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
        assert hausdorff_distance(a, a) == 0.0


class TestAInvariant:
    def test_meridian_rotation_is_one(self):
        assert a_invariant(small_rotation()) == 1

    def test_constant_loop_is_zero(self):
        assert a_invariant(constant_loop()) == 0

    def test_doubled_rotation_is_zero(self):
        r = small_rotation()
        assert a_invariant(concatenate_loops(r, r)) == 0

    def test_null_loops_are_zero(self):
        assert a_invariant(pulse_loop(n=128, steps=16)) == 0
        assert a_invariant(swing_loop(n=128, grow_steps=16, rot_steps=20)) == 0

    def test_rotation_about_other_axis(self):
        assert a_invariant(small_rotation(base=(0, 1, 0), pole=(1, 0, 0))) == 1

    def test_homomorphism_on_random_concatenations(self, rng):
        base = (1.0, 0.0, 0.0)
        pool = []
        for k in range(3):
            angle = rng.uniform(0, 2 * np.pi)
            pole = (0.0, float(np.cos(angle)), float(np.sin(angle)))
            pool.append((small_rotation(base=base, pole=pole), 1))
        pool.append((pulse_loop(base=base, depth=0.7, n=128, steps=16), 0))
        pool.append((swing_loop(base=base, n=128, grow_steps=16, rot_steps=20), 0))
        for _ in range(10):
            (la, ba), (lb, bb) = (
                pool[rng.integers(len(pool))],
                pool[rng.integers(len(pool))],
            )
            combined = concatenate_loops(la, lb)
            assert a_invariant(combined) == (ba ^ bb)

    def test_marker_independence(self):
        loop = small_rotation()
        bits = {
            a_invariant(loop, rng=np.random.default_rng(seed)) for seed in range(20)
        }
        assert bits == {1}

    def test_refinement_stability(self):
        loop = small_rotation()
        assert a_invariant(refine_loop(loop, 2)) == 1
        null = pulse_loop(n=128, steps=16)
        assert a_invariant(refine_loop(null, 2)) == 0


class TestManifestIO:
    def test_round_trip_preserves_invariant(self, tmp_path):
        loop = small_rotation()
        manifest = save_loop(loop, tmp_path / "loop")
        again = load_loop(manifest)
        assert len(again.curves) == len(loop.curves)
        assert a_invariant(again) == 1
