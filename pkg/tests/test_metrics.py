import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphereflow import MetricSpec, OddProfile, ParameterError, PreconditionError
from sphereflow.metrics import (
    christoffel_fd,
    covariant_acceleration,
    meridian_length,
    meridian_length_gauss,
    metric_eval,
    parse_metric,
)

from conftest import ELLIPSOID_08, MERIDIAN_08, ROUND, TWO_PI, ZOLL_03, random_point, random_tangent

ALL_SPECS = [ROUND, ELLIPSOID_08, ZOLL_03]


class TestOddProfile:
    def test_odd_by_construction(self):
        h = OddProfile((0.3, -0.3))
        z = np.linspace(-1, 1, 101)
        assert np.allclose(h(z), -h(-z), atol=1e-15)

    def test_h1_must_vanish(self):
        with pytest.raises(ParameterError):
            OddProfile((0.3, -0.2))

    def test_sup_bound_enforced(self):
        # sup of 3 z (1 - z^2) on [-1, 1] is 2 sqrt(3)/3 > 1
        with pytest.raises(ParameterError):
            OddProfile((3.0, -3.0))

    def test_derivative_matches_finite_difference(self):
        h = OddProfile((0.3, -0.2, -0.1))
        z = np.linspace(-0.95, 0.95, 41)
        fd = (h(z + 1e-6) - h(z - 1e-6)) / 2e-6
        assert np.allclose(h.derivative(z), fd, atol=1e-8)


class TestMetricEval:
    def test_round_unit_tangent(self):
        assert metric_eval(ROUND, (0, 0, 1), (1, 0, 0), (1, 0, 0)) == pytest.approx(1.0)

    def test_zoll_pole_is_round(self):
        # h(1) = 0 forces the round value at the poles
        v = np.array([0.6, 0.8, 0.0])
        assert metric_eval(ZOLL_03, (0, 0, 1), v, v) == pytest.approx(1.0, abs=1e-12)

    def test_ellipsoid_squashes_z(self):
        got = metric_eval(ELLIPSOID_08, (1, 0, 0), (0, 0, 1), (0, 0, 1))
        assert got == pytest.approx(0.8**2, abs=1e-14)

    def test_off_sphere_rejected(self):
        with pytest.raises(PreconditionError):
            metric_eval(ROUND, (0, 0, 1.001), (1, 0, 0), (1, 0, 0))

    def test_non_tangent_rejected(self):
        with pytest.raises(PreconditionError):
            metric_eval(ROUND, (0, 0, 1), (0, 0, 1), (0, 0, 1))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_symmetry_and_positivity(self, spec, rng):
        for _ in range(50):
            p = random_point(rng)
            u = random_tangent(rng, p)
            v = random_tangent(rng, p)
            guv = metric_eval(spec, p, u, v)
            gvu = metric_eval(spec, p, v, u)
            assert guv == gvu  # symmetric exactly
            assert metric_eval(spec, p, u, u) > 0.0

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_rotational_invariance(self, spec, rng):
        for _ in range(20):
            p = random_point(rng)
            u = random_tangent(rng, p)
            v = random_tangent(rng, p)
            a = rng.uniform(0, TWO_PI)
            R = np.array(
                [
                    [np.cos(a), -np.sin(a), 0.0],
                    [np.sin(a), np.cos(a), 0.0],
                    [0.0, 0.0, 1.0],
                ]
            )
            before = metric_eval(spec, p, u, v)
            after = metric_eval(spec, R @ p, R @ u, R @ v)
            assert after == pytest.approx(before, abs=1e-12)

    def test_r_equals_one_is_round(self, rng):
        flat = MetricSpec.ellipsoid(1.0)
        for _ in range(1000):
            p = random_point(rng)
            u = random_tangent(rng, p)
            v = random_tangent(rng, p)
            assert metric_eval(flat, p, u, v) == pytest.approx(
                metric_eval(ROUND, p, u, v), abs=1e-10
            )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_batched_matches_scalar(self, seed):
        r = np.random.default_rng(seed)
        p = random_point(r)
        u = random_tangent(r, p)
        v = random_tangent(r, p)
        batched = metric_eval(ZOLL_03, p[None, :], u[None, :], v[None, :])
        assert batched[0] == metric_eval(ZOLL_03, p, u, v)


class TestCovariantAcceleration:
    def test_round_is_flat(self, rng):
        for _ in range(20):
            p = random_point(rng)
            v = random_tangent(rng, p)
            a = covariant_acceleration(ROUND, p, v)
            assert np.linalg.norm(a) < 1e-14

    def test_ellipsoid_equator_is_geodesic(self):
        a = covariant_acceleration(ELLIPSOID_08, (1, 0, 0), (0, 1, 0))
        assert np.linalg.norm(a) < 1e-14

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_fd_matches_closed_form(self, spec, rng):
        pts, vecs = [], []
        while len(pts) < 100:
            p = random_point(rng)
            if abs(p[2]) <= 0.99:
                pts.append(p)
                vecs.append(random_tangent(rng, p))
        P, V = np.asarray(pts), np.asarray(vecs)
        closed = covariant_acceleration(spec, P, V)
        fd = christoffel_fd(spec, P, V)
        assert np.max(np.linalg.norm(closed - fd, axis=1)) < 1e-6

    def test_fd_method_flag(self, rng):
        p = random_point(rng)
        v = random_tangent(rng, p)
        a = covariant_acceleration(ZOLL_03, p, v, method="fd")
        b = christoffel_fd(ZOLL_03, p, v)
        assert np.allclose(a, b)

    def test_acceleration_is_tangential(self, rng):
        for spec in ALL_SPECS:
            p = random_point(rng)
            v = random_tangent(rng, p)
            a = covariant_acceleration(spec, p, v)
            assert abs(np.dot(a, p)) < 1e-12


class TestMeridianLength:
    def test_round(self):
        assert meridian_length(ROUND) == pytest.approx(TWO_PI, abs=1e-12)

    def test_round_radius_scales(self):
        assert meridian_length(MetricSpec.round_sphere(2.5)) == pytest.approx(
            2.5 * TWO_PI, abs=1e-10
        )

    def test_zoll_profile_integrates_out(self):
        # odd profile: the polar correction cancels over a full meridian
        assert meridian_length(ZOLL_03) == pytest.approx(TWO_PI, abs=1e-10)

    def test_ellipsoid_two_rule_cross_check(self):
        a = meridian_length(ELLIPSOID_08)
        b = meridian_length_gauss(ELLIPSOID_08)
        assert a == pytest.approx(b, abs=1e-8)
        assert a == pytest.approx(MERIDIAN_08, abs=1e-10)

    def test_r1_matches_round(self):
        assert meridian_length(MetricSpec.ellipsoid(1.0)) == pytest.approx(
            TWO_PI, abs=1e-10
        )


class TestSerialization:
    def test_json_round_trip(self):
        for spec in ALL_SPECS:
            again = parse_metric(json.dumps(spec.to_dict()))
            assert again == spec

    def test_parse_from_file(self, tmp_path):
        path = tmp_path / "metric.json"
        path.write_text(json.dumps({"family": "zoll", "h_coeffs": [0.3, -0.3]}))
        assert parse_metric(path) == ZOLL_03

    def test_bad_family_rejected(self):
        with pytest.raises(ParameterError):
            parse_metric({"family": "hyperbolic"})

    def test_ellipsoid_range_validated(self):
        with pytest.raises(ParameterError):
            MetricSpec.ellipsoid(1.5)
