import numpy as np
import pytest

from sphereflow import DiscreteCurve, MetricSpec

ROUND = MetricSpec.round_sphere(1.0)
ELLIPSOID_08 = MetricSpec.ellipsoid(0.8)
ZOLL_03 = MetricSpec.zoll([0.3, -0.3])
ZOLL_01 = MetricSpec.zoll([0.1, -0.1])

#: 4 E(1 - r^2) for r = 0.8, computed with mpmath.ellipe at 30 digits
MERIDIAN_08 = 5.672333577794896926

TWO_PI = 2.0 * np.pi


def latitude_circle(theta: float, n: int) -> DiscreteCurve:
    ts = TWO_PI * np.arange(n) / n
    pts = np.stack(
        [
            np.sin(theta) * np.cos(ts),
            np.sin(theta) * np.sin(ts),
            np.full(n, np.cos(theta)),
        ],
        axis=1,
    )
    return DiscreteCurve(pts)


def great_circle(n: int, axis=(0.0, 0.0, 1.0)) -> DiscreteCurve:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    pick = np.eye(3)[int(np.argmin(np.abs(axis)))]
    b1 = np.cross(pick, axis)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(axis, b1)
    ts = TWO_PI * np.arange(n) / n
    return DiscreteCurve(np.outer(np.cos(ts), b1) + np.outer(np.sin(ts), b2))


def wobbled_circle(n: int, amp: float = 0.12, mode: int = 3, seed: int = 0) -> DiscreteCurve:
    """Smooth embedded non-planar perturbation of the equator."""
    rng = np.random.default_rng(seed)
    ts = TWO_PI * np.arange(n) / n
    phase = rng.uniform(0.0, TWO_PI)
    z = amp * np.cos(mode * ts + phase)
    rho = np.sqrt(1.0 - z * z)
    pts = np.stack([rho * np.cos(ts), rho * np.sin(ts), z], axis=1)
    return DiscreteCurve(pts)


def figure_eight(n_per_lobe: int = 40) -> DiscreteCurve:
    """Two lobes crossing transversally; lives near the north pole."""
    ts = np.linspace(0.0, TWO_PI, 2 * n_per_lobe, endpoint=False)
    x = 0.5 * np.sin(2 * ts)
    y = 0.8 * np.sin(ts)
    pts = np.stack([x, y, np.ones_like(x)], axis=1)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return DiscreteCurve(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_tangent(rng, p, spec=None):
    v = rng.normal(size=3)
    p = np.asarray(p, dtype=float)
    v = v - np.dot(v, p) * p
    return v


def random_point(rng):
    p = rng.normal(size=3)
    return p / np.linalg.norm(p)
