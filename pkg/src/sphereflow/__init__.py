"""sphereflow: curve shortening and closed geodesics on metric 2-spheres.

A numerical laboratory for Riemannian metrics on the 2-sphere: evaluate
rotationally symmetric metric tensors, shorten embedded curves by their
curvature, sweep out the plane-section family to estimate the three minmax
levels, track the two-fold covering invariant of loops of circles, and
assemble the simple length spectrum with an independent shooting oracle.
"""

from .curves import DiscreteCurve, VertexGeometry, curvature_field, is_embedded, length, resample
from .errors import (
    AmbiguousEmbeddingError,
    DegenerateCurveError,
    FlowIntegrityError,
    ParameterError,
    PreconditionError,
    ProximityError,
    TrackingError,
)
from .flow import (
    COLLAPSED,
    CONVERGED,
    EXHAUSTED,
    FlowOutcome,
    FlowParams,
    FlowTrace,
    check_length_derivative,
    evolve,
    step,
)
from .geodesics import (
    GeodesicTrajectory,
    SpectrumReport,
    clairaut_series,
    closure_defect,
    meridian_through,
    shoot,
    simple_spectrum,
    verify_cover,
    verify_zoll,
)
from .metrics import (
    MetricSpec,
    OddProfile,
    covariant_acceleration,
    meridian_length,
    metric_eval,
    parse_metric,
)
from .sweepout import (
    LSEstimates,
    PlaneFamilyIndex,
    SweepoutGrid,
    circle_from_plane,
    estimate_ls_values,
    fibonacci_directions,
    subfamily,
    sweep_report,
)
from .topology import (
    CurveLoop,
    MarkedCurve,
    a_invariant,
    concatenate_loops,
    constant_loop,
    hausdorff_distance,
    load_loop,
    pulse_loop,
    refine_loop,
    rotation_loop,
    same_component,
    save_loop,
    swing_loop,
)

__version__ = "0.1.0"
