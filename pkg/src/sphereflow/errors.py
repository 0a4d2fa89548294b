"""Exception taxonomy shared across the package."""


class PreconditionError(ValueError):
    """An operation received geometric data violating its preconditions."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class DegenerateCurveError(ValueError):
    """Vertex spacing too degenerate for the requested discrete operator."""


class AmbiguousEmbeddingError(RuntimeError):
    """Two non-adjacent segments pass within the resolvable tolerance.

    The caller must refine the curve; guessing embeddedness here would
    corrupt downstream component bookkeeping.
    """


class ProximityError(ValueError):
    """A probe point lies too close to a curve for component tests."""


class TrackingError(RuntimeError):
    """A loop of curves is too coarse to track the two-fold lift."""


class FlowIntegrityError(RuntimeError):
    """The discrete flow lost embeddedness; the mesh is too coarse."""
