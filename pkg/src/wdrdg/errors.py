"""Exception types shared across the package."""


class WdrdgError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(WdrdgError, ValueError):
    pass


class EmptyInput(WdrdgError, ValueError):
    pass


class EmptyClassCell(WdrdgError, ValueError):
    """No samples exist for a (domain, class) cell needed for training."""

    def __init__(self, domain, label):
        super().__init__(f"no samples for class {label} in domain {domain!r}")
        self.domain = domain
        self.label = label


class InvalidMeasure(WdrdgError, ValueError):
    pass


class NonUniformSourceWeights(WdrdgError, ValueError):
    pass


class NumericalFailure(WdrdgError, RuntimeError):
    pass


class InfeasibleDelta(WdrdgError):
    """The robust program has no feasible point for the requested delta."""

    def __init__(self, delta):
        super().__init__(f"robust program infeasible for delta={delta!r}; lower delta")
        self.delta = delta


class AllDeltasInfeasible(WdrdgError):
    pass


class ParseError(WdrdgError, ValueError):
    pass


class LabelOutOfRange(WdrdgError, ValueError):
    pass


class ConfigError(WdrdgError, ValueError):
    pass
