"""Exception hierarchy shared by the exact and numeric layers."""


class HTGeoError(Exception):
    """Base class for all package errors."""


class DegenerateAngle(HTGeoError):
    """Rotation angle is 0 or 2π: the fixed point is not isolated."""


class MalformedRecipe(HTGeoError):
    """Space recipe violates the construction rules."""


class InexactEquality(HTGeoError):
    """A gap is numerically ~0 on the float path; equality cannot be certified."""


class AtMonopole(HTGeoError):
    """Evaluation point coincides with a monopole location."""


class OnDiracString(HTGeoError):
    """Evaluation point sits on the gauge string of the chosen connection form."""


class OutsideBall(HTGeoError):
    """Point is outside the smoothing chart's ball of validity."""


class DegenerateRadius(HTGeoError):
    """Radial coordinate must be strictly positive."""


class SingularMetric(HTGeoError):
    """Metric matrix is not invertible within the conditioning threshold."""


class RouteMismatch(HTGeoError):
    """Two independent evaluation routes of the same density disagree."""


class NonFinite(HTGeoError):
    """A sampled value is NaN or infinite."""


class BadFit(HTGeoError):
    """Extrapolation model does not describe the data."""


class BadPerturbation(HTGeoError):
    """Collar perturbation violates its structural constraints."""


class ParseError(HTGeoError):
    """Recipe file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
