"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures to
the documented process exit status without a lookup table.
"""


class GeozetaError(Exception):
    exit_code = 1
    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "type": type(self).__name__, "message": str(self),
                "exit_code": self.exit_code}


class ParseError(GeozetaError):
    exit_code = 2
    kind = "parse"


class ValidationError(GeozetaError):
    exit_code = 3
    kind = "validation"


class InvalidPatternError(ValidationError):
    pass


class NumericError(GeozetaError):
    exit_code = 4
    kind = "numeric"


class DivergenceError(NumericError):
    pass


class PrecisionError(NumericError):
    pass


class QuadratureError(NumericError):
    pass


class InstabilityError(NumericError):
    pass


class IllConditionedFitError(NumericError):
    def __init__(self, message, alpha=None, residual=None):
        super().__init__(message)
        self.alpha = alpha
        self.residual = residual


class PoleError(NumericError):
    def __init__(self, message, order):
        super().__init__(message)
        self.order = order


class PreconditionError(GeozetaError):
    exit_code = 5
    kind = "precondition"


class DomainError(PreconditionError):
    pass


class MissingTraceError(PreconditionError):
    pass


class MissingEigenvalueDataError(PreconditionError):
    pass


class ZeroShiftError(PreconditionError):
    pass


class NonpositiveAlphaError(PreconditionError):
    pass
