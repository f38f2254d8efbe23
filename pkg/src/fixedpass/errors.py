"""Exception hierarchy.  Every error carries a short machine-readable ``code``."""


class FixedPassError(Exception):
    code = "error"


class NotUnivariate(FixedPassError, ValueError):
    code = "not_univariate"


class DegreeError(FixedPassError, ValueError):
    code = "degree"


class DegreeOverflow(FixedPassError):
    code = "degree_overflow"


class ValidationFailed(FixedPassError):
    """A plant violates one of the standing assumptions."""
    code = "validation_failed"

    def __init__(self, message, clause: str, report=None):
        super().__init__(message)
        self.clause = clause
        self.report = report


class DomainMismatch(FixedPassError):
    code = "domain_mismatch"


class UnstableCancellation(FixedPassError):
    code = "unstable_cancellation"


class SolverFailure(FixedPassError):
    code = "solver_failure"

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class Inconclusive(FixedPassError):
    """Box positivity could not be certified at the requested multiplier degree."""
    code = "inconclusive"

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class PreconditionFailed(FixedPassError):
    code = "precondition_failed"

    def __init__(self, message, clause: str | None = None):
        super().__init__(message)
        self.clause = clause


class UnstableInput(FixedPassError):
    code = "unstable_input"


class NonMinimumPhase(FixedPassError):
    code = "non_minimum_phase"


class ImproperTransfer(FixedPassError):
    code = "improper_transfer"


class NoStablePoint(FixedPassError):
    code = "no_stable_point"


class ParseError(FixedPassError):
    code = "parse_error"


class SchemaError(FixedPassError):
    code = "schema_error"
