"""
Exception hierarchy for the HTD uncertainty toolkit
"""


class HtdError(Exception):
    """Base class for every error raised by the toolkit"""


class UnknownId(HtdError):
    """Raised when a PoI, parameter or SBD node id does not exist"""

    def __init__(self, kind: str, ident: str):
        super().__init__(f"unknown {kind} id: {ident}")
        self.kind = kind
        self.ident = ident


class ForeignFactor(HtdError):
    """Raised when a ranking mentions a factor not assigned to the PoI"""

    def __init__(self, poi_id: str, param_ids: list[str]):
        super().__init__(
            f"ranking for {poi_id} mentions unassigned factors: {', '.join(param_ids)}"
        )
        self.poi_id = poi_id
        self.param_ids = param_ids


# Document I/O


class DocumentError(HtdError):
    """Document text could not be turned into an HtdDocument"""


class DocumentSyntaxError(DocumentError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(DocumentError):
    def __init__(self, path: str, expected: str, found: str):
        super().__init__(f"{path}: expected {expected}, found {found}")
        self.path = path
        self.expected = expected
        self.found = found


# Expressions and propagation


class ExpressionError(HtdError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnboundIdentifier(ExpressionError):
    def __init__(self, name: str):
        super().__init__(f"identifier not bound: {name}")
        self.name = name


class DivisionByZeroInterval(ExpressionError):
    pass


class EvalError(ExpressionError):
    pass


class Unsupported(HtdError):
    """Operation not defined for this representation kind"""


# System breakdown


class SbdError(HtdError, ValueError):
    pass


class CycleDetected(SbdError):
    pass


class MultipleRoots(SbdError):
    pass


class DuplicateId(SbdError):
    pass


class DanglingParent(SbdError):
    pass


# Screening


class ScreeningError(HtdError):
    pass


class DegenerateRange(ScreeningError):
    pass


class NoFactorsSelected(ScreeningError):
    pass


class BaselineFailed(ScreeningError):
    pass


class NoEffects(ScreeningError):
    pass


class RunnerError(HtdError):
    pass


class RunnerProtocolError(RunnerError):
    pass


class RunnerSpawnError(RunnerError):
    pass


# Delay characterization


class DelayError(HtdError):
    pass


class EmptySamples(DelayError):
    pass


class InvalidSamples(DelayError):
    pass
