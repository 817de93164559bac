"""Exception types raised across the package."""


class PlxError(Exception):
    """Base class for all package errors."""


class DimensionError(PlxError, ValueError):
    """Array shapes or indices do not agree with the model dimensions."""


class ParameterError(PlxError, ValueError):
    """A parameter lies outside its admissible set."""


class InfeasibleSupportError(PlxError, ValueError):
    """An observed order has zero probability under the supplied length distribution."""


class UnboundedLikelihoodError(PlxError, RuntimeError):
    """The ascent iterate escaped to infinity, so no finite maximiser was found."""

    def __init__(self, message: str, assumption1_ok: bool | None = None):
        super().__init__(message)
        self.assumption1_ok = assumption1_ok


class RankDeficiencyError(PlxError, ValueError):
    """A quantity requiring a positive-definite curvature was asked of a flat direction."""


class ParseError(PlxError, ValueError):
    """A text record could not be parsed; carries the offending line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
