"""Exception types shared across the package."""


class PoleError(ValueError):
    """An input sits exactly on a pole of a fractional-linear map."""


class BranchCutError(ValueError):
    """A square-root argument lies on the closed negative real axis."""


class IntervalError(ValueError):
    """A spectral interval does not satisfy 0 < alpha < beta."""


class DegenerateParamError(ValueError):
    """A derived denominator or reference shift vanishes."""


class SupportError(ValueError):
    """An augmented field carries data outside the inclusion support."""


class RasterParseError(ValueError):
    """Malformed plain-text phase raster. Carries line/column info."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ContractError(ValueError):
    """An operation was invoked outside its stated contract."""


class ConfigError(ValueError):
    """A run-configuration file failed schema validation."""
