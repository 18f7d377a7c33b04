"""Exception hierarchy. Everything the CLI maps to exit code 1 derives from XflError."""


class XflError(Exception):
    pass


class InfeasibleError(XflError, ValueError):
    """No physical solution exists (e.g. frequency below the lateral cutoff)."""


class UnderdeterminedError(XflError, ValueError):
    pass


class StackError(XflError, ValueError):
    pass


class DegenerateResonanceError(XflError):
    """No admittance minimum/maximum pair could be located."""


class NetworkError(XflError):
    pass


class MetricsError(XflError):
    pass


class NoPassbandError(MetricsError):
    pass


class BandNotResolvedError(MetricsError):
    pass


class NoResonanceError(XflError):
    pass


class FitError(XflError):
    pass


class TouchstoneError(XflError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormatError(TouchstoneError):
    pass


class ConfigError(XflError):
    pass
