"""Exception hierarchy shared by every module."""


class FoschError(Exception):
    """Base class for all errors raised by foschlab."""


class GridError(FoschError, ValueError):
    pass


class SpaceError(FoschError, ValueError):
    """A field was passed in the wrong (physical/spectral) representation."""


class NonFiniteError(FoschError, FloatingPointError):
    """A computation produced NaN or infinity.

    ``location`` holds the first offending grid index (or point) and ``time``
    the simulation time when known.
    """

    def __init__(self, message, location=None, time=None):
        super().__init__(message)
        self.location = location
        self.time = time


class AdmissibilityError(FoschError, ValueError):
    """Parameters violate a hypothesis of the underlying well-posedness theory."""


class WrapAroundError(FoschError, ValueError):
    def __init__(self, message, safe_horizon):
        super().__init__(message)
        self.safe_horizon = safe_horizon


class DivergenceError(FoschError, RuntimeError):
    """Picard iteration failed to contract; ``report`` carries the diagnostics."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class ConfigError(FoschError, ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
