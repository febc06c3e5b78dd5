"""Exception types raised across the package."""


class OvalBowlError(Exception):
    pass


class IntegrationAccuracyError(OvalBowlError):
    pass


class NonConvergenceError(OvalBowlError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RangeError(OvalBowlError, ValueError):
    """A requested parameter (depth bracket, level height, shift) is out of range."""


class ExtractionError(OvalBowlError):
    pass


class InversionError(OvalBowlError):
    pass


class ConsistencyError(OvalBowlError):
    pass


class ConfigError(OvalBowlError, ValueError):
    pass


class FormatError(OvalBowlError):
    pass
