"""Exception hierarchy shared by every module of the package."""


class NCMartError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(NCMartError, ValueError):
    pass


class ConvergenceFailure(NCMartError, RuntimeError):
    pass


class SingularPower(NCMartError, ValueError):
    pass


class DimensionMismatch(NCMartError, ValueError):
    pass


class BadPartition(NCMartError, ValueError):
    pass


class BadDimension(NCMartError, ValueError):
    pass


class NotIncreasing(NCMartError, ValueError):
    """Raised by tower validation; ``step`` is the index of the first spec
    that fails to contain its predecessor."""

    def __init__(self, step, reason=""):
        self.step = step
        msg = f"tower is not increasing at step {step}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class LengthMismatch(NCMartError, ValueError):
    pass


class SingularChain(NCMartError, ValueError):
    pass


class OutsideRange(NCMartError, ValueError):
    pass


class OrderViolation(NCMartError, ValueError):
    pass


class BoundViolation(NCMartError, AssertionError):
    """An inequality was numerically violated beyond tolerance.

    Carries the offending instance so callers can dump it.
    """

    def __init__(self, message, instance=None):
        self.instance = instance
        super().__init__(message)


class ConfigError(NCMartError, ValueError):
    pass
