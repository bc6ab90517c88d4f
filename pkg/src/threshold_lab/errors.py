"""Exception types shared across the toolkit."""

from __future__ import annotations


class ThresholdLabError(Exception):
    """Base class for all toolkit errors."""


class NotW12(ThresholdLabError):
    """Potential is not in W^1_2: a jump at a breakpoint or a nonzero endpoint value."""


class OutOfTable(ThresholdLabError):
    """Coupling parameter outside the range of a tabulated scaling family."""


class DiscontinuousAtZero(ThresholdLabError):
    pass


class StepFailure(ThresholdLabError):
    """Adaptive step size underflowed."""


class QuadratureFailure(ThresholdLabError):
    pass


class NoResonance(ThresholdLabError):
    """No bounded zero-energy solution; ``mismatch`` holds the achieved |h'(b)|."""

    def __init__(self, mismatch: float, message: str | None = None):
        self.mismatch = mismatch
        super().__init__(message or f"no zero-energy resonance (mismatch {mismatch:.3e})")


class NoBracket(ThresholdLabError):
    pass


class NotFound(ThresholdLabError):
    """No negative eigenvalue could be located."""


class NoEigenvalue(ThresholdLabError):
    pass


class ConditionsViolated(ThresholdLabError):
    """Hypotheses of a threshold result fail.

    The offending prediction (or quasimode data) is kept on ``.prediction`` so
    callers can still inspect it.
    """

    def __init__(self, failed: list[str], prediction=None):
        self.failed = list(failed)
        self.prediction = prediction
        super().__init__("conditions violated: " + ", ".join(self.failed))


class InsufficientData(ThresholdLabError):
    pass


class ConfigError(ThresholdLabError):
    pass
