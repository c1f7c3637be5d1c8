"""Exception taxonomy for the flow laboratory.

Every failure mode that callers are expected to branch on gets its own
class; all inherit from McflabError so batch drivers can catch one type.
"""

from __future__ import annotations


class McflabError(Exception):
    """Base class for all structured errors raised by this package."""


class DegenerateMetric(McflabError):
    """Induced metric determinant fell at or below the degeneracy threshold.

    Signals grid collapse / flow integrated past its validity.
    """

    def __init__(self, min_det: float, threshold: float = 1e-12):
        self.min_det = float(min_det)
        self.threshold = float(threshold)
        super().__init__(
            f"metric degenerate: min det g = {min_det:.3e} <= {threshold:.1e}"
        )


class NonFinite(McflabError):
    """A computed field contains NaN or Inf."""


class InsufficientData(McflabError):
    """Not enough samples to perform the requested fit or report."""


class GraphLost(McflabError):
    """A snapshot stopped being a graph over the domain factor."""

    def __init__(self, t: float, detail: str = ""):
        self.t = float(t)
        super().__init__(f"graph condition lost at t = {t:.6g}" + (f" ({detail})" if detail else ""))


class KBelowMu(McflabError):
    """Ratio-monitor offset k is not below min omega1 on some snapshot."""

    def __init__(self, t: float, k: float, min_mu: float):
        self.t = float(t)
        self.k = float(k)
        self.min_mu = float(min_mu)
        super().__init__(f"k = {k:.6g} >= min omega1 = {min_mu:.6g} at t = {t:.6g}")


class UnwrapAmbiguity(McflabError):
    """Phase unwrapping hit an unavoidable jump >= pi."""

    def __init__(self, location, jump: float):
        self.location = location
        self.jump = float(jump)
        super().__init__(f"phase jump {jump:.4f} >= pi at node {location}")


class TimeOrder(McflabError):
    """Backward-kernel evaluation requested at t >= t0."""


class AmbientUnsupported(McflabError):
    """Operation requires Euclidean ambient (or concentrated kernel on a torus)."""


class RadiusTooSmall(McflabError):
    """Density-ratio ball radius below the grid resolution scale."""


class MarginViolated(McflabError):
    """Scenario construction failed its graph-condition margin check."""

    def __init__(self, message: str, node=None):
        self.node = node
        super().__init__(message)


class PhaseMarginViolated(MarginViolated):
    """Gradient-graph construction failed the min cos(theta) > margin check."""


class ParseError(McflabError):
    """Configuration document is not valid JSON."""

    def __init__(self, line: int, message: str):
        self.line = int(line)
        super().__init__(f"line {line}: {message}")


class ValidationError(McflabError):
    """Configuration value violates a constraint, or an unknown key appeared."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class VersionMismatch(McflabError):
    """Stored file has an incompatible format version."""
