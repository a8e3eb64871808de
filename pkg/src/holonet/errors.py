"""Exception hierarchy shared across the package."""


class HoloNetError(Exception):
    """Base class for all errors raised by this package."""


class NegativeWeightError(HoloNetError, ValueError):
    """An edge weight is negative (or NaN)."""


class IndexOutOfRangeError(HoloNetError, IndexError):
    """A node index lies outside [0, n_nodes)."""


class NonpositiveNodeWeightError(HoloNetError, ValueError):
    """A node weight mu_i is zero, negative or NaN."""


class ShapeMismatchError(HoloNetError, ValueError):
    """Array shapes are inconsistent with the graph or layer they refer to."""


class SingularResolventError(HoloNetError):
    """A quadrature node hit the spectrum; the contour is invalid."""


class PoleOnSpectrumError(HoloNetError):
    """The resolvent pole y lies on (or numerically too near) the spectrum."""


class IllConditionedSpectrumError(HoloNetError):
    """Eigenvalue clustering is ambiguous; the Jordan-structure oracle refuses."""


class OverlappingReachesError(HoloNetError):
    """The high-weight tier violates the Kirchhoff assumption, so its reaches
    do not partition the node set."""


class NonRealBankError(HoloNetError):
    """A real-parameter expansion was requested but a bank atom has complex
    entries."""


class NonFiniteLossError(HoloNetError):
    """Training produced a NaN/inf loss (typically a bad learning rate)."""


class ConfigError(HoloNetError):
    """Invalid run configuration or unreadable input file (CLI exit code 2)."""
