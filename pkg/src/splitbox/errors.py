"""Exception types raised by splitbox."""


class SplitboxError(Exception):
    """Base class for all splitbox errors."""


class InvalidLengthError(SplitboxError, ValueError):
    """Box length is not positive."""


class InvalidAsymmetryError(SplitboxError, ValueError):
    """|epsilon| >= 1/2 would leave one compartment with zero width."""


class InvalidProtocolError(SplitboxError, ValueError):
    """Barrier protocol violates alpha(0) = 0 or monotonicity."""


class ProtocolRangeError(SplitboxError, ValueError):
    """Protocol evaluated outside [0, tau]."""


class BracketFailureError(SplitboxError, RuntimeError):
    """Root isolation failed for an eigenvalue level."""

    def __init__(self, level, message):
        self.level = level
        super().__init__(f"level {level}: {message}")


class DegenerateAmplitudeError(SplitboxError, RuntimeError):
    """Both sin(ka) and sin(kb) vanish for a k that is not a node-at-barrier level."""


class DegenerateLevelsError(SplitboxError, ValueError):
    """Coupling ratio requested for levels with (numerically) equal energies."""


class DimensionMismatchError(SplitboxError, ValueError):
    """State vector and spectrum have different level counts."""


class StepUnderflowError(SplitboxError, RuntimeError):
    """Adaptive integrator step fell below the representable floor."""


class NonRealProbabilityError(SplitboxError, RuntimeError):
    """Compartment probability acquired a non-negligible imaginary part."""


class AllCellsFailedError(SplitboxError, RuntimeError):
    """Every cell of a parameter sweep raised an error."""
