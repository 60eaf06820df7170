"""Exception types shared across the package."""


class BackactionError(Exception):
    """Base class for all package-specific errors."""


class LocalizationError(BackactionError, ValueError):
    """A state violates a grid localization guard (resolution or margin)."""


class SlotMismatchError(BackactionError, ValueError):
    """An observable's tensor-factor labels do not match the state's."""


class DimensionError(BackactionError, ValueError):
    """A resource guard on matrix/grid dimensions was exceeded."""


class ConsistencyError(BackactionError, RuntimeError):
    """Two internally redundant computation paths disagree.

    Raised for Hermiticity residues, negative variances beyond rounding,
    moment-form vs norm-form disagreements, POVM completeness failures and
    similar internal cross-checks. This always indicates a bug or a state
    outside the validated localization subspace, never a physics finding.
    """


class CompletionError(BackactionError, ValueError):
    """No symplectic completion consistent with a model's input-output map."""


class ConfigError(BackactionError, ValueError):
    """Scenario configuration is malformed; message names the faulty field."""
