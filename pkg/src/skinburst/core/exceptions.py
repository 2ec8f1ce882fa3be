"""Module defining the errors raised by the lattice toolkit."""

from typing import Any, ClassVar


class SkinburstError(Exception):
    """Base error carrying a machine-readable code."""

    code: ClassVar[str] = "error"


class ConfigError(SkinburstError, ValueError):
    """Configuration rejected before any computation."""

    code = "invalid_config"


class InvalidConfigError(ConfigError):
    """Malformed or unknown configuration entry."""


class AdjacentImpuritiesError(ConfigError):
    """Two impurities closer than the exclusion distance."""

    code = "adjacent_impurities"


class BadSizeError(ConfigError):
    """Lattice too small for the requested impurities."""

    code = "bad_size"


class NegativeParameterError(ConfigError):
    """Hopping, loss or impurity strength below zero."""

    code = "negative_parameter"


class BadInitialCellError(ConfigError):
    """Initial cell outside of the lattice."""

    code = "bad_initial_cell"


class ConfigNotFoundError(SkinburstError, FileNotFoundError):
    """Configuration file does not exist."""

    code = "config_not_found"


class NumericalError(SkinburstError, RuntimeError):
    """Computation failed on valid input."""

    code = "numerical_failure"


class MappingMismatchError(NumericalError):
    """Cross-stitch and SSH Hamiltonians are not unitarily equivalent."""

    code = "mapping_mismatch"


class NoConvergenceError(NumericalError):
    """Eigen-solver did not converge."""

    code = "no_convergence"


class SingularTransferError(NumericalError):
    """Transfer factor vanishes or its logarithm is undefined."""

    code = "singular_transfer"


class NotAnEigenvalueError(NumericalError):
    """Energy does not satisfy the closure condition."""

    code = "not_an_eigenvalue"


class StepTooLargeError(NumericalError):
    """Time step outside of the integrator stability budget."""

    code = "step_too_large"


class NonFiniteStateError(NumericalError):
    """State vector contains NaN or infinity."""

    code = "non_finite_state"


class TailTooFatError(NumericalError):
    """Survival probability still above threshold at the time cap."""

    code = "tail_too_fat"

    def __init__(self, msg: str, profile: Any = None) -> None:  # noqa: ANN401
        """Initialize with the flagged dissipation profile."""
        super().__init__(msg)
        self.profile = profile


class AnalysisError(SkinburstError, ValueError):
    """Analysis requested outside of its domain."""

    code = "analysis_error"


class ZeroEtaError(AnalysisError):
    """Closure form used at vanishing impurity strength."""

    code = "zero_eta"


class WindowTooSmallError(AnalysisError):
    """Fit window shorter than the minimum length."""

    code = "window_too_small"


class WindowCrossesImpurityError(AnalysisError):
    """Fit window contains an impurity cell."""

    code = "window_crosses_impurity"


class IncompatibleConfigsError(AnalysisError):
    """Profiles come from configurations that cannot be compared."""

    code = "incompatible_configs"


class GridTooCoarseError(AnalysisError):
    """Scan grid has too few points for shape classification."""

    code = "grid_too_coarse"
