"""Exception types shared across the package.

Two broad groups matter for the CLI exit-code contract: configuration
errors (bad inputs, exit code 2) and numerical failures (exit code 3).
"""


class SqbathError(Exception):
    """Base class for all package errors."""


class ConfigError(SqbathError):
    """Invalid user input or configuration."""


class NumericError(SqbathError):
    """A numerical routine failed or left its validity domain."""


# -- linear-algebra kernel ---------------------------------------------------

class NotHermitian(NumericError):
    """Matrix failed the Hermiticity pre-check."""


class NoConvergence(NumericError):
    """Iterative eigensolver exceeded its sweep cap."""


class NotPSD(NumericError):
    """Matrix has an eigenvalue below the positive-semidefinite tolerance."""


# -- model construction ------------------------------------------------------

class DegenerateBasis(NumericError):
    """Collective-basis construction produced a degenerate (zero) vector."""


class InvalidEpsilon(ConfigError):
    """Superposition weight outside [0, 1]."""


class InvalidCustom(ConfigError):
    """Custom initial state violates density-matrix invariants."""


# -- dynamics ----------------------------------------------------------------

class StiffStepRejected(ConfigError):
    """RK4 step size violates the stiffness guard dt <= 0.01/(2N+1)."""


class PositivityLost(NumericError):
    """Integrated state developed an eigenvalue below -1e-6."""


class UnsupportedSpec(ConfigError):
    """Initial-state specification not supported by this propagator."""


class UnsupportedBath(ConfigError):
    """Bath parameters outside the validity domain of this propagator."""


class SingularBath(ConfigError):
    """Closed-form general solution requires n_bar > 0 strictly."""


class ValidationFailed(NumericError):
    """Closed-form result deviates from the exact propagator beyond tolerance."""

    def __init__(self, message: str, max_deviation: float):
        super().__init__(message)
        self.max_deviation = max_deviation


# -- entanglement ------------------------------------------------------------

class NotNormalized(ConfigError):
    """State vector is not unit-norm."""


class NotXState(ConfigError):
    """Density matrix has weight outside the X sparsity pattern."""


class PatternMismatch(ConfigError):
    """Density matrix does not match the required sparsity pattern."""


# -- events ------------------------------------------------------------------

class InsufficientResolution(NumericError):
    """Concurrence samples too coarse to bracket a zero crossing."""
