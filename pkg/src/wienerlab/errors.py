"""Shared exception types for the laboratory."""


class WienerlabError(Exception):
    """Base class for package-specific failures."""


class ConvergenceFailure(WienerlabError):
    """Energy minimization exhausted its sweep budget.

    Carries the last relative energy decrease so callers can decide whether
    the partial result is usable.
    """

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class HypothesisNotMet(WienerlabError):
    """A verifier's hypothesis failed; distinct from a failed conclusion."""


class SolverBlowup(WienerlabError):
    """Nonfinite values or dt underflow during time stepping."""

    def __init__(self, message, step, t, dt):
        super().__init__(f"{message} (step={step}, t={t:.6g}, dt={dt:.3g})")
        self.step = step
        self.t = t
        self.dt = dt


class AccommodationFailure(WienerlabError):
    """No admissible starting radius for the oscillation iteration.

    kind is "resolution-limited" when smaller radii might exist below the
    grid scale, "no-admissible-rho0" when the capacity profile itself rules
    every radius out.
    """

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


class InsufficientScale(WienerlabError):
    """Fewer dyadic radii available than the decay fit needs."""


class ConfigError(WienerlabError):
    """Malformed run configuration; message names the field and line."""
