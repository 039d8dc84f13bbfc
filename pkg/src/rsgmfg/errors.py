"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration problems,
failed standing assumptions, solver non-convergence, simulation failure.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Bad or incomplete configuration input."""


class AssumptionError(RuntimeError):
    """A standing assumption required by a solver does not hold."""


class IntegrationError(RuntimeError):
    """Time integration produced a non-finite value or blew up."""

    def __init__(self, message: str, t_fail: float | None = None):
        super().__init__(message)
        self.t_fail = t_fail


class ConvergenceError(RuntimeError):
    """Iterative solver did not reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SimulationError(RuntimeError):
    """Monte Carlo simulation failure (non-finite state or overflowing cost)."""


class DivergentCostError(RuntimeError):
    """The exponentiated cost has no finite expectation for this input."""
