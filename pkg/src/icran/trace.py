"""Common record type returned by every iterative solver."""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class SolverTrace:
    """Per-run solver diagnostics.

    ``objective_history`` holds one value per iterate including the starting
    point, so its length is always ``iterations + 1``.  ``final`` is the last
    iterate in whatever shape the solver works with (power matrix, beamformer
    set, ...).  Algorithm-specific series (residuals, per-user rates, ...) go
    into ``extra``.
    """

    objective_history: list
    final: Any
    converged: bool
    iterations: int
    termination_reason: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.objective_history) != self.iterations + 1:
            raise ValueError(
                "objective_history must have iterations + 1 entries, got "
                f"{len(self.objective_history)} for {self.iterations} iterations"
            )
