from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BudgetError(ValueError):
    """Evaluation budget too small for the requested optimizer."""


class CountedObjective:
    """Wrap ``fn(x) -> float`` and count every call.

    ``trace`` holds the best value seen after each evaluation, so it is
    non-increasing by construction.
    """

    def __init__(self, fn):
        self.fn = fn
        self.evaluation_count = 0
        self.values: list[float] = []
        self.trace: list[float] = []
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf

    def __call__(self, x) -> float:
        x = np.array(x, dtype=float)
        f = float(self.fn(x))
        self.evaluation_count += 1
        self.values.append(f)
        if f < self.best_f or self.best_x is None:
            self.best_f, self.best_x = f, x
        self.trace.append(self.best_f)
        return f


def as_counted(objective) -> CountedObjective:
    return objective if isinstance(objective, CountedObjective) else CountedObjective(objective)


@dataclass
class OptimizerState:
    """Outcome of one optimizer call.

    ``iterations_used`` counts objective evaluations made by that call.
    ``simplex``/``simplex_values`` describe the optimizer's working set at
    exit: absolute vertex coordinates, best vertex first.
    """

    best_x: np.ndarray
    best_f: float
    iterations_used: int
    converged: bool = False
    rho: float | None = None
    simplex: np.ndarray | None = None
    simplex_values: np.ndarray | None = None
    history: list = field(default_factory=list)
