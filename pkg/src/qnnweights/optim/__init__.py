"""Derivative-free optimizers with exact evaluation budgets."""
from .cobyla import Cobyla, cobyla_minimize
from .neldermead import nelder_mead_minimize
from .objective import BudgetError, CountedObjective, OptimizerState

__all__ = [
    "Cobyla",
    "cobyla_minimize",
    "nelder_mead_minimize",
    "BudgetError",
    "CountedObjective",
    "OptimizerState",
]
