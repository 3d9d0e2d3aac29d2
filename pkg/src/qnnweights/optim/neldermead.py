from __future__ import annotations

import numpy as np

from .objective import BudgetError, OptimizerState, as_counted

__all__ = ["nelder_mead_minimize"]

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


class _OutOfBudget(Exception):
    pass


def nelder_mead_minimize(
    objective,
    x0,
    max_evals: int,
    initial_step: float = 0.1,
    xatol: float = 1e-10,
    fatol: float = 1e-14,
) -> OptimizerState:
    """Nelder-Mead simplex search with a hard evaluation budget.

    The starting simplex is ``x0`` plus ``x0 + initial_step * e_i`` for each
    coordinate.  Stops when the budget is spent or when both the simplex
    diameter (``xatol``) and the spread of vertex values (``fatol``) are small.
    """
    x0 = np.array(x0, dtype=float).ravel()
    n = x0.size
    if max_evals < n + 2:
        raise BudgetError(f"Nelder-Mead needs max_evals >= {n + 2} for {n} variables")
    obj = as_counted(objective)
    used = 0
    best = [None, np.inf]
    history = []

    def f(x):
        nonlocal used
        if used >= max_evals:
            raise _OutOfBudget
        val = obj(x)
        used += 1
        if val < best[1] or best[0] is None:
            best[0], best[1] = x.copy(), val
        history.append(best[1])
        return val

    sim = np.vstack([x0, x0 + initial_step * np.eye(n)])
    fsim = np.full(n + 1, np.inf)
    converged = False
    try:
        for i in range(n + 1):
            fsim[i] = f(sim[i])
        while True:
            order = np.argsort(fsim, kind="stable")
            sim, fsim = sim[order], fsim[order]
            if np.max(np.abs(sim[1:] - sim[0])) <= xatol and np.max(np.abs(fsim[1:] - fsim[0])) <= fatol:
                converged = True
                break
            centroid = sim[:-1].mean(axis=0)
            xr = centroid + REFLECT * (centroid - sim[-1])
            fr = f(xr)
            if fr < fsim[0]:
                xe = centroid + EXPAND * (xr - centroid)
                fe = f(xe)
                sim[-1], fsim[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < fsim[-2]:
                sim[-1], fsim[-1] = xr, fr
                continue
            if fr < fsim[-1]:
                xc = centroid + CONTRACT * (xr - centroid)
                fc = f(xc)
                if fc <= fr:
                    sim[-1], fsim[-1] = xc, fc
                    continue
            else:
                xc = centroid + CONTRACT * (sim[-1] - centroid)
                fc = f(xc)
                if fc < fsim[-1]:
                    sim[-1], fsim[-1] = xc, fc
                    continue
            for i in range(1, n + 1):
                sim[i] = sim[0] + SHRINK * (sim[i] - sim[0])
                fsim[i] = f(sim[i])
    except _OutOfBudget:
        pass
    order = np.argsort(fsim, kind="stable")
    return OptimizerState(
        best_x=best[0],
        best_f=best[1],
        iterations_used=used,
        converged=converged,
        simplex=sim[order],
        simplex_values=fsim[order],
        history=history,
    )
