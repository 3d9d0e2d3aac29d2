"""
Derivative-free optimizers
==========================

COBYLA handles the circuit angles, Nelder-Mead the scalar gamma.  Both count
objective evaluations, and COBYLA can be paused and resumed.
"""

import numpy as np

from qnnweights.optim import Cobyla, CountedObjective, cobyla_minimize, nelder_mead_minimize


def quad(x):
    return float(np.sum((x - 2.0) ** 2))


res = cobyla_minimize(quad, np.zeros(4), max_evals=200)
print(f"COBYLA, 4-D quadratic: best_f {res.best_f:.2e} after {res.iterations_used} evaluations")

res = nelder_mead_minimize(lambda g: (g[0] - 0.7) ** 2, [0.3], max_evals=50)
print(f"Nelder-Mead, 1-D quadratic: best gamma {res.best_x[0]:.8f}")

# pausing COBYLA between budgets follows exactly the same path as one long run
single = CountedObjective(quad)
cobyla_minimize(single, np.zeros(4), 60)
split = CountedObjective(quad)
opt = Cobyla(np.zeros(4))
for budget in (10, 25, 25):
    opt.run(split, budget)
print("paused run matches single run:", split.values == single.values)

# when the objective shifts between stages, refresh re-scores the pole and keeps the slope
opt.refresh(lambda x: quad(x) + 1.0)
print("pole value after +1 shift:", opt.fpole)
