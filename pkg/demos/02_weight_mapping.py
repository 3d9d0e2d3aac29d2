"""
From outcome probabilities to network weights
=============================================

A 2^N outcome distribution becomes M signed weights: some weights read the
mean of two outcomes, the rest read one, odd-indexed weights flip sign and a
tanh scaling sets the overall size through gamma.
"""

import numpy as np

from qnnweights.mapping import apply_mapping, build_mapping

table = build_mapping(131, seed=0)
print(f"M={table.M}, N={table.N}: {table.n_paired} paired, {table.n_single} single")

uniform = np.full(2**table.N, 1 / 2**table.N)

# the mapping is even in gamma and bounded by it
for gamma in (0.1, 0.3, 1.0, 3.0):
    theta = apply_mapping(table, uniform, gamma)
    same = np.array_equal(theta, apply_mapping(table, uniform, -gamma))
    print(f"gamma {gamma:4.1f}: |theta| <= {np.abs(theta).max():.5f}, even in gamma: {same}")

# signs alternate with the weight index
print("signs of the first 8 weights:", np.sign(apply_mapping(table, uniform, 0.3)[:8]))

# concentrating probability on a few outcomes saturates their weights at +-gamma
peaked = np.full(256, 0.5 / 250)
peaked[:6] = 0.5 / 6
theta = apply_mapping(table, peaked, 1.0)
print("largest |theta| with a peaked distribution:", np.sort(np.abs(theta))[-3:])
