"""
Finite measurement shots
========================

Each loss evaluation draws a fresh sample of the circuit output.  More shots
mean less noise in the weights and better trained networks.
"""

import numpy as np

from qnnweights.trainer import TrainingConfig, run_training_session

seeds = range(3)
for shots in (256, 1024, 4096, 16384, None):
    acc = [run_training_session(TrainingConfig(seed=s, shots=shots)).final["test_accuracy"] for s in seeds]
    label = "exact" if shots is None else f"{shots // 256:2d} x 256"
    print(f"{label:>8}: mean test accuracy {np.mean(acc):.3f}  {acc}")
