"""
MNIST at desk scale
===================

A 7038-weight convolutional network trained through a 13-qubit, 13-layer
circuit on a stratified 2000/1000 subset: ten periods of 300 + 30
evaluations.  Takes about ten minutes on one core.

Pass the IDX directory as the first argument (default: data/mnist5k).
"""

import sys
import time

from qnnweights.trainer import TrainingConfig, run_training_session

data = sys.argv[1] if len(sys.argv) > 1 else "data/mnist5k"
config = TrainingConfig(
    dataset="mnist",
    qnn_layers=13,
    n_train_periods=10,
    n_phi_evals=300,
    n_gamma_evals=30,
    data_path=data,
    train_limit=2000,
    test_limit=1000,
)
t0 = time.perf_counter()
record = run_training_session(
    config,
    progress=lambda p: print(
        f"period {p['period']:2d}  loss {p['train_loss']:.4f}  gamma {p['gamma']:.3f}  "
        f"train {p['train_accuracy']:.3f}  test {p['test_accuracy']:.3f}",
        flush=True,
    ),
)
par = record.parameters
print(f"{par['qnn_param_count']} angles for {par['num_weights']} weights ({100 * par['param_ratio']:.2f}%)")
print(f"final test accuracy {record.final['test_accuracy']:.3f} in {(time.perf_counter() - t0) / 60:.1f} min")
