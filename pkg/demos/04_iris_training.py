"""
Training the Iris network through the circuit
=============================================

Twenty-one periods of 100 COBYLA evaluations over the angles and 10
Nelder-Mead evaluations over gamma, from gamma = 0.3.  The product is a
plain weight vector for a 4-16-3 network.
"""

import tempfile
from pathlib import Path

from qnnweights.trainer import TrainingConfig, run_training_session
from qnnweights.weights import evaluate_weights, export_weights, read_weights

config = TrainingConfig(dataset="iris", qnn_layers=1, seed=3)
record = run_training_session(
    config,
    progress=lambda p: print(f"period {p['period']:2d}  loss {p['train_loss']:.3f}  test {p['test_accuracy']:.2f}"),
)

par = record.parameters
print(f"{par['qnn_param_count']} angles train {par['num_weights']} weights ({100 * par['param_ratio']:.1f}%)")
print("evaluations:", len(record.metrics), " final |gamma|:", round(record.final["gamma_abs"], 3))

# export and re-evaluate with classical code only
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "weights.dat"
    export_weights(record, path)
    result = evaluate_weights(read_weights(path))
print("re-evaluated test accuracy:", result.accuracy, "recorded:", record.final["test_accuracy"])
print(result.confusion)
