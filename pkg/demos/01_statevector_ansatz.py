"""
Statevector and ansatz
======================

Build the Hadamard-initialised EfficientSU2 circuit, check its parameter
count and look at the outcome distribution it produces.
"""

import numpy as np

from qnnweights.qsim import AnsatzSpec, build_ansatz_state, exact_probabilities, sample_probabilities

# 8 qubits cover the 131 weights of the Iris network; one layer gives 2N(L+1) angles
spec = AnsatzSpec(num_qubits=8, num_layers=1)
print("angles:", spec.param_count)

# with all angles zero the circuit is just the Hadamard layer: a uniform distribution
flat = exact_probabilities(build_ansatz_state(spec, np.zeros(spec.param_count)))
print("zero angles, max |p - 1/256|:", np.abs(flat.probs - 1 / 256).max())

# random angles spread the probability unevenly
rng = np.random.default_rng(0)
phi = rng.uniform(0, 2 * np.pi, spec.param_count)
state = build_ansatz_state(spec, phi)
exact = exact_probabilities(state)
print("norm:", state.norm())
print("largest outcome probabilities x 256:", np.sort(exact.probs)[-5:] * 256)

# finite shots approach the exact distribution as the count grows
for multiple in (1, 4, 16, 64):
    shots = multiple * 256
    sampled = sample_probabilities(state, shots, rng_seed=1)
    tvd = 0.5 * np.abs(sampled.probs - exact.probs).sum()
    print(f"{shots:6d} shots: total variation distance {tvd:.4f}")

# the count for the 13-qubit, 26-layer circuit
print("N=13, L=26 angles:", AnsatzSpec(13, 26).param_count)
