"""Dense statevector simulation of the Hadamard-initialised EfficientSU2 circuit.

Qubit ``b`` is bit ``b`` (least significant first) of a basis index, so the
amplitude of ``|q_{N-1} ... q_1 q_0>`` lives at ``sum(q_b << b)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "Statevector",
    "AnsatzSpec",
    "ProbabilityDistribution",
    "H",
    "Ry",
    "Rz",
    "CNOT",
    "apply_gate",
    "build_ansatz_state",
    "exact_probabilities",
    "sample_probabilities",
]

NORM_ATOL = 1e-10


class H(NamedTuple):
    qubit: int


class Ry(NamedTuple):
    qubit: int
    angle: float


class Rz(NamedTuple):
    qubit: int
    angle: float


class CNOT(NamedTuple):
    control: int
    target: int


def _hadamard() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def _ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


@dataclass(frozen=True)
class Statevector:
    """Normalised amplitudes of an ``num_qubits``-qubit pure state."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


def _apply_1q(amps: np.ndarray, n: int, qubit: int, mat: np.ndarray) -> np.ndarray:
    # view as (high bits, qubit bit, low bits) and contract the middle axis
    psi = amps.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    return np.einsum("ij,ajb->aib", mat, psi).reshape(-1)


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise ValueError(f"qubit index {q} out of range for {n} qubits")


def apply_gate(state: Statevector, gate: H | Ry | Rz | CNOT) -> Statevector:
    """Return the state after applying one gate; the input is left untouched."""
    n = state.num_qubits
    amps = state.amplitudes
    if isinstance(gate, CNOT):
        _check_qubit(gate.control, n)
        _check_qubit(gate.target, n)
        if gate.control == gate.target:
            raise ValueError("CNOT control and target must differ")
        idx = np.arange(2**n)
        flip = ((idx >> gate.control) & 1) << gate.target
        return Statevector(amps[idx ^ flip], n)
    if isinstance(gate, H):
        mat = _hadamard()
    elif isinstance(gate, Ry):
        mat = _ry(gate.angle)
    elif isinstance(gate, Rz):
        mat = _rz(gate.angle)
    else:
        raise TypeError(f"unsupported gate {gate!r}")
    _check_qubit(gate.qubit, n)
    return Statevector(_apply_1q(amps, n, gate.qubit, mat), n)


@dataclass(frozen=True)
class AnsatzSpec:
    """EfficientSU2 layout: Hadamard layer, ``num_layers`` x (rotations + CNOT chain), final rotations."""

    num_qubits: int
    num_layers: int
    entanglement: str = "linear"

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.entanglement != "linear":
            raise ValueError("only linear entanglement is supported")

    @property
    def param_count(self) -> int:
        return 2 * self.num_qubits * (self.num_layers + 1)

    def gates(self, angles) -> list:
        """Flat gate list in circuit order (used for reference builds and inspection)."""
        angles = self._check_angles(angles)
        n = self.num_qubits
        ops: list = [H(q) for q in range(n)]
        blocks = angles.reshape(self.num_layers + 1, 2, n)
        for layer, (ry, rz) in enumerate(blocks):
            ops += [Ry(q, float(a)) for q, a in enumerate(ry)]
            ops += [Rz(q, float(a)) for q, a in enumerate(rz)]
            if layer < self.num_layers:
                ops += [CNOT(q, q + 1) for q in range(n - 1)]
        return ops

    def _check_angles(self, angles) -> np.ndarray:
        angles = np.asarray(angles, dtype=float)
        if angles.shape != (self.param_count,):
            raise ValueError(
                f"expected {self.param_count} angles, got {angles.shape[0] if angles.ndim else 'scalar'}"
            )
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        return angles


@lru_cache(maxsize=32)
def _cnot_chain_permutation(n: int) -> np.ndarray:
    # new[i] = old[perm[i]] for CNOT(0,1) then CNOT(1,2) ... CNOT(n-2,n-1)
    perm = np.arange(2**n)
    for q in range(n - 1):
        idx = np.arange(2**n)
        perm = perm[idx ^ (((idx >> q) & 1) << (q + 1))]
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=32)
def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(float)


def _rotation_block(psi: np.ndarray, n: int, ry: np.ndarray, rz: np.ndarray) -> np.ndarray:
    c, s = np.cos(ry / 2), np.sin(ry / 2)
    for q in range(n):
        v = psi.reshape(2 ** (n - 1 - q), 2, 2**q)
        lo, hi = v[:, 0, :], v[:, 1, :]
        psi = np.stack((c[q] * lo - s[q] * hi, s[q] * lo + c[q] * hi), axis=1).reshape(-1)
    # product of Rz(a_q) = exp(-i/2 sum_q a_q (1 - 2 b_q))
    phase = _bit_table(n) @ rz
    return psi * np.exp(-0.5j * (rz.sum() - 2.0 * phase))


def build_ansatz_state(spec: AnsatzSpec, angles) -> Statevector:
    """Simulate the ansatz for the given angle vector.

    Angles are consumed block by block; each block holds the Ry angles for
    qubits ``0..N-1`` followed by the Rz angles for qubits ``0..N-1``.
    """
    angles = spec._check_angles(angles)
    n = spec.num_qubits
    perm = _cnot_chain_permutation(n)
    psi = np.full(2**n, 2.0 ** (-n / 2), dtype=np.complex128)
    blocks = angles.reshape(spec.num_layers + 1, 2, n)
    for layer, (ry, rz) in enumerate(blocks):
        psi = _rotation_block(psi, n, ry, rz)
        if layer < spec.num_layers:
            psi = psi[perm]
    # rounding drift is ~1e-15 per gate; renormalise so the invariant holds exactly
    psi /= np.sqrt(np.vdot(psi, psi).real)
    return Statevector(psi, n)


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Computational-basis outcome probabilities.

    ``shots`` is ``None`` for the exact distribution; for a sampled one it is
    the number of draws and ``probs`` holds ``count / shots``.
    """

    probs: np.ndarray
    shots: int | None = None

    @property
    def source(self) -> str:
        return "exact" if self.shots is None else "sampled"

    @property
    def num_qubits(self) -> int:
        return int(self.probs.shape[0]).bit_length() - 1


def exact_probabilities(state: Statevector) -> ProbabilityDistribution:
    amps = state.amplitudes
    probs = amps.real**2 + amps.imag**2
    return ProbabilityDistribution(probs)


def sample_probabilities(state: Statevector, shots: int, rng_seed: int) -> ProbabilityDistribution:
    """Empirical distribution of ``shots`` measurements drawn with a seeded generator.

    Outcomes come from inverse-CDF lookup of variates in ``(0, 1]``; a variate
    equal to a cumulative boundary resolves to the lower index, so outcomes
    with zero probability are never drawn.
    """
    if int(shots) != shots or shots <= 0:
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    shots = int(shots)
    p = exact_probabilities(state).probs
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    rng = np.random.default_rng(rng_seed)
    u = 1.0 - rng.random(shots)
    outcomes = np.searchsorted(cdf, u, side="left")
    counts = np.bincount(outcomes, minlength=p.shape[0])
    return ProbabilityDistribution(counts / shots, shots=shots)
