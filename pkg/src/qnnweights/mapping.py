"""Map a 2^N-outcome probability vector onto M signed, scaled network weights.

Three steps, applied in order:

* pairing: ``2^N - M`` randomly chosen weights each read the mean of two
  basis probabilities; the remaining ``2M - 2^N`` weights read one basis
  probability each, so every basis is used exactly once;
* sign: weight ``j`` (0-based) keeps its sign for even ``j`` and is negated
  for odd ``j``;
* scaling: ``theta -> gamma * tanh(gamma * 2^(N-1) * theta)``, which keeps
  the typical weight magnitude independent of N.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsim import ProbabilityDistribution

__all__ = [
    "MappingTable",
    "qubits_for",
    "build_mapping",
    "apply_mapping",
    "sign_pattern",
]

SIGN_CONVENTION = "zero-based index: even -> +1, odd -> -1"


def qubits_for(m: int) -> int:
    """Smallest N with 2^N >= m."""
    if m < 2:
        raise ValueError(f"need at least 2 weights, got {m}")
    return (m - 1).bit_length()


@dataclass(frozen=True)
class MappingTable:
    """Frozen assignment of basis indices to weight indices.

    ``paired`` rows are ``(weight, basis_i, basis_k)``; ``single`` rows are
    ``(weight, basis_i)``.  Both are integer arrays.
    """

    M: int
    N: int
    paired: np.ndarray
    single: np.ndarray
    seed: int
    _cols: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        paired = np.asarray(self.paired, dtype=np.int64).reshape(-1, 3)
        single = np.asarray(self.single, dtype=np.int64).reshape(-1, 2)
        for arr in (paired, single):
            arr.setflags(write=False)
        object.__setattr__(self, "paired", paired)
        object.__setattr__(self, "single", single)
        weights = np.concatenate([paired[:, 0], single[:, 0]])
        bases = np.concatenate([paired[:, 1], paired[:, 2], single[:, 1]])
        if paired.shape[0] != 2**self.N - self.M or single.shape[0] != 2 * self.M - 2**self.N:
            raise ValueError("assignment counts do not match M and N")
        if not np.array_equal(np.sort(weights), np.arange(self.M)):
            raise ValueError("weight indices must cover 0..M-1 exactly once")
        if not np.array_equal(np.sort(bases), np.arange(2**self.N)):
            raise ValueError("basis indices must cover 0..2^N-1 exactly once")
        # scale factors with the sign folded in, one per assignment row
        pair_scale = sign_pattern(paired[:, 0]) * 2.0 ** (self.N - 2)
        single_scale = sign_pattern(single[:, 0]) * 2.0 ** (self.N - 1)
        object.__setattr__(self, "_cols", (pair_scale, single_scale))

    def __eq__(self, other):
        if not isinstance(other, MappingTable):
            return NotImplemented
        return (
            (self.M, self.N, self.seed) == (other.M, other.N, other.seed)
            and np.array_equal(self.paired, other.paired)
            and np.array_equal(self.single, other.single)
        )

    def __hash__(self):
        return hash((self.M, self.N, self.seed, self.paired.tobytes(), self.single.tobytes()))

    @property
    def n_paired(self) -> int:
        return int(self.paired.shape[0])

    @property
    def n_single(self) -> int:
        return int(self.single.shape[0])

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "seed": self.seed,
            "sign_convention": SIGN_CONVENTION,
            "paired": self.paired.tolist(),
            "single": self.single.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingTable":
        return cls(
            M=int(d["M"]),
            N=int(d["N"]),
            paired=np.array(d["paired"], dtype=np.int64).reshape(-1, 3),
            single=np.array(d["single"], dtype=np.int64).reshape(-1, 2),
            seed=int(d["seed"]),
        )


def sign_pattern(weight_index) -> np.ndarray:
    """+1 for even, -1 for odd 0-based weight indices."""
    return 1.0 - 2.0 * (np.asarray(weight_index) % 2)


def build_mapping(M: int, seed: int) -> MappingTable:
    """Draw the random pairing for ``M`` weights.

    The generator is consumed in a fixed order: first the paired weight
    indices (without replacement, then sorted ascending), then one shuffle of
    all basis indices.  Paired weights take two consecutive bases each, in
    ascending weight order; the leftover bases go one each to the remaining
    weights, again in ascending order.
    """
    M = int(M)
    N = qubits_for(M)
    dim = 2**N
    n_pair = dim - M
    rng = np.random.default_rng(seed)
    pair_w = np.sort(rng.choice(M, size=n_pair, replace=False))
    bases = rng.permutation(dim)
    single_w = np.setdiff1d(np.arange(M), pair_w, assume_unique=True)
    paired = np.column_stack([pair_w, bases[0 : 2 * n_pair : 2], bases[1 : 2 * n_pair : 2]])
    single = np.column_stack([single_w, bases[2 * n_pair :]])
    return MappingTable(M=M, N=N, paired=paired, single=single, seed=int(seed))


def apply_mapping(table: MappingTable, dist, gamma: float) -> np.ndarray:
    """Weight vector ``theta`` (length M) for a distribution and scaling factor.

    ``dist`` may be a :class:`ProbabilityDistribution` or a plain array.
    """
    probs = dist.probs if isinstance(dist, ProbabilityDistribution) else np.asarray(dist, dtype=float)
    if probs.shape != (2**table.N,):
        raise ValueError(f"expected {2**table.N} probabilities, got shape {probs.shape}")
    gamma = float(gamma)
    if not np.isfinite(gamma):
        raise ValueError("gamma must be finite")
    pair_scale, single_scale = table._cols
    theta = np.empty(table.M)
    p, s = table.paired, table.single
    theta[p[:, 0]] = gamma * np.tanh(pair_scale * gamma * (probs[p[:, 1]] + probs[p[:, 2]]))
    theta[s[:, 0]] = gamma * np.tanh(single_scale * gamma * probs[s[:, 1]])
    return theta
