"""Training sessions: circuit angles and a scaling factor tuned so that the
mapped measurement statistics work as classical network weights.

A period is one COBYLA stage over the angles (scaling factor frozen)
followed by one Nelder-Mead stage over the scaling factor (angles frozen).
Budgets count objective evaluations.

Each angle stage warm-starts COBYLA at the incumbent angles.  By default
(``phi_restart="resume"``) one COBYLA run carries on across periods with its
simplex and trust radius intact: the pole is re-evaluated under the new
scaling factor and the stored values shift by the same amount, and that
evaluation is charged to the angle stage.  A run that reaches ``rho_end`` is
restarted from its pole so no budget goes unused.  ``phi_restart="period"``
instead starts a fresh run at full radius every period, which needs
``n_phi_evals >= len(phi) + 2``.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cnn import NetworkSpec, forward_batch, iris_network, mnist_network, prepare_inputs
from .data import Dataset, load_dataset
from .mapping import apply_mapping, build_mapping, qubits_for
from .optim import Cobyla, CountedObjective, nelder_mead_minimize
from .qsim import AnsatzSpec, build_ansatz_state, exact_probabilities, sample_probabilities

__all__ = [
    "TrainingConfig",
    "LossReport",
    "RunRecord",
    "Problem",
    "loss_from_scores",
    "evaluate_loss",
    "evaluate_accuracy",
    "run_training_session",
    "parameter_summary",
    "CE_CLAMP",
]

CE_CLAMP = 1e-12
RECORD_FORMAT = "qnnweights-run/1"

# independent random streams derived from the run seed
STREAM_PHI_INIT, STREAM_MAPPING, STREAM_SHOTS = 0, 1, 2

PHI_RESTART_MODES = ("resume", "period")

# parameter counts quoted elsewhere for some circuit sizes that 2N(L+1) does not reproduce
EXTERNAL_PARAM_COUNTS = {(13, 26): 728}


@dataclass(frozen=True)
class TrainingConfig:
    dataset: str = "iris"
    qnn_layers: int = 1
    shots: int | None = None  # None means exact probabilities
    seed: int = 0
    n_train_periods: int = 21
    n_phi_evals: int = 100
    n_gamma_evals: int = 10
    gamma_init: float = 0.3
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    nm_initial_step: float = 0.1
    network: str | None = None  # layer descriptor; None picks the dataset default
    input_shape: str | None = None
    data_path: str | None = None
    data_seed: int = 0
    train_limit: int | None = None
    test_limit: int | None = None
    phi_restart: str = "resume"  # or "period"

    def __post_init__(self):
        if self.dataset not in ("iris", "mnist"):
            raise ValueError(f"unknown dataset {self.dataset!r}")
        for name in ("qnn_layers", "n_train_periods", "n_phi_evals", "n_gamma_evals"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.shots is not None and (int(self.shots) != self.shots or self.shots < 1):
            raise ValueError("shots must be a positive integer or None")
        if not math.isfinite(self.gamma_init):
            raise ValueError("gamma_init must be finite")
        if not self.rho_begin > self.rho_end > 0:
            raise ValueError("need rho_begin > rho_end > 0")
        if self.phi_restart not in PHI_RESTART_MODES:
            raise ValueError(f"phi_restart must be one of {PHI_RESTART_MODES}")
        if self.n_gamma_evals < 3:
            raise ValueError("n_gamma_evals must be >= 3 for a 1-D simplex search")

    def network_spec(self) -> NetworkSpec:
        if self.network is None:
            return iris_network() if self.dataset == "iris" else mnist_network()
        shape = self.input_shape or ("4" if self.dataset == "iris" else "1x28x28")
        return NetworkSpec.parse(self.network, shape)

    @property
    def shots_label(self) -> str:
        return "exact" if self.shots is None else str(self.shots)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LossReport:
    total_loss: float
    cross_entropy: float
    failure_rate: float
    n_fail: int
    n_data: int


def loss_from_scores(scores: np.ndarray, labels: np.ndarray) -> LossReport:
    """Categorical cross-entropy (probabilities clamped to [1e-12, 1]) plus the misclassification rate."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = labels.shape[0]
    p_true = np.clip(scores[np.arange(n), labels], CE_CLAMP, 1.0)
    ce = float(-np.log(p_true).sum() / n)
    n_fail = int(np.count_nonzero(scores.argmax(axis=1) != labels))
    rate = n_fail / n
    return LossReport(ce + rate, ce, rate, n_fail, n)


def parameter_summary(num_weights: int, qnn_layers: int) -> dict:
    n = qubits_for(num_weights)
    count = AnsatzSpec(n, qnn_layers).param_count
    out = {
        "num_weights": num_weights,
        "num_qubits": n,
        "qnn_layers": qnn_layers,
        "qnn_param_count": count,
        "param_ratio": count / num_weights,
        "param_count_note": None,
    }
    quoted = EXTERNAL_PARAM_COUNTS.get((n, qnn_layers))
    if quoted is not None and quoted != count:
        out["param_count_note"] = (
            f"a count of {quoted} is quoted elsewhere for N={n}, L={qnn_layers}; "
            f"this ansatz has 2N(L+1) = {count}"
        )
    return out


class Problem:
    """Everything a loss evaluation needs, loaded once per session."""

    def __init__(self, config: TrainingConfig, train: Dataset | None = None, test: Dataset | None = None):
        self.config = config
        self.network = config.network_spec()
        if train is None or test is None:
            train, test = load_config_dataset(config)
        self.train, self.test = train, test
        self.M = self.network.total_param_count
        seq = np.random.SeedSequence([config.seed, STREAM_MAPPING])
        self.mapping = build_mapping(self.M, int(seq.generate_state(1)[0]))
        self.ansatz = AnsatzSpec(self.mapping.N, config.qnn_layers)
        self._prepared = {"train": prepare_inputs(self.network, train.features), "test": prepare_inputs(self.network, test.features)}
        self._state_key = None
        self._state = None

    def dataset(self, split: str) -> Dataset:
        return {"train": self.train, "test": self.test}[split]

    def state(self, phi):
        key = np.asarray(phi, dtype=float).tobytes()
        if key != self._state_key:
            self._state = build_ansatz_state(self.ansatz, phi)
            self._state_key = key
        return self._state

    def probabilities(self, phi, shot_index=None) -> np.ndarray:
        state = self.state(phi)
        if self.config.shots is None or shot_index is None:
            return exact_probabilities(state).probs
        seq = np.random.SeedSequence([self.config.seed, STREAM_SHOTS, int(shot_index)])
        return sample_probabilities(state, self.config.shots, seq).probs

    def weights(self, phi, gamma, shot_index=None) -> np.ndarray:
        return apply_mapping(self.mapping, self.probabilities(phi, shot_index), gamma)

    def scores(self, weights, split: str) -> np.ndarray:
        return forward_batch(self.network, weights, self._prepared[split])


def load_config_dataset(config: TrainingConfig):
    return load_dataset(config.dataset, config.data_path, config.data_seed, config.train_limit, config.test_limit)


def evaluate_loss(phi, gamma, problem: Problem, split: str = "train", shot_index=None) -> LossReport:
    """Loss of the network whose weights come from angles ``phi`` and scaling ``gamma``.

    In shot mode ``shot_index`` selects the measurement draw; without it the
    exact distribution is used.
    """
    w = problem.weights(phi, gamma, shot_index)
    return loss_from_scores(problem.scores(w, split), problem.dataset(split).labels)


def accuracy_from_weights(problem: Problem, weights, split: str) -> float:
    pred = problem.scores(weights, split).argmax(axis=1)
    return float(np.mean(pred == problem.dataset(split).labels))


def evaluate_accuracy(phi, gamma, problem: Problem, split: str = "test") -> float:
    """Fraction of correct argmax predictions, always from exact probabilities."""
    return accuracy_from_weights(problem, problem.weights(phi, gamma), split)


@dataclass
class RunRecord:
    config: dict
    network: str
    input_shape: list
    mapping: dict
    parameters: dict
    metrics: list = field(default_factory=list)  # per evaluation
    periods: list = field(default_factory=list)  # per training period
    final: dict = field(default_factory=dict)
    best: dict = field(default_factory=dict)
    format: str = RECORD_FORMAT
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("format") != RECORD_FORMAT:
            raise ValueError(f"not a run record (format {d.get('format')!r})")
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def write_metrics_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eval_index", "stage", "loss", "ce", "fail_rate"])
            for m in self.metrics:
                w.writerow([m["eval_index"], m["stage"], repr(m["loss"]), repr(m["ce"]), repr(m["fail_rate"])])

    @property
    def training_config(self) -> TrainingConfig:
        return TrainingConfig.from_dict(self.config)

    @property
    def final_weights(self) -> np.ndarray:
        return np.array(self.final["weights"], dtype=float)


class _Session:
    """Shared evaluation counter and metric log for both stages."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.metrics = []
        self.best = (np.inf, None, None)

    def loss(self, phi, gamma, stage: str) -> float:
        idx = len(self.metrics)
        rep = evaluate_loss(phi, gamma, self.problem, "train", shot_index=idx)
        self.metrics.append(
            {
                "eval_index": idx,
                "stage": stage,
                "loss": rep.total_loss,
                "ce": rep.cross_entropy,
                "fail_rate": rep.failure_rate,
            }
        )
        if rep.total_loss < self.best[0]:
            self.best = (rep.total_loss, np.array(phi, dtype=float), float(gamma))
        return rep.total_loss


def _snapshot(problem: Problem, phi, gamma) -> dict:
    w = problem.weights(phi, gamma)
    return {
        "phi": [float(v) for v in phi],
        "gamma": float(gamma),
        "gamma_abs": abs(float(gamma)),
        "train_accuracy": accuracy_from_weights(problem, w, "train"),
        "test_accuracy": accuracy_from_weights(problem, w, "test"),
        "train_loss_exact": loss_from_scores(problem.scores(w, "train"), problem.train.labels).total_loss,
        "weights": [float(v) for v in w],
    }


def run_training_session(config: TrainingConfig, problem: Problem | None = None, progress=None) -> RunRecord:
    """Run ``n_train_periods`` periods and return the complete record.

    ``progress`` is an optional callable receiving each period's summary dict.
    """
    problem = problem or Problem(config)
    sess = _Session(problem)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, STREAM_PHI_INIT]))
    phi = rng.uniform(0.0, 2.0 * np.pi, problem.ansatz.param_count)
    gamma = float(config.gamma_init)
    cobyla = Cobyla(phi, config.rho_begin, config.rho_end)
    periods = []
    restart_each_period = config.phi_restart == "period"
    if restart_each_period and config.n_phi_evals < phi.size + 2:
        raise ValueError(f"phi_restart='period' needs n_phi_evals >= {phi.size + 2}")

    for period in range(config.n_train_periods):
        g = gamma
        phi_obj = CountedObjective(lambda x: sess.loss(x, g, "phi"))
        budget = config.n_phi_evals
        if restart_each_period and period > 0:
            cobyla = Cobyla(cobyla.pole, config.rho_begin, config.rho_end)
        elif period > 0 and not cobyla.finished:
            cobyla.refresh(phi_obj)
            budget -= 1
        while budget > 0:
            if cobyla.finished:
                # trust radius reached rho_end: start over from the pole at full radius
                cobyla = Cobyla(cobyla.pole, config.rho_begin, config.rho_end)
            budget -= cobyla.run(phi_obj, budget).iterations_used
        phi = cobyla.pole.copy()

        p = phi
        gamma_res = nelder_mead_minimize(
            lambda x: sess.loss(p, x[0], "gamma"),
            [gamma],
            config.n_gamma_evals,
            initial_step=config.nm_initial_step,
        )
        gamma = float(gamma_res.best_x[0])

        w = problem.weights(phi, gamma)
        summary = {
            "period": period + 1,
            "evaluations": len(sess.metrics),
            "gamma": gamma,
            "train_loss": float(gamma_res.best_f),
            "train_accuracy": accuracy_from_weights(problem, w, "train"),
            "test_accuracy": accuracy_from_weights(problem, w, "test"),
        }
        periods.append(summary)
        if progress is not None:
            progress(summary)

    best_loss, best_phi, best_gamma = sess.best
    best = _snapshot(problem, best_phi, best_gamma)
    best["recorded_loss"] = best_loss
    return RunRecord(
        config=config.to_dict(),
        network=problem.network.describe(),
        input_shape=list(problem.network.input_shape),
        mapping=problem.mapping.to_dict(),
        parameters=parameter_summary(problem.M, config.qnn_layers),
        metrics=sess.metrics,
        periods=periods,
        final=_snapshot(problem, phi, gamma),
        best=best,
    )


def timed_session(config: TrainingConfig, problem: Problem | None = None, progress=None):
    """``run_training_session`` plus wall-clock seconds for loading and training."""
    t0 = time.perf_counter()
    problem = problem or Problem(config)
    t1 = time.perf_counter()
    record = run_training_session(config, problem, progress)
    t2 = time.perf_counter()
    return record, {"load_seconds": t1 - t0, "train_seconds": t2 - t1, "evaluations": len(record.metrics)}
