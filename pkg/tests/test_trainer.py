import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnnweights.cnn import iris_network
from qnnweights.trainer import (
    LossReport,
    Problem,
    RunRecord,
    TrainingConfig,
    accuracy_from_weights,
    evaluate_accuracy,
    evaluate_loss,
    loss_from_scores,
    parameter_summary,
    run_training_session,
)


@pytest.fixture(scope="module")
def iris_problem():
    return Problem(TrainingConfig(seed=0))


def small(**kw):
    base = dict(n_train_periods=2, n_phi_evals=40, n_gamma_evals=5)
    base.update(kw)
    return TrainingConfig(**base)


class TestLoss:
    def test_gamma_zero_iris(self, iris_problem):
        phi = np.zeros(iris_problem.ansatz.param_count)
        rep = evaluate_loss(phi, 0.0, iris_problem)
        assert rep.cross_entropy == pytest.approx(math.log(3), abs=1e-12)
        # all-zero weights tie every class; the lowest index wins, so only class 0 is right
        frac0 = np.mean(iris_problem.train.labels == 0)
        assert rep.failure_rate == pytest.approx(1 - frac0)
        assert evaluate_accuracy(phi, 0.0, iris_problem, "test") == pytest.approx(np.mean(iris_problem.test.labels == 0))
        assert evaluate_accuracy(phi, 0.0, iris_problem, "train") == pytest.approx(33 / 100)

    def test_perfect_stub(self):
        labels = np.array([0, 2, 1, 1])
        rep = loss_from_scores(np.eye(3)[labels], labels)
        assert rep == LossReport(0.0, 0.0, 0.0, 0, 4)

    def test_clamp(self):
        rep = loss_from_scores(np.array([[0.0, 1.0]]), np.array([0]))
        assert rep.cross_entropy == pytest.approx(-math.log(1e-12))
        assert rep.n_fail == 1

    def test_hand_computed(self):
        scores = np.array([[0.7, 0.2, 0.1], [0.3, 0.3, 0.4], [0.5, 0.5, 0.0]])
        labels = np.array([0, 1, 1])
        rep = loss_from_scores(scores, labels)
        ce = -(math.log(0.7) + math.log(0.3) + math.log(0.5)) / 3
        assert rep.cross_entropy == pytest.approx(ce, rel=1e-14)
        assert (rep.n_fail, rep.failure_rate) == (2, 2 / 3)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
    def test_decomposition(self, seed, gamma):
        prob = _shared_problem()
        phi = np.random.default_rng(seed).uniform(0, 2 * np.pi, prob.ansatz.param_count)
        rep = evaluate_loss(phi, gamma, prob)
        assert abs(rep.total_loss - (rep.cross_entropy + rep.failure_rate)) <= 1e-12
        assert rep.failure_rate == rep.n_fail / rep.n_data
        assert rep.total_loss >= rep.failure_rate and rep.total_loss >= rep.cross_entropy
        assert 0 <= rep.failure_rate <= 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
    def test_accuracy_in_range(self, seed, gamma):
        prob = _shared_problem()
        phi = np.random.default_rng(seed).uniform(0, 2 * np.pi, prob.ansatz.param_count)
        acc = evaluate_accuracy(phi, gamma, prob, "test")
        assert 0 <= acc <= 1
        assert acc == pytest.approx(1 - evaluate_loss(phi, gamma, prob, "test").failure_rate, abs=1e-15)

    def test_shot_mode_draw_index(self):
        prob = Problem(TrainingConfig(shots=256))
        phi = np.linspace(0, 1, prob.ansatz.param_count)
        a = evaluate_loss(phi, 0.5, prob, shot_index=3)
        assert a == evaluate_loss(phi, 0.5, prob, shot_index=3)
        assert a != evaluate_loss(phi, 0.5, prob, shot_index=4)
        exact = evaluate_loss(phi, 0.5, Problem(TrainingConfig()))
        assert evaluate_loss(phi, 0.5, prob) == exact  # no draw index -> exact probabilities


_PROB = {}


def _shared_problem():
    if "p" not in _PROB:
        _PROB["p"] = Problem(TrainingConfig(seed=3))
    return _PROB["p"]


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(qnn_layers=0),
            dict(n_train_periods=0),
            dict(shots=0),
            dict(gamma_init=float("nan")),
            dict(dataset="cifar"),
            dict(rho_begin=1e-5),
            dict(phi_restart="never"),
            dict(n_gamma_evals=2),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrainingConfig(**kw)

    def test_dict_round_trip(self):
        cfg = TrainingConfig(seed=4, shots=1024, qnn_layers=3)
        assert TrainingConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            TrainingConfig.from_dict({"sed": 1})

    def test_default_networks(self):
        assert TrainingConfig().network_spec() == iris_network()
        assert TrainingConfig(dataset="mnist").network_spec().total_param_count == 7038

    def test_period_restart_needs_budget(self):
        with pytest.raises(ValueError, match="n_phi_evals"):
            run_training_session(small(phi_restart="period", n_phi_evals=33))


class TestParameters:
    def test_iris_ratio(self):
        s = parameter_summary(131, 1)
        assert (s["num_qubits"], s["qnn_param_count"]) == (8, 32)
        assert round(100 * s["param_ratio"], 1) == 24.4
        assert s["param_count_note"] is None

    def test_mnist_26_layers(self):
        s = parameter_summary(7038, 26)
        assert (s["num_qubits"], s["qnn_param_count"]) == (13, 702)
        assert "728" in s["param_count_note"]


class TestSession:
    def test_budget_iris_schedule(self):
        rec = run_training_session(TrainingConfig(seed=1))
        assert len(rec.metrics) <= 21 * 110
        assert len(rec.periods) == 21

    def test_minimal_budgets(self):
        cfg = TrainingConfig(n_train_periods=1, n_phi_evals=34, n_gamma_evals=3)
        rec = run_training_session(cfg)
        assert len(rec.metrics) == 37
        assert [m["stage"] for m in rec.metrics] == ["phi"] * 34 + ["gamma"] * 3
        assert len(rec.final["weights"]) == 131
        RunRecord.from_dict(json.loads(rec.to_json()))

    def test_metrics_indices_and_decomposition(self):
        rec = run_training_session(small(seed=2))
        assert [m["eval_index"] for m in rec.metrics] == list(range(len(rec.metrics)))
        for m in rec.metrics:
            assert abs(m["loss"] - (m["ce"] + m["fail_rate"])) <= 1e-12

    def test_exact_mode_bit_identical(self):
        a = run_training_session(small(seed=5)).to_json()
        b = run_training_session(small(seed=5)).to_json()
        assert a == b
        assert a != run_training_session(small(seed=6)).to_json()

    def test_shot_mode_reproducible(self):
        a = run_training_session(small(seed=5, shots=512))
        b = run_training_session(small(seed=5, shots=512))
        assert a.to_json() == b.to_json()

    @pytest.mark.parametrize("restart", ["resume", "period"])
    def test_best_so_far_non_increasing_at_stage_boundaries(self, restart):
        rec = run_training_session(small(seed=7, n_train_periods=4, phi_restart=restart))
        losses = np.array([m["loss"] for m in rec.metrics])
        stages = [m["stage"] for m in rec.metrics]
        starts = [i for i in range(1, len(stages)) if stages[i] != stages[i - 1]]
        # each stage's first evaluation re-scores the incumbent, so it matches the best so far
        for i in starts:
            assert losses[i] <= losses[:i].min() + 1e-12

    def test_final_weights_reproduce(self):
        cfg = small(seed=8)
        prob = Problem(cfg)
        rec = run_training_session(cfg, prob)
        w = prob.weights(np.array(rec.final["phi"]), rec.final["gamma"])
        np.testing.assert_array_equal(w, rec.final_weights)
        assert accuracy_from_weights(prob, w, "test") == rec.final["test_accuracy"]
        assert rec.final["test_accuracy"] == rec.periods[-1]["test_accuracy"]

    def test_weights_bounded_by_gamma(self):
        rec = run_training_session(small(seed=9))
        g = rec.final["gamma_abs"]
        w = np.abs(rec.final_weights)
        assert np.all(w <= g)
        # strict bound wherever tanh is not saturated in floating point
        assert np.all(w[w != g] < g)

    def test_best_is_lowest_recorded(self):
        rec = run_training_session(small(seed=10))
        assert rec.best["recorded_loss"] == min(m["loss"] for m in rec.metrics)
        assert rec.best["train_loss_exact"] == rec.best["recorded_loss"]

    def test_metrics_csv(self, tmp_path):
        rec = run_training_session(small(seed=11))
        rec.write_metrics_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "eval_index,stage,loss,ce,fail_rate"
        assert len(lines) == len(rec.metrics) + 1
        idx, stage, loss, ce, fr = lines[5].split(",")
        assert float(loss) == rec.metrics[4]["loss"]

    def test_record_rejects_other_json(self):
        with pytest.raises(ValueError):
            RunRecord.from_dict({"format": "something-else"})
