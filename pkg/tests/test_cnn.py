import numpy as np
import pytest

from qnnweights.cnn import (
    Activation,
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    NetworkSpec,
    forward,
    forward_batch,
    iris_network,
    mnist_network,
    pack,
    pack_order,
    param_count,
    prepare_inputs,
    softmax,
    unpack,
)
from qnnweights.mapping import qubits_for


def naive_dense(x, w, b):
    out = np.zeros(w.shape[0])
    for o in range(w.shape[0]):
        acc = b[o]
        for i in range(w.shape[1]):
            acc += w[o, i] * x[i]
        out[o] = acc
    return out


def naive_conv(x, w, b):
    c_out, c_in, kh, kw = w.shape
    h, wd = x.shape[1] - kh + 1, x.shape[2] - kw + 1
    out = np.zeros((c_out, h, wd))
    for o in range(c_out):
        for r in range(h):
            for c in range(wd):
                acc = b[o]
                for ci in range(c_in):
                    for i in range(kh):
                        for j in range(kw):
                            acc += w[o, ci, i, j] * x[ci, r + i, c + j]
                out[o, r, c] = acc
    return out


class TestParamCount:
    def test_iris(self):
        assert param_count(iris_network()) == 131

    def test_tiny(self):
        assert param_count(NetworkSpec((Dense(1, 1),), (1,))) == 2

    def test_mnist_default(self):
        spec = mnist_network()
        assert param_count(spec) == 7038
        assert qubits_for(param_count(spec)) == 13
        assert spec.num_classes == 10

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            NetworkSpec((Dense(4, 8), Dense(7, 3)), (4,))
        with pytest.raises(ValueError):
            NetworkSpec((Conv2D(2, 4, 3, 3),), (1, 8, 8))


class TestPacking:
    def test_dense_slot_order(self):
        spec = NetworkSpec((Dense(2, 2),), (2,))
        slots = [(s.kind, s.index) for s in pack_order(spec)]
        assert slots == [
            ("weight", (0, 0)),
            ("weight", (0, 1)),
            ("weight", (1, 0)),
            ("weight", (1, 1)),
            ("bias", (0,)),
            ("bias", (1,)),
        ]
        (w, b), = unpack(spec, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        np.testing.assert_array_equal(w, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(b, [5, 6])

    def test_conv_slot_order(self):
        spec = NetworkSpec((Conv2D(2, 3, 2, 2), Flatten()), (2, 4, 4))
        slots = pack_order(spec)
        assert slots[0].index == (0, 0, 0, 0) and slots[1].index == (0, 0, 0, 1)
        assert slots[4].index == (0, 1, 0, 0)
        assert slots[24].kind == "bias"
        w, b = unpack(spec, np.arange(27.0))[0]
        assert w[1, 0, 1, 0] == 1 * 8 + 0 * 4 + 1 * 2 + 0

    @pytest.mark.parametrize("spec", [iris_network(), mnist_network()])
    def test_round_trip(self, spec):
        w = np.random.default_rng(0).normal(size=spec.total_param_count)
        np.testing.assert_array_equal(pack(spec, unpack(spec, w)), w)
        assert len(pack_order(spec)) == spec.total_param_count

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            unpack(iris_network(), np.zeros(130))

    def test_describe_parse_round_trip(self):
        for spec in (iris_network(), mnist_network()):
            assert NetworkSpec.parse(spec.describe(), spec.input_shape) == spec
        assert NetworkSpec.parse("dense:4:16,relu,dense:16:3,softmax", "4") == iris_network()
        assert NetworkSpec.parse(mnist_network().describe(), "1x28x28") == mnist_network()

    @pytest.mark.parametrize("bad", ["dense:4", "dense:a:b", "sigmoid", "relu:3", "conv:1:2"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            NetworkSpec.parse(bad, (4,))


class TestForward:
    def test_symmetric_logits(self):
        spec = NetworkSpec((Dense(2, 2), Activation("softmax")), (2,))
        pred = forward(spec, [1, 0, 0, 1, 0, 0], [5.0, 5.0])
        np.testing.assert_allclose(pred.class_scores, [0.5, 0.5])
        assert pred.predicted_class == 0

    def test_identity_affine(self):
        spec = NetworkSpec((Dense(1, 1),), (1,))
        assert forward_batch(spec, [1.0, 0.0], [[3.0]])[0, 0] == 3.0

    def test_zero_weights_uniform(self):
        spec = iris_network()
        x = np.random.default_rng(1).normal(size=(10, 4))
        np.testing.assert_allclose(forward_batch(spec, np.zeros(131), x), 1 / 3, atol=1e-15)

    def test_input_shape_checked(self):
        with pytest.raises(ValueError):
            forward_batch(iris_network(), np.zeros(131), np.zeros((3, 5)))

    def test_dense_oracle(self):
        rng = np.random.default_rng(2)
        spec = NetworkSpec((Dense(6, 4), Activation("tanh"), Dense(4, 3)), (6,))
        for _ in range(50):
            w = rng.normal(size=spec.total_param_count)
            x = rng.normal(size=6)
            (w1, b1), _, (w2, b2) = unpack(spec, w)
            ref = naive_dense(np.tanh(naive_dense(x, w1, b1)), w2, b2)
            np.testing.assert_allclose(forward_batch(spec, w, x[None])[0], ref, atol=1e-9)

    def test_conv_oracle(self):
        rng = np.random.default_rng(3)
        spec = NetworkSpec((Conv2D(2, 3, 3, 2),), (2, 6, 5))
        for _ in range(50):
            w = rng.normal(size=spec.total_param_count)
            x = rng.normal(size=(2, 6, 5))
            ref = naive_conv(x, *unpack(spec, w)[0])
            np.testing.assert_allclose(forward_batch(spec, w, x[None])[0], ref, atol=1e-9)

    def test_maxpool_and_flatten(self):
        spec = NetworkSpec((MaxPool2D(2), Flatten()), (1, 5, 4))
        x = np.arange(20.0).reshape(1, 1, 5, 4)
        # odd trailing row is dropped
        np.testing.assert_array_equal(forward_batch(spec, [], x)[0], [5, 7, 13, 15])

    def test_mnist_net_against_naive_layers(self):
        spec = mnist_network()
        rng = np.random.default_rng(4)
        w = rng.normal(scale=0.2, size=spec.total_param_count)
        x = rng.uniform(size=(1, 28, 28))
        p = unpack(spec, w)
        h = np.maximum(naive_conv(x, *p[0]), 0)
        h = h.reshape(4, 12, 2, 12, 2).max(axis=(2, 4))
        h = np.maximum(naive_conv(h, *p[3]), 0)
        h = h.reshape(8, 4, 2, 4, 2).max(axis=(2, 4)).ravel()
        h = np.maximum(naive_dense(h, *p[7]), 0)
        ref = softmax(naive_dense(h, *p[9]))
        np.testing.assert_allclose(forward(spec, w, x).class_scores, ref, atol=1e-9)

    def test_prepared_inputs_bit_identical(self):
        rng = np.random.default_rng(7)
        for spec in (mnist_network(), iris_network()):
            w = rng.normal(scale=0.1, size=spec.total_param_count)
            x = rng.uniform(size=(15, *spec.input_shape))
            prepared = prepare_inputs(spec, x)
            assert len(prepared) == 15
            np.testing.assert_array_equal(forward_batch(spec, w, prepared), forward_batch(spec, w, x))

    def test_deterministic(self):
        spec = mnist_network()
        rng = np.random.default_rng(5)
        w = rng.normal(scale=0.1, size=spec.total_param_count)
        x = rng.uniform(size=(20, 1, 28, 28))
        np.testing.assert_array_equal(forward_batch(spec, w, x), forward_batch(spec, w, x))


class TestSoftmax:
    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            z = rng.normal(scale=30, size=(4, 7))
            s = softmax(z)
            np.testing.assert_allclose(s.sum(axis=1), 1, atol=1e-9)
            np.testing.assert_allclose(softmax(z + 100), s, atol=1e-12)

    def test_large_logits_finite(self):
        s = softmax(np.array([[1e4, 0.0, -1e4]]))
        assert np.all(np.isfinite(s)) and s[0, 0] == 1.0
