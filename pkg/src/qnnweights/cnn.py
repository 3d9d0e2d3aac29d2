"""Inference-only feed-forward networks driven by a flat weight vector.

Weights are packed layer by layer in declaration order.  A dense layer
stores its ``(out, in)`` matrix row-major followed by ``out`` biases; a
convolution stores filters as ``(out_ch, in_ch, row, col)`` followed by
``out_ch`` biases.  Convolutions are stride-1 "valid" cross-correlations and
max-pooling uses stride equal to the window.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Dense",
    "Conv2D",
    "MaxPool2D",
    "Activation",
    "Flatten",
    "NetworkSpec",
    "Prediction",
    "param_count",
    "pack_order",
    "unpack",
    "pack",
    "forward",
    "forward_batch",
    "PreparedInputs",
    "prepare_inputs",
    "softmax",
    "iris_network",
    "mnist_network",
]


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int

    def n_params(self):
        return self.in_features * self.out_features + self.out_features

    def output_shape(self, shape):
        if shape != (self.in_features,):
            raise ValueError(f"dense layer expects input ({self.in_features},), got {shape}")
        return (self.out_features,)

    def describe(self):
        return f"dense:{self.in_features}:{self.out_features}"


@dataclass(frozen=True)
class Conv2D:
    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int

    def n_params(self):
        return self.out_channels * self.in_channels * self.kernel_h * self.kernel_w + self.out_channels

    def output_shape(self, shape):
        if len(shape) != 3 or shape[0] != self.in_channels:
            raise ValueError(f"conv layer expects ({self.in_channels}, H, W), got {shape}")
        h, w = shape[1] - self.kernel_h + 1, shape[2] - self.kernel_w + 1
        if h < 1 or w < 1:
            raise ValueError(f"kernel larger than input {shape}")
        return (self.out_channels, h, w)

    def describe(self):
        return f"conv:{self.in_channels}:{self.out_channels}:{self.kernel_h}:{self.kernel_w}"


@dataclass(frozen=True)
class MaxPool2D:
    window: int

    def n_params(self):
        return 0

    def output_shape(self, shape):
        if len(shape) != 3 or shape[1] < self.window or shape[2] < self.window:
            raise ValueError(f"cannot pool {shape} with window {self.window}")
        return (shape[0], shape[1] // self.window, shape[2] // self.window)

    def describe(self):
        return f"maxpool:{self.window}"


@dataclass(frozen=True)
class Activation:
    kind: str

    def __post_init__(self):
        if self.kind not in ("relu", "tanh", "softmax"):
            raise ValueError(f"unknown activation {self.kind!r}")

    def n_params(self):
        return 0

    def output_shape(self, shape):
        if self.kind == "softmax" and len(shape) != 1:
            raise ValueError("softmax needs a flat input")
        return shape

    def describe(self):
        return self.kind


@dataclass(frozen=True)
class Flatten:
    def n_params(self):
        return 0

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def describe(self):
        return "flatten"


Layer = Union[Dense, Conv2D, MaxPool2D, Activation, Flatten]


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers plus the shape of one input sample."""

    layers: tuple
    input_shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        if not self.layers:
            raise ValueError("network needs at least one layer")
        self.shapes()

    def shapes(self) -> list:
        """Shape after every layer, starting with the input shape."""
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        return shapes

    @property
    def num_classes(self) -> int:
        return self.shapes()[-1][0]

    @property
    def total_param_count(self) -> int:
        return sum(layer.n_params() for layer in self.layers)

    def describe(self) -> str:
        return ", ".join(layer.describe() for layer in self.layers)

    @classmethod
    def parse(cls, text: str, input_shape) -> "NetworkSpec":
        """Inverse of :meth:`describe`, e.g. ``"dense:4:16, relu, dense:16:3, softmax"``."""
        if isinstance(input_shape, str):
            input_shape = tuple(int(d) for d in re.split(r"[x,\s]+", input_shape.strip()) if d)
        layers = []
        for token in (t.strip() for t in text.split(",")):
            if not token:
                continue
            name, *args = token.split(":")
            try:
                nums = [int(a) for a in args]
            except ValueError:
                raise ValueError(f"bad layer descriptor {token!r}") from None
            ctor = {"dense": Dense, "conv": Conv2D, "maxpool": MaxPool2D, "flatten": Flatten}.get(name)
            if ctor is not None:
                try:
                    layers.append(ctor(*nums))
                except TypeError:
                    raise ValueError(f"bad layer descriptor {token!r}") from None
            elif not nums:
                layers.append(Activation(name))
            else:
                raise ValueError(f"bad layer descriptor {token!r}")
        return cls(tuple(layers), input_shape)


def iris_network() -> NetworkSpec:
    """4 features -> 16 relu units -> 3 classes (131 weights)."""
    return NetworkSpec((Dense(4, 16), Activation("relu"), Dense(16, 3), Activation("softmax")), (4,))


def mnist_network() -> NetworkSpec:
    """Small two-convolution net for 28x28 digits (7038 weights, 13 qubits)."""
    return NetworkSpec(
        (
            Conv2D(1, 4, 5, 5),
            Activation("relu"),
            MaxPool2D(2),
            Conv2D(4, 8, 5, 5),
            Activation("relu"),
            MaxPool2D(2),
            Flatten(),
            Dense(128, 44),
            Activation("relu"),
            Dense(44, 10),
            Activation("softmax"),
        ),
        (1, 28, 28),
    )


def param_count(spec: NetworkSpec) -> int:
    return spec.total_param_count


class Slot(NamedTuple):
    layer: int
    kind: str  # "weight" or "bias"
    index: tuple


def pack_order(spec: NetworkSpec) -> list:
    """Describe every position of the flat weight vector as a :class:`Slot`."""
    slots = []
    for li, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            wshape, nb = (layer.out_features, layer.in_features), layer.out_features
        elif isinstance(layer, Conv2D):
            wshape = (layer.out_channels, layer.in_channels, layer.kernel_h, layer.kernel_w)
            nb = layer.out_channels
        else:
            continue
        slots += [Slot(li, "weight", idx) for idx in np.ndindex(*wshape)]
        slots += [Slot(li, "bias", (b,)) for b in range(nb)]
    return slots


def unpack(spec: NetworkSpec, weights) -> list:
    """Split a flat vector into per-layer ``(W, b)`` views (``None`` for parameter-free layers)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (spec.total_param_count,):
        raise ValueError(
            f"network needs {spec.total_param_count} weights, got {weights.shape[0] if weights.ndim else 'scalar'}"
        )
    params, pos = [], 0
    for layer in spec.layers:
        if isinstance(layer, Dense):
            wshape, nb = (layer.out_features, layer.in_features), layer.out_features
        elif isinstance(layer, Conv2D):
            wshape = (layer.out_channels, layer.in_channels, layer.kernel_h, layer.kernel_w)
            nb = layer.out_channels
        else:
            params.append(None)
            continue
        nw = int(np.prod(wshape))
        params.append((weights[pos : pos + nw].reshape(wshape), weights[pos + nw : pos + nw + nb]))
        pos += nw + nb
    return params


def pack(spec: NetworkSpec, params: list) -> np.ndarray:
    """Inverse of :func:`unpack`."""
    parts = [np.concatenate([w.ravel(), b.ravel()]) for w, b in (p for p in params if p is not None)]
    flat = np.concatenate(parts) if parts else np.empty(0)
    if flat.shape != (spec.total_param_count,):
        raise ValueError("parameter shapes do not match the network")
    return flat


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _im2col(x, kh, kw):
    # channels-last x (B, H, W, C) -> columns (B*H'*W', C*kh*kw) ordered (c, row, col)
    patches = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (B, H', W', C, kh, kw)
    return patches.reshape(-1, x.shape[3] * kh * kw), patches.shape[:3]


def _conv2d(x, w, b, cols=None):
    # channels-last: x (B, H, W, C), w (O, C, kh, kw) -> (B, H', W', O)
    o, _, kh, kw = w.shape
    if cols is None:
        cols, out_shape = _im2col(x, kh, kw)
    else:
        cols, out_shape = cols
    out = cols @ w.reshape(o, -1).T + b
    return out.reshape(*out_shape, o)


@dataclass(frozen=True, eq=False)
class PreparedInputs:
    """A batch with the first convolution's patch matrix precomputed.

    Worth building once when the same inputs are pushed through many weight
    vectors, as during training.
    """

    inputs: np.ndarray
    first_cols: tuple | None = None

    def __len__(self):
        return self.inputs.shape[0]


def prepare_inputs(spec: NetworkSpec, inputs) -> PreparedInputs:
    x = np.asarray(inputs, dtype=float)
    if x.shape[1:] != spec.input_shape:
        raise ValueError(f"inputs must be (B, {spec.input_shape}), got {x.shape}")
    first = spec.layers[0]
    if isinstance(first, Conv2D):
        cols, out_shape = _im2col(np.moveaxis(x, 1, -1), first.kernel_h, first.kernel_w)
        return PreparedInputs(x, (np.ascontiguousarray(cols), out_shape))
    return PreparedInputs(x)


def _maxpool(x, k):
    h2, w2 = x.shape[1] // k, x.shape[2] // k
    out = x[:, 0 : h2 * k : k, 0 : w2 * k : k, :]
    for i in range(k):
        for j in range(k):
            if i or j:
                out = np.maximum(out, x[:, i : h2 * k : k, j : w2 * k : k, :])
    return out


def forward_batch(spec: NetworkSpec, weights, inputs) -> np.ndarray:
    """Network output for a batch shaped ``(B, *spec.input_shape)`` or a :class:`PreparedInputs`."""
    first_cols = None
    if isinstance(inputs, PreparedInputs):
        x, first_cols = inputs.inputs, inputs.first_cols
    else:
        x = np.asarray(inputs, dtype=float)
    if x.shape[1:] != spec.input_shape:
        raise ValueError(f"inputs must be (B, {spec.input_shape}), got {x.shape}")
    if x.ndim == 4:
        x = np.moveaxis(x, 1, -1)
    for li, (layer, p) in enumerate(zip(spec.layers, unpack(spec, weights))):
        if isinstance(layer, Dense):
            w, b = p
            x = x @ w.T + b
        elif isinstance(layer, Conv2D):
            x = _conv2d(x, *p, cols=first_cols if li == 0 else None)
        elif isinstance(layer, MaxPool2D):
            x = _maxpool(x, layer.window)
        elif isinstance(layer, Flatten):
            if x.ndim == 4:
                x = np.moveaxis(x, -1, 1)
            x = x.reshape(x.shape[0], -1)
        elif layer.kind == "relu":
            x = np.maximum(x, 0.0)
        elif layer.kind == "tanh":
            x = np.tanh(x)
        else:
            x = softmax(x)
    if x.ndim == 4:
        x = np.moveaxis(x, -1, 1)
    return x


@dataclass(frozen=True)
class Prediction:
    class_scores: np.ndarray
    predicted_class: int


def forward(spec: NetworkSpec, weights, x) -> Prediction:
    """Single-sample forward pass; ties in the scores go to the lowest class index."""
    scores = forward_batch(spec, weights, np.asarray(x, dtype=float)[None])[0]
    return Prediction(scores, int(np.argmax(scores)))
