"""Portable weight files and classical-only evaluation.

Nothing here touches the circuit simulator or the weight mapping: a weight
file fully describes a trained network, so inference needs only numpy.

File layout (UTF-8 text)::

    qnnweights-weights 1
    network = dense:4:16, relu, dense:16:3, softmax
    input_shape = 4
    M = 131
    gamma = 0.3125
    dataset = iris
    ...more "key = value" lines...
    ---
    <M lines, one weight each, shortest round-trip decimal>
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cnn import NetworkSpec, forward_batch, prepare_inputs
from .data import load_dataset

__all__ = ["WeightFile", "WeightFormatError", "write_weights", "read_weights", "export_weights", "EvalResult", "evaluate_weights"]

MAGIC = "qnnweights-weights"
FORMAT_VERSION = 1
SEPARATOR = "---"
REQUIRED = ("network", "input_shape", "M", "gamma")
OPTIONAL = ("dataset", "data_path", "data_seed", "train_limit", "test_limit", "test_accuracy")


class WeightFormatError(ValueError):
    pass


@dataclass
class WeightFile:
    network: str
    input_shape: str
    weights: np.ndarray
    gamma: float
    meta: dict = field(default_factory=dict)

    @property
    def spec(self) -> NetworkSpec:
        return NetworkSpec.parse(self.network, self.input_shape)


def write_weights(path, wf: WeightFile) -> None:
    w = np.asarray(wf.weights, dtype=float)
    if w.shape != (wf.spec.total_param_count,):
        raise ValueError(f"network needs {wf.spec.total_param_count} weights, got {w.shape}")
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"network = {wf.network}",
        f"input_shape = {wf.input_shape}",
        f"M = {w.size}",
        f"gamma = {float(wf.gamma)!r}",
    ]
    for key in OPTIONAL:
        if wf.meta.get(key) is not None:
            lines.append(f"{key} = {wf.meta[key]}")
    lines.append(SEPARATOR)
    lines.extend(repr(float(v)) for v in w)
    Path(path).write_text("\n".join(lines) + "\n")


def read_weights(path) -> WeightFile:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split()[:1] != [MAGIC]:
        raise WeightFormatError(f"{path}: not a weight file")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise WeightFormatError(f"{path}: unreadable format version") from None
    if version != FORMAT_VERSION:
        raise WeightFormatError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    try:
        sep = lines.index(SEPARATOR)
    except ValueError:
        raise WeightFormatError(f"{path}: missing '{SEPARATOR}' after the header") from None
    header = {}
    for no, line in enumerate(lines[1:sep], start=2):
        key, eq, value = line.partition("=")
        key = key.strip()
        if not eq or key not in REQUIRED + OPTIONAL:
            raise WeightFormatError(f"{path}:{no}: bad header line {line!r}")
        header[key] = value.strip()
    missing = [k for k in REQUIRED if k not in header]
    if missing:
        raise WeightFormatError(f"{path}: header lacks {', '.join(missing)}")
    try:
        m = int(header["M"])
        gamma = float(header["gamma"])
        weights = np.array([float(v) for v in lines[sep + 1 :] if v.strip()])
        spec = NetworkSpec.parse(header["network"], header["input_shape"])
    except ValueError as exc:
        raise WeightFormatError(f"{path}: {exc}") from None
    if weights.size != m or spec.total_param_count != m:
        raise WeightFormatError(f"{path}: header says M={m}, network needs {spec.total_param_count}, file has {weights.size} weights")
    meta = {k: header[k] for k in OPTIONAL if k in header}
    return WeightFile(header["network"], header["input_shape"], weights, gamma, meta)


def export_weights(record, path) -> WeightFile:
    """Write a run record's final weights together with what is needed to rebuild its test split."""
    cfg = record.config
    wf = WeightFile(
        network=record.network,
        input_shape="x".join(str(d) for d in record.input_shape),
        weights=np.array(record.final["weights"], dtype=float),
        gamma=record.final["gamma"],
        meta={
            "dataset": cfg["dataset"],
            "data_path": cfg.get("data_path"),
            "data_seed": cfg.get("data_seed", 0),
            "train_limit": cfg.get("train_limit"),
            "test_limit": cfg.get("test_limit"),
            "test_accuracy": repr(record.final["test_accuracy"]),
        },
    )
    write_weights(path, wf)
    return wf


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # rows: true class, columns: predicted class
    n: int


def evaluate_weights(wf: WeightFile, dataset=None, split: str = "test", data_path=None) -> EvalResult:
    """Accuracy and confusion counts of a weight file on a dataset split.

    The split is rebuilt from the file's dataset settings unless overridden.
    """
    meta = wf.meta
    name = dataset or meta.get("dataset")
    if name is None:
        raise WeightFormatError("weight file names no dataset; pass one explicitly")
    intopt = lambda k: int(meta[k]) if meta.get(k) not in (None, "None") else None
    train, test = load_dataset(
        name,
        data_path or (meta.get("data_path") if meta.get("data_path") not in (None, "None") else None),
        intopt("data_seed") or 0,
        intopt("train_limit"),
        intopt("test_limit"),
    )
    ds = {"train": train, "test": test}[split]
    spec = wf.spec
    scores = forward_batch(spec, wf.weights, prepare_inputs(spec, ds.features))
    pred = scores.argmax(axis=1)
    k = spec.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (ds.labels, pred), 1)
    return EvalResult(float(np.mean(pred == ds.labels)), confusion, len(ds))
