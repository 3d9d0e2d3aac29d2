"""Dataset ingestion: Iris from CSV, MNIST from IDX files, seeded stratified splits."""
from __future__ import annotations

import csv
import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "DataError",
    "IRIS_CSV",
    "load_iris",
    "load_mnist",
    "read_idx",
    "write_idx",
    "stratified_indices",
    "DATA_ROOT_ENV",
    "load_dataset",
]

IRIS_CSV = Path(__file__).with_name("datasets") / "iris.csv"
DATA_ROOT_ENV = "QNNWEIGHTS_DATA"

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    split: str
    class_names: tuple = ()

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise DataError("feature and label counts differ")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DataError("labels out of range")

    def __len__(self):
        return int(self.labels.shape[0])


def stratified_indices(labels, n, rng, class_count=None) -> np.ndarray:
    """Pick ``n`` indices with (near-)equal counts per class.

    Every class gets ``n // K``; the ``n % K`` leftover picks go to the
    highest-numbered classes.  Within a class the picks come from a seeded
    permutation.  Returns indices sorted by class, then by draw order.
    """
    labels = np.asarray(labels)
    k = int(class_count if class_count is not None else labels.max() + 1)
    base, extra = divmod(int(n), k)
    picks = []
    for c in range(k):
        quota = base + (1 if c >= k - extra else 0)
        members = np.flatnonzero(labels == c)
        if quota > members.size:
            raise DataError(f"class {c} has {members.size} samples, need {quota}")
        picks.append(members[rng.permutation(members.size)[:quota]])
    return np.concatenate(picks)


# -- Iris ---------------------------------------------------------------------


def _read_iris_csv(path):
    rows, names = [], []
    if not Path(path).is_file():
        raise DataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row[:4]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric feature") from None
            names.append(row[4].strip())
    if len(rows) != 150:
        raise DataError(f"{path}: expected 150 rows, got {len(rows)}")
    classes = list(dict.fromkeys(names))
    if len(classes) != 3:
        raise DataError(f"{path}: expected 3 classes, got {len(classes)}")
    labels = np.array([classes.index(n) for n in names])
    return np.array(rows), labels, tuple(classes)


def _default_iris_path() -> Path:
    root = os.environ.get(DATA_ROOT_ENV)
    return Path(root) / "iris.csv" if root else IRIS_CSV


def load_iris(path=None, seed: int = 0, n_train: int = 100):
    """Stratified 100/50 split, z-scored with training-split statistics.

    Class indices follow first appearance in the file.  Without ``path`` the
    file is ``$QNNWEIGHTS_DATA/iris.csv`` if that variable is set, else the
    copy shipped with the package.
    """
    x, y, classes = _read_iris_csv(path or _default_iris_path())
    rng = np.random.default_rng(seed)
    train_idx = stratified_indices(y, n_train, rng, 3)
    test_mask = np.ones(len(y), dtype=bool)
    test_mask[train_idx] = False
    test_idx = np.flatnonzero(test_mask)
    # shuffle test order too so neither split is grouped by class
    test_idx = test_idx[rng.permutation(test_idx.size)]
    train_idx = train_idx[rng.permutation(train_idx.size)]
    mean = x[train_idx].mean(axis=0)
    std = x[train_idx].std(axis=0)
    z = (x - mean) / std
    return (
        Dataset(z[train_idx], y[train_idx], 3, "train", classes),
        Dataset(z[test_idx], y[test_idx], 3, "test", classes),
    )


# -- MNIST / IDX -----------------------------------------------------------------


def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read an unsigned-byte IDX file (images: magic 0x803, labels: magic 0x801)."""
    with _open(path) as fh:
        head = fh.read(4)
        if len(head) < 4:
            raise DataError(f"{path}: truncated header")
        (magic,) = struct.unpack(">I", head)
        if magic not in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC):
            raise DataError(f"{path}: bad magic number 0x{magic:08x}")
        ndim = magic & 0xFF
        dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        body = fh.read()
    expected = int(np.prod(dims))
    if len(body) != expected:
        raise DataError(f"{path}: expected {expected} data bytes, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(dims)


def write_idx(path, array) -> None:
    """Write a uint8 array of rank 1 (labels) or 3 (images) as IDX, gzipped if the name ends in .gz."""
    a = np.ascontiguousarray(array, dtype=np.uint8)
    if a.ndim not in (1, 3):
        raise ValueError("IDX writer handles rank-1 labels or rank-3 images")
    magic = IDX_LABELS_MAGIC if a.ndim == 1 else IDX_IMAGES_MAGIC
    payload = struct.pack(f">I{a.ndim}I", magic, *a.shape) + a.tobytes()
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.GzipFile(path, "wb", mtime=0) as fh:
            fh.write(payload)
    else:
        path.write_bytes(payload)


def _find(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        if (directory / name).exists():
            return directory / name
    raise DataError(f"{directory}: missing {stem}[.gz]")


def resolve_data_dir(directory, dataset: str) -> Path:
    """Use ``directory`` if given, else ``$QNNWEIGHTS_DATA/<dataset>``."""
    if directory is not None:
        return Path(directory)
    root = os.environ.get(DATA_ROOT_ENV)
    if not root:
        raise DataError(f"no {dataset} directory given and ${DATA_ROOT_ENV} is unset")
    return Path(root) / dataset


def _mnist_split(directory: Path, split: str):
    img_stem, lbl_stem = MNIST_FILES[split]
    images = read_idx(_find(directory, img_stem))
    labels = read_idx(_find(directory, lbl_stem))
    if images.ndim != 3 or labels.ndim != 1:
        raise DataError(f"{directory}: {split} files have the wrong rank")
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{directory}: {images.shape[0]} {split} images but {labels.shape[0]} labels")
    return images, labels


def load_mnist(directory=None, train_limit=None, test_limit=None, seed: int = 0):
    """Load MNIST IDX files, scale pixels to [0, 1], optionally subsample per class.

    Images come back shaped ``(B, 1, 28, 28)``.  Without limits the files are
    used whole and in file order.
    """
    directory = resolve_data_dir(directory, "mnist")
    if not directory.is_dir():
        raise DataError(f"{directory}: no such directory")
    rng = np.random.default_rng(seed)
    out = []
    for split, limit in (("train", train_limit), ("test", test_limit)):
        images, labels = _mnist_split(directory, split)
        if limit is not None:
            idx = stratified_indices(labels, limit, rng, 10)
            idx = idx[rng.permutation(idx.size)]
            images, labels = images[idx], labels[idx]
        x = (images.astype(float) / 255.0)[:, None, :, :]
        out.append(Dataset(x, labels.astype(np.int64), 10, split))
    return tuple(out)


def load_dataset(name: str, path=None, seed: int = 0, train_limit=None, test_limit=None):
    """Dispatch on dataset name; the same arguments always give the same split."""
    if name == "iris":
        return load_iris(path, seed=seed)
    if name == "mnist":
        return load_mnist(path, train_limit, test_limit, seed=seed)
    raise DataError(f"unknown dataset {name!r}")
