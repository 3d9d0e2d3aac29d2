"""Convert the 5000-digit MNIST sample shipped in the mlxtend wheel to IDX files.

Usage: python3 tools/build_mnist5k_idx.py path/to/mlxtend-*.whl data/mnist5k

The sample holds 500 digits per class.  The first 350 of each class (file
order) become the training file, the remaining 150 the test file.
"""
import gzip
import io
import sys
import zipfile
from pathlib import Path

import numpy as np

from qnnweights.data import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_CLASS = 350


def main(wheel, out_dir):
    with zipfile.ZipFile(wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels, labels = table[:, :784], table[:, 784]
    train, test = [], []
    for c in range(10):
        members = np.flatnonzero(labels == c)
        train.extend(members[:TRAIN_PER_CLASS])
        test.extend(members[TRAIN_PER_CLASS:])
    train, test = np.sort(train), np.sort(test)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = pixels.reshape(-1, 28, 28).astype(np.uint8)
    write_idx(out / "train-images-idx3-ubyte.gz", images[train])
    write_idx(out / "train-labels-idx1-ubyte.gz", labels[train].astype(np.uint8))
    write_idx(out / "t10k-images-idx3-ubyte.gz", images[test])
    write_idx(out / "t10k-labels-idx1-ubyte.gz", labels[test].astype(np.uint8))
    print(f"wrote {len(train)} train / {len(test)} test digits to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
