"""Rewrite scikit-learn's bundled iris.csv as plain rows of 4 floats plus a class name."""
import csv
import sys

NAMES = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]


def main(src, dst):
    with open(src, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    with open(dst, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in rows:
            w.writerow(r[:4] + [NAMES[int(r[4])]])


if __name__ == "__main__":
    main(*sys.argv[1:3])
