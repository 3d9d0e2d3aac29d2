"""Command-line entry point: ``train``, ``eval`` and ``inspect``.

``eval`` imports only the classical modules, so evaluating an exported
network never loads the circuit simulator.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .data import DataError

EXIT_OK, EXIT_FAIL = 0, 1


class CliError(Exception):
    pass


# -- train --------------------------------------------------------------------


def _train_flags(args) -> dict:
    from .config import parse_shots

    return {
        "dataset": args.dataset,
        "seed": args.seed,
        "shots": parse_shots(args.shots) if args.shots is not None else None,
        "qnn_layers": args.qnn_layers,
        "n_train_periods": args.periods,
        "n_phi_evals": args.phi_evals,
        "n_gamma_evals": args.gamma_evals,
        "gamma_init": args.gamma_init,
        "train_limit": args.train_limit,
        "test_limit": args.test_limit,
        "data_path": args.data_path,
        "out": args.out,
    }


def _run_dir(out_root: Path, seed: int) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = out_root / f"run-{stamp}-seed{seed}"
    path, k = base, 1
    while path.exists() or path.with_name(path.name + ".partial").exists():
        path = base.with_name(f"{base.name}-{k}")
        k += 1
    return path


def write_run(record, timings: dict, run_dir: Path) -> None:
    """Write all artifacts into ``run_dir.partial``, then rename it to ``run_dir``."""
    from .weights import export_weights

    tmp = run_dir.with_name(run_dir.name + ".partial")
    tmp.mkdir(parents=True)
    record.write_metrics_csv(tmp / "metrics.csv")
    export_weights(record, tmp / "weights.dat")
    (tmp / "timings.json").write_text(json.dumps(timings, indent=1) + "\n")
    record.save(tmp / "run.json")
    tmp.rename(run_dir)


def cmd_train(args) -> int:
    from .config import read_config, resolve
    from .trainer import Problem, timed_session

    file_values = read_config(args.config) if args.config else {}
    config, out = resolve(file_values, _train_flags(args))
    problem = Problem(config)  # fails here, before any output, if data is missing
    p = problem.mapping
    print(
        f"{config.dataset}: M={problem.M} weights, N={p.N} qubits, L={config.qnn_layers}, "
        f"{problem.ansatz.param_count} circuit parameters, shots={config.shots_label}, seed={config.seed}"
    )

    def progress(s):
        if not args.quiet:
            print(
                f"period {s['period']:3d}  evals {s['evaluations']:6d}  loss {s['train_loss']:.4f}  "
                f"gamma {s['gamma']:+.4f}  train {s['train_accuracy']:.4f}  test {s['test_accuracy']:.4f}",
                flush=True,
            )

    record, timings = timed_session(config, problem, progress)
    run_dir = _run_dir(Path(out), config.seed)
    write_run(record, timings, run_dir)
    note = record.parameters.get("param_count_note")
    if note:
        print(f"note: {note}")
    print(f"final train accuracy {record.final['train_accuracy']:.4f}")
    print(f"final test accuracy {record.final['test_accuracy']:.4f}")
    print(f"wrote {run_dir}")
    return EXIT_OK


# -- eval -----------------------------------------------------------------------


def cmd_eval(args) -> int:
    from .weights import evaluate_weights, read_weights

    wf = read_weights(args.weights)
    res = evaluate_weights(wf, dataset=args.dataset, split=args.split, data_path=args.data_path)
    print(f"accuracy {res.accuracy!r} ({int(np.trace(res.confusion))}/{res.n}) on {args.split}")
    k = res.confusion.shape[0]
    print("confusion (rows: true class, columns: predicted class)")
    print("      " + " ".join(f"{j:>5d}" for j in range(k)))
    for i in range(k):
        print(f"{i:>5d} " + " ".join(f"{v:>5d}" for v in res.confusion[i]))
    recorded = wf.meta.get("test_accuracy")
    if recorded is not None and args.split == "test" and args.dataset in (None, wf.meta.get("dataset")):
        same = float(recorded) == res.accuracy
        print(f"recorded test accuracy {float(recorded)!r}: {'match' if same else 'MISMATCH'}")
    return EXIT_OK


# -- inspect ----------------------------------------------------------------------


def _load_record(path):
    from .trainer import RunRecord

    try:
        return RunRecord.load(path)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_inspect(args) -> int:
    records = [_load_record(p) for p in args.records]
    out = Path(args.out) if args.out else Path(args.records[0]).resolve().parent
    out.mkdir(parents=True, exist_ok=True)
    for path, rec in zip(args.records, records):
        m = rec.mapping
        n_pair, n_single = len(m["paired"]), len(m["single"])
        par = rec.parameters
        print(f"{path}:")
        print(f"  mapping: M={m['M']} N={m['N']} seed={m['seed']}: {n_pair} paired / {n_single} single")
        print(f"  signs: {m['sign_convention']}")
        print(
            f"  circuit: L={par['qnn_layers']} {par['qnn_param_count']} parameters, "
            f"ratio {par['qnn_param_count']}/{par['num_weights']} = {100 * par['param_ratio']:.1f}%"
        )
        if par.get("param_count_note"):
            print(f"  note: {par['param_count_note']}")
        print(f"  final test accuracy {rec.final['test_accuracy']:.4f}, |gamma| {rec.final['gamma_abs']:.4f}")

    names = ["series.csv", "accuracy.csv"] if len(records) == 1 else None
    for k, rec in enumerate(records):
        series, acc = names or (f"series-{k}.csv", f"accuracy-{k}.csv")
        _write_csv(out / series, ["eval_index", "loss", "stage"], [(m["eval_index"], repr(m["loss"]), m["stage"]) for m in rec.metrics])
        _write_csv(
            out / acc,
            ["period", "eval_index", "train_accuracy", "test_accuracy"],
            [(p["period"], p["evaluations"] - 1, repr(p["train_accuracy"]), repr(p["test_accuracy"])) for p in rec.periods],
        )
    if len(records) > 1:
        rows = sorted(
            ((rec.config["shots"], rec.config["seed"], rec.final["test_accuracy"]) for rec in records),
            key=lambda r: (r[0] is None, r[0] or 0, r[1]),
        )
        _write_csv(out / "shots.csv", ["shots", "seed", "final_test_accuracy"], [("exact" if s is None else s, seed, repr(a)) for s, seed, a in rows])
        groups = {}
        for s, _, a in rows:
            groups.setdefault(s, []).append(a)
        _write_csv(
            out / "shots_mean.csv",
            ["shots", "runs", "mean_final_test_accuracy"],
            [("exact" if s is None else s, len(v), repr(float(np.mean(v)))) for s, v in groups.items()],
        )
    print(f"wrote CSV series to {out}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qnnweights", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run a training session and export its artifacts")
    t.add_argument("--config", help="INI file; flags override its values")
    t.add_argument("--dataset", choices=["iris", "mnist"])
    t.add_argument("--qnn-layers", type=int)
    t.add_argument("--shots", help="'exact' or a shot count")
    t.add_argument("--seed", type=int)
    t.add_argument("--periods", type=int)
    t.add_argument("--phi-evals", type=int)
    t.add_argument("--gamma-evals", type=int)
    t.add_argument("--gamma-init", type=float)
    t.add_argument("--train-limit", type=int)
    t.add_argument("--test-limit", type=int)
    t.add_argument("--data-path", help="Iris CSV file or MNIST IDX directory")
    t.add_argument("--out", help="parent directory for run-<timestamp>-seed<N>/ (default: runs)")
    t.add_argument("--quiet", action="store_true", help="no per-period progress lines")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate an exported weight file (classical only)")
    e.add_argument("weights")
    e.add_argument("--dataset", choices=["iris", "mnist"], help="default: the dataset named in the file")
    e.add_argument("--split", choices=["train", "test"], default="test")
    e.add_argument("--data-path")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="summarise run records and write plot-ready CSV files")
    i.add_argument("records", nargs="+", help="run.json files")
    i.add_argument("--out", help="directory for CSV output (default: next to the first record)")
    i.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, DataError, ValueError, OSError) as exc:
        print(f"qnnweights {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
