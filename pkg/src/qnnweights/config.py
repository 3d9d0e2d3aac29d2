"""INI run configuration.

Sections and keys (all optional)::

    [run]       dataset, seed, shots, out
    [qnn]       qnn_layers, gamma_init
    [schedule]  periods, phi_evals, gamma_evals
    [optim]     rho_begin, rho_end, nm_initial_step, phi_restart
    [data]      path, seed, train_limit, test_limit
    [network]   layers, input_shape

Unknown sections or keys are errors.  Values resolve as command-line flag,
then config file, then built-in default.
"""
from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .trainer import TrainingConfig

__all__ = ["ConfigError", "KEYS", "parse_shots", "read_config", "resolve"]


class ConfigError(ValueError):
    pass


def parse_shots(text):
    if text is None:
        return None
    if isinstance(text, int):
        return text
    text = str(text).strip().lower()
    if text == "exact":
        return None
    try:
        n = int(text)
    except ValueError:
        raise ConfigError(f"shots must be 'exact' or a positive integer, got {text!r}") from None
    if n < 1:
        raise ConfigError(f"shots must be positive, got {n}")
    return n


def _opt_int(text):
    return None if str(text).strip().lower() in ("", "none") else int(text)


def _opt_str(text):
    return None if str(text).strip() == "" else str(text).strip()


# (section, key) -> (destination, parser); destination is a TrainingConfig field or "out"
KEYS = {
    ("run", "dataset"): ("dataset", str),
    ("run", "seed"): ("seed", int),
    ("run", "shots"): ("shots", parse_shots),
    ("run", "out"): ("out", str),
    ("qnn", "qnn_layers"): ("qnn_layers", int),
    ("qnn", "gamma_init"): ("gamma_init", float),
    ("schedule", "periods"): ("n_train_periods", int),
    ("schedule", "phi_evals"): ("n_phi_evals", int),
    ("schedule", "gamma_evals"): ("n_gamma_evals", int),
    ("optim", "rho_begin"): ("rho_begin", float),
    ("optim", "rho_end"): ("rho_end", float),
    ("optim", "nm_initial_step"): ("nm_initial_step", float),
    ("optim", "phi_restart"): ("phi_restart", str),
    ("data", "path"): ("data_path", _opt_str),
    ("data", "seed"): ("data_seed", int),
    ("data", "train_limit"): ("train_limit", _opt_int),
    ("data", "test_limit"): ("test_limit", _opt_int),
    ("network", "layers"): ("network", _opt_str),
    ("network", "input_shape"): ("input_shape", _opt_str),
}

DEFAULT_OUT = "runs"


def read_config(path) -> dict:
    """Parse an INI file into ``{destination: value}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    cp = configparser.ConfigParser(interpolation=None, default_section="__no_defaults__")
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known_sections = {s for s, _ in KEYS}
    out = {}
    for section in cp.sections():
        if section not in known_sections:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if (section, key) not in KEYS:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            dest, parse = KEYS[(section, key)]
            try:
                out[dest] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key}: {exc}") from None
    return out


def resolve(file_values: dict, flag_values: dict):
    """Merge flag > file > default.  Returns ``(TrainingConfig, out_dir)``.

    ``flag_values`` entries that are ``None`` count as not given.
    """
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    out = merged.pop("out", DEFAULT_OUT)
    names = {f.name for f in fields(TrainingConfig)}
    unknown = set(merged) - names
    if unknown:
        raise ConfigError(f"unknown settings: {sorted(unknown)}")
    try:
        return TrainingConfig(**merged), out
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
