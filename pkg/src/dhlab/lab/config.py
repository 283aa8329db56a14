"""Experiment configuration: defaults, YAML loading, overrides, validation.

A config file only needs the keys it changes; everything else falls back
to :data:`DEFAULTS`.  Keys that are not in the defaults are rejected with
their dotted location.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Optional

import yaml

__all__ = ["ConfigError", "DEFAULTS", "EXPERIMENTS", "load_config", "apply_overrides", "config_hash"]


class ConfigError(ValueError):
    """Bad config file, unknown key, or bad override."""


EXPERIMENTS = ("unitary", "besov_schatten", "sharpness", "window", "quasinorm")

DEFAULTS: dict = {
    "seed": 0,
    "jobs": 1,
    "out": "results",
    "fourier": {"samples": 4096, "oversampling": 8, "rel_tail": 1.0e-8, "refine": 8},
    "jacobi_nodes": 64,
    "audit": {"exponents": [0.5, 1, 2, 4, 8, "inf"], "block_rtol": 1.0e-10},
    "experiments": {
        "unitary": {
            "symbols": ["exp", "bump:1", "phi_n:8"],
            "pairs": [[2, 2], [1, 3], [0.5, 2]],
            "grid": {"j_min": -10, "j_max": 5, "ppo": 17},
            "top": 20,
            "threshold": 1.0e-10,
            "value_floor": 1.0e-4,
        },
        "besov_schatten": {
            "cases": [
                {"alpha": 0.5, "beta": 0.5, "p": 2},
                {"alpha": 1, "beta": 1, "p": 2},
                {"alpha": 1, "beta": 2, "p": 3},
            ],
            "operator_norm_pairs": [[0.5, 0.5], [1, 1]],
            "lambda_exponents": [-3, -2, -1, 0, 1, 2, 3],
            "grid": {"j_min": -24, "j_max": 9, "ppo": 12},
            "ratio_window": 4.0,
            "hs_rtol": 1.0e-12,
            "include_zero": True,
        },
        "sharpness": {
            "p": 4,
            "a": -0.25,
            "b": 0.0,
            "n": [16, 32, 64, 128, 256],
            "cells_per_unit": 8,
            "slack": 0.02,
            "growth_tolerance": 0.25,
            "hs": {
                "a": [-0.5, -0.75],
                "b": 0.0,
                "n": 16,
                "delta_exponents": [-8, -10, -12, -14, -16, -18, -20],
                "ppo": 16,
                "cells_per_unit": 8,
                "min_r2": 0.99,
                "slope_tolerance": 0.25,
            },
        },
        "window": {
            "alpha": 1,
            "beta": 2,
            "p": [2, 3, 8, 1.1],
            "sizes": [64, 128, 256, 512],
            "length": 2.0,
            "random_draws": 8,
            "power_iterations": 30,
            "contraction_slack": 1.0e-10,
            "stable_tolerance": 0.25,
            "growth_per_doubling": 0.15,
            "operator_norm_pairs": [[0.5, 0.5], [1, 2]],
        },
        "quasinorm": {
            "alpha": 1,
            "beta": 1,
            "p": 0.5,
            "n": [16, 32, 64, 128, 256],
            "cells_per_unit": 4,
            "shrink": 0.10,
        },
    },
}


def _merge(base: dict, new: dict, path: str) -> dict:
    out = copy.deepcopy(base)
    for key, val in new.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key '{where}' must be a mapping")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _parse_value(text: str) -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {text!r}: {exc}") from None


def apply_overrides(cfg: dict, overrides: Iterable[str]) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars or lists."""
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        parts = key.strip().split(".")
        node, ref = cfg, DEFAULTS
        for i, part in enumerate(parts):
            where = ".".join(parts[: i + 1])
            if not isinstance(ref, dict) or part not in ref:
                raise ConfigError(f"unknown config key '{where}'")
            if i == len(parts) - 1:
                if isinstance(ref[part], dict):
                    raise ConfigError(f"config key '{where}' is a section, not a value")
                node[part] = _parse_value(raw)
            else:
                node, ref = node[part], ref[part]
    return cfg


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> dict:
    """Defaults, then the YAML file at ``path`` (if given), then overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(cfg, data, "")
    cfg = apply_overrides(cfg, overrides)
    validate(cfg)
    return cfg


def exponent(value) -> float:
    """Read an exponent; ``inf`` may be written as a string."""
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "oo"):
        return float("inf")
    return float(value)


def validate(cfg: dict) -> None:
    from ..symbol import parse_symbol

    def need(cond, where, msg):
        if not cond:
            raise ConfigError(f"config key '{where}': {msg}")

    need(isinstance(cfg["seed"], int), "seed", "must be an integer")
    need(isinstance(cfg["jobs"], int) and cfg["jobs"] >= 1, "jobs", "must be a positive integer")
    f = cfg["fourier"]
    need(int(f["samples"]) >= 16, "fourier.samples", "must be at least 16")
    need(int(f["oversampling"]) >= 1, "fourier.oversampling", "must be at least 1")
    need(int(f["refine"]) >= 1, "fourier.refine", "must be at least 1")
    need(float(f["rel_tail"]) > 0, "fourier.rel_tail", "must be positive")
    need(int(cfg["jacobi_nodes"]) >= 1, "jacobi_nodes", "must be positive")
    ex = cfg["experiments"]
    for i, s in enumerate(ex["unitary"]["symbols"]):
        try:
            parse_symbol(s)
        except ValueError as exc:
            raise ConfigError(f"config key 'experiments.unitary.symbols[{i}]': {exc}") from None
    for name in ("unitary",):
        for i, pair in enumerate(ex[name]["pairs"]):
            need(len(pair) == 2 and all(float(v) > 0 for v in pair),
                 f"experiments.{name}.pairs[{i}]", "must be a pair of positive reals")
    for i, case in enumerate(ex["besov_schatten"]["cases"]):
        where = f"experiments.besov_schatten.cases[{i}]"
        need(isinstance(case, dict) and set(case) == {"alpha", "beta", "p"}, where,
             "must have exactly the keys alpha, beta, p")
        a, b, p = float(case["alpha"]), float(case["beta"]), exponent(case["p"])
        need(a > 0 and b > 0 and p > 0, where, "alpha, beta and p must be positive")
        need(max(a, b) * (p - 2) < p, where, "p outside the admissible region max(alpha,beta)(p-2) < p")
    for key in ("p",):
        for i, p in enumerate(ex["window"][key]):
            need(exponent(p) > 0, f"experiments.window.p[{i}]", "must be positive")
    sizes = ex["window"]["sizes"]
    need(all(int(n) >= 4 for n in sizes), "experiments.window.sizes", "sizes must be >= 4")
    q = ex["quasinorm"]
    need(0 < float(q["p"]) < 1, "experiments.quasinorm.p", "must lie in (0, 1)")
    for i, n in enumerate(ex["sharpness"]["n"]):
        need(int(n) == n and n >= 1, f"experiments.sharpness.n[{i}]", "must be a positive integer")


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
