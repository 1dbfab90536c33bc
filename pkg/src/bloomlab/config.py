"""Flat key=value experiment configs.  Unknown keys are rejected."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = ["ExperimentConfig", "ConfigError", "parse_config_text"]


class ConfigError(ValueError):
    pass


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


@dataclass
class ExperimentConfig:
    experiment: str = ""
    dim: int = 1
    n: int = 2048
    box_corner: float = -1.0
    box_side: float = 2.0
    p: float = 2.0
    m: int = 1
    mu: str = "const:1"
    lam: str = "const:1"
    b: str = "power:0.125"
    kernel: str = "hilbert"
    dict_depth: int = 10
    dict_min_cells: int = 4
    seed: int = 0
    threads: int = 1
    out: str = "out"
    # bloom-upper
    exponents: tuple[float, ...] = (0.0, 0.2, 0.5, 0.8)
    grids: tuple[int, ...] = (512, 1024)
    power_iters: int = 50
    # bloom-failure / embedding ladders
    epsilons: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    eps_n: int = 8192
    r: float = 2.0
    alpha_u: float = 0.5
    # necessity / decompose
    trials: int = 20
    cert_cubes: int = 8
    functions: int = 100

    _PARSERS = {
        "experiment": str, "mu": str, "lam": str, "b": str, "kernel": str, "out": str,
        "dim": int, "n": int, "dict_depth": int, "dict_min_cells": int, "seed": int,
        "threads": int, "m": int, "eps_n": int, "power_iters": int, "trials": int,
        "cert_cubes": int, "functions": int,
        "box_corner": float, "box_side": float, "p": float, "r": float, "alpha_u": float,
        "exponents": _parse_float_list, "epsilons": _parse_float_list,
        "grids": _parse_int_list,
    }

    def with_updates(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def canonical_text(self) -> str:
        # out and threads do not affect results, so they stay out of the hash
        skip = {"out", "threads"}
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name.startswith("_") or f.name in skip:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return parse_config_text(Path(path).read_text())


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        parser = ExperimentConfig._PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            updates[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return cfg.with_updates(**updates)
