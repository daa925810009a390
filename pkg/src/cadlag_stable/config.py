"""Flat ``key = value`` experiment configuration with typed validation."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .renewal import ConstantReward, ExponentialReward, UniformReward

__all__ = ["ExperimentConfig", "EXPERIMENTS", "parse_config", "load_config"]

EXPERIMENTS = (
    "partial_sum",
    "pareto_sum",
    "lepage",
    "renewal_reward",
    "exceedance",
    "negligibility",
    "counterexamples",
    "constants",
)

_DEFAULT_W = tuple(float(-np.log1p(-p)) for p in (0.25, 0.5, 0.75))  # exponential quartiles


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "constants"
    alpha: float = 1.5
    n: int = 5000
    T: float = 1e4
    replicates: int = 2000
    seed: int = 0
    x_m: float = 1.0
    tail_kind: str = "pareto"
    spectral: str = "indicator"
    K: int = 10_000
    tail_tol: float = 1.0
    epsilons: tuple = (0.05, 0.1, 0.2, 0.4)
    eta: float = 1.0
    times: tuple = (0.25, 0.5, 0.75, 1.0)
    t_grid: tuple = tuple(float(x) for x in np.linspace(0.2, 2.0, 10))
    w_grid: tuple = _DEFAULT_W
    r_grid: tuple = (0.5, 1.0, 2.0)
    reward: str = "exponential:1.0"
    ks_threshold: float = 0.02
    cf_threshold: float = 0.02
    two_sample_threshold: float = 0.03
    slope_tol: float = 0.1
    iso_tol: float = 0.02
    se_mult: float = 3.0
    dispersion_low: float = 0.9
    dispersion_high: float = 1.1
    stable_tol: float = 1e-8
    workers: int = 1
    output_dir: str = "reports"

    # -- text form ---------------------------------------------------------
    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                text = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of every setting that can change results (not workers or output_dir)."""
        payload = "\n".join(
            line
            for line in self.serialize().splitlines()
            if not line.startswith(("workers ", "output_dir "))
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def with_overrides(self, pairs: dict) -> "ExperimentConfig":
        return parse_config(pairs, base=self)

    def validate(self) -> "ExperimentConfig":
        bad = []

        def need(ok, key):
            if not ok:
                bad.append(key)

        need(self.experiment in EXPERIMENTS, "experiment")
        need(1.0 < self.alpha < 2.0, "alpha")
        need(self.n >= 1, "n")
        need(math.isfinite(self.T) and self.T > 0, "T")
        need(self.replicates >= 1, "replicates")
        need(0 <= self.seed < 2**64, "seed")
        need(math.isfinite(self.x_m) and self.x_m > 0, "x_m")
        need(self.tail_kind in ("pareto", "pareto_shifted"), "tail_kind")
        need(self.spectral in ("indicator", "renewal_pair", "constant_one"), "spectral")
        need(self.K >= 1, "K")
        need(self.tail_tol > 0, "tail_tol")
        need(len(self.epsilons) >= 2 and all(e > 0 for e in self.epsilons), "epsilons")
        need(self.eta > 0, "eta")
        need(len(self.times) >= 1 and all(0.0 <= t <= 1.0 for t in self.times), "times")
        need(any(t != 0 for t in self.t_grid), "t_grid")
        need(
            len(self.w_grid) >= 1 and all(a <= b for a, b in zip(self.w_grid, self.w_grid[1:])),
            "w_grid",
        )
        need(len(self.r_grid) >= 1 and all(r > 0 for r in self.r_grid), "r_grid")
        for key in ("ks_threshold", "cf_threshold", "two_sample_threshold", "slope_tol",
                    "iso_tol", "se_mult", "stable_tol"):
            need(getattr(self, key) > 0, key)
        need(0 <= self.dispersion_low < self.dispersion_high, "dispersion_low")
        need(self.workers >= 1, "workers")
        need(bool(self.output_dir), "output_dir")
        try:
            reward_from_spec(self.reward)
        except ConfigError:
            bad.append("reward")
        if bad:
            raise ConfigError(f"invalid configuration values: {', '.join(bad)}", bad)
        return self


def reward_from_spec(spec: str):
    """``exponential:rate``, ``uniform:low:high`` or ``constant:value``."""
    parts = spec.split(":")
    try:
        args = [float(x) for x in parts[1:]]
        if parts[0] == "exponential" and len(args) == 1:
            return ExponentialReward(*args)
        if parts[0] == "uniform" and len(args) == 2:
            return UniformReward(*args)
        if parts[0] == "constant" and len(args) == 1:
            return ConstantReward(*args)
    except ValueError as exc:
        raise ConfigError(f"bad reward spec {spec!r}", ["reward"]) from exc
    raise ConfigError(f"bad reward spec {spec!r}", ["reward"])


_FIELD_TYPES = {f.name: type(f.default) for f in fields(ExperimentConfig)}


def _convert(key: str, text: str):
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if kind is tuple:
        return tuple(float(x) for x in text.split(",") if x.strip())
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def _pairs(lines: Iterable[str]) -> dict:
    out = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw!r}", [line])
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_config(source, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a validated config from text or a ``{key: text}`` mapping."""
    pairs = source if isinstance(source, dict) else _pairs(str(source).splitlines())
    unknown = sorted(k for k in pairs if k not in _FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}", unknown)
    values, bad = {}, []
    for k, v in pairs.items():
        try:
            if isinstance(v, str):
                values[k] = _convert(k, v)
            elif _FIELD_TYPES[k] is tuple:
                values[k] = tuple(float(x) for x in v)
            else:
                values[k] = _FIELD_TYPES[k](v)
        except (TypeError, ValueError):
            bad.append(k)
    if bad:
        raise ConfigError(f"could not parse values for: {', '.join(bad)}", bad)
    cfg = replace(base or ExperimentConfig(), **values)
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
