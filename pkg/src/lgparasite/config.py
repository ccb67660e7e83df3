"""TOML run configurations.

Layout::

    [demography]
    bS = [13.0, 3.4]            # growth of susceptibles, species 1 and 2
    bI = [3.6, 8.0]             # growth of infecteds
    c_SS_11 = 0.9               # c_AB_ij: effect of status-B individuals of
    ...                         # species j on status-A individuals of species i

    [disease]
    beta = 0.8                  # scalar or 2x2 table
    gamma = 0.4                 # scalar or pair
    homogeneous = true          # optional; asserts equal rates

    [run]                       # every key optional
    k = 100
    ...

All 16 ``c_AB_ij`` keys are required; unknown keys anywhere are rejected.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import ConfigError, DomainError
from .model import COEFFICIENT_KEYS, DemographyParams, DiseaseParams


@dataclass(frozen=True)
class RunSettings:
    k: int = 100
    seed: int = 0
    tol: float = 1e-12
    match_tol: float = 1e-6
    max_iter: int = 100_000
    resolution: tuple = (200, 200)
    bounds: tuple | None = None
    sweep: str = "bS1=2:20:0.5"
    nu_axis: str = "0.99:0.01:-0.02"
    x0: tuple | None = None
    n_starts: int = 20
    n_states: int = 100
    max_total: float = 10.0
    k_max: int = 60
    correspondence_tol: float = 1e-3


_RUN_TYPES = {
    "k": int, "seed": int, "tol": float, "match_tol": float, "max_iter": int,
    "resolution": "pair_int", "bounds": "bounds", "sweep": str, "nu_axis": str,
    "x0": "vector", "n_starts": int, "n_states": int, "max_total": float,
    "k_max": int, "correspondence_tol": float,
}


@dataclass(frozen=True)
class Config:
    demography: DemographyParams
    disease: DiseaseParams
    run: RunSettings = field(default_factory=RunSettings)
    homogeneous: bool | None = None


def _locate(text, section, key=None):
    """1-based line of ``[section]`` or of ``key`` inside it, if found."""
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"\[\s*([A-Za-z0-9_]+)\s*\]", stripped)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", stripped):
            return n
    return None


def _number(value, what, line):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}", line)
    return float(value)


def _vector(value, n, what, line):
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{what} must be a list of {n} numbers", line)
    return [_number(v, what, line) for v in value]


def _parse_run(table, text):
    values = {}
    for key, raw in table.items():
        line = _locate(text, "run", key)
        kind = _RUN_TYPES.get(key)
        if kind is None:
            raise ConfigError(f"unknown key {key!r} in [run]", line)
        if kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError(f"{key} must be an integer", line)
            values[key] = raw
        elif kind is float:
            values[key] = _number(raw, key, line)
        elif kind is str:
            if not isinstance(raw, str):
                raise ConfigError(f"{key} must be a string", line)
            values[key] = raw
        elif kind == "pair_int":
            if (not isinstance(raw, list) or len(raw) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in raw)):
                raise ConfigError(f"{key} must be two positive integers", line)
            values[key] = tuple(raw)
        elif kind == "bounds":
            if not isinstance(raw, list) or len(raw) != 2:
                raise ConfigError("bounds must be [[x1_lo, x1_hi], [x2_lo, x2_hi]]", line)
            values[key] = tuple(tuple(_vector(b, 2, "bounds", line)) for b in raw)
        elif kind == "vector":
            if not isinstance(raw, list) or len(raw) not in (2, 4):
                raise ConfigError("x0 must hold 2 (reduced) or 4 (full) numbers", line)
            values[key] = tuple(_number(v, key, line) for v in raw)
    return RunSettings(**values)


def parse_config(text: str) -> Config:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            match = re.search(r"line (\d+)", str(exc))
            line = int(match.group(1)) if match else len(text.splitlines()) or 1
        raise ConfigError(f"malformed TOML: {exc}", line) from None

    for section in data:
        if section not in ("demography", "disease", "run"):
            raise ConfigError(f"unknown section [{section}]", _locate(text, section))
    for section in ("demography", "disease"):
        if section not in data:
            raise ConfigError(f"missing section [{section}]")

    demo = data["demography"]
    for key in demo:
        if key not in ("bS", "bI") and key not in COEFFICIENT_KEYS:
            raise ConfigError(f"unknown key {key!r} in [demography]", _locate(text, "demography", key))
    for key in ("bS", "bI") + COEFFICIENT_KEYS:
        if key not in demo:
            raise ConfigError(f"missing key {key!r} in [demography]", _locate(text, "demography"))
    bS = _vector(demo["bS"], 2, "bS", _locate(text, "demography", "bS"))
    bI = _vector(demo["bI"], 2, "bI", _locate(text, "demography", "bI"))
    coefficients = {key: _number(demo[key], key, _locate(text, "demography", key))
                    for key in COEFFICIENT_KEYS}
    try:
        demography = DemographyParams.from_mapping(bS, bI, coefficients)
    except DomainError as exc:
        raise ConfigError(str(exc), _locate(text, "demography")) from None

    dis = data["disease"]
    for key in dis:
        if key not in ("beta", "gamma", "homogeneous"):
            raise ConfigError(f"unknown key {key!r} in [disease]", _locate(text, "disease", key))
    for key in ("beta", "gamma"):
        if key not in dis:
            raise ConfigError(f"missing key {key!r} in [disease]", _locate(text, "disease"))
    line = _locate(text, "disease", "beta")
    beta = dis["beta"]
    if isinstance(beta, list):
        if len(beta) != 2:
            raise ConfigError("beta must be a number or a 2x2 table", line)
        beta = [_vector(row, 2, "beta", line) for row in beta]
    else:
        beta = _number(beta, "beta", line)
    line = _locate(text, "disease", "gamma")
    gamma = dis["gamma"]
    gamma = _vector(gamma, 2, "gamma", line) if isinstance(gamma, list) else _number(gamma, "gamma", line)
    try:
        disease = DiseaseParams(beta, gamma)
    except DomainError as exc:
        raise ConfigError(str(exc), _locate(text, "disease")) from None
    homogeneous = dis.get("homogeneous")
    if homogeneous is not None:
        line = _locate(text, "disease", "homogeneous")
        if not isinstance(homogeneous, bool):
            raise ConfigError("homogeneous must be true or false", line)
        if homogeneous and not disease.is_homogeneous:
            raise ConfigError("homogeneous = true but rates differ between species", line)

    run = _parse_run(data.get("run", {}), text)
    return Config(demography, disease, run, homogeneous)


def bundled_configs():
    return {p.name: p for p in resources.files("lgparasite.configs").iterdir()
            if p.name.endswith(".toml")}


def load_config(path) -> Config:
    """Read a config file.  A bare name such as ``fig2.toml`` that does not
    exist on disk falls back to the copy shipped with the package."""
    path = Path(path)
    if not path.exists():
        bundled = bundled_configs()
        if path.parent == Path(".") and path.name in bundled:
            return parse_config(bundled[path.name].read_text())
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def config_to_dict(cfg: Config):
    demo = {"bS": cfg.demography.bS.tolist(), "bI": cfg.demography.bI.tolist()}
    demo.update(cfg.demography.coefficient_mapping())
    d = cfg.disease
    disease = {
        "beta": float(d.beta[0, 0]) if np.all(d.beta == d.beta[0, 0]) else d.beta.tolist(),
        "gamma": float(d.gamma[0]) if d.gamma[0] == d.gamma[1] else d.gamma.tolist(),
    }
    if cfg.homogeneous is not None:
        disease["homogeneous"] = cfg.homogeneous
    run = {}
    for f in fields(RunSettings):
        value = getattr(cfg.run, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        run[f.name] = value
    return {"demography": demo, "disease": disease, "run": run}


def dump_config(cfg: Config) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def parse_axis(spec: str):
    """``"lo:hi:step"`` -> values from ``lo`` to ``hi`` inclusive."""
    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ConfigError(f"axis must look like lo:hi:step, got {spec!r}") from None
    if step == 0 or (hi - lo) * step < 0:
        raise ConfigError(f"step {step} does not lead from {lo} to {hi}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def parse_sweep(spec: str):
    """``"PARAM=lo:hi:step"`` -> ``(PARAM, values)``."""
    name, sep, axis = spec.partition("=")
    if not sep or not name:
        raise ConfigError(f"sweep must look like PARAM=lo:hi:step, got {spec!r}")
    return name.strip(), parse_axis(axis)
