"""Run configuration: strict TOML schema, validation and provenance hash.

Every key has a documented default (see DEFAULTS).  Unknown sections or keys,
wrong types and violated parameter invariants are collected and reported
together with their dotted field path.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .cycle import PlateauSettings
from .drive import DriveSchedule
from .errors import ConfigError
from .model import BathParams, ModelParams
from .operators import TruncationSpec

AUTO = "auto"
RESONANCE = "resonance"

DEFAULTS = {
    "model": {"omega_1": 2.0, "omega_2": 2.6, "omega_c": RESONANCE, "g_1": 0.05, "g_2": 0.05},
    "baths": {"gamma_1": 0.01, "gamma_2": 0.01, "kappa": 1e-6, "T_c": 0.15, "T_h": 0.40, "T_0": 1e-7},
    "truncation": {"d_c": 8, "d_1": 5, "d_2": 5},
    "drive": {
        "omega_eff_1": AUTO, "omega_eff_2": AUTO,
        "tau": 20.0, "dt_hot": 1500.0, "dt_cold": 1500.0, "n_cycles": 2,
    },
    "integrator": {"h": 0.01, "stride": 10},
    "plateau": {"window": 500, "rel_tol": 1e-5, "chunk": 50.0, "max_extension": 6000.0},
    "scan": {"omega_min": 0.9, "omega_max": 1.4, "n_points": 201, "n_levels": 10, "window": 0.05},
    "outputs": {"directory": "out", "formats": ["csv", "json"]},
    "sweep": {"parameter": "", "values": []},
}

# keys that accept a keyword in place of a number
_KEYWORDS = {
    ("model", "omega_c"): RESONANCE,
    ("drive", "omega_eff_1"): AUTO,
    ("drive", "omega_eff_2"): AUTO,
}
_FORMATS = {"csv", "json"}


def _kind(value):
    if isinstance(value, bool):
        return bool
    if isinstance(value, int):
        return int
    if isinstance(value, float):
        return float
    return type(value)


def _check_type(path, default, value, keyword):
    """Return the coerced value or an error message."""
    if keyword is not None and value == keyword:
        return value, None
    want = _kind(default) if keyword is None else float
    got = _kind(value)
    if want is float and got in (int, float):
        return float(value), None
    if want is got:
        return value, None
    expected = want.__name__ + (f" or '{keyword}'" if keyword else "")
    return None, f"{path}: expected {expected}, got {type(value).__name__}"


def merge(raw: dict) -> tuple[dict, list[str], list[str]]:
    """Overlay `raw` on DEFAULTS.

    Returns (resolved dict, problems, dotted paths of defaults applied).
    """
    resolved = copy.deepcopy(DEFAULTS)
    problems = []
    for section, body in raw.items():
        if section not in DEFAULTS:
            problems.append(f"{section}: unknown section")
            continue
        if not isinstance(body, dict):
            problems.append(f"{section}: expected a table")
            continue
        for key, value in body.items():
            path = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                problems.append(f"{path}: unknown key")
                continue
            value, err = _check_type(path, DEFAULTS[section][key], value, _KEYWORDS.get((section, key)))
            if err:
                problems.append(err)
            else:
                resolved[section][key] = value
    applied = [
        f"{s}.{k}" for s, body in DEFAULTS.items() for k in body
        if k not in raw.get(s, {}) or not isinstance(raw.get(s), dict)
    ]
    return resolved, problems, applied


def _prefixed(section: str, messages) -> list[str]:
    return [f"{section}.{m}" for m in messages]


def invariant_problems(cfg: dict) -> list[str]:
    problems = []
    m = cfg["model"]
    wc = m["omega_1"] / 2 if m["omega_c"] == RESONANCE else m["omega_c"]
    problems += _prefixed("model", ModelParams.problems(_Shim(dict(m, omega_c=wc))))
    problems += _prefixed("baths", BathParams.problems(_Shim(cfg["baths"])))

    t = cfg["truncation"]
    for k, v in t.items():
        if v < 2:
            problems.append(f"truncation.{k} must be >= 2")

    d = cfg["drive"]
    # resonances resolved by a later scan get placeholders that pass the ordering check
    w1 = 1.0 if d["omega_eff_1"] == AUTO else d["omega_eff_1"]
    w2 = w1 + 0.3 if d["omega_eff_2"] == AUTO else d["omega_eff_2"]
    if d["omega_eff_1"] == AUTO and d["omega_eff_2"] != AUTO:
        w1 = w2 - 0.3
    shim = _Shim(dict(omega_eff_1=w1, omega_eff_2=w2, tau=d["tau"], dt_hot=d["dt_hot"],
                      dt_cold=d["dt_cold"], cycle_starts=()))
    problems += [f"drive: {p}" for p in DriveSchedule.problems(shim)]
    for k in ("omega_eff_1", "omega_eff_2"):
        if d[k] != AUTO and not d[k] > 0:
            problems.append(f"drive.{k} must be > 0")
    if d["n_cycles"] < 0:
        problems.append("drive.n_cycles must be >= 0")

    g = cfg["integrator"]
    if not g["h"] > 0:
        problems.append("integrator.h must be > 0")
    if g["stride"] < 1:
        problems.append("integrator.stride must be >= 1")

    p = cfg["plateau"]
    if p["window"] < 10:
        problems.append("plateau.window must be >= 10")
    for k in ("rel_tol", "chunk"):
        if not p[k] > 0:
            problems.append(f"plateau.{k} must be > 0")
    if p["max_extension"] < 0:
        problems.append("plateau.max_extension must be >= 0")

    s = cfg["scan"]
    if not 0 < s["omega_min"] < s["omega_max"]:
        problems.append("scan.omega_min must satisfy 0 < omega_min < omega_max")
    if s["n_points"] < 3:
        problems.append("scan.n_points must be >= 3")
    total = t["d_c"] * t["d_1"] * t["d_2"]
    if not 2 <= s["n_levels"] <= total:
        problems.append(f"scan.n_levels must be in [2, {total}]")
    if not s["window"] > 0:
        problems.append("scan.window must be > 0")

    o = cfg["outputs"]
    bad = [x for x in o["formats"] if x not in _FORMATS]
    if bad:
        problems.append(f"outputs.formats: unsupported {bad}, choose from {sorted(_FORMATS)}")

    sw = cfg["sweep"]
    if sw["parameter"]:
        parts = sw["parameter"].split(".")
        if len(parts) != 2 or parts[0] not in DEFAULTS or parts[1] not in DEFAULTS[parts[0]]:
            problems.append(f"sweep.parameter: unknown field '{sw['parameter']}'")
        if not all(_kind(v) in (int, float) for v in sw["values"]):
            problems.append("sweep.values must be numbers")
    return problems


class _Shim:
    """Attribute view used to reuse the dataclass invariant checks unconstructed."""

    def __init__(self, values: dict):
        self.__dict__.update(values)

    @property
    def delta_omega(self):
        return self.omega_eff_2 - self.omega_eff_1


def config_hash(cfg: dict) -> str:
    """SHA-256 of the resolved physics and numerics (outputs and sweep excluded)."""
    core = {k: v for k, v in cfg.items() if k not in ("outputs", "sweep")}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunConfig:
    data: dict
    defaults_applied: list[str] = field(default_factory=list)
    source: str | None = None

    @property
    def hash(self) -> str:
        return config_hash(self.data)

    @property
    def truncation(self) -> TruncationSpec:
        return TruncationSpec(**self.data["truncation"])

    @property
    def baths(self) -> BathParams:
        return BathParams(**self.data["baths"])

    @property
    def plateau(self) -> PlateauSettings:
        return PlateauSettings(**self.data["plateau"])

    def model(self, omega_c: float | None = None) -> ModelParams:
        m = dict(self.data["model"])
        if omega_c is not None:
            m["omega_c"] = omega_c
        elif m["omega_c"] == RESONANCE:
            m["omega_c"] = m["omega_1"] / 2
        return ModelParams(**m)

    def schedule(self, omega_eff_1: float, omega_eff_2: float) -> DriveSchedule:
        d = self.data["drive"]
        return DriveSchedule(omega_eff_1, omega_eff_2, d["tau"], d["dt_hot"], d["dt_cold"])

    def with_value(self, dotted: str, value) -> "RunConfig":
        section, key = dotted.split(".")
        data = copy.deepcopy(self.data)
        data[section][key] = value
        problems = invariant_problems(data)
        if problems:
            raise ConfigError(problems)
        return RunConfig(data, self.defaults_applied, self.source)


def from_dict(raw: dict, source: str | None = None) -> RunConfig:
    resolved, problems, applied = merge(raw)
    if not problems:
        problems = invariant_problems(resolved)
    if problems:
        raise ConfigError(problems)
    return RunConfig(resolved, applied, source)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(raw, source=str(path))
