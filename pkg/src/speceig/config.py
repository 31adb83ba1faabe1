"""INI experiment files.

Sections: ``[model]``, ``[sweep]`` and, depending on the command, ``[scan]``,
``[map]``, ``[oracle]`` or ``[resources]``.  Unknown keys are rejected so that
typos fail loudly instead of silently using a default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, InvalidModelError
from .pauli import KitaevParams, PauliHamiltonian, kitaev_chain, landau_zener
from .spectroscopy import SweepConfig

MODEL_KEYS = {
    "landau-zener": {"a", "b"},
    "kitaev": {"l", "x", "y", "z", "m", "mbar", "mu", "g", "delta", "v"},
    "pauli": {"n", "terms"},
}
SWEEP_KEYS = {
    "omega_start",
    "omega_stop",
    "omega_count",
    "c",
    "t",
    "dt",
    "order",
    "probed",
    "initial",
    "shots",
    "seed",
    "noise",
    "trajectories",
    "expected_dips",
    "evolution",
}
SECTION_KEYS = {
    "scan": {"parameter", "values", "start", "stop", "count", "track", "track_start"},
    "map": {
        "mode",
        "m_start",
        "m_stop",
        "m_count",
        "y_start",
        "y_stop",
        "y_count",
        "sites",
        "filter",
        "cut_y",
        "cut_count",
        "y_fit_min",
        "y_fit_max",
    },
    "oracle": {"kind", "d", "omega", "weight_upper", "dt_values"},
    "resources": {"error_file", "precision_qubits", "n_steps", "order"},
}


@dataclass
class ExperimentConfig:
    path: Path | None
    model_kind: str
    model: dict[str, float]
    sweep: dict[str, Any]
    sections: dict[str, dict[str, str]] = field(default_factory=dict)

    def hamiltonian(self, **overrides: float) -> PauliHamiltonian:
        return build_model(self.model_kind, {**self.model, **overrides})

    def sweep_config(self, h: PauliHamiltonian | None = None) -> SweepConfig:
        try:
            return SweepConfig(self.hamiltonian() if h is None else h, **self.sweep)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def section(self, name: str) -> dict[str, str]:
        if name not in self.sections:
            raise ConfigError(f"config has no [{name}] section")
        return self.sections[name]

    def with_overrides(self, **kw: Any) -> ExperimentConfig:
        sweep = dict(self.sweep)
        sweep.update({k: v for k, v in kw.items() if v is not None})
        if sweep.get("shots", 0) > 0 and "seed" not in sweep:
            raise ConfigError("a seed is required when shots > 0")
        return replace(self, sweep=sweep)


def build_model(kind: str, params: dict[str, float]) -> PauliHamiltonian:
    try:
        if kind == "landau-zener":
            return landau_zener(params.get("a", 0.0), params.get("b", 0.0))
        if kind == "kitaev":
            return kitaev_chain(kitaev_params(params))
        if kind == "pauli":
            return parse_terms(int(params["n"]), str(params["terms"]))
    except (InvalidModelError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} model: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def kitaev_params(p: dict[str, float]) -> KitaevParams:
    L = int(p.get("l", 2))
    physical = {"mu", "g", "delta", "v"} & p.keys()
    coupling = {"x", "y", "z", "m"} & p.keys()
    if physical and coupling:
        raise ConfigError("give either mu/g/delta/V or x/y/z/m, not both")
    if physical:
        return KitaevParams(L, p.get("mu", 0.0), p.get("g", 0.0), p.get("delta", 0.0), p.get("v", 0.0))
    mbar = p.get("mbar")
    return KitaevParams.from_couplings(L, p.get("x", 0.0), p.get("y", 0.0), p.get("z", 0.0), p.get("m", 0.0), mbar)


def parse_terms(n: int, text: str) -> PauliHamiltonian:
    """``"0.5 XX, -1 ZI"`` -> Hamiltonian on ``n`` qubits."""
    terms = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        coef, ops = chunk.split()
        terms.append((float(coef), ops))
    return PauliHamiltonian.from_terms(n, terms)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(eval_number(v)) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def eval_number(text: str) -> float:
    """A float, or a simple fraction such as ``1/3``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def grid(sec: dict[str, str], prefix: str, default: tuple[float, float, int] | None = None) -> np.ndarray:
    keys = [f"{prefix}start", f"{prefix}stop", f"{prefix}count"]
    if not all(k in sec for k in keys):
        if default is None:
            raise ConfigError(f"missing {', '.join(keys)}")
        start, stop, count = default
    else:
        start, stop, count = eval_number(sec[keys[0]]), eval_number(sec[keys[1]]), int(sec[keys[2]])
    if count < 1:
        raise ConfigError(f"{prefix}count must be >= 1")
    return np.linspace(start, stop, count)


def get_bool(sec: dict[str, str], key: str, default: bool) -> bool:
    if key not in sec:
        return default
    v = sec[key].strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {sec[key]!r}")


_INT_KEYS = {"omega_count", "order", "probed", "shots", "seed", "trajectories", "expected_dips"}
_STR_KEYS = {"evolution", "initial"}


def _sweep_values(sec: dict[str, str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in sec.items():
        if k not in SWEEP_KEYS:
            raise ConfigError(f"unknown [sweep] key {k!r}")
        try:
            if k in _INT_KEYS:
                out[k] = int(v)
            elif k in _STR_KEYS:
                out[k] = v.strip()
            else:
                out[k] = eval_number(v)
        except ValueError as exc:
            raise ConfigError(f"[sweep] {k}: {v!r} is not valid") from exc
    return out


def load(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return from_parser(cp, path)


def loads(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return from_parser(cp, None)


def from_parser(cp: configparser.ConfigParser, path: Path | None) -> ExperimentConfig:
    if not cp.has_section("model"):
        raise ConfigError("config needs a [model] section")
    model = dict(cp["model"])
    kind = model.pop("kind", "").strip().lower()
    if kind not in MODEL_KEYS:
        raise ConfigError(f"[model] kind must be one of {sorted(MODEL_KEYS)}")
    params: dict[str, Any] = {}
    for k, v in model.items():
        if k not in MODEL_KEYS[kind]:
            raise ConfigError(f"unknown [model] key {k!r} for {kind}")
        params[k] = v if k == "terms" else _number(k, v)
    sweep = _sweep_values(dict(cp["sweep"])) if cp.has_section("sweep") else {}
    sections = {}
    for name in cp.sections():
        if name in ("model", "sweep"):
            continue
        if name not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{name}]")
        sec = dict(cp[name])
        bad = set(sec) - SECTION_KEYS[name]
        if bad:
            raise ConfigError(f"unknown [{name}] keys: {', '.join(sorted(bad))}")
        sections[name] = sec
    cfg = ExperimentConfig(path, kind, params, sweep, sections)
    if sweep.get("shots", 0) > 0 and "seed" not in sweep:
        raise ConfigError("a seed is required when shots > 0")
    return cfg


def _number(key: str, text: str) -> float:
    try:
        return eval_number(text)
    except ValueError as exc:
        raise ConfigError(f"[model] {key}: {text!r} is not a number") from exc
