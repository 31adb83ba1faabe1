"""Gate counts and an infidelity score for spectroscopy vs phase estimation.

Counts are analytic (no transpilation or routing).  Cost model:

* a two-qubit Pauli exponential is a Z rotation between two CNOTs
  (``cnot-pair``) or one scaled cross-resonance gate (``native-zx``);
  every X or Y factor adds two single-qubit basis changes, except the one
  factor the native ZX gate already covers
* a controlled weight-``w`` Pauli exponential (phase estimation) costs
  ``2 w`` CNOTs: a parity ladder onto one target plus a controlled Z rotation
* the inverse QFT on ``m`` counting qubits costs ``m (m - 1) / 2`` controlled
  phases, each counted as one two-qubit gate
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .pauli import PauliHamiltonian

DECOMPOSITIONS = ("cnot-pair", "native-zx")


@dataclass(frozen=True)
class GateErrorModel:
    two_qubit: float
    single_qubit: float = 0.0
    measurement: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        for name in ("two_qubit", "single_qubit", "measurement", "floor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} error rate must lie in [0, 1], got {v}")
        if self.floor > self.two_qubit:
            raise ConfigError("floor must not exceed the two-qubit error rate")

    def scaled(self, theta: float) -> float:
        """Error of a native ``R^zx(theta)``: linear in angle, never below the floor.

        The angle is first wrapped to ``[-pi, pi]``; the rotations agree up to
        a global phase.
        """
        return max(self.floor, abs(wrap_angle(theta)) / math.pi * self.two_qubit)

    @classmethod
    def from_file(cls, path: str | Path) -> GateErrorModel:
        """Read ``key = value`` lines; ``#`` starts a comment.

        Keys: ``two_qubit`` (required), ``single_qubit``, ``measurement``, ``floor``.
        """
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read error file {path}: {exc}") from exc
        vals: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in cls.__dataclass_fields__:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                vals[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {val!r} is not a number") from exc
        if "two_qubit" not in vals:
            raise ConfigError(f"{path}: missing two_qubit")
        return cls(**vals)


@dataclass
class ResourceReport:
    method: str
    decomposition: str
    n_qubits: int
    two_qubit: int
    single_qubit: int
    measurements: int
    # native-zx only: rotation angle -> number of scaled gates at that angle
    scaled_angles: dict[float, int] = field(default_factory=dict)
    score: float | None = None

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["scaled_angles"] = [[a, n] for a, n in sorted(self.scaled_angles.items())]
        return d


def wrap_angle(theta: float) -> float:
    return math.remainder(theta, 2.0 * math.pi)


def _weight_and_flips(ops: str) -> tuple[int, int]:
    w = sum(1 for ch in ops if ch != "I")
    flips = sum(1 for ch in ops if ch in "XY")
    return w, flips


def count_spectroscopic(
    h: PauliHamiltonian,
    n_steps: int,
    order: int = 1,
    decomposition: str = "cnot-pair",
    c: float | None = None,
    dt: float | None = None,
) -> ResourceReport:
    """Gate counts of ``n_steps`` resonance Trotter steps plus one probe measurement.

    Order 2 is counted unmerged (each step is two half-angle passes).  Scaled
    gate angles are tracked when ``c`` and ``dt`` are given; otherwise every
    scaled gate is assumed to be a full ``pi`` rotation.
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if order not in (1, 2):
        raise ConfigError("order must be 1 or 2")
    if decomposition not in DECOMPOSITIONS:
        raise ConfigError(f"decomposition must be one of {DECOMPOSITIONS}")
    passes = n_steps * order
    # (coefficient, ops) of one first-order step on the probe + system register
    terms = [(coef, "I" + p.ops) for coef, p in h.terms]
    terms.append((None, "Z" + "I" * h.n))
    terms.append((c, "XX" + "I" * (h.n - 1)))
    two_q = single = 0
    angles: dict[float, int] = {}
    for coef, ops in terms:
        w, flips = _weight_and_flips(ops)
        if w == 1:
            single += passes
        elif w == 2:
            if decomposition == "cnot-pair":
                two_q += 2 * passes
                single += (1 + 2 * flips) * passes
            else:
                two_q += passes
                single += 2 * max(0, flips - 1) * passes
                theta = math.pi
                if coef is not None and dt is not None:
                    theta = abs(wrap_angle(2.0 * coef * dt / order))
                angles[theta] = angles.get(theta, 0) + passes
        elif w > 2:
            # parity ladder: 2 (w - 1) CNOTs; native gates replace each pair
            two_q += (2 * (w - 1) if decomposition == "cnot-pair" else w - 1) * passes
            single += (1 + 2 * flips) * passes
    return ResourceReport("spectroscopic", decomposition, h.n + 1, two_q, single, 1, angles)


def count_qpe(h: PauliHamiltonian, precision_qubits: int, n_steps: int, order: int = 1) -> ResourceReport:
    """Textbook phase estimation with controlled ``U^k``, ``k = 1, 2, ..., 2^(m-1)``.

    Each power is Trotterized into ``n_steps`` steps, so the controlled-step
    total is ``n_steps (2^m - 1)``.
    """
    m = precision_qubits
    if m < 1:
        raise ConfigError("precision_qubits must be >= 1")
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if order not in (1, 2):
        raise ConfigError("order must be 1 or 2")
    steps = n_steps * (2**m - 1) * order
    two_q = single = 0
    for _, p in h.terms:
        w, flips = _weight_and_flips(p.ops)
        if w == 0:
            continue
        two_q += 2 * w * steps
        single += (1 + 2 * flips) * steps
    two_q += m * (m - 1) // 2
    single += 2 * m  # Hadamards before the controlled powers and in the QFT
    return ResourceReport("qpe", "cnot-pair", h.n + m, two_q, single, m)


def infidelity_score(report: ResourceReport, model: GateErrorModel) -> float:
    """``1 - prod(1 - eps)`` over every counted gate and measurement."""
    log_ok = 0.0
    scaled_total = 0
    for theta, n in report.scaled_angles.items():
        log_ok += _log_ok(n, model.scaled(theta))
        scaled_total += n
    log_ok += _log_ok(report.two_qubit - scaled_total, model.two_qubit)
    log_ok += _log_ok(report.single_qubit, model.single_qubit)
    log_ok += _log_ok(report.measurements, model.measurement)
    return float(-math.expm1(log_ok))


def _log_ok(count: int, eps: float) -> float:
    if count == 0 or eps == 0.0:
        return 0.0
    return count * math.log1p(-eps) if eps < 1.0 else -math.inf


def scored(report: ResourceReport, model: GateErrorModel) -> ResourceReport:
    report.score = infidelity_score(report, model)
    return report


def write_reports(path: str | Path, reports: list[ResourceReport], extra: dict[str, Any] | None = None) -> None:
    payload = {"reports": [r.as_dict() for r in reports]}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
