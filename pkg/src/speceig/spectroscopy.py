"""Probe-frequency sweeps and dip extraction.

A sweep runs one resonance circuit per grid point ``omega`` and records
``<Z_0>(omega)``.  Dips are located on a 5-point moving average, then refined
by least squares against the two-level line shape ``1 - 2 s |A(omega, d)|^2``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError, InvalidModelError
from .oracles import flip_amplitude
from .pauli import PauliHamiltonian
from .statevector import (
    StateVector,
    dense_resonance,
    exact_evolve,
    initial_state,
    noisy_expectation,
    resonance_program,
    sample_from_expectation,
    steps_for,
)
from . import _accel

EXACT_MODE_SIGMA = 0.01
SINGLE_FIT_POINTS = 10
DOUBLE_FIT_POINTS = 20


@dataclass(frozen=True)
class SweepConfig:
    hamiltonian: PauliHamiltonian
    omega_start: float
    omega_stop: float
    omega_count: int = 101
    c: float = 0.1
    t: float = 10.0
    dt: float = 1.0 / 3.0
    order: int = 2
    probed: int = 1
    initial: str | int = 0
    shots: int = 0
    seed: int = 0
    noise: float = 0.0
    trajectories: int = 50
    expected_dips: int = 2
    evolution: str = "trotter"

    def __post_init__(self):
        if self.omega_count < 5:
            raise ConfigError("omega grid needs at least 5 points")
        if not self.omega_start < self.omega_stop:
            raise ConfigError("omega_start must be below omega_stop")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise must lie in [0, 1]")
        if self.evolution not in ("trotter", "exact"):
            raise ConfigError(f"unknown evolution mode {self.evolution!r}")
        if self.c < 0:
            raise ConfigError("c must be non-negative")
        if self.t <= 0 or self.dt <= 0:
            raise ConfigError("t and dt must be positive")

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(self.omega_start, self.omega_stop, self.omega_count)

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.shots) if self.shots > 0 else EXACT_MODE_SIGMA

    def echo(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "hamiltonian"}
        out["hamiltonian"] = [[c, p.ops] for c, p in self.hamiltonian.terms]
        n_steps, dt_used = steps_for(self.t, self.dt)
        out["n_steps"] = n_steps
        out["dt_used"] = dt_used
        return out


@dataclass
class DipFit:
    center: float
    raw_center: float
    depth: float
    fwhm: float
    left: float
    right: float
    model: str = "single"
    residual: float = float("nan")
    converged: bool = True
    open_width: bool = False

    @property
    def hwhm(self) -> float:
        return 0.5 * self.fwhm

    def as_dict(self) -> dict[str, Any]:
        return {
            "center": self.center,
            "raw_center": self.raw_center,
            "depth": self.depth,
            "fwhm": self.fwhm,
            "hwhm": self.hwhm,
            "left": self.left,
            "right": self.right,
            "model": self.model,
            "residual": self.residual,
            "converged": self.converged,
            "open_width": self.open_width,
        }


@dataclass
class SweepResult:
    omegas: np.ndarray
    z0: np.ndarray
    z0_smoothed: np.ndarray
    minima: list[DipFit] = field(default_factory=list)
    config: SweepConfig | None = None

    @property
    def centers(self) -> list[float]:
        return [d.center for d in self.minima]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega", "z0", "z0_smoothed"])
            for row in zip(self.omegas, self.z0, self.z0_smoothed):
                w.writerow([_fmt(v) for v in row])

    def summary(self) -> dict[str, Any]:
        widths = [d.fwhm for d in self.minima if np.isfinite(d.fwhm)]
        return {
            "config": self.config.echo() if self.config is not None else None,
            "minima": [d.as_dict() for d in self.minima],
            "mean_fwhm": float(np.mean(widths)) if widths else None,
        }


def _fmt(v: float) -> str:
    return format(float(v), ".15g")


# -- running ---------------------------------------------------------------------


def _sweep_chunk(cfg: SweepConfig, indices: Sequence[int]) -> list[float]:
    h = cfg.hamiltonian
    omegas = cfg.omegas
    psi0 = initial_state(h, cfg.initial)
    n_steps, dt = steps_for(cfg.t, cfg.dt)
    out = []
    if cfg.evolution == "exact":
        for i in indices:
            hr = dense_resonance(h, omegas[i], cfg.c, cfg.probed)
            z = _accel.expectation_z(exact_evolve(hr, cfg.t, psi0).amplitudes, 0)
            out.append(_maybe_sample(cfg, i, z))
        return out
    prog = resonance_program(h, cfg.c, dt, n_steps, cfg.order, cfg.probed)
    pairs = [(k, q) for k, (_, q) in enumerate(prog.labels) if len(q) == 2]
    for i in indices:
        th = prog.thetas(omegas[i])
        if cfg.noise > 0.0:
            rng = np.random.default_rng([cfg.seed, i, 1])
            z = noisy_expectation(
                psi0.amplitudes, prog.xmasks, prog.zmasks, prog.nys, th, pairs, cfg.noise, rng, cfg.trajectories
            )
        else:
            amps = _accel.apply_sequence(psi0.amplitudes, prog.xmasks, prog.zmasks, prog.nys, th)
            z = _accel.expectation_z(amps, 0)
        out.append(_maybe_sample(cfg, i, z))
    return out


def _maybe_sample(cfg: SweepConfig, i: int, z: float) -> float:
    if cfg.shots > 0:
        return sample_from_expectation(z, cfg.shots, np.random.default_rng([cfg.seed, i, 0]))
    return float(z)


def sweep_values(cfg: SweepConfig, workers: int = 1) -> np.ndarray:
    """``<Z_0>`` on the omega grid; identical for any ``workers``."""
    idx = list(range(cfg.omega_count))
    if workers <= 1:
        return np.array(_sweep_chunk(cfg, idx))
    chunks = [idx[k::workers] for k in range(workers)]
    out = np.empty(cfg.omega_count)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for chunk, vals in zip(chunks, ex.map(_sweep_chunk, [cfg] * workers, chunks)):
            out[chunk] = vals
    return out


def run_sweep(cfg: SweepConfig, workers: int = 1, fit: bool = True) -> SweepResult:
    """Sweep the probe frequency and extract the dips."""
    z = np.clip(sweep_values(cfg, workers), -1.0, 1.0)
    res = SweepResult(cfg.omegas, z, smooth(z), [], cfg)
    if fit:
        res.minima = fit_dips(res, find_minima(res), cfg.expected_dips)
    else:
        res.minima = [_raw_dip(res, i) for i in find_minima_indices(res)]
    return res


def analyze(
    omegas: np.ndarray,
    values: np.ndarray,
    c: float,
    t: float,
    shots: int = 0,
    expected_dips: int = 2,
) -> SweepResult:
    """Dip extraction on externally supplied data (e.g. synthetic or recorded)."""
    dummy = SweepConfig(
        PauliHamiltonian.from_terms(1, []),
        float(omegas[0]),
        float(omegas[-1]),
        len(omegas),
        c=c,
        t=t,
        shots=shots,
        expected_dips=expected_dips,
    )
    vals = np.asarray(values, dtype=float)
    res = SweepResult(np.asarray(omegas, dtype=float), vals, smooth(vals), [], dummy)
    res.minima = fit_dips(res, find_minima(res), expected_dips)
    return res


# -- extraction --------------------------------------------------------------------


def smooth(values: Sequence[float]) -> np.ndarray:
    """Average of each point with its two neighbours on either side.

    Edge points average over the truncated window that fits in the series.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 5:
        raise InvalidModelError("smoothing needs at least 5 points")
    csum = np.concatenate(([0.0], np.cumsum(v)))
    i = np.arange(v.size)
    lo = np.maximum(i - 2, 0)
    hi = np.minimum(i + 3, v.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def _local_minima_indices(s: np.ndarray) -> list[int]:
    d = np.sign(np.diff(s))
    out = []
    last_neg = None  # index where the current descent ended
    i = 0
    while i < d.size:
        if d[i] < 0:
            last_neg = i
            i += 1
            continue
        if d[i] == 0:
            j = i
            while j < d.size and d[j] == 0:
                j += 1
            if last_neg is not None and last_neg == i - 1 and j < d.size and d[j] > 0:
                out.append((i + j) // 2)
            i = j
            continue
        if last_neg is not None and last_neg == i - 1:
            out.append(i)
        i += 1
    return [k for k in out if 0 < k < s.size - 1]


def find_minima_indices(
    sweep: SweepResult, sigma: float | None = None, reject_sidelobes: bool = True
) -> list[int]:
    s = sweep.z0_smoothed
    if sigma is None:
        sigma = sweep.config.sigma if sweep.config is not None else EXACT_MODE_SIGMA
    half = max(5, s.size // 6)
    keep = []
    for i in _local_minima_indices(s):
        window = s[max(0, i - half) : i + half + 1]
        if np.median(window) - s[i] >= 3.0 * sigma:
            keep.append(i)
    cfg = sweep.config
    if reject_sidelobes and cfg is not None and cfg.c > 0 and len(keep) > 1:
        keep = _drop_sidelobes(sweep.omegas, s, keep, cfg.c, cfg.t, sigma)
    return keep


def sidelobe_offsets(c: float, t: float, count: int = 3) -> list[tuple[float, float]]:
    """``(offset, relative depth)`` of the two-level line shape's side lobes.

    Lobe ``k`` sits where ``sqrt(4c^2 + delta^2) t / 2 = (2k + 1) pi / 2``;
    its depth relative to the main dip is ``4c^2 / (4c^2 + delta^2) / sin^2(c t)``.
    """
    main = math.sin(c * t) ** 2
    out = []
    for k in range(1, count + 1):
        root = (2 * k + 1) * math.pi / t
        if root <= 2 * c or main == 0.0:
            continue
        out.append((math.sqrt(root * root - 4 * c * c), 4 * c * c / (root * root) / main))
    return out


def _drop_sidelobes(omegas, s, idxs, c, t, sigma) -> list[int]:
    """Remove candidates explained as side lobes of a deeper candidate."""
    depth = {i: _half_crossings(omegas, s, i)[2] for i in idxs}
    lobes = sidelobe_offsets(c, t)
    tol = 0.5 * math.pi / t
    out = []
    for i in idxs:
        lobe = False
        for j in idxs:
            if j == i or depth[j] <= depth[i]:
                continue
            dist = abs(omegas[i] - omegas[j])
            for off, rel in lobes:
                if abs(dist - off) <= tol and depth[i] <= 1.5 * rel * depth[j] + 3.0 * sigma:
                    lobe = True
        if not lobe:
            out.append(i)
    return out


def find_minima(sweep: SweepResult, sigma: float | None = None, reject_sidelobes: bool = True) -> list[float]:
    """Omega values of the accepted local minima of the smoothed series.

    Accepted minima sit at least ``3 sigma`` below the median of the
    surrounding window.  With ``reject_sidelobes`` a minimum is discarded when
    it lies at a predicted side-lobe offset of a deeper minimum and is no
    deeper than that side lobe should be.
    """
    return [float(sweep.omegas[i]) for i in find_minima_indices(sweep, sigma, reject_sidelobes)]


def _nearest_indices(omegas: np.ndarray, center: float, count: int) -> np.ndarray:
    order = np.argsort(np.abs(omegas - center), kind="stable")
    return np.sort(order[: min(count, omegas.size)])


def _width_values(sweep: SweepResult) -> np.ndarray:
    cfg = sweep.config
    return sweep.z0_smoothed if cfg is not None and cfg.shots > 0 else sweep.z0


def _half_crossings(omegas: np.ndarray, v: np.ndarray, i: int) -> tuple[float, float, float, bool]:
    """Left/right half-level crossings around the minimum at ``i`` and the local depth."""
    vmin = v[i]
    opened = False
    sides = []
    for step in (-1, 1):
        j = i
        while 0 <= j + step < v.size and v[j + step] >= v[j]:
            j += step
        at_edge = j + step < 0 or j + step >= v.size
        if at_edge and j != i:
            opened = True
        vmax = v[j]
        level = 0.5 * (vmin + vmax)
        k = i
        while k != j and v[k] < level:
            k += step
        if k == i or v[k] < level:
            sides.append((omegas[i], vmax))
            opened = True
            continue
        a, b = k - step, k
        frac = (level - v[a]) / (v[b] - v[a]) if v[b] != v[a] else 0.0
        sides.append((omegas[a] + frac * (omegas[b] - omegas[a]), vmax))
    (left, lmax), (right, rmax) = sides
    depth = min(lmax, rmax) - vmin
    return float(left), float(right), float(depth), opened


def fwhm(sweep: SweepResult, dip: DipFit | float) -> float:
    """Full width at half minimum of the dip nearest ``dip``."""
    center = dip.raw_center if isinstance(dip, DipFit) else float(dip)
    v = _width_values(sweep)
    i = _refine_index(v, int(np.argmin(np.abs(sweep.omegas - center))))
    left, right, _, _ = _half_crossings(sweep.omegas, v, i)
    return right - left


def _refine_index(v: np.ndarray, i: int) -> int:
    # slide downhill to the nearest grid minimum
    while True:
        if i > 0 and v[i - 1] < v[i]:
            i -= 1
        elif i < v.size - 1 and v[i + 1] < v[i]:
            i += 1
        else:
            return i


def _raw_dip(sweep: SweepResult, idx: int) -> DipFit:
    v = _width_values(sweep)
    i = _refine_index(v, idx)
    left, right, depth, opened = _half_crossings(sweep.omegas, v, i)
    w = float(sweep.omegas[i])
    return DipFit(w, w, depth, right - left, left, right, "raw", float("nan"), True, opened)


def _single_model(omegas, d, s, c, t):
    return 1.0 - 2.0 * s * np.abs(flip_amplitude(omegas, d, c, t)) ** 2


def _double_model(omegas, d1, d2, s, c, t):
    amp = flip_amplitude(omegas, d1, c, t) + flip_amplitude(omegas, d2, c, t)
    return 1.0 - 2.0 * s * np.abs(amp) ** 2


def _fit_single(sweep: SweepResult, idx: int, c: float, t: float) -> DipFit:
    base = _raw_dip(sweep, idx)
    sel = _nearest_indices(sweep.omegas, base.raw_center, SINGLE_FIT_POINTS)
    x, y = sweep.omegas[sel], sweep.z0[sel]
    lo, hi = float(x.min()), float(x.max())
    peak = max(np.abs(flip_amplitude(base.raw_center, base.raw_center, c, t)) ** 2, 1e-6)
    s0 = float(np.clip((1.0 - y.min()) / (2.0 * peak), 1e-3, 1.0))
    try:
        r = least_squares(
            lambda p: _single_model(x, p[0], p[1], c, t) - y,
            x0=[base.raw_center, s0],
            bounds=([lo, 1e-6], [hi, 1.0]),
        )
        ok = bool(r.success)
        d, resid = float(r.x[0]), float(np.sqrt(np.mean(r.fun**2)))
    except (ValueError, np.linalg.LinAlgError):
        ok, d, resid = False, base.raw_center, float("nan")
    span = 1e-9 * max(1.0, hi - lo)
    if not ok or d <= lo + span or d >= hi - span or not base.left <= d <= base.right:
        base.converged = False
        base.model = "single"
        base.residual = resid
        return base
    base.center, base.model, base.residual = d, "single", resid
    return base


def _fit_double(sweep: SweepResult, idx: int, c: float, t: float) -> list[DipFit]:
    base = _raw_dip(sweep, idx)
    sel = _nearest_indices(sweep.omegas, base.raw_center, DOUBLE_FIT_POINTS)
    x, y = sweep.omegas[sel], sweep.z0[sel]
    lo, hi = float(x.min()), float(x.max())
    off = 0.25 * max(base.fwhm, 2.0 * (x[1] - x[0]))
    w0 = base.raw_center
    try:
        r = least_squares(
            lambda p: _double_model(x, p[0], p[1], p[2], c, t) - y,
            x0=[max(lo, w0 - off), min(hi, w0 + off), 0.5],
            bounds=([lo, lo, 1e-6], [hi, hi, 1.0]),
        )
        ok = bool(r.success)
        d1, d2 = sorted(float(v) for v in r.x[:2])
        resid = float(np.sqrt(np.mean(r.fun**2)))
    except (ValueError, np.linalg.LinAlgError):
        ok = False
    if not ok:
        base.converged = False
        base.model = "double"
        return [base]
    out = []
    for d in (d1, d2):
        out.append(
            DipFit(d, base.raw_center, base.depth, base.fwhm, base.left, base.right, "double", resid, True, base.open_width)
        )
    return out


def fit_dips(sweep: SweepResult, candidates: Sequence[float], expected_dips: int = 2) -> list[DipFit]:
    """Refine candidate minima by least squares against the two-level line shape.

    With at least ``expected_dips`` candidates (or ``expected_dips <= 1``) each
    candidate is fit alone on its 10 nearest grid points.  With fewer
    candidates than expected, each is assumed to be two merged dips and fit on
    its 20 nearest points to ``|A(d1) + A(d2)|^2``.  Fits that fail or leave
    the data window fall back to the raw grid minimum with ``converged=False``.
    """
    cfg = sweep.config
    c, t = (cfg.c, cfg.t) if cfg is not None else (0.1, 10.0)
    idxs = [int(np.argmin(np.abs(sweep.omegas - w))) for w in candidates]
    if c == 0.0:
        return [_raw_dip(sweep, i) for i in idxs]
    double = expected_dips >= 2 and 0 < len(idxs) < expected_dips
    out: list[DipFit] = []
    for i in idxs:
        if double:
            out.extend(_fit_double(sweep, i, c, t))
        else:
            out.append(_fit_single(sweep, i, c, t))
    out.sort(key=lambda d: d.center)
    return out


def rms_vs_exact(fitted: Sequence[float], exact: Sequence[float]) -> float:
    f = np.asarray(fitted, dtype=float)
    e = np.asarray(exact, dtype=float)
    if f.shape != e.shape:
        raise InvalidModelError("fitted and exact lists must pair one to one")
    if f.size == 0:
        raise InvalidModelError("nothing to compare")
    return float(np.sqrt(np.mean((f - e) ** 2)))


def pair_nearest(centers: Sequence[float], targets: Sequence[float]) -> list[float | None]:
    """For each target, the nearest center (``None`` when there are no centers)."""
    c = np.asarray(centers, dtype=float)
    if c.size == 0:
        return [None for _ in targets]
    return [float(c[np.argmin(np.abs(c - tv))]) for tv in targets]


def dip_prominence(omegas: np.ndarray, values: np.ndarray, center: float, half_window: float) -> float:
    """Depth of a dip at ``center``: lower of the two side maxima minus the central minimum.

    The central minimum is taken within one grid step of ``center``; the side
    maxima within ``half_window``.  Zero when there is no dip (e.g. a slope).
    """
    omegas = np.asarray(omegas)
    values = np.asarray(values)
    step = omegas[1] - omegas[0]
    core = np.abs(omegas - center) <= step * 1.01
    left = (omegas < center - step * 1.01) & (omegas >= center - half_window)
    right = (omegas > center + step * 1.01) & (omegas <= center + half_window)
    if not (core.any() and left.any() and right.any()):
        return 0.0
    return max(0.0, float(min(values[left].max(), values[right].max()) - values[core].min()))


# -- tracking ----------------------------------------------------------------------


@dataclass
class Track:
    path: np.ndarray
    gaps: list[bool]


def _nearest(cands: Sequence[float], ref: float) -> float:
    return min(cands, key=lambda w: (abs(w - ref), abs(w)))


def track_dip(minima: Sequence[Sequence[float]], start: float = 0.0) -> Track:
    """Follow one dip across an ordered family of sweeps.

    Each entry of ``minima`` lists the dip centers of one sweep.  The first
    point is the center nearest ``start``; every later point is the center
    nearest the previous one (ties go to the smaller ``|omega|``).  A sweep
    without minima yields ``nan`` and a gap flag; the chain continues from
    the last center found.
    """
    path = np.full(len(minima), np.nan)
    gaps = [False] * len(minima)
    ref = start
    for k, cands in enumerate(minima):
        if len(cands) == 0:
            gaps[k] = True
            continue
        w = _nearest(cands, ref)
        path[k] = w
        ref = w
    return Track(path, gaps)


def write_summary(path: str | Path, payload: dict[str, Any]) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")
