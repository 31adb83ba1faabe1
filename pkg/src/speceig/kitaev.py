"""Kitaev-chain analysis: closed forms, gap maps and the phase boundary.

Couplings follow the Pauli form ``x XX + y YY + z ZZ - m Z - mbar Z_interior``.
The two-site level crossing (ground-state parity flip) happens at
``m_c = sqrt(z^2 + z (x + y) + x y)``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InvalidModelError
from .pauli import KitaevParams, kitaev_chain, sector_ground_energies
from .spectroscopy import SweepConfig, run_sweep, track_dip

EXACT = "exact-diagonalization"
SPECTROSCOPIC = "spectroscopic-sim"
MAX_EXACT_SITES = 6


@dataclass
class GapMap:
    """``gap[i, j]`` belongs to ``m_grid[i]`` and ``y_grid[j]``; ``nan`` marks a missing cell."""

    m_grid: np.ndarray
    y_grid: np.ndarray
    gap: np.ndarray
    source: str
    x: float
    z: float
    meta: dict[str, Any] = field(default_factory=dict)
    provenance: np.ndarray | None = None

    def __post_init__(self):
        self.m_grid = np.asarray(self.m_grid, dtype=float)
        self.y_grid = np.asarray(self.y_grid, dtype=float)
        self.gap = np.asarray(self.gap, dtype=float)
        if self.gap.shape != (self.m_grid.size, self.y_grid.size):
            raise InvalidModelError(
                f"gap shape {self.gap.shape} does not match grids ({self.m_grid.size}, {self.y_grid.size})"
            )
        if np.any(self.gap[np.isfinite(self.gap)] < 0):
            raise InvalidModelError("gap entries must be non-negative")

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.gap)

    def write_csv(self, path: str | Path) -> None:
        """Rows are m values, columns y values; missing cells are written as ``nan``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m\\y"] + [format(v, ".15g") for v in self.y_grid])
            for m, row in zip(self.m_grid, self.gap):
                w.writerow([format(m, ".15g")] + [format(v, ".15g") for v in row])

    def axes(self) -> dict[str, Any]:
        out = {
            "m_grid": self.m_grid.tolist(),
            "y_grid": self.y_grid.tolist(),
            "source": self.source,
            "x": self.x,
            "z": self.z,
            "missing_cells": int(self.missing.sum()),
            "meta": self.meta,
        }
        if self.provenance is not None:
            out["provenance"] = self.provenance.tolist()
        return out


# -- closed forms -------------------------------------------------------------------


def two_site_spectrum(m: float, x: float, y: float, z: float) -> dict[str, float]:
    """The four two-site levels keyed ``a-``, ``a+`` (odd parity) and ``b-``, ``b+`` (even)."""
    root = math.sqrt(4.0 * m * m + (x - y) ** 2)
    return {
        "a-": -z - (x + y),
        "a+": -z + (x + y),
        "b-": z - root,
        "b+": z + root,
    }


def zero_crossing_m(x: float, y: float, z: float) -> float | None:
    """``m >= 0`` where the lowest odd and even two-site levels cross, or ``None``."""
    rad = z * z + z * (x + y) + x * y
    if rad < 0:
        return None
    return math.sqrt(rad)


def exact_gap(L: int, m: float, x: float, y: float, z: float, mbar: float | None = None) -> float:
    """``|E_even - E_odd|`` between the lowest states of the two parity sectors."""
    p = KitaevParams.from_couplings(L, x, y, z, m, mbar)
    even, odd = sector_ground_energies(kitaev_chain(p))
    return abs(even - odd)


def signed_gap(L: int, m: float, x: float, y: float, z: float, mbar: float | None = None) -> float:
    p = KitaevParams.from_couplings(L, x, y, z, m, mbar)
    even, odd = sector_ground_energies(kitaev_chain(p))
    return even - odd


def gap_map_exact(
    m_grid: Sequence[float],
    y_grid: Sequence[float],
    x: float,
    z: float,
    L: int = 2,
    mbar: float | None = None,
) -> GapMap:
    if not 2 <= L <= MAX_EXACT_SITES:
        raise InvalidModelError(f"exact gap maps support L in [2, {MAX_EXACT_SITES}]")
    ms = np.asarray(m_grid, dtype=float)
    ys = np.asarray(y_grid, dtype=float)
    gap = np.array([[exact_gap(L, m, x, y, z, mbar) for y in ys] for m in ms])
    return GapMap(ms, ys, gap, EXACT, x, z, {"L": L, "mbar": z if mbar is None else mbar})


def count_closings(values: Sequence[float]) -> int:
    """Sign changes along a cut of the signed gap (an exact zero counts once)."""
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def closings_along_cut(L: int, m_grid: Sequence[float], y: float, x: float, z: float, mbar: float | None = None) -> int:
    return count_closings([signed_gap(L, m, x, y, z, mbar) for m in m_grid])


# -- spectroscopic map ----------------------------------------------------------------


def _column(args) -> list[float]:
    m, ys, x, z, L, base = args
    minima = []
    for y in ys:
        h = kitaev_chain(KitaevParams.from_couplings(L, x, y, z, m))
        res = run_sweep(replace(base, hamiltonian=h))
        minima.append(res.centers)
    path = track_dip(minima, start=0.0).path
    return np.abs(path).tolist()


def gap_map_spectroscopic(
    m_grid: Sequence[float],
    y_grid: Sequence[float],
    x: float,
    z: float,
    base: SweepConfig,
    L: int = 2,
    workers: int = 1,
) -> GapMap:
    """Gap estimated as ``|omega*|`` of the tracked low-energy dip.

    For each ``m`` the sweeps are ordered by ``y``; the first dip is the one
    closest to ``omega = 0`` and later ones are chained by nearest center.
    ``base`` supplies every sweep setting except the Hamiltonian.
    """
    ms = np.asarray(m_grid, dtype=float)
    ys = np.asarray(y_grid, dtype=float)
    jobs = [(float(m), ys, x, z, L, base) for m in ms]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cols = list(ex.map(_column, jobs))
    else:
        cols = [_column(j) for j in jobs]
    meta = {"L": L, "sweep": base.echo()}
    meta["sweep"].pop("hamiltonian")
    return GapMap(ms, ys, np.array(cols), SPECTROSCOPIC, x, z, meta)


def m_symmetry_filter(plus: GapMap, minus: GapMap) -> GapMap:
    """Per cell, the smaller gap of the ``+m`` and ``-m`` maps.

    ``minus.m_grid`` must be ``-plus.m_grid`` (in the same order).  A missing
    cell on one side takes the other side's value.  ``provenance`` records
    ``+1`` / ``-1`` for the side used, ``0`` when both agree and ``nan``
    when both are missing.
    """
    if plus.gap.shape != minus.gap.shape or not np.allclose(plus.m_grid, -minus.m_grid):
        raise InvalidModelError("maps must share a y grid and mirrored m grids")
    if not np.allclose(plus.y_grid, minus.y_grid):
        raise InvalidModelError("maps must share a y grid")
    a, b = plus.gap, minus.gap
    out = np.where(np.isnan(a), b, np.where(np.isnan(b), a, np.minimum(a, b)))
    prov = np.where(a < b, 1.0, np.where(b < a, -1.0, 0.0))
    prov = np.where(np.isnan(a) & ~np.isnan(b), -1.0, prov)
    prov = np.where(np.isnan(b) & ~np.isnan(a), 1.0, prov)
    prov = np.where(np.isnan(a) & np.isnan(b), np.nan, prov)
    meta = dict(plus.meta, filtered=True)
    return GapMap(plus.m_grid, plus.y_grid, out, plus.source, plus.x, plus.z, meta, prov)


def symmetrize(gm: GapMap) -> GapMap:
    """Apply :func:`m_symmetry_filter` to a map whose m grid is symmetric about 0."""
    order = np.argsort(-gm.m_grid, kind="stable")
    if not np.allclose(gm.m_grid[order], -gm.m_grid):
        raise InvalidModelError("m grid must be symmetric about zero")
    mirrored = GapMap(-gm.m_grid, gm.y_grid, gm.gap[order], gm.source, gm.x, gm.z, gm.meta)
    return m_symmetry_filter(gm, mirrored)


# -- boundary fit ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryFit:
    z_fit: float
    delta_z: float
    rms: float
    points: tuple[tuple[float, float], ...]

    def as_dict(self) -> dict[str, Any]:
        return {
            "z_fit": self.z_fit,
            "delta_z": self.delta_z,
            "rms": self.rms,
            "points": [{"y": y, "m": m} for y, m in self.points],
        }


def _ridge_m(ms: np.ndarray, col: np.ndarray) -> float | None:
    """Sub-grid location of the smallest-gap cell of one ``y`` column (``m > 0`` only)."""
    ok = np.isfinite(col)
    if ok.sum() < 3:
        return None
    vals = np.where(ok, col, np.inf)
    i = int(np.argmin(vals))
    if i == 0 or i == ms.size - 1 or not (ok[i - 1] and ok[i + 1]):
        return None
    # parabola through the minimum and its neighbours; vertex clipped to that span
    x0, x1, x2 = ms[i - 1 : i + 2]
    f0, f1, f2 = vals[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (f1 - f0) + x1 * (f0 - f2) + x0 * (f2 - f1)) / denom
    b = (x2 * x2 * (f0 - f1) + x1 * x1 * (f2 - f0) + x0 * x0 * (f1 - f2)) / denom
    if a <= 0:
        return float(ms[i])
    return float(np.clip(-b / (2.0 * a), x0, x2))


def boundary_points(gm: GapMap, y_range: tuple[float, float] | None = None) -> list[tuple[float, float]]:
    """Per ``y``, the ``m > 0`` location of the smallest gap, with edge minima discarded."""
    pos = gm.m_grid > 0
    ms = gm.m_grid[pos]
    pts = []
    for j, y in enumerate(gm.y_grid):
        if y_range is not None and not y_range[0] <= y <= y_range[1]:
            continue
        m = _ridge_m(ms, gm.gap[pos, j])
        if m is not None:
            pts.append((float(y), m))
    return pts


def _m_curve(ys: np.ndarray, x: float, z: float) -> np.ndarray:
    rad = z * z + z * (x + ys) + x * ys
    return np.sqrt(np.maximum(rad, 0.0))


def fit_boundary_z(
    gm: GapMap,
    x: float | None = None,
    y_range: tuple[float, float] | None = None,
    z_true: float | None = None,
) -> BoundaryFit:
    """Least-squares fit of ``m_c(y; z)`` to the gap ridge with ``z`` free."""
    x = gm.x if x is None else x
    z_true = gm.z if z_true is None else z_true
    pts = boundary_points(gm, y_range)
    if len(pts) < 2:
        raise InvalidModelError("no zero-gap ridge detected")
    ys = np.array([p[0] for p in pts])
    ms = np.array([p[1] for p in pts])
    r = least_squares(lambda p: _m_curve(ys, x, p[0]) - ms, x0=[z_true])
    z_fit = float(r.x[0])
    rms = float(np.sqrt(np.mean((_m_curve(ys, x, z_fit) - ms) ** 2)))
    return BoundaryFit(z_fit, z_fit - z_true, rms, tuple(pts))


def write_json(path: str | Path, payload: dict[str, Any]) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
