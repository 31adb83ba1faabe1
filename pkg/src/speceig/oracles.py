"""Closed-form references for the probe response.

Two-level system ``H = d/2 Z_1`` coupled to the probe: starting from
``|0, 0>`` the probe flips with probability ``|A(omega, d)|**2``; starting
from ``|0, 1>`` with ``|B(omega, d)|**2 = |A(-omega, d)|**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidModelError, PoleProximityError
from .pauli import Spectrum, x_in_eigenbasis

CHI_TOL = 1e-10


@dataclass(frozen=True)
class TwoLevelParams:
    d: float
    c: float
    t: float
    omega: float

    def __post_init__(self):
        if self.c < 0 or self.t < 0:
            raise InvalidModelError("c and t must be non-negative")


def flip_amplitude(omega, d, c, t):
    """``i 2c/sqrt(4c^2 + (d - omega)^2) sin(E t)`` with ``E`` half that root.

    Vectorized over ``omega`` and ``d``.
    """
    omega = np.asarray(omega, dtype=float)
    root = np.sqrt(4.0 * c * c + (d - omega) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mag = np.where(root > 0, 2.0 * c / np.where(root > 0, root, 1.0), 0.0) * np.sin(0.5 * root * t)
    return 1j * mag


def amplitude_A(p: TwoLevelParams) -> complex:
    return complex(flip_amplitude(p.omega, p.d, p.c, p.t))


def amplitude_B(p: TwoLevelParams) -> complex:
    return complex(flip_amplitude(-p.omega, p.d, p.c, p.t))


def two_level_z0(omega, d, c, t, weight_upper: float = 1.0):
    """``<Z_0>`` for ``d/2 Z_1`` started in ``sqrt(w)|0> + sqrt(1-w)|1>`` (any phases)."""
    pa = np.abs(flip_amplitude(omega, d, c, t)) ** 2
    pb = np.abs(flip_amplitude(-np.asarray(omega, dtype=float), d, c, t)) ** 2
    return 1.0 - 2.0 * (weight_upper * pa + (1.0 - weight_upper) * pb)


def pole_guard(c: float) -> float:
    return max(5.0 * c, 1e-6)


def perturbative_z0(
    s: Spectrum,
    alpha: Sequence[complex],
    c: float,
    t: float,
    omega: float,
    probed: int = 1,
    guard: float | None = None,
) -> float:
    """First-order (in ``c``) probe response.

    ``<Z_0> = 1 - 2 c^2 sum_m |sum_n alpha_n chi_mn (exp(i D t) - 1)/D|^2``
    with ``D = E_m - E_n + omega`` and ``chi_mn = <m|X_probed|n>``.  Raises
    :class:`PoleProximityError` when ``omega`` lies within ``guard`` of
    ``+-(E_m - E_n)`` for any coupled pair, where first order breaks down.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if c == 0.0:
        return 1.0
    chi = x_in_eigenbasis(s, probed)
    E = s.energies
    diff = E[:, None] - E[None, :]  # E_m - E_n
    coupled = np.abs(chi) > CHI_TOL
    guard = pole_guard(c) if guard is None else guard
    near = coupled & ((np.abs(diff + omega) < guard) | (np.abs(diff - omega) < guard))
    if np.any(near):
        m, n = np.argwhere(near)[0]
        raise PoleProximityError(
            f"omega={omega:.6g} within {guard:.3g} of transition [{n},{m}] (dE={diff[m, n]:.6g})"
        )
    D = diff + omega
    small = np.abs(D) < 1e-12
    safe = np.where(small, 1.0, D)
    kernel = np.where(small, 1j * t, (np.exp(1j * D * t) - 1.0) / safe)
    amps = (chi * kernel) @ alpha
    return float(1.0 - 2.0 * c * c * np.sum(np.abs(amps) ** 2))


def zero_dip_expected(s: Spectrum, probed: int, initial_support: Iterable[int]) -> bool:
    """Whether an ``omega = 0`` dip is predicted: some ``chi_nn`` is nonzero on the support."""
    chi = x_in_eigenbasis(s, probed)
    return any(abs(chi[n, n]) > CHI_TOL for n in initial_support)


def initial_support(s: Spectrum, system_state: np.ndarray, tol: float = 1e-10) -> list[int]:
    """Eigen-indices with non-negligible weight in ``system_state``."""
    alpha = s.states.conj().T @ np.asarray(system_state, dtype=complex)
    return [int(k) for k in np.flatnonzero(np.abs(alpha) ** 2 > tol)]
