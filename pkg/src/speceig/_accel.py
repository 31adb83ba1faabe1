"""Statevector kernels with an optional numba path.

Every gate in this package is a Pauli exponential ``exp(-i theta/2 P)``.  A
Pauli string is encoded by two bit masks over the register (qubit ``q`` is bit
``q`` of a basis index):

* ``xmask`` has bit ``q`` set when ``P`` acts as X or Y on qubit ``q``
* ``zmask`` has bit ``q`` set when ``P`` acts as Z or Y on qubit ``q``

plus ``ny``, the number of Y factors.  With those,
``P|b> = i**ny * (-1)**popcount(b & zmask) |b ^ xmask>``.

Set ``SPECEIG_DISABLE_NUMBA=1`` to force the pure numpy implementation (the
two paths are tested against each other).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("SPECEIG_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by SPECEIG_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_I_POW = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])


def _parity_np(values: np.ndarray) -> np.ndarray:
    """Parity (0/1) of the popcount of each int64 entry."""
    v = values.copy()
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


def apply_pauli_exp_numpy(state, xmask, zmask, ny, theta):
    idx = np.arange(state.shape[0], dtype=np.int64)
    src = idx ^ xmask
    sign = 1.0 - 2.0 * _parity_np(src & zmask)
    phase = _I_POW[ny % 4]
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    return c * state - 1j * s * phase * sign * state[src]


def apply_sequence_numpy(state, xmasks, zmasks, nys, thetas):
    out = state.copy()
    for k in range(xmasks.shape[0]):
        out = apply_pauli_exp_numpy(out, xmasks[k], zmasks[k], nys[k], thetas[k])
    return out


def expectation_z_numpy(state, qubit):
    idx = np.arange(state.shape[0], dtype=np.int64)
    sign = 1.0 - 2.0 * ((idx >> qubit) & 1)
    return float(np.sum(sign * (state.real**2 + state.imag**2)))


if HAVE_NUMBA:

    @njit(cache=True)
    def _popparity(v):
        p = 0
        while v:
            p ^= 1
            v &= v - 1
        return p

    @njit(cache=True)
    def _apply_sequence_numba(state, xmasks, zmasks, nys, thetas):
        dim = state.shape[0]
        cur = state.copy()
        nxt = np.empty_like(cur)
        for k in range(xmasks.shape[0]):
            xm = xmasks[k]
            zm = zmasks[k]
            r = nys[k] % 4
            if r == 0:
                ph = 1.0 + 0.0j
            elif r == 1:
                ph = 1.0j
            elif r == 2:
                ph = -1.0 + 0.0j
            else:
                ph = -1.0j
            c = np.cos(0.5 * thetas[k])
            mis = -1.0j * np.sin(0.5 * thetas[k]) * ph
            for j in range(dim):
                src = j ^ xm
                v = mis * cur[src]
                if _popparity(src & zm):
                    v = -v
                nxt[j] = c * cur[j] + v
            cur, nxt = nxt, cur
        return cur

    @njit(cache=True)
    def _expectation_z_numba(state, qubit):
        acc = 0.0
        for j in range(state.shape[0]):
            p = state[j].real ** 2 + state[j].imag ** 2
            if (j >> qubit) & 1:
                acc -= p
            else:
                acc += p
        return acc

    def apply_sequence(state, xmasks, zmasks, nys, thetas):
        """Apply ``exp(-i theta_k/2 P_k)`` for k = 0, 1, ... in order."""
        return _apply_sequence_numba(state, xmasks, zmasks, nys, thetas)

    def expectation_z(state, qubit):
        return float(_expectation_z_numba(state, qubit))

else:
    apply_sequence = apply_sequence_numpy
    expectation_z = expectation_z_numpy


BACKEND = "numba" if HAVE_NUMBA else "numpy"
