"""Pauli operators, model Hamiltonians and the dense diagonalization oracle.

Indexing: a system Hamiltonian on ``n`` qubits acts on register qubits
``1..n``; qubit 0 is reserved for the probe.  Inside a :class:`PauliString`
character ``k`` of ``ops`` acts on system qubit ``k + 1``.  In dense matrices
and statevectors qubit ``q`` is bit ``q`` of the basis index (lowest bit first).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from ._accel import _parity_np
from .errors import InvalidModelError, OracleCapacityError

MAX_DENSE_QUBITS = 14
DEGENERACY_TOL = 1e-9

_PAULI_CHARS = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XXI")``."""

    ops: str

    def __post_init__(self):
        ops = self.ops.upper()
        if not ops or set(ops) - _PAULI_CHARS:
            raise InvalidModelError(f"invalid Pauli string {self.ops!r}")
        object.__setattr__(self, "ops", ops)

    @property
    def n(self) -> int:
        return len(self.ops)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls("I" * n)

    @classmethod
    def from_sparse(cls, n: int, factors: dict[int, str]) -> PauliString:
        """Build from ``{system_qubit (1-based): 'X'|'Y'|'Z'}``."""
        ops = ["I"] * n
        for q, p in factors.items():
            if not 1 <= q <= n:
                raise InvalidModelError(f"qubit {q} outside 1..{n}")
            ops[q - 1] = p
        return cls("".join(ops))

    @property
    def support(self) -> tuple[int, ...]:
        """1-based system qubits on which the string acts non-trivially."""
        return tuple(k + 1 for k, p in enumerate(self.ops) if p != "I")

    def masks(self, offset: int = 1) -> tuple[int, int, int]:
        """``(xmask, zmask, ny)`` with character ``k`` of ``ops`` at register bit ``k + offset``."""
        xmask = zmask = ny = 0
        for k, p in enumerate(self.ops):
            bit = 1 << (k + offset)
            if p in "XY":
                xmask |= bit
            if p in "ZY":
                zmask |= bit
            if p == "Y":
                ny += 1
        return xmask, zmask, ny

    def __str__(self) -> str:
        return self.ops


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli strings in canonical (merged) form."""

    n: int
    terms: tuple[tuple[float, PauliString], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise InvalidModelError("a Hamiltonian needs at least one qubit")
        merged: dict[PauliString, float] = {}
        for coef, ps in self.terms:
            if ps.n != self.n:
                raise InvalidModelError(f"term {ps} has {ps.n} qubits, expected {self.n}")
            if isinstance(coef, complex) or np.iscomplexobj(coef):
                if abs(np.imag(coef)) > 0:
                    raise InvalidModelError("coefficients must be real")
                coef = float(np.real(coef))
            merged[ps] = merged.get(ps, 0.0) + float(coef)
        canon = tuple((c, ps) for ps, c in merged.items() if c != 0.0)
        object.__setattr__(self, "terms", canon)

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[float, str | PauliString]]) -> PauliHamiltonian:
        return cls(n, tuple((c, p if isinstance(p, PauliString) else PauliString(p)) for c, p in terms))

    def __add__(self, other: PauliHamiltonian) -> PauliHamiltonian:
        if other.n != self.n:
            raise InvalidModelError("qubit count mismatch")
        return PauliHamiltonian(self.n, self.terms + other.terms)

    def scaled(self, factor: float) -> PauliHamiltonian:
        return PauliHamiltonian(self.n, tuple((factor * c, p) for c, p in self.terms))

    def coefficient(self, ops: str) -> float:
        key = PauliString(ops)
        for c, p in self.terms:
            if p == key:
                return c
        return 0.0

    def __len__(self) -> int:
        return len(self.terms)


# -- model constructors -------------------------------------------------------


def landau_zener(a: float, b: float) -> PauliHamiltonian:
    """Single spin ``a Z + b Y``."""
    return PauliHamiltonian.from_terms(1, [(a, "Z"), (b, "Y")])


@dataclass(frozen=True)
class KitaevParams:
    """Interacting Kitaev chain couplings.

    Stored as the fermionic couplings (chemical potential ``mu``, hopping
    ``g``, pairing ``delta``, interaction ``V``); the Pauli-form couplings
    follow from ``2x = g + delta``, ``2y = g - delta``, ``4z = V``,
    ``4m = 2 mu + V`` and ``4 mbar = V``.  A single ``V`` ties ``mbar = z``;
    ``mbar_override`` decouples them for studies that need it.
    """

    L: int
    mu: float
    g: float
    delta: float
    V: float
    mbar_override: float | None = None

    def __post_init__(self):
        if self.L < 2:
            raise InvalidModelError(f"Kitaev chain needs L >= 2, got {self.L}")

    @classmethod
    def from_couplings(
        cls, L: int, x: float, y: float, z: float, m: float, mbar: float | None = None
    ) -> KitaevParams:
        V = 4.0 * z
        override = None if mbar is None or mbar == z else float(mbar)
        return cls(L=L, mu=(4.0 * m - V) / 2.0, g=x + y, delta=x - y, V=V, mbar_override=override)

    @property
    def x(self) -> float:
        return (self.g + self.delta) / 2.0

    @property
    def y(self) -> float:
        return (self.g - self.delta) / 2.0

    @property
    def z(self) -> float:
        return self.V / 4.0

    @property
    def m(self) -> float:
        return (2.0 * self.mu + self.V) / 4.0

    @property
    def mbar(self) -> float:
        return self.V / 4.0 if self.mbar_override is None else self.mbar_override


def kitaev_chain(p: KitaevParams) -> PauliHamiltonian:
    """Jordan-Wigner form of the interacting Kitaev chain on ``p.L`` qubits.

    ``x XX + y YY + z ZZ`` on every bond, ``-m Z`` on every site and an extra
    ``-mbar Z`` on interior sites.  The constant generated by the
    Jordan-Wigner mapping is not included: only level differences are
    observable here.
    """
    n = p.L
    terms: list[tuple[float, PauliString]] = []
    for i in range(1, n):
        for coef, ch in ((p.x, "X"), (p.y, "Y"), (p.z, "Z")):
            terms.append((coef, PauliString.from_sparse(n, {i: ch, i + 1: ch})))
    for i in range(1, n + 1):
        terms.append((-p.m, PauliString.from_sparse(n, {i: "Z"})))
    for i in range(2, n):
        terms.append((-p.mbar, PauliString.from_sparse(n, {i: "Z"})))
    return PauliHamiltonian(n, tuple(terms))


# -- dense oracle ---------------------------------------------------------------


def _check_capacity(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise OracleCapacityError(f"dense oracle limited to {MAX_DENSE_QUBITS} qubits, got {n}")


def pauli_matrix(ps: PauliString, offset: int = 0, n_total: int | None = None) -> np.ndarray:
    """Dense matrix of one Pauli string (system qubit k at register bit k-1+offset)."""
    n_total = ps.n + offset if n_total is None else n_total
    _check_capacity(n_total)
    xm, zm, ny = ps.masks(offset=offset)
    dim = 1 << n_total
    cols = np.arange(dim, dtype=np.int64)
    vals = (1j**ny) * (1.0 - 2.0 * _parity_np(cols & zm))
    out = np.zeros((dim, dim), dtype=complex)
    out[cols ^ xm, cols] = vals
    return out


def to_dense(h: PauliHamiltonian) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``h``."""
    _check_capacity(h.n)
    dim = 1 << h.n
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim, dtype=np.int64)
    for coef, ps in h.terms:
        xm, zm, ny = ps.masks(offset=0)
        out[cols ^ xm, cols] += coef * (1j**ny) * (1.0 - 2.0 * _parity_np(cols & zm))
    return out


def parity_diagonal(n: int) -> np.ndarray:
    """Diagonal of ``prod_i Z_i`` on ``n`` qubits."""
    idx = np.arange(1 << n, dtype=np.int64)
    return 1.0 - 2.0 * _parity_np(idx)


class Transition(NamedTuple):
    initial: int
    final: int
    energy: float

    @property
    def label(self) -> str:
        return f"[{self.initial},{self.final}]"


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a system Hamiltonian.

    ``states[:, k]`` is the eigenvector for ``energies[k]``.  ``parities`` holds
    the ``prod Z`` eigenvalue of each state when the Hamiltonian conserves
    parity, otherwise ``None``.
    """

    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray | None
    n: int

    def __len__(self) -> int:
        return len(self.energies)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    dom = np.argmax(np.abs(vecs) > np.abs(vecs).max(axis=0) - 1e-8, axis=0)
    ph = vecs[dom, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)[None, :]


def _order(energies: np.ndarray, parities: np.ndarray | None, vecs: np.ndarray) -> np.ndarray:
    # energy, then parity (+1 first), then dominant basis index, with
    # energies closer than DEGENERACY_TOL treated as equal.
    order = np.argsort(energies, kind="stable")
    dominant = np.argmax(np.abs(vecs) > np.abs(vecs).max(axis=0) - 1e-8, axis=0)
    result: list[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and energies[order[j]] - energies[order[j - 1]] < DEGENERACY_TOL:
            j += 1
        group = list(order[i:j])
        par = parities if parities is not None else np.zeros(len(energies))
        group.sort(key=lambda k: (-par[k], dominant[k]))
        result.extend(group)
        i = j
    return np.asarray(result, dtype=int)


def exact_spectrum(h: PauliHamiltonian | np.ndarray, n: int | None = None) -> Spectrum:
    """Full eigendecomposition with deterministic ordering of degenerate levels.

    When ``h`` commutes with the total parity ``prod Z`` each parity sector is
    diagonalized separately, so every eigenvector has definite parity.
    """
    if isinstance(h, PauliHamiltonian):
        n = h.n
        mat = to_dense(h)
    else:
        mat = np.asarray(h, dtype=complex)
        n = int(round(np.log2(mat.shape[0]))) if n is None else n
        _check_capacity(n)
    dim = mat.shape[0]
    par = parity_diagonal(n)
    conserves = not np.any(np.abs(mat[np.not_equal.outer(par, par)]) > 1e-13)
    if conserves:
        energies = np.empty(dim)
        vecs = np.zeros((dim, dim), dtype=complex)
        parities = np.empty(dim)
        col = 0
        for sector in (1.0, -1.0):
            sel = np.flatnonzero(par == sector)
            w, v = np.linalg.eigh(mat[np.ix_(sel, sel)])
            k = len(w)
            energies[col : col + k] = w
            vecs[sel, col : col + k] = v
            parities[col : col + k] = sector
            col += k
    else:
        energies, vecs = np.linalg.eigh(mat)
        parities = None
    vecs = _fix_phase(vecs)
    order = _order(energies, parities, vecs)
    return Spectrum(
        energies=energies[order],
        states=vecs[:, order],
        parities=None if parities is None else parities[order],
        n=n,
    )


def transition_energies(s: Spectrum) -> list[Transition]:
    """All ordered pairs ``[n,m]`` with ``energy = E_m - E_n`` (self-pairs included)."""
    E = s.energies
    return [Transition(i, f, float(E[f] - E[i])) for i in range(len(E)) for f in range(len(E))]


def x_in_eigenbasis(s: Spectrum, qubit: int) -> np.ndarray:
    """Matrix ``chi[m, n] = <m| X_qubit |n>`` for a 1-based system qubit."""
    if not 1 <= qubit <= s.n:
        raise InvalidModelError(f"qubit {qubit} outside 1..{s.n}")
    flip = np.arange(1 << s.n) ^ (1 << (qubit - 1))
    return s.states.conj().T @ s.states[flip, :]


def chi_element(s: Spectrum, m: int, n: int, qubit: int) -> complex:
    """``<m| X_qubit |n>`` in the eigenbasis of ``s``."""
    if not 1 <= qubit <= s.n:
        raise InvalidModelError(f"qubit {qubit} outside 1..{s.n}")
    flip = np.arange(1 << s.n) ^ (1 << (qubit - 1))
    return complex(np.vdot(s.states[:, m], s.states[flip, n]))


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a @ b - b @ a))


def embed(h: PauliHamiltonian, n_total: int, offset: int = 1) -> PauliHamiltonian:
    """Place ``h`` on register qubits ``offset..offset+h.n-1`` of an ``n_total`` register."""
    if offset + h.n > n_total:
        raise InvalidModelError("embedding does not fit the register")
    terms = tuple(
        (c, PauliString("I" * offset + p.ops + "I" * (n_total - offset - h.n))) for c, p in h.terms
    )
    return PauliHamiltonian(n_total, terms)


def sector_ground_energies(h: PauliHamiltonian) -> tuple[float, float]:
    """Lowest even- and lowest odd-parity energies of a parity-conserving ``h``."""
    mat = to_dense(h)
    par = parity_diagonal(h.n)
    out = []
    for sector in (1.0, -1.0):
        sel = np.flatnonzero(par == sector)
        out.append(float(np.linalg.eigvalsh(mat[np.ix_(sel, sel)])[0]))
    return out[0], out[1]
