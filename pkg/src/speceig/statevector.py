"""Trotterized resonance circuits on a dense statevector.

The register holds the probe on qubit 0 and the system on qubits ``1..n``.
A resonance circuit realizes ``exp(-i H_res t)`` for

    H_res = -omega/2 Z_0 + c X_0 X_probed + H_system

as ``n_steps`` Trotter steps.  Every gate is a Pauli exponential
``exp(-i theta/2 P)``; a Hamiltonian term ``k P`` over a step ``dt`` becomes a
gate with ``theta = 2 k dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from . import _accel
from .errors import InvalidModelError, OracleCapacityError
from .pauli import MAX_DENSE_QUBITS, PauliHamiltonian, PauliString, embed, to_dense


@dataclass(frozen=True)
class Gate:
    """``exp(-i theta/2 P)`` with ``P = paulis[k]`` on register qubit ``qubits[k]``."""

    paulis: str
    qubits: tuple[int, ...]
    theta: float

    def __post_init__(self):
        if len(self.paulis) != len(self.qubits):
            raise InvalidModelError("one Pauli letter per qubit required")
        if len(set(self.qubits)) != len(self.qubits):
            raise InvalidModelError("repeated qubit in gate")

    @property
    def name(self) -> str:
        return "R" + self.paulis.lower() if self.paulis else "gphase"

    def masks(self) -> tuple[int, int, int]:
        xm = zm = ny = 0
        for p, q in zip(self.paulis, self.qubits):
            if p in "XY":
                xm |= 1 << q
            if p in "ZY":
                zm |= 1 << q
            ny += p == "Y"
        return xm, zm, ny


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise InvalidModelError(f"gate {g} addresses a qubit outside the register")

    @cached_property
    def compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Gate list as ``(xmasks, zmasks, nys, thetas)`` arrays for the kernels."""
        m = np.array([g.masks() for g in self.gates], dtype=np.int64).reshape(-1, 3)
        thetas = np.array([g.theta for g in self.gates], dtype=float)
        return m[:, 0].copy(), m[:, 1].copy(), m[:, 2].copy(), thetas

    @property
    def total_time(self) -> float | None:
        md = self.metadata
        if "n_steps" in md and "dt" in md:
            return md["n_steps"] * md["dt"]
        return None

    def two_qubit_gate_count(self) -> int:
        return sum(1 for g in self.gates if len(g.qubits) == 2)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise InvalidModelError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    @classmethod
    def probe_and_system(cls, system: np.ndarray | int, n_system: int) -> StateVector:
        """``|0>`` on the probe times a system state (vector or basis index)."""
        sys_vec = np.zeros(1 << n_system, dtype=complex)
        if isinstance(system, (int, np.integer)):
            sys_vec[int(system)] = 1.0
        else:
            sys_vec[:] = np.asarray(system, dtype=complex)
            sys_vec /= np.linalg.norm(sys_vec)
        amps = np.zeros(1 << (n_system + 1), dtype=complex)
        amps[0::2] = sys_vec
        return cls(amps, n_system + 1)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


# -- circuit construction -------------------------------------------------------


def steps_for(t: float, dt: float) -> tuple[int, float]:
    """``N_t = round(t/dt)`` (at least 1) and the step ``t/N_t`` actually used."""
    if dt <= 0 or t <= 0:
        raise InvalidModelError("t and dt must be positive")
    n = max(1, int(round(t / dt)))
    return n, t / n


@dataclass(frozen=True)
class ResonanceProgram:
    """Gate arrays of a resonance circuit with the probe frequency left free.

    ``thetas(omega) = theta_base + omega * theta_slope``; only the probe
    Z rotations have a nonzero slope.  Lets a sweep reuse one compiled
    program for every omega.
    """

    n_qubits: int
    xmasks: np.ndarray
    zmasks: np.ndarray
    nys: np.ndarray
    theta_base: np.ndarray
    theta_slope: np.ndarray
    labels: tuple[tuple[str, tuple[int, ...]], ...]
    metadata: dict[str, Any]

    def thetas(self, omega: float) -> np.ndarray:
        return self.theta_base + omega * self.theta_slope

    def run(self, state: np.ndarray, omega: float) -> np.ndarray:
        return _accel.apply_sequence(state, self.xmasks, self.zmasks, self.nys, self.thetas(omega))

    def circuit(self, omega: float) -> Circuit:
        th = self.thetas(omega)
        gates = tuple(Gate(p, q, float(a)) for (p, q), a in zip(self.labels, th))
        return Circuit(self.n_qubits, gates, dict(self.metadata, omega=omega))


def _system_gate_labels(h: PauliHamiltonian) -> list[tuple[float, str, tuple[int, ...]]]:
    out = []
    for coef, ps in h.terms:
        sup = ps.support
        out.append((coef, "".join(ps.ops[q - 1] for q in sup), sup))
    return out


def resonance_program(
    h: PauliHamiltonian,
    c: float,
    dt: float,
    n_steps: int,
    order: int = 2,
    probed: int = 1,
) -> ResonanceProgram:
    if not 1 <= probed <= h.n:
        raise InvalidModelError(f"probed qubit must be in 1..{h.n} (the probe cannot probe itself)")
    if dt <= 0:
        raise InvalidModelError("dt must be positive")
    if n_steps < 1:
        raise InvalidModelError("n_steps must be >= 1")
    if order not in (1, 2):
        raise InvalidModelError("Trotter order must be 1 or 2")

    # (coef, omega-coef, paulis, qubits) in the order of the first-order step
    seq = [(coef, 0.0, p, q) for coef, p, q in _system_gate_labels(h)]
    seq.append((0.0, -0.5, "Z", (0,)))
    seq.append((c, 0.0, "XX", (0, probed)))
    if order == 1:
        step = [(2.0 * k * dt, 2.0 * s * dt, p, q) for k, s, p, q in seq]
    else:
        half = [(k * dt, s * dt, p, q) for k, s, p, q in seq]
        step = half + half[::-1]
    full = step * n_steps

    labels = tuple((p, q) for _, _, p, q in full)
    masks = np.array([Gate(p, q, 0.0).masks() for p, q in labels], dtype=np.int64).reshape(-1, 3)
    return ResonanceProgram(
        n_qubits=h.n + 1,
        xmasks=masks[:, 0].copy(),
        zmasks=masks[:, 1].copy(),
        nys=masks[:, 2].copy(),
        theta_base=np.array([b for b, _, _, _ in full], dtype=float),
        theta_slope=np.array([s for _, s, _, _ in full], dtype=float),
        labels=labels,
        metadata={"order": order, "n_steps": n_steps, "dt": dt, "c": c, "probed": probed},
    )


def build_resonance_circuit(
    h: PauliHamiltonian,
    omega: float,
    c: float,
    dt: float,
    n_steps: int,
    order: int = 2,
    probed: int = 1,
) -> Circuit:
    """Trotterized ``exp(-i H_res n_steps dt)``.

    Order 1 applies, per step, the system terms, then ``R^z_0(-omega dt)``,
    then ``R^xx_{0,probed}(2 c dt)``.  Order 2 applies that same sequence at
    half angle followed by its reverse at half angle.
    """
    return resonance_program(h, c, dt, n_steps, order, probed).circuit(omega)


def resonance_hamiltonian(h: PauliHamiltonian, omega: float, c: float, probed: int = 1) -> PauliHamiltonian:
    """``-omega/2 Z_0 + c X_0 X_probed + H`` on the ``h.n + 1`` qubit register."""
    if not 1 <= probed <= h.n:
        raise InvalidModelError(f"probed qubit must be in 1..{h.n}")
    n = h.n + 1
    extra = PauliHamiltonian(
        n,
        (
            (-0.5 * omega, PauliString("Z" + "I" * h.n)),
            (c, PauliString("X" + "".join("X" if q == probed else "I" for q in range(1, n)))),
        ),
    )
    return embed(h, n, offset=1) + extra


# -- execution --------------------------------------------------------------------


def apply(circuit: Circuit, state: StateVector) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise InvalidModelError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    if not circuit.gates:
        return StateVector(state.amplitudes.copy(), state.n_qubits)
    out = _accel.apply_sequence(state.amplitudes, *circuit.compiled)
    return StateVector(out, state.n_qubits)


def expectation_z(state: StateVector, qubit: int = 0) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise InvalidModelError(f"qubit {qubit} outside register")
    return _accel.expectation_z(state.amplitudes, qubit)


def sample_from_expectation(z: float, shots: int, rng: np.random.Generator) -> float:
    p1 = min(1.0, max(0.0, 0.5 * (1.0 - z)))
    ones = rng.binomial(shots, p1)
    return 1.0 - 2.0 * ones / shots


def sample_z(state: StateVector, qubit: int, shots: int, seed: int) -> float:
    """Estimate ``<Z_qubit>`` from ``shots`` simulated measurements."""
    if shots < 1:
        raise InvalidModelError("shots must be >= 1")
    return sample_from_expectation(expectation_z(state, qubit), shots, np.random.default_rng(seed))


def exact_evolve(h_res_dense: np.ndarray, t: float, state: StateVector) -> StateVector:
    """``exp(-i H t) |state>`` through the eigendecomposition of ``H``."""
    if state.n_qubits > MAX_DENSE_QUBITS:
        raise OracleCapacityError(f"dense oracle limited to {MAX_DENSE_QUBITS} qubits")
    h = np.asarray(h_res_dense, dtype=complex)
    if h.shape != (state.amplitudes.size,) * 2:
        raise InvalidModelError("Hamiltonian and state dimensions differ")
    w, v = np.linalg.eigh(h)
    out = v @ (np.exp(-1j * w * t) * (v.conj().T @ state.amplitudes))
    return StateVector(out, state.n_qubits)


_PAULI_LETTERS = "IXYZ"


def noisy_apply(
    circuit: Circuit,
    state: StateVector,
    p_depol: float,
    seed: int,
    trajectories: int = 100,
    qubit: int = 0,
) -> float:
    """Trajectory-averaged ``<Z_qubit>`` under two-qubit depolarizing noise.

    After every two-qubit gate, with probability ``p_depol`` a uniformly random
    two-qubit Pauli (identity included) is applied to the gate's qubits, so
    ``p_depol = 1`` fully depolarizes them.
    """
    if not 0.0 <= p_depol <= 1.0:
        raise InvalidModelError("p_depol must lie in [0, 1]")
    if circuit.n_qubits != state.n_qubits:
        raise InvalidModelError("circuit and state sizes differ")
    if p_depol == 0.0 or trajectories < 1:
        return expectation_z(apply(circuit, state), qubit)
    xm, zm, ny, th = circuit.compiled
    pairs = [(i, g.qubits) for i, g in enumerate(circuit.gates) if len(g.qubits) == 2]
    return noisy_expectation(
        state.amplitudes, xm, zm, ny, th, pairs, p_depol, np.random.default_rng(seed), trajectories, qubit
    )


def noisy_expectation(amps, xm, zm, ny, th, pairs, p_depol, rng, trajectories, qubit=0):
    """Trajectory average over gate arrays; ``pairs`` lists ``(gate index, (q0, q1))``."""
    two_q = np.array([i for i, _ in pairs], dtype=int)
    total = 0.0
    for _ in range(trajectories):
        hit = rng.random(len(two_q)) < p_depol
        picks = rng.integers(0, 16, size=len(two_q))
        ins_pos, ins = [], []
        for k in np.flatnonzero(hit):
            a, b = divmod(int(picks[k]), 4)
            err = Gate(_PAULI_LETTERS[a] + _PAULI_LETTERS[b], pairs[k][1], np.pi)
            ins_pos.append(two_q[k] + 1)
            ins.append(err.masks())
        if ins:
            ins_arr = np.array(ins, dtype=np.int64)
            out = _accel.apply_sequence(
                amps,
                np.insert(xm, ins_pos, ins_arr[:, 0]),
                np.insert(zm, ins_pos, ins_arr[:, 1]),
                np.insert(ny, ins_pos, ins_arr[:, 2]),
                np.insert(th, ins_pos, np.pi),
            )
        else:
            out = _accel.apply_sequence(amps, xm, zm, ny, th)
        total += _accel.expectation_z(out, qubit)
    return total / trajectories


# -- Trotter analysis ---------------------------------------------------------------


def trotter_step_unitary(h: PauliHamiltonian, dt: float, order: int = 1) -> np.ndarray:
    """Dense unitary of one Trotter step of ``h`` alone (term order as in ``h.terms``)."""
    from .pauli import pauli_matrix

    dim = 1 << h.n
    u = np.eye(dim, dtype=complex)
    eye = np.eye(dim)
    factors = []
    for coef, ps in h.terms:
        p = pauli_matrix(ps)
        factors.append((coef, p))
    seq = [(2 * k * dt, p) for k, p in factors] if order == 1 else None
    if order == 2:
        half = [(k * dt, p) for k, p in factors]
        seq = half + half[::-1]
    for theta, p in seq:
        u = (np.cos(theta / 2) * eye - 1j * np.sin(theta / 2) * p) @ u
    return u


def effective_hamiltonian(h: PauliHamiltonian, dt: float, order: int = 1) -> np.ndarray:
    """Hermitian ``H_eff`` with ``exp(-i H_eff dt)`` equal to one Trotter step of ``h``.

    Valid while ``|E| dt < pi`` for every level (principal branch of the log).
    """
    u = trotter_step_unitary(h, dt, order)
    heff = 1j * scipy.linalg.logm(u) / dt
    return 0.5 * (heff + heff.conj().T)


def state_error(a: StateVector | np.ndarray, b: StateVector | np.ndarray) -> float:
    va = a.amplitudes if isinstance(a, StateVector) else a
    vb = b.amplitudes if isinstance(b, StateVector) else b
    return float(np.linalg.norm(va - vb))


def dense_resonance(h: PauliHamiltonian, omega: float, c: float, probed: int = 1) -> np.ndarray:
    return to_dense(resonance_hamiltonian(h, omega, c, probed))


def initial_state(h: PauliHamiltonian, spec: str | int | Sequence[complex] = 0) -> StateVector:
    """Probe in ``|0>`` and the system in ``spec``.

    ``spec`` is a computational basis index, an explicit system vector,
    ``"ground"`` or ``"eigen:K"`` (K-th eigenstate from the dense oracle).
    """
    from .pauli import exact_spectrum

    if isinstance(spec, str):
        s = spec.strip().lower()
        if s == "ground":
            s = "eigen:0"
        if s.startswith("eigen:"):
            k = int(s.split(":", 1)[1])
            return StateVector.probe_and_system(exact_spectrum(h).states[:, k], h.n)
        if s.startswith("basis:"):
            s = s.split(":", 1)[1]
        if set(s) <= {"0", "1"} and len(s) == h.n:
            # bitstring written qubit 1 first
            return StateVector.probe_and_system(int(s[::-1], 2), h.n)
        return StateVector.probe_and_system(int(s), h.n)
    if isinstance(spec, (int, np.integer)):
        return StateVector.probe_and_system(int(spec), h.n)
    return StateVector.probe_and_system(np.asarray(spec, dtype=complex), h.n)
