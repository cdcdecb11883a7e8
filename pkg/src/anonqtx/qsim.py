"""Exact statevector and density-matrix simulation of small qubit registers.

Qubit ``k`` is bit ``k`` of the basis-state index (bit 0 least significant).
Measurements remove the measured qubit from the register: the remaining
qubits keep their relative order, so qubit ``j > k`` becomes ``j - 1``.

All comparisons are insensitive to global phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

MAX_QUBITS = 14
ATOL = 1e-9
_S = 1.0 / np.sqrt(2.0)


class SizeError(ValueError):
    pass


class QubitIndexError(IndexError):
    pass


class DualOutcome(Enum):
    PLUS = 0
    MINUS = 1

    @property
    def bit(self) -> int:
        return self.value

    def flipped(self) -> "DualOutcome":
        return DualOutcome(1 - self.value)

    @classmethod
    def from_bit(cls, bit: int) -> "DualOutcome":
        return cls(int(bit))


@dataclass(frozen=True)
class BellOutcome:
    """Bell measurement result; ``(0, 0)`` is Phi+, ``bx`` marks Psi, ``bz`` the minus sign."""

    bx: int
    bz: int

    def __post_init__(self):
        if self.bx not in (0, 1) or self.bz not in (0, 1):
            raise ValueError("Bell outcome bits must be 0 or 1")

    @property
    def bits(self) -> tuple[int, int]:
        return (self.bx, self.bz)


class Statevector:
    """Pure state of ``num_qubits`` qubits. Treat as immutable."""

    __slots__ = ("amplitudes", "num_qubits")

    def __init__(self, amplitudes, *, check: bool = True):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(amps.size).bit_length() - 1
        if n < 1 or amps.size != 1 << n:
            raise SizeError(f"amplitude count {amps.size} is not 2**n with n >= 1")
        if check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"state is not normalized (norm^2 = {norm})")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.num_qubits = n

    def __repr__(self):
        return f"Statevector(num_qubits={self.num_qubits})"

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


class DensityMatrix:
    __slots__ = ("entries", "num_qubits")

    def __init__(self, entries, *, check: bool = True):
        rho = np.asarray(entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise SizeError("density matrix must be square")
        n = int(rho.shape[0]).bit_length() - 1
        if n < 1 or rho.shape[0] != 1 << n:
            raise SizeError(f"dimension {rho.shape[0]} is not 2**n with n >= 1")
        if check:
            if not np.allclose(rho, rho.conj().T, atol=ATOL):
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > ATOL:
                raise ValueError("density matrix trace is not 1")
            if np.linalg.eigvalsh(rho).min() < -ATOL:
                raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        self.entries = rho
        self.num_qubits = n

    def __repr__(self):
        return f"DensityMatrix(num_qubits={self.num_qubits})"

    @classmethod
    def from_statevector(cls, state: Statevector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()), check=False)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        d = 1 << num_qubits
        return cls(np.eye(d) / d, check=False)


State = Union[Statevector, DensityMatrix]


def _check_qubit(state, qubit: int) -> int:
    if isinstance(qubit, bool) or not isinstance(qubit, (int, np.integer)):
        raise QubitIndexError(f"qubit index must be an integer, got {qubit!r}")
    if not 0 <= qubit < state.num_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {state.num_qubits}-qubit register")
    return int(qubit)


def _axis(n: int, qubit: int) -> int:
    return n - 1 - qubit


def _draw(rng, u):
    if u is not None:
        return float(u)
    if rng is None:
        raise ValueError("need either rng or a uniform variate u")
    return float(rng.random())


# --- state preparation -------------------------------------------------------

def basis_state(bits: str) -> Statevector:
    """``basis_state("01")`` is qubit 0 in |0>, qubit 1 in |1> (string index = qubit)."""
    idx = sum(int(b) << k for k, b in enumerate(bits))
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[idx] = 1.0
    return Statevector(amps, check=False)


def plus() -> Statevector:
    return Statevector([_S, _S], check=False)


def minus() -> Statevector:
    return Statevector([_S, -_S], check=False)


def dual_state(outcome: DualOutcome) -> Statevector:
    return plus() if outcome is DualOutcome.PLUS else minus()


def make_ghz(n: int, max_qubits: int = MAX_QUBITS) -> Statevector:
    """(|0...0> + |1...1>)/sqrt(2) on ``n`` qubits."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= max_qubits:
        raise SizeError(f"GHZ size must be in [1, {max_qubits}], got {n!r}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = _S
    return Statevector(amps, check=False)


def bell_state(bx: int, bz: int) -> Statevector:
    """Bell state labelled ``(bx, bz)``: (|0,bx> + (-1)^bz |1,1-bx>)/sqrt(2) as (qubit0, qubit1)."""
    amps = np.zeros(4, dtype=complex)
    for a in (0, 1):
        amps[a | ((a ^ bx) << 1)] += (-1) ** (bz * a) * _S
    return Statevector(amps, check=False)


PHI_PLUS = bell_state(0, 0)
PHI_MINUS = bell_state(0, 1)
PSI_PLUS = bell_state(1, 0)
PSI_MINUS = bell_state(1, 1)


def random_state(rng: np.random.Generator, num_qubits: int = 1) -> Statevector:
    """Haar-random pure state."""
    v = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return Statevector(v / np.linalg.norm(v), check=False)


def tensor(*states: Statevector, max_qubits: int = MAX_QUBITS) -> Statevector:
    """Product state; the first argument occupies the lowest qubit indices."""
    if sum(s.num_qubits for s in states) > max_qubits:
        raise SizeError("product register exceeds max_qubits")
    amps = np.ones(1, dtype=complex)
    for s in states:
        amps = np.multiply.outer(s.amplitudes, amps).reshape(-1)
    return Statevector(amps, check=False)


# --- unitaries ---------------------------------------------------------------

def apply_pauli(state: Statevector, qubit: int, which: str) -> Statevector:
    """Apply X, Z or Y (as X·Z, global phase dropped) to one qubit."""
    qubit = _check_qubit(state, qubit)
    if which not in ("X", "Y", "Z"):
        raise ValueError(f"unknown Pauli {which!r}")
    n = state.num_qubits
    t = state.tensor()
    ax = _axis(n, qubit)
    if which in ("Z", "Y"):
        t = t.copy()
        sl = [slice(None)] * n
        sl[ax] = 1
        t[tuple(sl)] *= -1
    if which in ("X", "Y"):
        t = np.flip(t, axis=ax)
    return Statevector(t.reshape(-1), check=False)


def apply_unitary(state: Statevector, qubit: int, matrix) -> Statevector:
    qubit = _check_qubit(state, qubit)
    n = state.num_qubits
    t = np.moveaxis(state.tensor(), _axis(n, qubit), 0)
    t = np.tensordot(np.asarray(matrix, dtype=complex), t, axes=([1], [0]))
    return Statevector(np.moveaxis(t, 0, _axis(n, qubit)).reshape(-1), check=False)


# --- measurements ------------------------------------------------------------

def _split(state: Statevector, qubit: int):
    """Views of the amplitudes with ``qubit`` = 0 and = 1, remaining qubits flattened in order."""
    t = state.amplitudes.reshape(1 << (state.num_qubits - 1 - qubit), 2, 1 << qubit)
    return t[:, 0, :], t[:, 1, :]


def _finish(branch: np.ndarray, prob: float) -> Statevector:
    return Statevector(branch.reshape(-1) / np.sqrt(prob), check=False)


def project_dual(state: Statevector, qubit: int, outcome: DualOutcome):
    """Project ``qubit`` onto |+> or |->; returns ``(probability, collapsed state or None)``."""
    qubit = _check_qubit(state, qubit)
    if state.num_qubits == 1:
        raise SizeError("cannot remove the last qubit of a register")
    t0, t1 = _split(state, qubit)
    branch = (t0 + t1) * _S if outcome is DualOutcome.PLUS else (t0 - t1) * _S
    prob = float(np.vdot(branch, branch).real)
    return prob, (_finish(branch, prob) if prob > 0 else None)


def dual_probability(state: Statevector, qubit: int) -> float:
    """Probability of PLUS when measuring ``qubit`` in the dual basis."""
    qubit = _check_qubit(state, qubit)
    if state.num_qubits == 1:
        a = state.amplitudes
        return float(abs(a[0] + a[1]) ** 2 / 2)
    t0, t1 = _split(state, qubit)
    b = t0 + t1
    return float(np.vdot(b, b).real / 2)


def measure_dual(state: Statevector, qubit: int, rng=None, *, u: float | None = None):
    """Measure ``qubit`` in {|+>, |->}.

    Returns ``(DualOutcome, remaining state)``; for a one-qubit register the
    remaining state is ``None``. Pass ``u`` to supply the uniform variate
    directly (PLUS iff ``u < P(PLUS)``).
    """
    qubit = _check_qubit(state, qubit)
    r = _draw(rng, u)
    if state.num_qubits == 1:
        return (DualOutcome.PLUS if r < dual_probability(state, 0) else DualOutcome.MINUS), None
    t0, t1 = _split(state, qubit)
    branch = (t0 + t1) * _S
    prob = float(np.vdot(branch, branch).real)
    if r < prob:
        return DualOutcome.PLUS, _finish(branch, prob)
    branch = (t0 - t1) * _S
    return DualOutcome.MINUS, _finish(branch, float(np.vdot(branch, branch).real))


def project_computational(state: Statevector, qubit: int, bit: int):
    qubit = _check_qubit(state, qubit)
    if state.num_qubits == 1:
        raise SizeError("cannot remove the last qubit of a register")
    branch = _split(state, qubit)[bit]
    prob = float(np.vdot(branch, branch).real)
    return prob, (_finish(branch, prob) if prob > 0 else None)


def measure_computational(state: Statevector, qubit: int, rng=None, *, u: float | None = None):
    """Measure ``qubit`` in {|0>, |1>}; returns ``(bit, remaining state or None)``."""
    qubit = _check_qubit(state, qubit)
    if state.num_qubits == 1:
        p0 = float(abs(state.amplitudes[0]) ** 2)
        return (0 if _draw(rng, u) < p0 else 1), None
    t0, _ = _split(state, qubit)
    p0 = float(np.vdot(t0, t0).real)
    bit = 0 if _draw(rng, u) < p0 else 1
    return bit, project_computational(state, qubit, bit)[1]


BELL_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))


def _bell_branches(state: Statevector, q1: int, q2: int):
    q1 = _check_qubit(state, q1)
    q2 = _check_qubit(state, q2)
    if q1 == q2:
        raise QubitIndexError("Bell measurement needs two distinct qubits")
    n = state.num_qubits
    # (q1, q2, rest...) with rest in original order
    t = np.moveaxis(state.tensor(), (_axis(n, q1), _axis(n, q2)), (0, 1))
    branches = {}
    for bx, bz in BELL_ORDER:
        sign = -1.0 if bz else 1.0
        branches[(bx, bz)] = (t[0, bx] + sign * t[1, 1 - bx]) * _S
    return branches


def bell_probabilities(state: Statevector, q1: int, q2: int) -> dict[tuple[int, int], float]:
    if state.num_qubits == 2 and {q1, q2} == {0, 1}:
        # two-qubit fast path; t[a, b] = amplitude with q1 = a, q2 = b
        a = state.amplitudes
        t = a.reshape(2, 2) if q1 == 1 else a.reshape(2, 2).T
        out = {}
        for bx, bz in BELL_ORDER:
            v = t[0, bx] + (-1.0 if bz else 1.0) * t[1, 1 - bx]
            out[(bx, bz)] = 0.5 * (v.real * v.real + v.imag * v.imag)
        return out
    return {k: float(np.vdot(b, b).real) for k, b in _bell_branches(state, q1, q2).items()}


def bell_measure(state: Statevector, q1: int, q2: int, rng=None, *, u: float | None = None):
    """Project ``(q1, q2)`` onto the Bell basis; returns ``(BellOutcome, rest or None)``.

    Outcome ``(bx, bz)`` identifies :func:`bell_state` ``(bx, bz)`` with q1 as
    its qubit 0.
    """
    branches = _bell_branches(state, q1, q2)
    r = _draw(rng, u)
    acc = 0.0
    chosen = None
    for key in BELL_ORDER:
        prob = float(np.vdot(branches[key], branches[key]).real)
        if prob <= 0:
            continue
        chosen = (key, prob)
        acc += prob
        if r < acc:
            break
    (bx, bz), prob = chosen
    if state.num_qubits == 2:
        return BellOutcome(bx, bz), None
    return BellOutcome(bx, bz), _finish(branches[(bx, bz)], prob)


# --- metrics -----------------------------------------------------------------

def _as_density(s: State) -> np.ndarray:
    if isinstance(s, Statevector):
        return np.outer(s.amplitudes, s.amplitudes.conj())
    return s.entries


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(a: State, b: State) -> float:
    """Squared-overlap fidelity: |<a|b>|^2 for pure states, Uhlmann in general."""
    if a.num_qubits != b.num_qubits:
        raise SizeError("fidelity of states with different dimensions")
    if isinstance(a, Statevector) and isinstance(b, Statevector):
        f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, Statevector):
        f = np.vdot(a.amplitudes, b.entries @ a.amplitudes).real
    elif isinstance(b, Statevector):
        f = np.vdot(b.amplitudes, a.entries @ b.amplitudes).real
    else:
        sa = _psd_sqrt(a.entries)
        f = np.sqrt(np.clip(np.linalg.eigvalsh(sa @ b.entries @ sa), 0, None)).sum() ** 2
    return float(min(max(f, 0.0), 1.0))


def partial_trace(rho: State, keep) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (kept in ascending index order)."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must not be empty")
    n = rho.num_qubits
    for q in keep:
        _check_qubit(rho, q)
    t = _as_density(rho).reshape((2,) * (2 * n))
    c = n
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=c - 1 - q, axis2=2 * c - 1 - q)
        c -= 1
    d = 1 << c
    return DensityMatrix(t.reshape(d, d), check=False)


def trace_distance(a: State, b: State) -> float:
    """Half the trace norm of ``a - b``."""
    if a.num_qubits != b.num_qubits:
        raise SizeError("trace distance of states with different dimensions")
    w = np.linalg.eigvalsh(_as_density(a) - _as_density(b))
    return float(min(0.5 * np.abs(w).sum(), 1.0))


class BellLabel(str, Enum):
    """God-view classification of a shared pair (sender side first)."""

    PHI_PLUS = "PHI+"
    PHI_MINUS = "PHI-"
    PSI_PLUS = "PSI+"
    PSI_MINUS = "PSI-"

    @property
    def bits(self) -> tuple[int, int]:
        return _LABEL_BITS[self]

    @classmethod
    def from_bits(cls, bx: int, bz: int) -> "BellLabel":
        return _BITS_LABEL[(bx, bz)]

    def state(self) -> Statevector:
        return bell_state(*self.bits)


_LABEL_BITS = {
    BellLabel.PHI_PLUS: (0, 0),
    BellLabel.PHI_MINUS: (0, 1),
    BellLabel.PSI_PLUS: (1, 0),
    BellLabel.PSI_MINUS: (1, 1),
}
_BITS_LABEL = {v: k for k, v in _LABEL_BITS.items()}
