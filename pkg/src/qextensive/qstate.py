"""Dense state vectors over a register of qudits.

Qudits are numbered from 1, matching the ``ν@j`` class keys used
everywhere else; qudit 1 is the most significant digit of the flat index.
All values are immutable; every operation returns a new object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GammaOutOfRange,
    LengthMismatch,
    NonQubitLayout,
    NotNormalizable,
    NotUnitary,
    QuditIndexOutOfRange,
    RepeatedQudit,
    ShiftOutOfRange,
)

TOL = 1e-9
NORM_FORGIVENESS = 1e-6
PRUNE_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QuditLayout:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("a layout needs at least one qudit")
        if any(d < 2 for d in dims):
            raise ValueError(f"every qudit dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def num_qudits(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def dim(self, j: int) -> int:
        self.check_index(j)
        return self.dims[j - 1]

    def check_index(self, j: int) -> None:
        if not 1 <= j <= len(self.dims):
            raise QuditIndexOutOfRange(
                f"qudit {j} is outside 1..{len(self.dims)}", qudit=j
            )

    def basis_states(self) -> Iterable[tuple[int, ...]]:
        """Mixed-radix digit tuples in flat-index order."""
        return np.ndindex(*self.dims)


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: QuditLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def amplitude(self, digits: Sequence[int]) -> complex:
        return complex(self.tensor[tuple(digits)])

    def allclose(self, other: "StateVector", atol: float = TOL) -> bool:
        return self.layout == other.layout and np.allclose(
            self.amplitudes, other.amplitudes, atol=atol, rtol=0
        )

    def __repr__(self):
        terms = []
        for digits in self.layout.basis_states():
            a = self.tensor[digits]
            if abs(a) > PRUNE_TOL:
                terms.append(f"({a:.6g})|{''.join(map(str, digits))}>")
        return "StateVector(" + " + ".join(terms) + ")"


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    name: str | None = None

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=TOL, rtol=0):
            raise NotUnitary(f"operator {self.name or ''} is not unitary".strip())
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def same_matrix(self, other: "Unitary", atol: float = TOL) -> bool:
        return self.dim == other.dim and np.allclose(
            self.matrix, other.matrix, atol=atol, rtol=0
        )

    def __repr__(self):
        return f"Unitary({self.name or self.matrix.tolist()})"


@dataclass(frozen=True)
class MoveRecord:
    qudit: int
    operator: Unitary
    outcome: int

    def key(self) -> str:
        return f"{self.outcome}@{self.qudit}"


@dataclass(frozen=True)
class RunResult:
    records: tuple[MoveRecord, ...]
    probability: float
    final_state: StateVector = field(compare=False)

    @property
    def outcomes(self) -> tuple[tuple[int, int], ...]:
        """(qudit, outcome) pairs in play order."""
        return tuple((r.qudit, r.outcome) for r in self.records)


def build_state(layout: QuditLayout, amplitudes, normalize: bool = False) -> StateVector:
    """Wrap ``amplitudes`` as a state over ``layout``.

    Input within 1e-6 of unit norm is rescaled silently. Anything further off
    is rejected unless ``normalize`` is set, in which case every
    non-vanishing vector is rescaled.
    """
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if amps.size != layout.size:
        raise LengthMismatch(
            f"layout {layout.dims} needs {layout.size} amplitudes, got {amps.size}"
        )
    norm = float(np.linalg.norm(amps))
    if norm < PRUNE_TOL:
        raise NotNormalizable(f"amplitude norm {norm:.3g} is too small to normalize")
    if not normalize and abs(norm - 1.0) >= NORM_FORGIVENESS:
        raise NotNormalizable(f"amplitude norm {norm:.6g} is not within 1e-6 of 1")
    return StateVector(layout, amps / norm)


def ghz_like_state(layout: QuditLayout, gamma: float) -> StateVector:
    """cos(γ/2)|0…0⟩ + i·sin(γ/2)|1…1⟩ on a register of qubits."""
    if any(d != 2 for d in layout.dims):
        raise NonQubitLayout(f"GHZ-like state needs qubits only, got {layout.dims}")
    if not 0.0 <= gamma <= math.pi:
        raise GammaOutOfRange(f"gamma={gamma} is outside [0, pi]", gamma=gamma)
    amps = np.zeros(layout.size, dtype=complex)
    amps[0] = math.cos(gamma / 2)
    amps[-1] += 1j * math.sin(gamma / 2)
    return StateVector(layout, amps)


def basis_shift_operator(d: int, t: int, phases: Sequence[float] | None = None) -> Unitary:
    """V_t: |ν⟩ ↦ e^{iφ_ν}|ν ⊕ t⟩ with addition mod d.

    ``phases[ν]`` is the phase picked up by input state ``|ν⟩``; zero by
    default. A constant phase list gives the global-phase form.
    """
    if not 0 <= t < d:
        raise ShiftOutOfRange(f"shift {t} is outside 0..{d - 1}")
    if phases is None:
        phases = [0.0] * d
    if len(phases) != d:
        raise LengthMismatch(f"need {d} phases, got {len(phases)}")
    m = np.zeros((d, d), dtype=complex)
    for nu in range(d):
        m[(nu + t) % d, nu] = np.exp(1j * phases[nu])
    return Unitary(m, name=f"V{t}")


def shift_of(op: Unitary, atol: float = TOL) -> int | None:
    """The t for which ``op`` is a phased basis shift V_t, else None."""
    m = op.matrix
    d = op.dim
    mags = np.abs(m)
    for t in range(d):
        support = np.zeros((d, d))
        for nu in range(d):
            support[(nu + t) % d, nu] = 1.0
        if np.allclose(mags, support, atol=atol, rtol=0):
            return t
    return None


def apply_on_qudit(state: StateVector, j: int, op: Unitary) -> StateVector:
    layout = state.layout
    layout.check_index(j)
    if op.dim != layout.dims[j - 1]:
        raise DimensionMismatch(
            f"operator of dim {op.dim} applied to qudit {j} of dim {layout.dims[j - 1]}",
            qudit=j,
        )
    axis = j - 1
    out = np.tensordot(op.matrix, state.tensor, axes=([1], [axis]))
    out = np.moveaxis(out, 0, axis)
    return StateVector(layout, out.reshape(-1))


def measure_qudit(state: StateVector, j: int) -> list[tuple[int, float, StateVector]]:
    """Projective measurement of qudit ``j`` in the computational basis.

    Returns ``(outcome, probability, post_state)`` for every outcome whose
    probability exceeds ``PRUNE_TOL``.
    """
    layout = state.layout
    layout.check_index(j)
    axis = j - 1
    tensor = state.tensor
    branches = []
    for nu in range(layout.dims[axis]):
        index = [slice(None)] * layout.num_qudits
        index[axis] = nu
        prob = float(np.sum(np.abs(tensor[tuple(index)]) ** 2))
        if prob <= PRUNE_TOL:
            continue
        projected = np.zeros_like(tensor)
        projected[tuple(index)] = tensor[tuple(index)]
        branches.append(
            (nu, prob, StateVector(layout, projected.reshape(-1) / math.sqrt(prob)))
        )
    return branches


def run_sequence(
    initial: StateVector, moves: Sequence[tuple[int, Unitary]]
) -> list[RunResult]:
    """Apply-then-measure each move in order, branching on every outcome.

    Results come out in depth-first order with smaller outcomes first.
    """
    seen = set()
    for j, op in moves:
        if j in seen:
            raise RepeatedQudit(f"qudit {j} appears more than once", qudit=j)
        seen.add(j)
        initial.layout.check_index(j)
        if op.dim != initial.layout.dims[j - 1]:
            raise DimensionMismatch(
                f"operator of dim {op.dim} for qudit {j} of dim {initial.layout.dims[j - 1]}",
                qudit=j,
            )

    results: list[RunResult] = []

    def expand(state, depth, records, prob):
        if depth == len(moves):
            results.append(RunResult(tuple(records), prob, state))
            return
        j, op = moves[depth]
        evolved = apply_on_qudit(state, j, op)
        for nu, p, post in measure_qudit(evolved, j):
            expand(post, depth + 1, records + [MoveRecord(j, op, nu)], prob * p)

    expand(initial, 0, [], 1.0)
    return results
