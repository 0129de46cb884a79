"""Extensive games played by measuring qudits one at a time.

A history is recorded only by its measurement outcomes: an ``OutcomeClass``
is the ordered list of ``(qudit, outcome)`` steps, written as the text key
``"ν@j,ν@j,..."`` (outcome first, qudit numbered from 1). The empty class
is the root.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import classical
from .classical import ExtensiveGame, GameForm, History
from .eisert import eisert_operator, eisert_params_of
from .errors import (
    ChanceNotSupported,
    DimensionMismatch,
    IncompleteProfile,
    InvalidGame,
    NotTerminal,
    StrategyFormMismatch,
    TerminalClass,
)
from .qstate import (
    TOL,
    MoveRecord,
    QuditLayout,
    RunResult,
    StateVector,
    Unitary,
    apply_on_qudit,
    basis_shift_operator,
    measure_qudit,
    shift_of,
)

_STEP = re.compile(r"^\s*(\d+)\s*@\s*(\d+)\s*$")


@dataclass(frozen=True, order=True)
class OutcomeClass:
    steps: tuple[tuple[int, int], ...] = ()  # (qudit, outcome)

    @classmethod
    def parse(cls, key: str) -> "OutcomeClass":
        key = key.strip()
        if key in ("", "∅"):
            return cls(())
        steps = []
        for part in key.split(","):
            m = _STEP.match(part)
            if not m:
                raise ValueError(f"bad class step {part!r}; expected 'outcome@qudit'")
            steps.append((int(m.group(2)), int(m.group(1))))
        return cls(tuple(steps))

    def key(self) -> str:
        return ",".join(f"{nu}@{j}" for j, nu in self.steps)

    def __str__(self):
        return "[" + (self.key() or "∅") + "]"

    def __len__(self):
        return len(self.steps)

    @property
    def qudits(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.steps)

    @property
    def parent(self) -> "OutcomeClass":
        return OutcomeClass(self.steps[:-1])

    def extend(self, j: int, nu: int) -> "OutcomeClass":
        return OutcomeClass(self.steps + ((j, nu),))

    def prefix(self, k: int) -> "OutcomeClass":
        return OutcomeClass(self.steps[:k])


ROOT_CLASS = OutcomeClass()


def _class_order(c: OutcomeClass):
    return (len(c), c.steps)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Actions available on one qudit.

    ``members`` are the named operators used when strategies are enumerated.
    With ``family="eisert"`` any two-parameter Eisert operator is admissible
    in a profile as well, and can be named ``U(theta,phi)``.
    """

    dim: int
    members: tuple[Unitary, ...]
    family: str | None = None

    def __post_init__(self):
        names = [u.name for u in self.members]
        if any(n is None for n in names) or len(set(names)) != len(names):
            raise ValueError("operator set members need unique names")
        for u in self.members:
            if u.dim != self.dim:
                raise DimensionMismatch(f"operator {u.name} has dim {u.dim}, expected {self.dim}")
        if self.family not in (None, "eisert"):
            raise ValueError(f"unknown operator family {self.family!r}")
        if self.family == "eisert" and self.dim != 2:
            raise DimensionMismatch("the Eisert family acts on qubits only")

    @classmethod
    def basis_shifts(cls, d: int, phases: Sequence[Sequence[float]] | None = None) -> "OperatorSet":
        ops = tuple(
            basis_shift_operator(d, t, None if phases is None else phases[t]) for t in range(d)
        )
        return cls(d, ops)

    @classmethod
    def eisert(cls, members: Iterable[tuple[float, float]] = ((0.0, 0.0), (math.pi, 0.0))) -> "OperatorSet":
        return cls(2, tuple(eisert_operator(t, p) for t, p in members), family="eisert")

    @property
    def names(self) -> list[str]:
        return [u.name for u in self.members]

    def get(self, name: str) -> Unitary:
        for u in self.members:
            if u.name == name:
                return u
        if self.family == "eisert":
            m = re.fullmatch(r"\s*U\(\s*([^,]+),\s*([^)]+)\)\s*", name)
            if m:
                return eisert_operator(float(m.group(1)), float(m.group(2)))
        raise KeyError(name)

    def __contains__(self, op: Unitary) -> bool:
        if any(op is u or op.same_matrix(u) for u in self.members):
            return True
        return self.family == "eisert" and eisert_params_of(op) is not None

    def covered_shifts(self) -> set[int]:
        shifts = {shift_of(u) for u in self.members} - {None}
        if self.family == "eisert":
            shifts |= {0, 1}  # U(0,0) = I and U(pi,0) = C
        return shifts


@dataclass(eq=False)
class QuantumGameForm:
    num_players: int
    initial_state: StateVector
    operator_sets: Sequence[OperatorSet]
    classes: frozenset
    player_fn: Mapping[OutcomeClass, int]

    def __post_init__(self):
        self.classes = frozenset(self.classes)
        self.operator_sets = tuple(self.operator_sets)
        self.player_fn = dict(self.player_fn)
        kids = defaultdict(set)
        for c in self.classes:
            if c.steps:
                kids[c.parent].add(c)
        self._children = {c: tuple(sorted(v)) for c, v in kids.items()}

    @property
    def layout(self) -> QuditLayout:
        return self.initial_state.layout

    @property
    def players(self) -> range:
        return range(1, self.num_players + 1)

    def children(self, c: OutcomeClass) -> tuple[OutcomeClass, ...]:
        return self._children.get(c, ())

    def is_terminal(self, c: OutcomeClass) -> bool:
        return not self._children.get(c)

    def ordered_classes(self) -> list[OutcomeClass]:
        return sorted(self.classes, key=_class_order)


@dataclass(eq=False)
class QuantumExtensiveGame:
    form: QuantumGameForm
    payoffs: Mapping[OutcomeClass, Sequence[float]]

    def __post_init__(self):
        self.payoffs = {c: np.asarray(u, dtype=float) for c, u in self.payoffs.items()}

    @property
    def num_players(self) -> int:
        return self.form.num_players


@dataclass(frozen=True)
class InfoSet:
    player: int
    qudit: int
    classes: tuple[OutcomeClass, ...]

    @property
    def key(self) -> tuple[int, int]:
        return (self.player, self.qudit)


# structure ---------------------------------------------------------------

def validate_classes(classes: Iterable[OutcomeClass], layout: QuditLayout) -> list[str]:
    """Violations of the class-collection conditions; empty means OK."""
    H = set(classes)
    problems = []
    m = layout.num_qudits
    for c in sorted(H, key=_class_order):
        qs = c.qudits
        if len(set(qs)) != len(qs):
            problems.append(f"class {c} acts on a qudit twice")
        for j, nu in c.steps:
            if not 1 <= j <= m:
                problems.append(f"class {c} names qudit {j} outside 1..{m}")
            elif not 0 <= nu < layout.dims[j - 1]:
                problems.append(f"class {c} has outcome {nu} outside qudit {j}'s range")
    if problems:
        return problems

    if ROOT_CLASS not in H:
        problems.append("condition (a): the empty class is missing")
    for c in sorted(H, key=_class_order):
        for k in range(1, len(c) + 1):
            j = c.steps[k - 1][0]
            base = c.prefix(k - 1)
            for nu in range(layout.dims[j - 1]):
                sib = base.extend(j, nu)
                if sib not in H:
                    problems.append(f"condition (b): class {sib} is missing (required by {c})")
    next_q = defaultdict(set)
    for c in H:
        if c.steps:
            next_q[c.parent].add(c.steps[-1][0])
    for parent in sorted(next_q, key=_class_order):
        if len(next_q[parent]) > 1:
            qs = ", ".join(map(str, sorted(next_q[parent])))
            problems.append(f"condition (c): classes after {parent} continue on different qudits {qs}")
    return list(dict.fromkeys(problems))


def validate_qform(form: QuantumGameForm) -> list[str]:
    layout = form.layout
    problems = []
    if form.num_players < 1:
        problems.append("at least one player is required")
    if layout.num_qudits < form.num_players:
        problems.append(
            f"{layout.num_qudits} qudits cannot host {form.num_players} players (need m >= n)"
        )
    if abs(form.initial_state.norm() - 1.0) > TOL:
        problems.append("initial state is not normalized")
    if len(form.operator_sets) != layout.num_qudits:
        problems.append(f"{len(form.operator_sets)} operator sets for {layout.num_qudits} qudits")
    else:
        for j, ops in enumerate(form.operator_sets, start=1):
            if ops.dim != layout.dims[j - 1]:
                problems.append(f"operator set of qudit {j} has dim {ops.dim}")
                continue
            missing = set(range(ops.dim)) - ops.covered_shifts()
            if missing:
                ts = ", ".join(f"V{t}" for t in sorted(missing))
                problems.append(f"operator set of qudit {j} lacks basis shifts {ts}")
    class_problems = validate_classes(form.classes, layout)
    problems.extend(class_problems)
    if class_problems:
        return problems
    nonterminal = {c for c in form.classes if not form.is_terminal(c)}
    for c in sorted(nonterminal - set(form.player_fn), key=_class_order):
        problems.append(f"player function undefined at {c}")
    for c, p in form.player_fn.items():
        if c not in nonterminal:
            problems.append(f"player function defined at terminal or unknown class {c}")
        elif p not in form.players:
            problems.append(f"player function names unknown player {p!r} at {c}")
    return problems


def validate_qgame(game: QuantumExtensiveGame) -> list[str]:
    problems = validate_qform(game.form)
    terminals = {c for c in game.form.classes if game.form.is_terminal(c)}
    for c in sorted(terminals - set(game.payoffs), key=_class_order):
        problems.append(f"no payoff for terminal class {c}")
    for c, u in game.payoffs.items():
        if c not in terminals:
            problems.append(f"payoff given for non-terminal class {c}")
        elif len(u) != game.num_players:
            problems.append(f"payoff at {c} has {len(u)} entries for {game.num_players} players")
    return problems


def check_qgame(game: QuantumExtensiveGame) -> QuantumExtensiveGame:
    problems = validate_qgame(game)
    if problems:
        raise InvalidGame("; ".join(problems), violations=problems)
    return game


def terminal_classes(form: QuantumGameForm) -> frozenset:
    return frozenset(c for c in form.classes if form.is_terminal(c))


def next_qudit(form: QuantumGameForm, c: OutcomeClass) -> int:
    kids = form.children(c)
    if not kids:
        raise TerminalClass(f"class {c} is terminal")
    return kids[0].steps[-1][0]


def information_sets(form: QuantumGameForm) -> dict[int, list[InfoSet]]:
    """Per player, information sets ordered by qudit."""
    groups = defaultdict(list)
    for c in form.ordered_classes():
        if not form.is_terminal(c):
            groups[(form.player_fn[c], next_qudit(form, c))].append(c)
    sets = {i: [] for i in form.players}
    for (i, j), members in sorted(groups.items()):
        sets.setdefault(i, []).append(InfoSet(i, j, tuple(members)))
    return sets


# payoffs -----------------------------------------------------------------

def class_projector_diagonal(layout: QuditLayout, c: OutcomeClass) -> np.ndarray:
    """0/1 diagonal of the projector onto basis states agreeing with ``c``."""
    mask = np.ones(layout.dims, dtype=np.int64)
    for j, nu in c.steps:
        keep = np.zeros(layout.dims[j - 1], dtype=np.int64)
        keep[nu] = 1
        shape = [1] * layout.num_qudits
        shape[j - 1] = layout.dims[j - 1]
        mask = mask * keep.reshape(shape)
    return mask.reshape(-1)


def class_projector(layout: QuditLayout, c: OutcomeClass) -> np.ndarray:
    return np.diag(class_projector_diagonal(layout, c))


def payoff_operator(game: QuantumExtensiveGame) -> np.ndarray:
    """X_e as n real diagonal D×D matrices, shape (n, D, D)."""
    layout = game.form.layout
    diag = np.zeros((game.num_players, layout.size))
    for c in terminal_classes(game.form):
        diag += np.outer(game.payoffs[c], class_projector_diagonal(layout, c))
    return np.stack([np.diag(d) for d in diag])


def check_projector_orthogonality(game: QuantumExtensiveGame) -> bool:
    layout = game.form.layout
    terms = sorted(terminal_classes(game.form), key=_class_order)
    projectors = [class_projector(layout, c) for c in terms]
    for a in range(len(projectors)):
        for b in range(a + 1, len(projectors)):
            if np.any(projectors[a] @ projectors[b]):
                return False
    total = sum(projectors, np.zeros((layout.size, layout.size), dtype=np.int64))
    return bool(np.array_equal(total, np.eye(layout.size, dtype=np.int64)))


def trace_utility(game: QuantumExtensiveGame, state: StateVector, x_e: np.ndarray | None = None) -> np.ndarray:
    """Tr(X_e ρ) per player for the pure state ``state``."""
    if x_e is None:
        x_e = payoff_operator(game)
    rho = state.density_matrix()
    return np.real(np.einsum("nij,ji->n", x_e, rho))


def realizing_run(game: QuantumExtensiveGame, c: OutcomeClass) -> RunResult:
    """A concrete run of basis-shift moves whose outcomes are exactly ``c``.

    At each step the shift is chosen so the wanted outcome has nonzero
    probability, which always exists.
    """
    state = game.form.initial_state
    records, prob = [], 1.0
    for j, nu in c.steps:
        d = state.layout.dims[j - 1]
        marginal = {o: p for o, p, _ in measure_qudit(state, j)}
        start = max(marginal, key=marginal.get)
        op = basis_shift_operator(d, (nu - start) % d)
        evolved = apply_on_qudit(state, j, op)
        hit = [(p, post) for o, p, post in measure_qudit(evolved, j) if o == nu]
        p, state = hit[0]
        prob *= p
        records.append(MoveRecord(j, op, nu))
    return RunResult(tuple(records), prob, state)


def class_utility(game: QuantumExtensiveGame, c: OutcomeClass, verify: bool = False) -> np.ndarray:
    if c not in game.form.classes or not game.form.is_terminal(c):
        raise NotTerminal(f"class {c} is not terminal")
    delta = game.payoffs[c]
    if verify:
        traced = trace_utility(game, realizing_run(game, c).final_state)
        if not np.allclose(traced, delta, atol=TOL, rtol=0):
            raise AssertionError(f"Tr(X_e rho) = {traced} disagrees with payoff {delta} at {c}")
    return delta


# play --------------------------------------------------------------------

@dataclass(eq=False)
class QStrategyProfile:
    """Operators chosen per information set, keyed by (player, qudit)."""

    choices: Mapping[tuple[int, int], Unitary]

    def __post_init__(self):
        self.choices = dict(self.choices)

    @classmethod
    def per_player(cls, game: QuantumExtensiveGame, ops: Mapping[int, Unitary] | Sequence[Unitary]) -> "QStrategyProfile":
        """Same operator at every information set of each player."""
        if not isinstance(ops, Mapping):
            ops = {i: op for i, op in zip(game.form.players, ops)}
        choices = {}
        for i, sets in information_sets(game.form).items():
            for s in sets:
                if i in ops:
                    choices[s.key] = ops[i]
        return cls(choices)

    def operator(self, player: int, qudit: int) -> Unitary:
        try:
            return self.choices[(player, qudit)]
        except KeyError:
            raise IncompleteProfile(
                f"profile has no operator for player {player} on qudit {qudit}",
                player=player,
                qudit=qudit,
            ) from None

    def label(self, game: QuantumExtensiveGame | None = None) -> str:
        if game is None:
            keys = sorted(self.choices)
            return ",".join(f"{i}@{j}:{self.choices[(i, j)].name}" for i, j in keys)
        parts = []
        for i, sets in information_sets(game.form).items():
            for k, s in enumerate(sets, start=1):
                op = self.choices.get(s.key)
                name = op.name if op is not None else "?"
                parts.append(f"{i}:{name}" if len(sets) == 1 else f"{i}/{k}:{name}")
        return ",".join(parts)


def check_profile(game: QuantumExtensiveGame, profile: QStrategyProfile) -> None:
    for i, sets in information_sets(game.form).items():
        for s in sets:
            op = profile.operator(i, s.qudit)
            allowed = game.form.operator_sets[s.qudit - 1]
            if op.dim != allowed.dim:
                raise DimensionMismatch(
                    f"player {i} plays a dim-{op.dim} operator on qudit {s.qudit}"
                )
            if op not in allowed:
                raise StrategyFormMismatch(
                    f"operator {op.name} is not in the operator set of qudit {s.qudit}"
                )


def play_profile(
    game: QuantumExtensiveGame, profile: QStrategyProfile
) -> list[tuple[OutcomeClass, float, RunResult]]:
    """Every terminal class reached under ``profile``, in depth-first order."""
    form = game.form
    check_profile(game, profile)
    reached = []

    def walk(c, state, records, prob):
        if form.is_terminal(c):
            reached.append((c, prob, RunResult(tuple(records), prob, state)))
            return
        j = next_qudit(form, c)
        op = profile.operator(form.player_fn[c], j)
        evolved = apply_on_qudit(state, j, op)
        for nu, p, post in measure_qudit(evolved, j):
            child = c.extend(j, nu)
            if child not in form.classes:
                raise InvalidGame(f"outcome {nu} on qudit {j} leads outside the game at {c}")
            walk(child, post, records + [MoveRecord(j, op, nu)], prob * p)

    walk(ROOT_CLASS, form.initial_state, [], 1.0)
    return reached


def expected_utility(game: QuantumExtensiveGame, profile: QStrategyProfile) -> np.ndarray:
    total = np.zeros(game.num_players)
    for c, p, _ in play_profile(game, profile):
        total += p * game.payoffs[c]
    return total


# realization -------------------------------------------------------------

Labeler = Callable[[InfoSet, int], str]


def canonical_label(info: InfoSet, nu: int) -> str:
    return f"V{nu}:{nu}@{info.qudit}"


def random_labeler(game: QuantumExtensiveGame, rng: np.random.Generator) -> Labeler:
    """Pick, per information set and outcome, a random operator name from the
    qudit's operator set (or a randomly phased shift) as the representative."""
    chosen = {}

    def label(info: InfoSet, nu: int) -> str:
        key = (info.key, nu)
        if key not in chosen:
            ops = game.form.operator_sets[info.qudit - 1]
            if ops.members and rng.random() < 0.5:
                name = ops.members[int(rng.integers(len(ops.members)))].name
            else:
                name = f"V{int(rng.integers(ops.dim))}~{rng.random():.6f}"
            chosen[key] = f"{name}:{nu}@{info.qudit}"
        return chosen[key]

    return label


def representative_histories(
    game: QuantumExtensiveGame, labeler: Labeler = canonical_label
) -> dict[OutcomeClass, History]:
    form = game.form
    owner = {}
    for sets in information_sets(form).values():
        for s in sets:
            for c in s.classes:
                owner[c] = s
    hist = {}
    for c in form.ordered_classes():
        if not c.steps:
            hist[c] = ()
            continue
        parent = c.parent
        hist[c] = hist[parent] + (labeler(owner[parent], c.steps[-1][1]),)
    return hist


def representative_game(
    game: QuantumExtensiveGame, labeler: Labeler = canonical_label
) -> ExtensiveGame:
    """The classical game on one representative history per class."""
    form = game.form
    hist = representative_histories(game, labeler)
    player_fn = {hist[c]: p for c, p in form.player_fn.items()}
    info = {
        i: [frozenset(hist[c] for c in s.classes) for s in sets]
        for i, sets in information_sets(form).items()
    }
    cform = GameForm(form.num_players, frozenset(hist.values()), player_fn, info)
    utilities = {hist[c]: u for c, u in game.payoffs.items()}
    return ExtensiveGame(cform, utilities)


@dataclass
class RealizationResult:
    ok: bool
    xi: dict[History, OutcomeClass] | None = None
    obstruction: str | None = None
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_realization(qgame: QuantumExtensiveGame, cgame: ExtensiveGame) -> RealizationResult:
    """Is ``qgame`` a quantum realization of ``cgame``? Returns the witness ξ."""
    if cgame.form.has_chance():
        raise ChanceNotSupported("quantum realizations are defined for chance-free games only")
    rep = representative_game(qgame)
    hist = representative_histories(qgame)
    back = {h: c for c, h in hist.items()}
    reason = classical.mismatch_reason(cgame, rep)
    if reason is not None:
        return RealizationResult(False, obstruction=reason)
    xi = classical.search_isomorphism(cgame, rep)
    if xi is None:
        return RealizationResult(False, obstruction="no bijection satisfies the isomorphism conditions")
    report = classical.check_isomorphism(cgame, rep, xi)
    if not report.ok:
        return RealizationResult(False, obstruction=report.violations[0], violations=report.violations)
    return RealizationResult(True, xi={h: back[h2] for h, h2 in xi.items()})
