"""Finite classical extensive games with perfect recall.

Histories are tuples of opaque action labels; the empty tuple is the root.
Players are numbered 1..n and the chance mover is ``CHANCE``.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ExplosionGuard, InvalidGame, NotABijection, StrategyFormMismatch

History = tuple[str, ...]
CHANCE = "c"
ROOT: History = ()

PROB_TOL = 1e-9
PAYOFF_TOL = 1e-9
TIE_TOL = 1e-12
PROFILE_CAP = 10**6
HISTORY_CAP = 10**4


def history_key(h: History) -> str:
    return ",".join(h)


def parse_history_key(text: str) -> History:
    text = text.strip()
    return tuple(a.strip() for a in text.split(",")) if text else ()


def _history_order(h: History):
    return (len(h), h)


@dataclass(eq=False)
class GameForm:
    num_players: int
    histories: frozenset
    player_fn: Mapping[History, int | str]
    info_sets: Mapping[int, Sequence[frozenset]]
    chance_fn: Mapping[History, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        self.histories = frozenset(tuple(h) for h in self.histories)
        self.info_sets = {
            int(i): tuple(
                sorted((frozenset(s) for s in sets), key=lambda s: min(map(_history_order, s)))
            )
            for i, sets in self.info_sets.items()
        }
        children = defaultdict(set)
        for h in self.histories:
            if h:
                children[h[:-1]].add(h[-1])
        self._children = {h: tuple(sorted(a)) for h, a in children.items()}
        self._set_of = {}
        for i, sets in self.info_sets.items():
            for k, s in enumerate(sets):
                for h in s:
                    self._set_of[h] = (i, k)

    @property
    def players(self) -> range:
        return range(1, self.num_players + 1)

    def actions(self, h: History) -> tuple[str, ...]:
        """A(h), sorted lexicographically."""
        return self._children.get(tuple(h), ())

    def is_terminal(self, h: History) -> bool:
        return not self._children.get(tuple(h))

    def terminals(self) -> frozenset:
        return frozenset(h for h in self.histories if self.is_terminal(h))

    def nonterminals(self) -> list[History]:
        return sorted((h for h in self.histories if not self.is_terminal(h)), key=_history_order)

    def ordered_histories(self) -> list[History]:
        return sorted(self.histories, key=_history_order)

    def info_set_of(self, h: History) -> tuple[int, int] | None:
        """(player, index into ``info_sets[player]``) for a player history."""
        return self._set_of.get(tuple(h))

    def has_chance(self) -> bool:
        return any(p == CHANCE for p in self.player_fn.values())


@dataclass(eq=False)
class ExtensiveGame:
    form: GameForm
    utilities: Mapping[History, Sequence[float]]

    def __post_init__(self):
        self.utilities = {
            tuple(h): np.asarray(u, dtype=float) for h, u in self.utilities.items()
        }

    @property
    def num_players(self) -> int:
        return self.form.num_players


def terminal_histories(form: GameForm) -> frozenset:
    return form.terminals()


def validate_form(form: GameForm) -> list[str]:
    """Structural violations of ``form``; an empty list means OK."""
    problems = []
    H = form.histories
    if ROOT not in H:
        problems.append("prefix closure: the empty history is missing")
    for h in sorted(H, key=_history_order):
        for k in range(len(h)):
            if h[:k] not in H:
                problems.append(
                    f"prefix closure: ({history_key(h)}) is present but its prefix "
                    f"({history_key(h[:k])}) is not"
                )
                break

    nonterminal = set(form.nonterminals())
    for h in sorted(nonterminal, key=_history_order):
        if h not in form.player_fn:
            problems.append(f"player function undefined at ({history_key(h)})")
    for h, p in form.player_fn.items():
        if h not in nonterminal:
            problems.append(f"player function defined at non-decision history ({history_key(h)})")
        elif p != CHANCE and p not in form.players:
            problems.append(f"unknown player {p!r} at ({history_key(h)})")

    for h in sorted(nonterminal, key=_history_order):
        if form.player_fn.get(h) != CHANCE:
            continue
        dist = form.chance_fn.get(h)
        if dist is None:
            problems.append(f"chance distribution missing at ({history_key(h)})")
            continue
        if set(dist) != set(form.actions(h)):
            problems.append(f"chance distribution at ({history_key(h)}) does not cover A(h)")
        if any(p < 0 for p in dist.values()) or abs(sum(dist.values()) - 1.0) > PROB_TOL:
            problems.append(f"chance distribution at ({history_key(h)}) does not sum to 1")
    for h in form.chance_fn:
        if form.player_fn.get(h) != CHANCE:
            problems.append(f"chance distribution given at non-chance history ({history_key(h)})")

    problems.extend(_check_partition(form, nonterminal))
    if not problems:
        problems.extend(_check_perfect_recall(form))
    return problems


def _check_partition(form: GameForm, nonterminal) -> list[str]:
    problems = []
    for i in form.players:
        own = {h for h in nonterminal if form.player_fn.get(h) == i}
        seen = set()
        for s in form.info_sets.get(i, ()):
            for h in s:
                if h in seen:
                    problems.append(f"information sets of player {i} overlap at ({history_key(h)})")
                if h not in own:
                    problems.append(
                        f"information set of player {i} contains ({history_key(h)}) "
                        f"where player {i} does not move"
                    )
                seen.add(h)
            action_sets = {form.actions(h) for h in s}
            if len(action_sets) > 1:
                members = "; ".join(f"({history_key(h)})" for h in sorted(s, key=_history_order))
                problems.append(
                    f"action-set mismatch in an information set of player {i}: {members}"
                )
        for h in sorted(own - seen, key=_history_order):
            problems.append(f"history ({history_key(h)}) of player {i} is in no information set")
    for i in form.info_sets:
        if i not in form.players:
            problems.append(f"information sets given for unknown player {i}")
    return problems


def _experience(form: GameForm, h: History, player: int):
    """Player's own (information set, action) record along ``h``."""
    record = []
    for k in range(len(h)):
        if form.player_fn.get(h[:k]) == player:
            record.append((form.info_set_of(h[:k]), h[k]))
    return tuple(record)


def _check_perfect_recall(form: GameForm) -> list[str]:
    problems = []
    for i, sets in form.info_sets.items():
        for s in sets:
            experiences = {_experience(form, h, i) for h in s}
            if len(experiences) > 1:
                members = "; ".join(f"({history_key(h)})" for h in sorted(s, key=_history_order))
                problems.append(f"perfect recall fails for player {i} on {{{members}}}")
    return problems


def validate_game(game: ExtensiveGame) -> list[str]:
    problems = validate_form(game.form)
    terminals = game.form.terminals()
    for h in sorted(terminals - set(game.utilities), key=_history_order):
        problems.append(f"no utility for terminal history ({history_key(h)})")
    for h, u in game.utilities.items():
        if h not in terminals:
            problems.append(f"utility given for non-terminal history ({history_key(h)})")
        elif len(u) != game.num_players:
            problems.append(f"utility at ({history_key(h)}) has {len(u)} entries")
    return problems


def check_game(game: ExtensiveGame) -> ExtensiveGame:
    problems = validate_game(game)
    if problems:
        raise InvalidGame("; ".join(problems), violations=problems)
    return game


# strategies ---------------------------------------------------------------

def pure_strategies(form: GameForm, player: int) -> list[tuple[str, ...]]:
    """All pure strategies of ``player``, one action per information set."""
    sets = form.info_sets.get(player, ())
    choices = [form.actions(next(iter(s))) for s in sets]
    return [tuple(c) for c in itertools.product(*choices)]


def _check_profile(form: GameForm, profile) -> None:
    if len(profile) != form.num_players:
        raise StrategyFormMismatch(f"need {form.num_players} strategies, got {len(profile)}")
    for i, strategy in zip(form.players, profile):
        sets = form.info_sets.get(i, ())
        if len(strategy) != len(sets):
            raise StrategyFormMismatch(
                f"player {i} has {len(sets)} information sets, strategy covers {len(strategy)}"
            )
        for s, action in zip(sets, strategy):
            if action not in form.actions(next(iter(s))):
                raise StrategyFormMismatch(f"action {action!r} not available to player {i}")


def consistent_terminals(game: ExtensiveGame, profile) -> list[tuple[History, float]]:
    """Terminal histories reached by ``profile`` with their chance probabilities."""
    form = game.form
    _check_profile(form, profile)
    reached = []

    def walk(h, prob):
        if form.is_terminal(h):
            reached.append((h, prob))
            return
        mover = form.player_fn[h]
        if mover == CHANCE:
            for a, p in sorted(form.chance_fn[h].items()):
                if p > 0:
                    walk(h + (a,), prob * p)
        else:
            _, k = form.info_set_of(h)
            walk(h + (profile[mover - 1][k],), prob)

    walk(ROOT, 1.0)
    return reached


@dataclass(eq=False)
class NormalFormTable:
    """Strategy labels per player and a payoff tensor of shape (*counts, n)."""

    strategies: list[list]
    payoffs: np.ndarray

    @property
    def num_players(self) -> int:
        return len(self.strategies)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.strategies)

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return np.ndindex(*self.shape)

    def payoff(self, profile: Sequence[int]) -> np.ndarray:
        return self.payoffs[tuple(profile)]

    def labels(self, profile: Sequence[int]) -> tuple:
        return tuple(self.strategies[i][k] for i, k in enumerate(profile))

    def index_of(self, labels: Sequence) -> tuple[int, ...]:
        return tuple(self.strategies[i].index(lab) for i, lab in enumerate(labels))


def strategic_form(game: ExtensiveGame, cap: int = PROFILE_CAP) -> NormalFormTable:
    form = game.form
    strategies = [pure_strategies(form, i) for i in form.players]
    total = math.prod(len(s) for s in strategies)
    if total > cap:
        raise ExplosionGuard(f"{total} strategy profiles exceed the cap of {cap}")
    payoffs = np.zeros(tuple(len(s) for s in strategies) + (form.num_players,))
    for idx in np.ndindex(*payoffs.shape[:-1]):
        profile = [strategies[i][k] for i, k in enumerate(idx)]
        for h, p in consistent_terminals(game, profile):
            payoffs[idx] += p * game.utilities[h]
    return NormalFormTable(strategies, payoffs)


def deviation_gains(table: NormalFormTable, profile: Sequence[int]) -> list[np.ndarray]:
    """Per player, u_i(deviation) - u_i(profile) over all own strategies."""
    profile = tuple(profile)
    gains = []
    for i in range(table.num_players):
        base = table.payoffs[profile][i]
        index = list(profile)
        index[i] = slice(None)
        gains.append(table.payoffs[tuple(index)][:, i] - base)
    return gains


def is_nash(table: NormalFormTable, profile: Sequence[int], tol: float = TIE_TOL) -> bool:
    return all(np.all(g <= tol) for g in deviation_gains(table, profile))


def pure_nash(table: NormalFormTable, tol: float = TIE_TOL) -> list[tuple[int, ...]]:
    """Every profile at which no unilateral deviation gains more than ``tol``."""
    return [p for p in table.profiles() if is_nash(table, p, tol)]


# isomorphism --------------------------------------------------------------

@dataclass
class IsomorphismReport:
    ok: bool
    violations: list[str]

    def __bool__(self):
        return self.ok


def check_isomorphism(
    g1: ExtensiveGame, g2: ExtensiveGame, xi: Mapping[History, History]
) -> IsomorphismReport:
    f1, f2 = g1.form, g2.form
    xi = {tuple(k): tuple(v) for k, v in xi.items()}
    if set(xi) != set(f1.histories):
        raise NotABijection("xi is not defined on exactly the histories of the first game")
    if set(xi.values()) != set(f2.histories) or len(set(xi.values())) != len(xi):
        raise NotABijection("xi does not map onto the histories of the second game bijectively")

    v = []
    if f1.num_players != f2.num_players:
        v.append(f"player sets differ: {f1.num_players} vs {f2.num_players}")
    if xi.get(ROOT) != ROOT:
        v.append("root condition: xi(empty) is not the empty history")
    for h in f1.ordered_histories():
        if h and xi[h][:-1] != xi[h[:-1]]:
            v.append(f"prefix condition: xi({history_key(h)}) does not extend xi({history_key(h[:-1])})")
    for h in f1.nonterminals():
        h2 = xi[h]
        if f2.is_terminal(h2) or f1.player_fn.get(h) != f2.player_fn.get(h2):
            v.append(f"player condition fails at ({history_key(h)})")
            continue
        if f1.player_fn.get(h) == CHANCE:
            d1, d2 = f1.chance_fn[h], f2.chance_fn[h2]
            for a, p in d1.items():
                image = xi[h + (a,)]
                if abs(d2.get(image[-1] if image else None, -1.0) - p) > PROB_TOL:
                    v.append(f"chance condition fails at ({history_key(h)}) action {a}")
    for i, sets in f1.info_sets.items():
        targets = {frozenset(s) for s in f2.info_sets.get(i, ())}
        for s in sets:
            if frozenset(xi[h] for h in s) not in targets:
                members = "; ".join(f"({history_key(h)})" for h in sorted(s, key=_history_order))
                v.append(f"information-set condition fails for player {i} on {{{members}}}")
    for h in sorted(f1.terminals(), key=_history_order):
        h2 = xi[h]
        if not f2.is_terminal(h2):
            v.append(f"terminal ({history_key(h)}) maps to a non-terminal history")
            continue
        u1, u2 = g1.utilities[h], g2.utilities[h2]
        if len(u1) != len(u2) or not np.allclose(u1, u2, atol=PAYOFF_TOL, rtol=0):
            v.append(f"utility condition fails at ({history_key(h)}): {list(u1)} vs {list(u2)}")
    return IsomorphismReport(not v, v)


def _signatures(game: ExtensiveGame) -> dict[History, tuple]:
    """Bottom-up subtree labels, blind to action names and information sets."""
    form = game.form
    sig = {}
    for h in sorted(form.histories, key=lambda h: -len(h)):
        if form.is_terminal(h):
            sig[h] = ("T", tuple(round(float(x), 9) for x in game.utilities[h]))
            continue
        mover = form.player_fn[h]
        if mover == CHANCE:
            kids = sorted(
                (round(form.chance_fn[h][a], 9), sig[h + (a,)]) for a in form.actions(h)
            )
        else:
            kids = sorted(sig[h + (a,)] for a in form.actions(h))
        info = len(form.info_sets[mover][form.info_set_of(h)[1]]) if mover != CHANCE else 0
        sig[h] = (str(mover), info, tuple(kids))
    return sig


def mismatch_reason(g1: ExtensiveGame, g2: ExtensiveGame) -> str | None:
    """A cheap structural obstruction to isomorphism, if one is visible."""
    f1, f2 = g1.form, g2.form
    if f1.num_players != f2.num_players:
        return f"player counts differ ({f1.num_players} vs {f2.num_players})"
    if len(f1.histories) != len(f2.histories):
        return f"history counts differ ({len(f1.histories)} vs {len(f2.histories)})"
    if len(f1.terminals()) != len(f2.terminals()):
        return f"terminal counts differ ({len(f1.terminals())} vs {len(f2.terminals())})"
    s1, s2 = _signatures(g1), _signatures(g2)
    if s1[ROOT] != s2[ROOT]:
        return "labeled tree shapes differ (player assignment, information-set sizes or utilities)"
    return None


def search_isomorphism(
    g1: ExtensiveGame, g2: ExtensiveGame, cap: int = HISTORY_CAP
) -> dict[History, History] | None:
    """Find xi satisfying all isomorphism conditions by tree backtracking."""
    f1, f2 = g1.form, g2.form
    if max(len(f1.histories), len(f2.histories)) > cap:
        raise ExplosionGuard(f"games exceed the history cap of {cap}")
    if mismatch_reason(g1, g2) is not None:
        return None
    s1, s2 = _signatures(g1), _signatures(g2)

    xi = {ROOT: ROOT}
    set_map: dict = {}
    set_inv: dict = {}
    queue = [ROOT]

    def bind_set(h, h2):
        """Tie the information sets of h and h2; returns an undo token."""
        mover = f1.player_fn.get(h)
        if mover is None or mover == CHANCE:
            return True, None
        a, b = f1.info_set_of(h), f2.info_set_of(h2)
        if a in set_map or b in set_inv:
            return set_map.get(a) == b and set_inv.get(b) == a, None
        set_map[a], set_inv[b] = b, a
        return True, a

    def unbind(token):
        if token is not None:
            del set_inv[set_map.pop(token)]

    def pairings(h, h2):
        kids1 = list(f1.actions(h))
        kids2 = list(f2.actions(h2))
        chance = f1.player_fn.get(h) == CHANCE

        def label(form, sig, x, a):
            base = sig[x + (a,)]
            return (round(form.chance_fn[x][a], 9), base) if chance else base

        def rec(k, used):
            if k == len(kids1):
                yield []
                return
            want = label(f1, s1, h, kids1[k])
            for b in kids2:
                if b not in used and label(f2, s2, h2, b) == want:
                    used.add(b)
                    for rest in rec(k + 1, used):
                        yield [(kids1[k], b)] + rest
                    used.discard(b)

        return rec(0, set())

    def solve(pos):
        if pos == len(queue):
            return True
        h = queue[pos]
        h2 = xi[h]
        if f1.is_terminal(h):
            return solve(pos + 1)
        for pairing in pairings(h, h2):
            tokens, ok, added = [], True, []
            for a, b in pairing:
                c1, c2 = h + (a,), h2 + (b,)
                good, tok = bind_set(c1, c2)
                tokens.append(tok)
                if not good:
                    ok = False
                    break
                xi[c1] = c2
                added.append(c1)
            if ok:
                queue.extend(added)
                if solve(pos + 1):
                    return True
                del queue[len(queue) - len(added):]
            for c1 in added:
                del xi[c1]
            for tok in reversed(tokens):
                unbind(tok)
        return False

    # the root's own information set must be tied too
    good, _ = bind_set(ROOT, ROOT)
    if not good or not solve(0):
        return None
    return dict(xi)
