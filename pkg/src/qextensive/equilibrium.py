"""Pure-strategy Nash equilibria of quantum extensive games with finite operator sets."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import classical
from .classical import ExtensiveGame, NormalFormTable
from .errors import ExplosionGuard, GammaOutOfRange, NotARealization
from .qgame import (
    QStrategyProfile,
    QuantumExtensiveGame,
    check_realization,
    expected_utility,
    information_sets,
)

TIE_TOL = 1e-12
PROFILE_CAP = 10**6
DEFAULT_SWEEP_POINTS = 25


@dataclass(eq=False)
class ProfileTable(NormalFormTable):
    """Normal-form table whose strategies are operator choices.

    ``strategies[i][k]`` is a tuple of operator names, one per information
    set of player i+1 (ordered by qudit); ``choices`` holds the matching
    ``(player, qudit) -> Unitary`` maps.
    """

    game: QuantumExtensiveGame | None = None
    choices: list[list[dict]] = field(default_factory=list)

    def profile(self, index: Sequence[int]) -> QStrategyProfile:
        merged = {}
        for i, k in enumerate(index):
            merged.update(self.choices[i][k])
        return QStrategyProfile(merged)

    def label(self, index: Sequence[int]) -> str:
        parts = []
        for i, k in enumerate(index):
            names = self.strategies[i][k]
            if len(names) == 1:
                parts.append(f"{i + 1}:{names[0]}")
            else:
                parts.extend(f"{i + 1}/{s}:{n}" for s, n in enumerate(names, start=1))
        return ",".join(parts)


def _player_strategies(game: QuantumExtensiveGame, player: int):
    sets = information_sets(game.form).get(player, [])
    menus = [game.form.operator_sets[s.qudit - 1].members for s in sets]
    labels, choices = [], []
    for combo in itertools.product(*menus):
        labels.append(tuple(op.name for op in combo))
        choices.append({s.key: op for s, op in zip(sets, combo)})
    return labels, choices


def build_profile_table(
    game: QuantumExtensiveGame, cap: int = PROFILE_CAP, max_workers: int | None = None
) -> ProfileTable:
    """Expected utilities of every pure profile built from the finite operator menus."""
    per_player = [_player_strategies(game, i) for i in game.form.players]
    counts = tuple(len(labels) for labels, _ in per_player)
    total = math.prod(counts)
    if total > cap:
        raise ExplosionGuard(f"{total} strategy profiles exceed the cap of {cap}")
    table = ProfileTable(
        strategies=[labels for labels, _ in per_player],
        payoffs=np.zeros(counts + (game.num_players,)),
        game=game,
        choices=[choices for _, choices in per_player],
    )
    indices = list(np.ndindex(*counts))

    def evaluate(index):
        return expected_utility(game, table.profile(index))

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            values = list(pool.map(evaluate, indices))
    else:
        values = [evaluate(index) for index in indices]
    for index, value in zip(indices, values):
        table.payoffs[index] = value
    return table


def pure_nash_quantum(table: NormalFormTable, tol: float = TIE_TOL) -> list[tuple[int, ...]]:
    return classical.pure_nash(table, tol)


def deviation_gaps(table: NormalFormTable, profile: Sequence[int]) -> list[dict[int, float]]:
    """Per player, ``{alternative index: u_i(profile) - u_i(deviation)}``."""
    gaps = []
    for i, gains in enumerate(classical.deviation_gains(table, profile)):
        gaps.append({k: float(-g) for k, g in enumerate(gains) if k != profile[i]})
    return gaps


@dataclass
class SweepRow:
    gamma: float
    equilibria: list[str]
    payoffs: list[np.ndarray]
    profiles: list[tuple[int, ...]] = field(default_factory=list, repr=False)


def default_gamma_grid(points: int = DEFAULT_SWEEP_POINTS) -> np.ndarray:
    """Uniform grid on the open interval (0, π), endpoints excluded."""
    return np.linspace(0.0, math.pi, points + 2)[1:-1]


def sweep_gamma(
    template: Callable[[float], QuantumExtensiveGame],
    gammas: Sequence[float],
    admissible: tuple[float, float] = (0.0, math.pi),
    open_interval: bool = True,
    max_workers: int | None = None,
) -> list[SweepRow]:
    lo, hi = admissible
    for g in gammas:
        inside = lo < g < hi if open_interval else lo <= g <= hi
        if not inside:
            raise GammaOutOfRange(f"gamma={g} is outside the admissible range", gamma=g)

    def row(g):
        table = build_profile_table(template(float(g)))
        eq = pure_nash_quantum(table)
        return SweepRow(
            float(g),
            [table.label(p) for p in eq],
            [table.payoff(p).copy() for p in eq],
            eq,
        )

    ordered = sorted(float(g) for g in gammas)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            return list(pool.map(row, ordered))
    return [row(g) for g in ordered]


@dataclass
class ComparisonReport:
    classical_equilibria: list[tuple]
    classical_payoffs: list[np.ndarray]
    rows: list[SweepRow]
    flags: list[str]

    @property
    def classical_floor(self) -> np.ndarray | None:
        """Componentwise minimum over classical equilibrium payoffs."""
        if not self.classical_payoffs:
            return None
        return np.min(np.stack(self.classical_payoffs), axis=0)


def classical_comparison(
    qgame: QuantumExtensiveGame,
    cgame: ExtensiveGame,
    template: Callable[[float], QuantumExtensiveGame] | None = None,
    gammas: Sequence[float] | None = None,
) -> ComparisonReport:
    """Classical pure equilibria next to quantum ones, with Pareto flags.

    Without a template only ``qgame`` itself is analysed (one row, gamma NaN).
    """
    if not check_realization(qgame, cgame).ok:
        raise NotARealization("the quantum game is not a realization of the classical game")
    ctable = classical.strategic_form(cgame)
    ceq = classical.pure_nash(ctable)
    cpay = [ctable.payoff(p).copy() for p in ceq]

    if template is None:
        table = build_profile_table(qgame)
        eq = pure_nash_quantum(table)
        rows = [SweepRow(math.nan, [table.label(p) for p in eq], [table.payoff(p).copy() for p in eq], eq)]
    else:
        rows = sweep_gamma(template, default_gamma_grid() if gammas is None else gammas)

    flags = []
    floor = np.min(np.stack(cpay), axis=0) if cpay else None
    for r in rows:
        for label, u in zip(r.equilibria, r.payoffs):
            for c_profile, c in zip(ceq, cpay):
                if np.all(u > c + TIE_TOL):
                    flags.append(
                        f"gamma={r.gamma:.12g}: {label} strictly improves on classical "
                        f"{ctable.labels(c_profile)} for every player"
                    )
            if floor is not None and len(cpay) > 1 and np.all(u > floor + TIE_TOL):
                flags.append(
                    f"gamma={r.gamma:.12g}: {label} strictly exceeds the classical "
                    f"guaranteed payoffs {floor.tolist()}"
                )
    return ComparisonReport([ctable.labels(p) for p in ceq], cpay, rows, flags)
