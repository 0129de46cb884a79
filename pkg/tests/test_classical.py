import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qextensive.classical import (
    ExtensiveGame,
    GameForm,
    NormalFormTable,
    check_game,
    check_isomorphism,
    consistent_terminals,
    is_nash,
    pure_nash,
    pure_strategies,
    search_isomorphism,
    strategic_form,
    terminal_histories,
    validate_form,
    validate_game,
)
from qextensive.errors import ExplosionGuard, InvalidGame, NotABijection

PD = {("a0", "b0"): (3, 3), ("a0", "b1"): (0, 5), ("a1", "b0"): (5, 0), ("a1", "b1"): (1, 1)}


def two_stage(a="a", b="b", payoffs=PD, drop=(), actions=None):
    """Γ₁-shaped game: player 1 moves, player 2 moves without seeing it."""
    rename = {"a": a, "b": b}
    actions = actions or {0: ("0", "1"), 1: ("0", "1")}
    hist = {()}
    for k in ("0", "1"):
        hist.add((a + k,))
        for l in actions[int(k)]:
            hist.add((a + k, b + l))
    hist -= set(drop)
    util = {}
    for (x, y), u in payoffs.items():
        h = (rename["a"] + x[1:], rename["b"] + y[1:])
        if h in hist:
            util[h] = np.array(u, dtype=float)
    form = GameForm(
        2,
        hist,
        {(): 1, (a + "0",): 2, (a + "1",): 2},
        {1: [{()}], 2: [{(a + "0",), (a + "1",)}]},
    )
    return ExtensiveGame(form, util)


def brute_nash(table):
    """Definition check without any vectorization."""
    out = []
    for p in itertools.product(*(range(n) for n in table.shape)):
        stable = True
        for i in range(table.num_players):
            for k in range(table.shape[i]):
                q = list(p)
                q[i] = k
                if table.payoffs[tuple(q)][i] > table.payoffs[p][i] + 1e-12:
                    stable = False
        if stable:
            out.append(p)
    return out


# validation ----------------------------------------------------------------

def test_gamma1_valid(gamma1):
    assert validate_game(gamma1) == []
    assert validate_game(two_stage()) == []


def test_prefix_closure_violation():
    g = two_stage(drop=[("a0",)])
    problems = validate_form(g.form)
    assert any("prefix closure" in p and "a0,b0" in p for p in problems)


def test_action_set_mismatch():
    g = two_stage(actions={0: ("0",), 1: ("0", "1")})
    problems = validate_form(g.form)
    assert any("action-set mismatch" in p for p in problems)
    with pytest.raises(InvalidGame):
        check_game(g)


def test_perfect_recall_violation():
    # player 1 moves twice and forgets her first move
    hist = {(), ("x",), ("y",), ("x", "l"), ("x", "r"), ("y", "l"), ("y", "r")}
    form = GameForm(1, hist, {(): 1, ("x",): 1, ("y",): 1}, {1: [{()}, {("x",), ("y",)}]})
    assert any("perfect recall" in p for p in validate_form(form))


def test_chance_distribution_checked():
    hist = {(), ("l",), ("r",)}
    bad = GameForm(1, hist, {(): "c"}, {}, {(): {"l": 0.5, "r": 0.6}})
    assert any("sum to 1" in p for p in validate_form(bad))
    ok = GameForm(1, hist, {(): "c"}, {}, {(): {"l": 0.25, "r": 0.75}})
    assert validate_form(ok) == []


def test_missing_utility():
    g = two_stage()
    g.utilities.pop(("a0", "b0"))
    assert any("no utility" in p for p in validate_game(g))


# terminals and play ----------------------------------------------------------

def test_terminal_histories(gamma1, gamma2):
    assert terminal_histories(gamma1.form) == {
        ("a0", "b0"), ("a0", "b1"), ("a1", "b0"), ("a1", "b1")
    }
    assert terminal_histories(gamma2.form) == {
        ("a0", "c0"), ("a0", "c1"), ("a1", "b1"), ("a1", "b0", "c0"), ("a1", "b0", "c1")
    }
    trivial = GameForm(1, {()}, {}, {})
    assert terminal_histories(trivial) == {()}


def test_consistent_terminals(gamma1, gamma2):
    assert consistent_terminals(gamma2, [("a0",), ("b1",), ("c0",)]) == [(("a0", "c0"), 1.0)]
    assert consistent_terminals(gamma1, [("a1",), ("b0",)]) == [(("a1", "b0"), 1.0)]


def test_chance_free_profiles_reach_one_terminal(gamma2):
    form = gamma2.form
    for profile in itertools.product(*(pure_strategies(form, i) for i in form.players)):
        reached = consistent_terminals(gamma2, list(profile))
        assert len(reached) == 1 and reached[0][1] == 1.0


def test_chance_expectation():
    hist = {(), ("l",), ("r",), ("l", "x"), ("l", "y")}
    form = GameForm(1, hist, {(): "c", ("l",): 1}, {1: [{("l",)}]}, {(): {"l": 0.25, "r": 0.75}})
    g = ExtensiveGame(form, {("l", "x"): np.array([4.0]), ("l", "y"): np.array([0.0]), ("r",): np.array([1.0])})
    table = strategic_form(g)
    assert np.allclose(table.payoff(table.index_of([("x",)])), [0.25 * 4 + 0.75])


# strategic form and Nash -----------------------------------------------------

def test_strategic_form_gamma1(gamma1):
    table = strategic_form(gamma1)
    assert table.shape == (2, 2)
    for (k, l), u in PD.items():
        assert np.allclose(table.payoff(table.index_of([(k,), (l,)])), u)


def test_strategic_form_gamma2(gamma2):
    table = strategic_form(gamma2)
    assert table.shape == (2, 2, 2)
    assert np.allclose(table.payoff(table.index_of([("a0",), ("b1",), ("c0",)])), [3, 3, 1])


def test_single_player_table():
    hist = {(), ("x",), ("y",)}
    g = ExtensiveGame(GameForm(1, hist, {(): 1}, {1: [{()}]}), {("x",): np.array([1.0]), ("y",): np.array([2.0])})
    table = strategic_form(g)
    assert table.strategies == [[("x",), ("y",)]]
    assert pure_nash(table) == [(1,)]


def test_strategic_form_round_trip(gamma1, gamma2):
    for game in (gamma1, gamma2):
        table = strategic_form(game)
        for p in table.profiles():
            expected = sum(q * game.utilities[h] for h, q in consistent_terminals(game, list(table.labels(p))))
            assert np.array_equal(table.payoff(p), expected)


def test_strategy_counting(gamma2):
    form = gamma2.form
    for i in form.players:
        expected = np.prod([len(form.actions(next(iter(s)))) for s in form.info_sets[i]])
        assert len(pure_strategies(form, i)) == expected


def test_gamma2_pure_nash(gamma2):
    table = strategic_form(gamma2)
    eq = pure_nash(table)
    labels = {table.labels(p) for p in eq}
    assert labels == {(("a0",), ("b1",), ("c0",)), (("a1",), ("b1",), ("c1",))}
    assert sorted(tuple(table.payoff(p)) for p in eq) == [(2, 2, 2), (3, 3, 1)]


def test_pure_nash_dominant_and_pennies():
    dom = np.array([[[2 * a + b, 2 * b + a] for b in range(2)] for a in range(2)], dtype=float)
    assert pure_nash(NormalFormTable([["x", "y"], ["x", "y"]], dom)) == [(1, 1)]
    mp = np.array([[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]], dtype=float)
    assert pure_nash(NormalFormTable([["H", "T"], ["H", "T"]], mp)) == []


def test_ties_give_multiple_equilibria():
    flat = np.ones((2, 2, 2))
    assert len(pure_nash(NormalFormTable([[0, 1], [0, 1]], flat))) == 4


@settings(max_examples=200, deadline=None)
@given(
    shape=st.lists(st.integers(1, 4), min_size=1, max_size=3),
    seed=st.integers(0, 2**32 - 1),
)
def test_pure_nash_by_definition(shape, seed):
    rng = np.random.default_rng(seed)
    n = len(shape)
    payoffs = rng.integers(0, 4, size=tuple(shape) + (n,)).astype(float)
    table = NormalFormTable([list(range(k)) for k in shape], payoffs)
    found = pure_nash(table)
    assert found == brute_nash(table)
    for p in table.profiles():
        assert is_nash(table, p) == (p in found)


def test_explosion_guard(gamma2):
    with pytest.raises(ExplosionGuard):
        strategic_form(gamma2, cap=4)


# isomorphism ---------------------------------------------------------------

def relabel(game, mapping):
    """Copy ``game`` with every action renamed through ``mapping``."""
    f = game.form
    rn = lambda h: tuple(mapping.get(a, a) for a in h)  # noqa: E731
    form = GameForm(
        f.num_players,
        {rn(h) for h in f.histories},
        {rn(h): p for h, p in f.player_fn.items()},
        {i: [{rn(h) for h in s} for s in sets] for i, sets in f.info_sets.items()},
        {rn(h): {mapping.get(a, a): p for a, p in d.items()} for h, d in f.chance_fn.items()},
    )
    return ExtensiveGame(form, {rn(h): u for h, u in game.utilities.items()}), rn


def test_relabeled_copy_is_isomorphic(gamma1):
    other, rn = relabel(gamma1, {"a0": "x0", "a1": "x1", "b0": "y0", "b1": "y1"})
    xi = {h: rn(h) for h in gamma1.form.histories}
    assert check_isomorphism(gamma1, other, xi).ok


def test_changed_payoff_breaks_isomorphism(gamma1):
    util = dict(gamma1.utilities)
    util[("a1", "b1")] = np.array([1.0, 2.0])
    other = ExtensiveGame(gamma1.form, util)
    report = check_isomorphism(gamma1, other, {h: h for h in gamma1.form.histories})
    assert not report.ok
    assert any("utility condition" in v for v in report.violations)


def test_bad_bijection(gamma1):
    with pytest.raises(NotABijection):
        check_isomorphism(gamma1, gamma1, {(): ()})


def test_reflexive_and_symmetric(gamma1, gamma2):
    for game in (gamma1, gamma2):
        ident = {h: h for h in game.form.histories}
        assert check_isomorphism(game, game, ident).ok
        other, rn = relabel(game, {"a0": "p", "a1": "q", "b0": "r", "b1": "s", "c0": "t", "c1": "u"})
        xi = {h: rn(h) for h in game.form.histories}
        inv = {v: k for k, v in xi.items()}
        assert check_isomorphism(game, other, xi).ok
        assert check_isomorphism(other, game, inv).ok


def test_search_finds_relabeled_gamma2(gamma2):
    # swapping the names of a player's actions hides the natural map
    other, _ = relabel(gamma2, {"a0": "a1", "a1": "a0", "c0": "k", "c1": "m"})
    xi = search_isomorphism(gamma2, other)
    assert xi is not None
    assert check_isomorphism(gamma2, other, xi).ok


def test_search_rejects_different_games(gamma1, gamma2):
    assert search_isomorphism(gamma1, gamma2) is None


def test_payoff_swap(gamma2):
    # players 1 and 2 are paid alike at every terminal, so swapping them changes nothing
    swapped = {h: u[[1, 0, 2]] for h, u in gamma2.utilities.items()}
    assert search_isomorphism(gamma2, ExtensiveGame(gamma2.form, swapped)) is not None
    # swapping players 2 and 3 at one terminal does break every bijection
    util = dict(gamma2.utilities)
    util[("a1", "b0", "c0")] = util[("a1", "b0", "c0")][[0, 2, 1]]
    assert search_isomorphism(gamma2, ExtensiveGame(gamma2.form, util)) is None


def test_search_respects_information_sets():
    # same tree and payoffs; in one copy player 2 sees player 1's move
    g1 = two_stage()
    f = g1.form
    split = GameForm(2, f.histories, f.player_fn, {1: [{()}], 2: [{("a0",)}, {("a1",)}]})
    g2 = ExtensiveGame(split, g1.utilities)
    assert search_isomorphism(g1, g2) is None
