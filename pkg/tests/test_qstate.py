import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import density_run_probabilities, random_state, random_unitary
from qextensive.eisert import eisert_matrix, eisert_operator
from qextensive.errors import (
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
from qextensive.qstate import (
    QuditLayout,
    Unitary,
    apply_on_qudit,
    basis_shift_operator,
    build_state,
    ghz_like_state,
    measure_qudit,
    run_sequence,
    shift_of,
)

L2 = QuditLayout((2, 2))
L3 = QuditLayout((2, 2, 2))
X = np.array([[0, 1], [1, 0]], dtype=complex)


def basis(layout, digits):
    v = np.zeros(layout.size, dtype=complex)
    v[np.ravel_multi_index(digits, layout.dims)] = 1
    return build_state(layout, v)


# build_state / layout ------------------------------------------------------

def test_layout_rejects_small_dims():
    with pytest.raises(ValueError):
        QuditLayout((2, 1))


def test_layout_size_and_order():
    layout = QuditLayout((2, 3))
    assert layout.size == 6
    assert list(layout.basis_states())[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]


def test_build_basis_state():
    s = build_state(L2, [1, 0, 0, 0])
    assert s.amplitude((0, 0)) == 1


def test_build_normalizes_on_request():
    s = build_state(L2, [1, 1, 0, 0], normalize=True)
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5, 0, 0], atol=1e-12)


def test_build_forgives_small_norm_error():
    s = build_state(L2, [1 + 5e-7, 0, 0, 0])
    assert abs(s.norm() - 1) < 1e-12


def test_build_errors():
    with pytest.raises(LengthMismatch):
        build_state(L2, [1, 0, 0])
    with pytest.raises(NotNormalizable):
        build_state(L2, [1, 1, 0, 0])
    with pytest.raises(NotNormalizable):
        build_state(L2, [0, 0, 0, 0], normalize=True)


def test_most_significant_qudit_first():
    s = basis(L3, (1, 0, 0))
    assert np.argmax(np.abs(s.amplitudes)) == 4


def test_ghz_like_state():
    g = math.pi / 2
    s = ghz_like_state(L3, g)
    assert np.isclose(s.amplitude((0, 0, 0)), math.cos(g / 2))
    assert np.isclose(s.amplitude((1, 1, 1)), 1j * math.sin(g / 2))
    assert np.allclose(ghz_like_state(L2, 0.0).amplitudes, [1, 0, 0, 0])
    assert np.allclose(ghz_like_state(L3, math.pi).amplitudes[-1], 1j)
    gamma = 1.234
    a = ghz_like_state(L2, gamma).amplitudes
    assert np.allclose(a, [math.cos(gamma / 2), 0, 0, 1j * math.sin(gamma / 2)])


def test_ghz_like_errors():
    with pytest.raises(NonQubitLayout):
        ghz_like_state(QuditLayout((2, 3)), 1.0)
    with pytest.raises(GammaOutOfRange):
        ghz_like_state(L2, 4.0)


# operators -----------------------------------------------------------------

def test_basis_shift_examples():
    assert np.allclose(basis_shift_operator(2, 0).matrix, np.eye(2))
    assert np.allclose(basis_shift_operator(2, 1).matrix, X)
    m = basis_shift_operator(3, 2).matrix
    expected = np.zeros((3, 3))
    expected[2, 0] = expected[0, 1] = expected[1, 2] = 1
    assert np.allclose(m, expected)


def test_basis_shift_phases_per_input():
    v = basis_shift_operator(2, 1, phases=[0.3, 1.1])
    assert np.isclose(v.matrix[1, 0], np.exp(0.3j))
    assert np.isclose(v.matrix[0, 1], np.exp(1.1j))
    assert shift_of(v) == 1


def test_basis_shift_errors():
    with pytest.raises(ShiftOutOfRange):
        basis_shift_operator(2, 2)
    with pytest.raises(LengthMismatch):
        basis_shift_operator(2, 1, phases=[0.0])


def test_shift_of():
    assert shift_of(Unitary(np.eye(2))) == 0
    assert shift_of(eisert_operator(math.pi, 0)) == 1
    h = Unitary(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    assert shift_of(h) is None


def test_unitary_validation():
    with pytest.raises(NotUnitary):
        Unitary(np.array([[1, 1], [0, 1]]))
    with pytest.raises(DimensionMismatch):
        Unitary(np.ones((2, 3)))


# apply / measure -----------------------------------------------------------

def test_identity_leaves_state():
    rng = np.random.default_rng(0)
    s = build_state(L3, random_state(rng, (2, 2, 2)))
    for j in (1, 2, 3):
        assert apply_on_qudit(s, j, basis_shift_operator(2, 0)).allclose(s)


def test_shift_on_second_qudit():
    out = apply_on_qudit(basis(L2, (0, 0)), 2, basis_shift_operator(2, 1))
    assert out.allclose(basis(L2, (0, 1)))


def test_eisert_on_first_qubit_matches_kronecker():
    gamma, theta, phi = 0.7, 1.9, 0.4
    s = ghz_like_state(L2, gamma)
    out = apply_on_qudit(s, 1, eisert_operator(theta, phi))
    expected = np.kron(eisert_matrix(theta, phi), np.eye(2)) @ s.amplitudes
    assert np.allclose(out.amplitudes, expected, atol=1e-12)


def test_apply_errors():
    s = basis(L2, (0, 0))
    with pytest.raises(QuditIndexOutOfRange):
        apply_on_qudit(s, 3, basis_shift_operator(2, 0))
    with pytest.raises(DimensionMismatch):
        apply_on_qudit(s, 1, basis_shift_operator(3, 0))


def test_measure_first_qubit_after_u1():
    for gamma in np.linspace(0.1, 3.0, 5):
        for theta in np.linspace(0, math.pi, 5):
            s = apply_on_qudit(ghz_like_state(L2, gamma), 1, eisert_operator(theta, 0.3))
            probs = {nu: p for nu, p, _ in measure_qudit(s, 1)}
            expected = math.cos(gamma / 2) ** 2 * math.cos(theta / 2) ** 2 + math.sin(
                gamma / 2
            ) ** 2 * math.sin(theta / 2) ** 2
            assert abs(probs.get(0, 0.0) - expected) < 1e-9


def test_measure_examples():
    branches = measure_qudit(ghz_like_state(L3, math.pi / 2), 1)
    assert [nu for nu, _, _ in branches] == [0, 1]
    assert all(abs(p - 0.5) < 1e-12 for _, p, _ in branches)
    (single,) = measure_qudit(basis(L2, (0, 0)), 2)
    assert single[0] == 0 and single[1] == 1.0
    assert single[2].allclose(basis(L2, (0, 0)))


def test_run_sequence_basis_permutation():
    v0, v1 = basis_shift_operator(2, 0), basis_shift_operator(2, 1)
    (res,) = run_sequence(basis(L3, (0, 0, 0)), [(1, v0), (2, v1), (3, v0)])
    assert res.outcomes == ((1, 0), (2, 1), (3, 0))
    assert res.probability == 1.0


def test_run_sequence_ghz_first_qubit():
    results = run_sequence(ghz_like_state(L3, math.pi / 3), [(1, basis_shift_operator(2, 0))])
    probs = {r.outcomes: r.probability for r in results}
    assert abs(probs[((1, 0),)] - 0.75) < 1e-12
    assert abs(probs[((1, 1),)] - 0.25) < 1e-12


def test_run_sequence_errors():
    v = basis_shift_operator(2, 0)
    with pytest.raises(RepeatedQudit):
        run_sequence(basis(L2, (0, 0)), [(1, v), (1, v)])
    with pytest.raises(DimensionMismatch):
        run_sequence(basis(L2, (0, 0)), [(1, basis_shift_operator(3, 0))])


def test_run_result_support_matches_outcomes():
    rng = np.random.default_rng(5)
    dims = (2, 3, 2)
    layout = QuditLayout(dims)
    s = build_state(layout, random_state(rng, dims))
    moves = [(2, Unitary(random_unitary(rng, 3))), (3, Unitary(random_unitary(rng, 2)))]
    for r in run_sequence(s, moves):
        t = r.final_state.tensor
        for digits in layout.basis_states():
            if any(digits[j - 1] != nu for j, nu in r.outcomes):
                assert abs(t[digits]) < 1e-12
        assert abs(r.final_state.norm() - 1) < 1e-9


# properties ----------------------------------------------------------------

dims_st = st.lists(st.integers(2, 3), min_size=1, max_size=3).map(tuple)


@settings(max_examples=60, deadline=None)
@given(dims=dims_st, seed=st.integers(0, 2**32 - 1))
def test_measurement_completeness_and_normalization(dims, seed):
    rng = np.random.default_rng(seed)
    layout = QuditLayout(dims)
    s = build_state(layout, random_state(rng, dims))
    for j in range(1, len(dims) + 1):
        branches = measure_qudit(s, j)
        assert abs(sum(p for _, p, _ in branches) - 1) < 1e-9
        for _, _, post in branches:
            assert abs(post.norm() - 1) < 1e-9


@settings(max_examples=60, deadline=None)
@given(dims=dims_st, seed=st.integers(0, 2**32 - 1))
def test_unitarity_preserves_inner_products(dims, seed):
    rng = np.random.default_rng(seed)
    layout = QuditLayout(dims)
    a = build_state(layout, random_state(rng, dims))
    b = build_state(layout, random_state(rng, dims))
    j = int(rng.integers(1, len(dims) + 1))
    u = Unitary(random_unitary(rng, dims[j - 1]))
    ua, ub = apply_on_qudit(a, j, u), apply_on_qudit(b, j, u)
    assert abs(ua.inner(ub) - a.inner(b)) < 1e-9
    assert abs(ua.norm() - 1) < 1e-9


@settings(max_examples=40, deadline=None)
@given(dims=st.lists(st.integers(2, 3), min_size=2, max_size=3).map(tuple), seed=st.integers(0, 2**32 - 1))
def test_order_independence_on_distinct_qudits(dims, seed):
    rng = np.random.default_rng(seed)
    layout = QuditLayout(dims)
    s = build_state(layout, random_state(rng, dims))
    moves = [(j, Unitary(random_unitary(rng, d))) for j, d in enumerate(dims, start=1)]
    perm = list(rng.permutation(len(moves)))

    def joint(ms):
        out = {}
        for r in run_sequence(s, ms):
            out[tuple(sorted(r.outcomes))] = r.probability
        return out

    a, b = joint(moves), joint([moves[k] for k in perm])
    for key in set(a) | set(b):
        assert abs(a.get(key, 0.0) - b.get(key, 0.0)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(dims=dims_st, seed=st.integers(0, 2**32 - 1))
def test_density_matrix_oracle(dims, seed):
    rng = np.random.default_rng(seed)
    layout = QuditLayout(dims)
    psi = random_state(rng, dims)
    k = int(rng.integers(1, len(dims) + 1))
    qudits = [int(j) for j in rng.permutation(len(dims))[:k] + 1]
    moves = [(j, random_unitary(rng, dims[j - 1])) for j in qudits]
    results = run_sequence(build_state(layout, psi), [(j, Unitary(m)) for j, m in moves])
    expected, finals = density_run_probabilities(dims, psi, moves)
    got = {tuple(nu for _, nu in r.outcomes): r for r in results}
    for outcomes, p in expected.items():
        if p > 1e-12:
            r = got[outcomes]
            assert abs(r.probability - p) < 1e-9
            assert np.allclose(r.final_state.density_matrix(), finals[outcomes], atol=1e-9)
        else:
            assert outcomes not in got or got[outcomes].probability < 1e-9
