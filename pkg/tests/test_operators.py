import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from entangled_ergodic.errors import MeasureNotPreservedError, ValidationError
from entangled_ergodic.measure_space import FiniteMeasureSpace, Func
from entangled_ergodic.operators import (
    OperatorRep,
    adjoint,
    adjoint_norm,
    apply,
    cyclic_shift,
    identity,
    is_dunford_schwartz,
    koopman_from_map,
    modulus,
    operator_norm,
    operator_norm_p,
    random_ds,
    volterra_discrete,
)

SWAP = [[0, 1], [1, 0]]


def test_apply_examples(X2):
    assert apply(identity(X2), Func([1, 2], X2)).allclose(Func([1, 2], X2))
    assert apply(OperatorRep(SWAP, X2), Func([1, 0], X2)).allclose(Func([0, 1], X2))
    assert apply(OperatorRep(np.zeros((2, 2)), X2), Func([5, 7], X2)).allclose(Func([0, 0], X2))


def test_apply_dimension_mismatch(X2):
    with pytest.raises(ValidationError):
        apply(identity(X2), np.ones(3))


def test_operator_norm_examples(X2):
    for which in ("L1", "Linf"):
        assert operator_norm(identity(X2), which) == 1
    N = OperatorRep([[0, 2], [0, 0]], X2)
    assert operator_norm(N, "Linf") == 2
    assert operator_norm(N, "L1") == 2


def _brute_l1(T):
    # max over basis functions of ||T e_j||_1 / ||e_j||_1
    mu = T.space.mu
    return max(np.dot(mu, np.abs(T.entries[:, j])) / mu[j] for j in range(T.d))


def test_l1_norm_matches_basis_vector_oracle():
    space = FiniteMeasureSpace([0.1, 0.2, 0.3, 0.4])
    rng = np.random.default_rng(0)
    for _ in range(20):
        T = OperatorRep(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)), space)
        assert operator_norm(T, "L1") == pytest.approx(_brute_l1(T), rel=1e-12)


def test_unknown_norm(X2):
    with pytest.raises(ValidationError):
        operator_norm(identity(X2), "L3")


def test_is_dunford_schwartz_examples(X2):
    assert is_dunford_schwartz(OperatorRep([[0.5, 0.5], [0.5, 0.5]], X2), 0)
    rep = is_dunford_schwartz(OperatorRep([[1, 1], [0, 0]], X2), 0)
    assert not rep and rep.norm_linf == 2
    assert is_dunford_schwartz(cyclic_shift(FiniteMeasureSpace.uniform(5), 2), 0)
    with pytest.raises(ValidationError):
        is_dunford_schwartz(identity(X2), -1)


def test_modulus_examples(X2):
    M = modulus(OperatorRep([[0, -0.5], [0.5, 0]], X2))
    assert np.array_equal(M.entries, np.array([[0, 0.5], [0.5, 0]], dtype=complex))
    P = OperatorRep([[0.2, 0.8], [0.8, 0.2]], X2)
    assert modulus(P) == P


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(2, 6))
def test_modulus_dominates_powers(seed, n, d):
    T = random_ds(d, seed, "signed_contraction")
    rng = np.random.default_rng(seed)
    f = rng.normal(size=d) + 1j * rng.normal(size=d)
    lhs = np.abs(np.linalg.matrix_power(T.entries, n) @ f)
    rhs = np.linalg.matrix_power(modulus(T).entries.real, n) @ np.abs(f)
    assert np.all(lhs <= rhs + 1e-12)


def test_koopman_examples():
    X4 = FiniteMeasureSpace.uniform(4)
    assert koopman_from_map([0, 1, 2, 3], X4) == identity(X4)
    S = koopman_from_map([1, 2, 3, 0], X4)
    assert is_dunford_schwartz(S, 0)
    assert sorted(np.abs(S.entries).sum(axis=0)) == [1, 1, 1, 1]
    # doubling-map analogue i -> ceil(i/2) (1-based) collapses atoms
    with pytest.raises(MeasureNotPreservedError) as exc:
        koopman_from_map([0, 0, 1, 1], X4)
    assert "atom" in str(exc.value)


def test_koopman_nonuniform_space():
    space = FiniteMeasureSpace([0.25, 0.25, 0.5])
    assert is_dunford_schwartz(koopman_from_map([1, 0, 2], space), 0)
    with pytest.raises(MeasureNotPreservedError):
        koopman_from_map([2, 1, 0], space)


def test_volterra_examples():
    V2 = volterra_discrete(2)
    assert apply(V2, np.ones(2)).allclose(Func([0, 0.5], V2.space))
    V4 = volterra_discrete(4)
    assert apply(V4, np.ones(4)).allclose(Func([0, 0.25, 0.5, 0.75], V4.space))
    for d in range(1, 17):
        V = volterra_discrete(d).entries
        assert not np.any(np.linalg.matrix_power(V, d))
        assert operator_norm(volterra_discrete(d), "Linf") <= 1


def test_volterra_needs_uniform_space():
    with pytest.raises(ValidationError):
        volterra_discrete(2, FiniteMeasureSpace([0.25, 0.75]))


def test_random_ds_examples():
    T = random_ds(3, 7, "doubly_stochastic")
    assert is_dunford_schwartz(T, 1e-12)
    assert np.all(T.entries.real > 0)
    assert T == random_ds(3, 7, "doubly_stochastic")
    S = random_ds(4, 1, "signed_contraction")
    assert is_dunford_schwartz(S, 1e-12)
    assert np.any(S.entries.imag != 0)


def test_random_ds_nonuniform_marginals():
    space = FiniteMeasureSpace([0.1, 0.2, 0.3, 0.4])
    T = random_ds(4, 3, space=space)
    assert is_dunford_schwartz(T, 1e-12)
    assert np.allclose(space.mu @ T.entries, space.mu, atol=1e-13)


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_submultiplicative_and_closed(seed, d):
    S = random_ds(d, seed, "signed_contraction")
    T = random_ds(d, seed + 1)
    ST = S @ T
    for which in ("L1", "Linf"):
        assert operator_norm(ST, which) <= operator_norm(S, which) * operator_norm(T, which) + 1e-12
    assert is_dunford_schwartz(ST, 1e-10)


@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi))
def test_unimodular_multiple_same_modulus(seed, theta):
    T = random_ds(4, seed, "signed_contraction")
    lt = complex(math.cos(theta), math.sin(theta)) * T
    assert is_dunford_schwartz(lt, 1e-12)
    assert np.allclose(modulus(lt).entries, modulus(T).entries, atol=1e-15)


def test_koopman_is_positive_and_its_own_modulus():
    S = cyclic_shift(FiniteMeasureSpace.uniform(6), 1)
    assert modulus(S) == S


def test_adjoint_pairing_identity():
    space = FiniteMeasureSpace([0.1, 0.2, 0.3, 0.4])
    rng = np.random.default_rng(5)
    T = OperatorRep(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)), space)
    f = rng.normal(size=4) + 1j * rng.normal(size=4)
    phi = rng.normal(size=4) + 1j * rng.normal(size=4)
    lhs = np.vdot(space.mu * phi, T.entries @ f)
    rhs = np.vdot(space.mu * (adjoint(T).entries @ phi), f)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_adjoint_norm_dual_exponent():
    space = FiniteMeasureSpace([0.1, 0.2, 0.3, 0.4])
    T = random_ds(4, 2, "signed_contraction", space) * 0.7
    assert adjoint_norm(T, 1) == pytest.approx(operator_norm(T, "L1"), rel=1e-12)
    assert adjoint_norm(T, 2) == pytest.approx(operator_norm_p(T, 2), rel=1e-12)


def test_operator_json_round_trip():
    T = random_ds(3, 9, "signed_contraction")
    assert OperatorRep.from_json(T.to_json(), T.space) == T
