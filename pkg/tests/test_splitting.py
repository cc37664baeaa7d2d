import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entangled_ergodic.engine import EntangledProblem, EntanglementMap, certify_joint_bound
from entangled_ergodic.errors import ValidationError
from entangled_ergodic.measure_space import FiniteMeasureSpace
from entangled_ergodic.operators import OperatorRep, cyclic_shift, identity, volterra_discrete
from entangled_ergodic.reference import (
    fourier_mode,
    random_function,
    splitting_problem,
    stable_splitting_problem,
)
from entangled_ergodic.splitting import (
    a1_certificate,
    build_splitting_tree,
    decompose_orbit_element,
    verify_proof_bounds,
)


def test_zero_transition_gives_trivial_certificate():
    X = FiniteMeasureSpace.uniform(4)
    A0 = OperatorRep(np.zeros((4, 4)), X)
    cert = a1_certificate(A0, cyclic_shift(X), random_function(X, 0), 1e-3)
    assert cert.ell == 1 and cert.epsilon_achieved == 0
    lam, r = decompose_orbit_element(cert, A0, cyclic_shift(X), cert.f, 5)
    assert np.all(lam == 0) and np.all(r.values == 0)


def test_identity_orbit_has_rank_one():
    X = FiniteMeasureSpace.uniform(5)
    cert = a1_certificate(identity(X), identity(X), random_function(X, 1), 1e-12)
    assert cert.ell == 1 and cert.epsilon_achieved <= 1e-14


def test_zero_seed_is_degenerate():
    X = FiniteMeasureSpace.uniform(3)
    cert = a1_certificate(identity(X), identity(X), np.zeros(3), 0.1)
    assert cert.ell == 1 and cert.epsilon_achieved == 0
    assert np.count_nonzero(cert.basis_U[0].values) == 1


def test_eps_must_be_positive():
    X = FiniteMeasureSpace.uniform(2)
    with pytest.raises(ValidationError):
        a1_certificate(identity(X), identity(X), [1, 0], 0)


def _volterra_cert(eps, seed=0):
    X = FiniteMeasureSpace.uniform(64)
    V, S = volterra_discrete(64, X), cyclic_shift(X)
    f = random_function(X, seed)
    return V, S, f, a1_certificate(V, S, f, eps)


def test_volterra_certificate_is_proper():
    V, S, f, cert = _volterra_cert(1e-2)
    assert 1 <= cert.ell < 64
    assert cert.epsilon_achieved <= 1e-2
    for n in range(1, cert.N_orbit + 1):
        lam, r = decompose_orbit_element(cert, V, S, f, n)
        assert np.abs(r.values).max() <= cert.epsilon_achieved + 1e-15


def test_certificate_contract_on_extended_horizon():
    V, S, f, cert = _volterra_cert(1e-2, seed=3)
    B = np.stack([u.values for u in cert.basis_U], axis=1)
    rng = np.random.default_rng(0)
    for n in rng.integers(1, 10 * cert.N_orbit + 1, size=100):
        lam, r = decompose_orbit_element(cert, V, S, f, int(n))
        vec = np.linalg.matrix_power(S.entries, int(n)) @ f.values
        vec = V.entries @ vec
        assert np.abs(B @ lam + r.values - vec).max() <= 1e-9
        assert np.abs(lam).max() <= cert.u_const


def test_biorthogonality():
    _, _, _, cert = _volterra_cert(1e-3)
    mu = cert.f.space.mu
    G = np.array([[np.vdot(mu * phi.values, u.values) for u in cert.basis_U] for phi in cert.duals])
    assert np.abs(G - np.eye(cert.ell)).max() <= 1e-9


def test_ell_monotone_in_eps():
    ells = [_volterra_cert(eps)[3].ell for eps in (1e-3, 1e-2, 1e-1)]
    assert ells[0] >= ells[1] >= ells[2]


@settings(max_examples=15)
@given(st.integers(0, 1000), st.floats(1e-4, 0.5), st.floats(1.0, 8.0))
def test_smaller_eps_never_smaller_ell(seed, eps, factor):
    X = FiniteMeasureSpace.uniform(16)
    V, S = volterra_discrete(16, X), cyclic_shift(X)
    f = random_function(X, seed)
    assert a1_certificate(V, S, f, eps).ell >= a1_certificate(V, S, f, eps * factor).ell


def test_depth_one_tree_for_m2():
    X = FiniteMeasureSpace.uniform(8)
    S = cyclic_shift(X)
    p = certify_joint_bound(EntangledProblem([S, S], [volterra_discrete(8, X)], EntanglementMap([1, 1])), 32)
    tree = build_splitting_tree(p, fourier_mode(X, 1), 0.1)
    root = tree.nodes[()]
    assert len(tree.level(1)) == root.ell
    assert tree.c == pytest.approx(0.1 * p.C**-2)


def test_tree_requires_certified_bound_and_part():
    p, f = splitting_problem()
    from dataclasses import replace

    with pytest.raises(ValidationError, match="certified"):
        build_splitting_tree(replace(p, C_certified=False), f, 0.1)
    q, g = stable_splitting_problem()
    with pytest.raises(ValidationError, match="reversible"):
        build_splitting_tree(q, g, 0.1, "part2")
    with pytest.raises(ValidationError, match="stable"):
        build_splitting_tree(p, f, 0.1, "part1")


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_reference_tree_invariants(eps):
    p, f = splitting_problem()
    tree = build_splitting_tree(p, f, eps)
    inv = tree.check_invariants(p)
    assert inv["ok"]
    assert inv["c_recursion_rel_err"] <= 1e-12 and inv["telescoping_rel_err"] <= 1e-12
    assert inv["reconstruction_err"] <= 1e-9 and inv["max_lambda_over_u"] <= 1
    assert inv["part_split_err"] <= 1e-9


def test_part2_bound_and_decomposition():
    p, f = splitting_problem()
    tree = build_splitting_tree(p, f, 0.1)
    rep = verify_proof_bounds(tree, p, f, 64)
    assert rep["decomposition_err"] <= 1e-12
    assert rep["remainder_sup"] <= rep["budget"] + 1e-9
    assert rep["holds"] and rep["per_term_holds"]
    assert rep["budget_all_levels"] == pytest.approx(0.1 * (p.m - 1))


def test_budget_sides_scale_with_eps():
    p, f = splitting_problem()
    a = verify_proof_bounds(build_splitting_tree(p, f, 0.1), p, f, 16)
    b = verify_proof_bounds(build_splitting_tree(p, f, 0.2), p, f, 16)
    assert b["budget"] == pytest.approx(2 * a["budget"])
    assert b["budget_all_levels"] == pytest.approx(2 * a["budget_all_levels"])


def test_part1_remainder_decreases():
    p, f = stable_splitting_problem()
    tree = build_splitting_tree(p, f, 0.1, "part1")
    assert tree.check_invariants(p)["ok"]
    vals = [verify_proof_bounds(tree, p, f, N)["remainder_cesaro"] for N in (4, 16, 64)]
    assert vals[0] > vals[1] > vals[2]


def test_tree_json():
    p, f = splitting_problem()
    doc = build_splitting_tree(p, f, 0.1).to_json()
    root = [n for n in doc["nodes"] if n["id"] == []][0]
    assert root["parent"] is None and root["ell"] >= 1
    assert {"id", "parent", "level", "c", "u", "ell", "epsilon_achieved"} <= set(root)
