"""Twisted-compactness certificates and the recursive splitting tree.

A certificate for ``(A, T, f, eps)`` is a subspace ``U`` of dimension ``l``
with a complement ``R`` such that every sampled orbit element
``A T^n f = sum_i lambda_i(n) u_i + r_n`` has ``||r_n||_inf <= eps``.  ``U`` is
spanned by the leading left singular directions of the orbit matrix in the
``mu``-weighted ``L^2`` geometry, ``R`` is its ``mu``-orthogonal complement and
the dual functionals are the ``mu``-orthonormal basis vectors themselves.

The tree repeats this construction stage by stage.  Node ``v`` at level
``l(v)`` carries a function ``f_v``, a budget ``c_v`` and (below the last
level) a certificate for ``(A_{l+1}, T_{l+1}, f_v, c_v)``; its children are
indexed by the certificate's basis vectors and receive
``c_w = c_v / (u_v * l_v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .engine import Stage, entangled_average, evaluate_chain
from .errors import ValidationError
from .jdlg import spectral_split, split_function
from .measure_space import Func, as_values, dual_norm, norm_inf, norm_p
from .operators import adjoint_norm

__all__ = [
    "A1Certificate",
    "SplittingNode",
    "SplittingTree",
    "a1_certificate",
    "decompose_orbit_element",
    "build_splitting_tree",
    "verify_proof_bounds",
]

PART_TOL = 1e-9
RESIDUAL_MARGIN = 1e-12


@dataclass
class A1Certificate:
    """Finite-dimensional subspace capturing an orbit up to an ``L^inf`` error."""

    stage: int
    f: Func
    basis_U: list
    duals: list
    epsilon_requested: float
    epsilon_achieved: float
    u_const: float
    N_orbit: int
    lp: float
    u_floored: bool = False

    @property
    def ell(self):
        return len(self.basis_U)

    @property
    def full(self):
        """True when ``U`` is the whole space, so ``R = {0}``."""
        return self.ell == self.f.space.d

    def coefficients(self, vecs):
        """``lambda_i = phi_i(vec)`` for each row of ``vecs``; returns ``(n_vecs, ell)``."""
        mu = self.f.space.mu
        D = np.stack([phi.values for phi in self.duals], axis=1)
        return np.atleast_2d(vecs) @ (mu[:, None] * D.conj())

    def remainders(self, vecs, lam=None):
        vecs = np.atleast_2d(vecs)
        if self.full:
            return np.zeros_like(vecs)
        if lam is None:
            lam = self.coefficients(vecs)
        B = np.stack([u.values for u in self.basis_U], axis=1)
        return vecs - lam @ B.T

    def to_json(self):
        return {
            "stage": self.stage,
            "ell": self.ell,
            "epsilon_requested": self.epsilon_requested,
            "epsilon_achieved": self.epsilon_achieved,
            "u_const": self.u_const,
            "N_orbit": self.N_orbit,
            "u_floored": self.u_floored,
        }


def _orbit(A, T, f, exponents):
    orb = kernels.orbit(T.entries, as_values(f, T.space)[None, :], exponents)[0]
    return orb @ A.entries.T


def a1_certificate(A, T, f, eps, N_orbit=None, lp=2, stage=1):
    """Smallest-rank certificate for the orbit ``{A T^n f : 1 <= n <= N_orbit}``.

    ``lp`` is the exponent of the ambient ``L^p`` space; it enters only the
    coefficient bound ``u_const = ||f||_p ||A^*||_{p'} max_i ||phi_i||_{p'}``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps!r}")
    space = T.space
    d = space.d
    N_orbit = 4 * d if N_orbit is None else int(N_orbit)
    fv = as_values(f, space)
    sq = np.sqrt(space.mu)

    if not np.any(fv):
        u = Func(np.eye(d)[0] / sq[0], space)
        return A1Certificate(stage, Func(fv, space), [u], [u], float(eps), 0.0, 1.0, N_orbit, lp, u_floored=True)

    orb = _orbit(A, T, fv, np.arange(1, N_orbit + 1))
    U, _, _ = np.linalg.svd(sq[:, None] * orb.T, full_matrices=True)
    B_all = U / sq[:, None]
    coef_all = orb @ (space.mu[:, None] * B_all.conj())
    ell, achieved = d, 0.0
    for l in range(1, d):
        resid = orb - coef_all[:, :l] @ B_all[:, :l].T
        # margin so that re-evaluating a single orbit element cannot round above the bound
        err = float(np.abs(resid).max()) * (1 + RESIDUAL_MARGIN)
        if err <= eps:
            ell, achieved = l, err
            break
    basis = [Func(B_all[:, i], space) for i in range(ell)]
    u = norm_p(Func(fv, space), lp) * adjoint_norm(A, lp) * max(dual_norm(b, lp) for b in basis)
    floored = False
    if u <= 0:
        # lambda is identically zero here, so any positive bound is valid
        u, floored = 1.0, True
    return A1Certificate(stage, Func(fv, space), basis, basis, float(eps), achieved, float(u), N_orbit, lp, floored)


def decompose_orbit_element(cert, A, T, f, n):
    """``A T^n f = sum_i lambda_i u_i + r``; returns ``(lambda, r)``."""
    vec = _orbit(A, T, f, [int(n)])
    lam = cert.coefficients(vec)
    r = cert.remainders(vec, lam)
    return lam[0], Func(r[0], T.space)


@dataclass
class SplittingNode:
    """Node ``v``; ``index`` is the tuple ``v`` (empty for the root).

    In part 2, ``g`` is the certificate basis vector that created the node,
    ``f`` its reversible part and ``q`` its stable part with respect to the
    next operator.  In part 1, ``f`` is the basis vector itself.
    """

    index: tuple
    f: Func
    c: float
    g: Func = None
    q: Func = None
    cert: A1Certificate = None

    @property
    def level(self):
        return len(self.index)

    @property
    def parent(self):
        return self.index[:-1] if self.index else None

    @property
    def u(self):
        return self.cert.u_const if self.cert else None

    @property
    def ell(self):
        return self.cert.ell if self.cert else None


@dataclass
class SplittingTree:
    nodes: dict
    eps: float
    C: float
    m: int
    variant: str
    lp: float
    c: float = field(init=False)

    def __post_init__(self):
        self.c = self.eps * self.C ** (-self.m)

    def level(self, d):
        return [n for n in self.nodes.values() if n.level == d]

    def children(self, v):
        return [n for n in self.nodes.values() if n.level == len(v) + 1 and n.index[:-1] == v]

    def to_json(self):
        out = []
        for n in self.nodes.values():
            out.append(
                {
                    "id": list(n.index),
                    "parent": None if n.parent is None else list(n.parent),
                    "level": n.level,
                    "c": n.c,
                    "u": n.u,
                    "ell": n.ell,
                    "epsilon_achieved": n.cert.epsilon_achieved if n.cert else None,
                }
            )
        return {"variant": self.variant, "eps": self.eps, "C": self.C, "c": self.c, "m": self.m, "nodes": out}

    def check_invariants(self, p, horizon_factor=10, n_samples=100, seed=0):
        """Check every structural and certificate invariant; returns a report dict."""
        rng = np.random.default_rng(seed)
        rec_err = 0.0
        resid_ok = True
        lam_ratio = 0.0
        biorth = 0.0
        c_rec = 0.0
        telescope = 0.0
        part_err = 0.0
        for node in self.nodes.values():
            if node.level and node.parent in self.nodes:
                par = self.nodes[node.parent]
                want = par.c / (par.u * par.ell)
                c_rec = max(c_rec, abs(node.c - want) / abs(want))
            if self.variant == "part2" and node.g is not None:
                part_err = max(part_err, norm_inf(node.g - (node.f + node.q)))
                s = spectral_split(p.T[node.level])
                part_err = max(part_err, norm_inf(split_function(s, node.f)[1]), norm_inf(split_function(s, node.q)[0]))
            cert = node.cert
            if cert is None:
                continue
            kids = self.children(node.index)
            telescope = max(telescope, abs(sum(k.c for k in kids) * node.u - node.c) / node.c)
            mu = cert.f.space.mu
            D = np.stack([x.values for x in cert.duals], axis=1)
            B = np.stack([x.values for x in cert.basis_U], axis=1)
            biorth = max(biorth, float(np.abs((mu[:, None] * D.conj()).T @ B - np.eye(cert.ell)).max()))
            A, T = p.A[node.level], p.T[node.level]
            ns = np.arange(1, cert.N_orbit + 1)
            vecs = _orbit(A, T, cert.f, ns)
            lam = cert.coefficients(vecs)
            r = cert.remainders(vecs, lam)
            rec_err = max(rec_err, float(np.abs(lam @ B.T + r - vecs).max()))
            resid_ok = resid_ok and float(np.abs(r).max()) <= cert.epsilon_achieved + 1e-15
            ext = np.sort(rng.integers(1, horizon_factor * cert.N_orbit + 1, size=n_samples))
            lam_ext = cert.coefficients(_orbit(A, T, cert.f, ext))
            lam_ratio = max(lam_ratio, float(np.abs(lam_ext).max()) / cert.u_const)
        checks = {
            "c_recursion_rel_err": c_rec,
            "telescoping_rel_err": telescope,
            "biorthogonality_err": biorth,
            "reconstruction_err": rec_err,
            "residual_within_achieved": resid_ok,
            "max_lambda_over_u": lam_ratio,
            "part_split_err": part_err,
        }
        checks["ok"] = bool(
            c_rec <= 1e-12
            and telescope <= 1e-12
            and biorth <= 1e-9
            and rec_err <= 1e-9
            and resid_ok
            and lam_ratio <= 1.0 + 1e-12
            and part_err <= PART_TOL
        )
        return checks


def _in_part(T, f, part):
    fr, fs = split_function(spectral_split(T), f)
    other = fs if part == "reversible" else fr
    scale = max(1.0, norm_inf(f))
    return norm_inf(other) <= PART_TOL * scale, norm_inf(other)


def build_splitting_tree(p, f, eps, variant="part2", N_orbit=None, lp=2):
    """Run the splitting procedure on ``f`` for the problem ``p``.

    ``variant="part1"`` expects ``f`` in the stable part of ``T_1`` and
    ``"part2"`` in its reversible part.  The problem's joint bound ``C`` must
    be certified (:func:`~entangled_ergodic.engine.certify_joint_bound`).
    Step (V)'s bounded approximants coincide with the leaf functions here,
    since every function on a finite space is bounded.
    """
    if variant not in ("part1", "part2"):
        raise ValidationError(f"variant must be 'part1' or 'part2', got {variant!r}")
    if not p.C_certified:
        raise ValidationError("the joint L^inf bound C must be certified before splitting")
    if p.m < 2:
        raise ValidationError("splitting needs m >= 2 stages")
    fv = as_values(f, p.space)
    part = "stable" if variant == "part1" else "reversible"
    ok, err = _in_part(p.T[0], fv, part)
    if not ok:
        raise ValidationError(f"f is not in the {part} part of T1 (complementary part sup norm {err:.3g})")

    tree = SplittingTree({}, float(eps), float(max(p.C, 1.0)), p.m, variant, lp)
    root = SplittingNode((), Func(fv, p.space), tree.c)
    tree.nodes[()] = root
    frontier = [root]
    for d in range(p.m - 1):
        nxt = []
        split_next = spectral_split(p.T[d + 1]) if variant == "part2" else None
        for node in frontier:
            node.cert = a1_certificate(p.A[d], p.T[d], node.f, node.c, N_orbit=N_orbit, lp=lp, stage=d + 1)
            c_child = node.c / (node.u * node.ell)
            for j, b in enumerate(node.cert.basis_U, start=1):
                idx = node.index + (j,)
                if variant == "part2":
                    fr, fs = split_function(split_next, b)
                    child = SplittingNode(idx, fr, c_child, g=b, q=fs)
                else:
                    child = SplittingNode(idx, b, c_child)
                tree.nodes[idx] = child
                nxt.append(child)
        frontier = nxt
    return tree


def _lambda_seq(tree, p, node, N, cache):
    """Sequence ``lambda_{node;n}`` for ``n = 1..N`` from the parent's certificate."""
    par = tree.nodes[node.parent]
    key = (par.index, N)
    if key not in cache:
        vecs = _orbit(p.A[par.level], p.T[par.level], par.f, np.arange(1, N + 1))
        lam = par.cert.coefficients(vecs)
        cache[key] = (lam, par.cert.remainders(vecs, lam))
    return cache[key][0][:, node.index[-1] - 1]


def _ancestor_scalars(tree, p, node, N, cache):
    stages = []
    idx = node.index
    for l in range(1, len(idx) + 1):
        x = tree.nodes[idx[:l]]
        stages.append(Stage("scalar", var=p.ent.alpha[l - 1] - 1, data=_lambda_seq(tree, p, x, N, cache)))
    return stages


def _tail(p, start, N):
    # stages T_start, A_start, ..., T_m (1-based start)
    exps = np.arange(1, N + 1, dtype=np.int64)
    out = []
    for s in range(start, p.m + 1):
        out.append(Stage("power", p.T[s - 1].entries, p.ent.alpha[s - 1] - 1, exps))
        if s < p.m:
            out.append(Stage("fixed", p.A[s - 1].entries))
    return out


def _remainder_terms(tree, p, N, cache, workers):
    terms = {}
    for node in tree.nodes.values():
        if node.cert is None:
            continue
        _lambda_child_cache(tree, p, node, N, cache)
        r = cache[(node.index, N)][1]
        stages = _ancestor_scalars(tree, p, node, N, cache) + _tail(p, node.level + 2, N)
        terms[node.index] = evaluate_chain(r, stages, N, source_var=p.ent.alpha[node.level] - 1, workers=workers)
    return terms


def _lambda_child_cache(tree, p, node, N, cache):
    key = (node.index, N)
    if key not in cache:
        vecs = _orbit(p.A[node.level], p.T[node.level], node.f, np.arange(1, N + 1))
        lam = node.cert.coefficients(vecs)
        cache[key] = (lam, node.cert.remainders(vecs, lam))


def _principal_terms(tree, p, N, cache, workers):
    """Leaf terms and (part 2) stable-part terms of the decomposition."""
    leaves, qterms = {}, {}
    for node in tree.nodes.values():
        if node.level == 0:
            continue
        scal = _ancestor_scalars(tree, p, node, N, cache)
        if node.level == p.m - 1:
            src = node.g if tree.variant == "part2" else node.f
            leaves[node.index] = evaluate_chain(src.values, scal + _tail(p, p.m, N), N, workers=workers)
        elif tree.variant == "part2":
            qterms[node.index] = evaluate_chain(node.q.values, scal + _tail(p, node.level + 1, N), N, workers=workers)
    return leaves, qterms


def _ancestor_products(tree, node):
    """``prod_{x strictly above node} 1/l_x``."""
    out = 1.0
    for l in range(len(node.index)):
        out /= tree.nodes[node.index[:l]].ell
    return out


def verify_proof_bounds(tree, p, f, N, workers=1):
    """Evaluate the splitting bounds at horizon ``N``.

    Part 2 reports the sup norm of the aggregated remainder terms next to
    the budget ``eps*(m-2)`` and the per-term budgets
    ``eps * prod 1/l_x``.  Part 1 reports the Cesaro mean
    ``sum_w C^m c_w mean(prod |lambda|)`` next to its limit ``eps``.  Both
    report how well the split terms re-assemble the full average.
    """
    N = int(N)
    cache = {}
    fv = as_values(f, p.space)
    full = entangled_average(p, fv, N, workers=workers).values
    rterms = _remainder_terms(tree, p, N, cache, workers)
    leaves, qterms = _principal_terms(tree, p, N, cache, workers)
    total = sum(rterms.values()) + sum(leaves.values()) + sum(qterms.values(), np.zeros(p.d, complex))
    report = {
        "variant": tree.variant,
        "N": N,
        "eps": tree.eps,
        "C": tree.C,
        "m": tree.m,
        "decomposition_err": float(np.abs(total - full).max()),
        "n_leaves": len(leaves),
        "n_stable_terms": len(qterms),
        "n_remainder_terms": len(rterms),
    }
    if tree.variant == "part2":
        agg = sum(rterms.values())
        per_term = []
        for idx, vec in rterms.items():
            node = tree.nodes[idx]
            budget = tree.eps * _ancestor_products(tree, node)
            per_term.append({"id": list(idx), "sup": float(np.abs(vec).max()), "budget": budget})
        report.update(
            remainder_sup=float(np.abs(agg).max()),
            budget=tree.eps * (tree.m - 2),
            budget_all_levels=tree.eps * (tree.m - 1),
            per_term=per_term,
        )
        report["holds"] = report["remainder_sup"] <= report["budget"] + 1e-9
        report["per_term_holds"] = all(t["sup"] <= t["budget"] + 1e-9 for t in per_term)
    else:
        total_mean = 0.0
        for node in tree.nodes.values():
            if node.cert is None:
                continue
            groups = {}
            for l in range(1, node.level + 1):
                x = tree.nodes[node.index[:l]]
                v = p.ent.alpha[l - 1]
                seq = np.abs(_lambda_seq(tree, p, x, N, cache))
                groups[v] = groups.get(v, 1.0) * seq
            mean = 1.0
            for seq in groups.values():
                mean *= float(np.mean(seq))
            total_mean += tree.C**tree.m * node.c * mean
        report.update(remainder_cesaro=total_mean, limit=tree.eps, excess=total_mean - tree.eps)
    return report
