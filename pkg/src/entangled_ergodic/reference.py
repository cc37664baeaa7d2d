"""Reference problems used by the acceptance suite, the tests and the CLI."""

from __future__ import annotations

import numpy as np

from .engine import EntangledProblem, EntanglementMap, certify_joint_bound
from .measure_space import FiniteMeasureSpace, Func
from .operators import cyclic_shift, random_ds, volterra_discrete

__all__ = [
    "fourier_mode",
    "random_function",
    "stable_problem",
    "reversible_problem",
    "splitting_problem",
    "stable_splitting_problem",
]


def fourier_mode(space, freq=1):
    """Eigenvector ``x_j = exp(2 pi i freq j / d)`` of the cyclic shift (eigenvalue ``exp(2 pi i freq/d)``)."""
    j = np.arange(space.d)
    return Func(np.exp(2j * np.pi * freq * j / space.d), space)


def random_function(space, seed, complex_values=False):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=space.d)
    if complex_values:
        v = v + 1j * rng.normal(size=space.d)
    return Func(v, space)


def stable_problem(d=32, seed=3, scale=0.9):
    """``m = 2, k = 1``: ``T_1 = scale * signed contraction``, ``A_1 = V``, ``T_2`` = shift.

    ``T_1`` has spectral radius below one, so its stable part is everything.
    """
    X = FiniteMeasureSpace.uniform(d)
    T1 = scale * random_ds(d, seed, "signed_contraction", X)
    p = EntangledProblem([T1, cyclic_shift(X)], [volterra_discrete(d, X)], EntanglementMap([1, 1], 1))
    return certify_joint_bound(p, N_cert=4 * d), random_function(X, seed + 1)


def reversible_problem(k=1, d=8, freq=1):
    """``T_1 = T_2`` = shift, ``A_1 = V``, ``f`` a shift eigenvector; ``alpha = (1,1)`` or ``(1,2)``."""
    X = FiniteMeasureSpace.uniform(d)
    S = cyclic_shift(X)
    alpha = [1, 1] if k == 1 else [1, 2]
    p = EntangledProblem([S, S], [volterra_discrete(d, X)], EntanglementMap(alpha, k))
    return certify_joint_bound(p, N_cert=4 * d), fourier_mode(X, freq)


def splitting_problem(d=8, seed=11):
    """``m = 3`` Volterra/rotation problem with ``alpha = (1, 2, 1)``.

    ``T_1 = T_3`` = shift, ``T_2 = (S + S^-1)/2`` (reversible part spanned by
    the constants and the alternating sequence), ``A_1 = A_2 = V``.  ``f`` is
    random; every function is reversible for the shift.
    """
    X = FiniteMeasureSpace.uniform(d)
    S = cyclic_shift(X)
    T2 = 0.5 * (S + cyclic_shift(X, -1))
    V = volterra_discrete(d, X)
    p = EntangledProblem([S, T2, S], [V, V], EntanglementMap([1, 2, 1], 2))
    return certify_joint_bound(p, N_cert=4 * d), random_function(X, seed)


def stable_splitting_problem(d=8, seed=5, scale=0.9):
    """``m = 3`` problem whose first operator is strictly contracting (part 1 input)."""
    X = FiniteMeasureSpace.uniform(d)
    S = cyclic_shift(X)
    V = volterra_discrete(d, X)
    T1 = scale * random_ds(d, seed, "signed_contraction", X)
    p = EntangledProblem([T1, S, S], [V, V], EntanglementMap([1, 2, 1], 2))
    return certify_joint_bound(p, N_cert=4 * d), random_function(X, seed + 1)
