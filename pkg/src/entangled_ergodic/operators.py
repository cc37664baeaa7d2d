"""Dense operators on a finite measure space and their weighted norms.

An operator is a ``d x d`` complex matrix ``M`` acting by ``f -> M f``.  On a
finite atomic space the two norms that define the Dunford-Schwartz class have
closed forms::

    ||M||_{inf->inf} = max_i sum_j |M_ij|
    ||M||_{1->1}     = max_j (1/mu_j) sum_i mu_i |M_ij|

Atom maps (for Koopman operators) use 0-based atom indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeasureNotPreservedError, ValidationError
from .measure_space import FiniteMeasureSpace, Func, as_values, conjugate_exponent

__all__ = [
    "OperatorRep",
    "DSReport",
    "apply",
    "operator_norm",
    "operator_norm_p",
    "is_dunford_schwartz",
    "modulus",
    "adjoint",
    "adjoint_norm",
    "koopman_from_map",
    "cyclic_shift",
    "identity",
    "volterra_discrete",
    "random_ds",
]


class OperatorRep:
    """Immutable dense operator bound to a measure space."""

    __slots__ = ("entries", "space", "_norms")

    def __init__(self, entries, space):
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != space.d:
            raise ValidationError(f"operator is {m.shape[0]}x{m.shape[0]} but the space has {space.d} atoms")
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator has non-finite entries")
        m.setflags(write=False)
        self.entries = m
        self.space = space
        self._norms = None

    @property
    def d(self):
        return self.space.d

    @property
    def norms(self):
        """Cached pair ``(||.||_{1->1}, ||.||_{inf->inf})``."""
        if self._norms is None:
            a = np.abs(self.entries)
            mu = self.space.mu
            linf = float(a.sum(axis=1).max())
            l1 = float(((mu @ a) / mu).max())
            self._norms = (l1, linf)
        return self._norms

    def __call__(self, f):
        return apply(self, f)

    def __matmul__(self, other):
        if isinstance(other, OperatorRep):
            _same_space(self, other)
            return OperatorRep(self.entries @ other.entries, self.space)
        return apply(self, other)

    def __mul__(self, c):
        return OperatorRep(self.entries * complex(c), self.space)

    __rmul__ = __mul__

    def __add__(self, other):
        _same_space(self, other)
        return OperatorRep(self.entries + other.entries, self.space)

    def __sub__(self, other):
        _same_space(self, other)
        return OperatorRep(self.entries - other.entries, self.space)

    def power(self, n):
        """Matrix power; used for certification, never inside the averaging engine."""
        return OperatorRep(np.linalg.matrix_power(self.entries, int(n)), self.space)

    def is_real(self):
        return bool(np.all(self.entries.imag == 0))

    def to_json(self):
        flat = self.entries.ravel()
        return {
            "d": self.d,
            "space": self.space.name,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, obj, space):
        d = int(obj["d"])
        pairs = np.asarray(obj["entries"], dtype=float)
        if pairs.shape != (d * d, 2):
            raise ValidationError(f"'entries' must hold {d * d} [re, im] pairs, got shape {pairs.shape}")
        return cls((pairs[:, 0] + 1j * pairs[:, 1]).reshape(d, d), space)

    def __eq__(self, other):
        return (
            isinstance(other, OperatorRep)
            and self.space == other.space
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None

    def __repr__(self):
        return f"OperatorRep(d={self.d}, norms={self.norms})"


def _same_space(a, b):
    if a.space != b.space:
        raise ValidationError("operators act on different spaces")


def apply(T, f):
    """``T f`` as a :class:`Func`."""
    v = as_values(f)
    if v.size != T.d:
        raise ValidationError(f"dimension mismatch: operator is {T.d}x{T.d}, function has {v.size} values")
    return Func(T.entries @ v, T.space)


def operator_norm(T, which):
    """Exact operator norm on ``L^1(mu)`` (``"L1"``) or ``L^inf`` (``"Linf"``)."""
    key = str(which).lower()
    l1, linf = T.norms
    if key in ("l1", "1"):
        return l1
    if key in ("linf", "inf"):
        return linf
    raise ValidationError(f"unknown norm {which!r}; use 'L1' or 'Linf'")


def operator_norm_p(T, p):
    """Operator norm on ``L^p(mu)``.

    Exact for ``p`` in ``{1, 2, inf}``; for other ``p`` the Riesz-Thorin bound
    ``||T||_1^(1/p) ||T||_inf^(1-1/p)`` is returned, which is an upper bound.
    """
    if p == math.inf:
        return T.norms[1]
    if p == 1:
        return T.norms[0]
    if p == 2:
        s = np.sqrt(T.space.mu)
        return float(np.linalg.norm(s[:, None] * T.entries / s[None, :], 2))
    l1, linf = T.norms
    return float(l1 ** (1.0 / p) * linf ** (1.0 - 1.0 / p))


def adjoint(T):
    """Adjoint with respect to ``<phi, f> = sum mu_i conj(phi_i) f_i``."""
    mu = T.space.mu
    return OperatorRep(T.entries.conj().T * mu[None, :] / mu[:, None], T.space)


def adjoint_norm(A, p):
    """``||A^*||`` on the dual space ``L^{p'}``."""
    return operator_norm_p(adjoint(A), conjugate_exponent(p))


@dataclass(frozen=True)
class DSReport:
    ok: bool
    norm_l1: float
    norm_linf: float
    tol: float

    def __bool__(self):
        return self.ok


def is_dunford_schwartz(T, tol=0.0):
    """Check ``||T||_{1->1} <= 1 + tol`` and ``||T||_{inf->inf} <= 1 + tol``."""
    if tol < 0:
        raise ValidationError("tol must be >= 0")
    l1, linf = T.norms
    return DSReport(l1 <= 1.0 + tol and linf <= 1.0 + tol, l1, linf, tol)


def modulus(T):
    """Linear modulus; on an atomic space this is the entrywise absolute value."""
    return OperatorRep(np.abs(T.entries), T.space)


def identity(space):
    return OperatorRep(np.eye(space.d), space)


def koopman_from_map(sigma, space, tol=1e-12):
    """Koopman operator ``(Tf)_i = f_{sigma(i)}`` of a measure-preserving atom map."""
    sigma = np.asarray(sigma, dtype=int).ravel()
    d = space.d
    if sigma.size != d:
        raise ValidationError(f"map has {sigma.size} entries, the space has {d} atoms")
    if np.any((sigma < 0) | (sigma >= d)):
        raise ValidationError("map values must be atom indices in [0, d)")
    pre = np.zeros(d)
    np.add.at(pre, sigma, space.mu)
    bad = np.flatnonzero(np.abs(pre - space.mu) > tol)
    if bad.size:
        j = int(bad[0])
        raise MeasureNotPreservedError(j, float(space.mu[j]), float(pre[j]))
    m = np.zeros((d, d))
    m[np.arange(d), sigma] = 1.0
    return OperatorRep(m, space)


def cyclic_shift(space, shift=1):
    """Koopman operator of the rotation ``i -> i + shift (mod d)``; needs a uniform space."""
    d = space.d
    return koopman_from_map((np.arange(d) + shift) % d, space)


def volterra_discrete(d, space=None):
    """Left-endpoint discretization of ``(Vf)(x) = int_0^x f`` on a uniform grid.

    ``(Vf)_i = (1/d) sum_{j<i} f_j``: strictly lower triangular, hence nilpotent.
    """
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    if space is None:
        space = FiniteMeasureSpace.uniform(d)
    elif space.d != d or not space.is_uniform():
        raise ValidationError("the Volterra grid needs the uniform space with d atoms")
    return OperatorRep(np.tril(np.full((d, d), 1.0 / d), k=-1), space)


def _sinkhorn(K, mu, tol=1e-15, max_iter=100_000):
    # scale K so that row sums and column sums both equal mu
    for _ in range(max_iter):
        K *= (mu / K.sum(axis=1))[:, None]
        K *= (mu / K.sum(axis=0))[None, :]
        if np.max(np.abs(K.sum(axis=1) - mu) / mu) < tol:
            break
    return K


def random_ds(d, seed, kind="doubly_stochastic", space=None):
    """Reproducible random Dunford-Schwartz operator.

    ``doubly_stochastic`` returns a positive matrix with ``M 1 = 1`` and
    ``mu^T M = mu^T``.  ``signed_contraction`` multiplies such a matrix entrywise
    by random unit phases, so its modulus is doubly stochastic and both norms
    stay at most one.
    """
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    if space is None:
        space = FiniteMeasureSpace.uniform(d)
    elif space.d != d:
        raise ValidationError("space dimension does not match d")
    if kind not in ("doubly_stochastic", "signed_contraction"):
        raise ValidationError(f"unknown random_ds kind {kind!r}")
    rng = np.random.default_rng(seed)
    mu = space.mu
    K = _sinkhorn(rng.random((d, d)) + 0.05, mu)
    P = K / mu[:, None]
    P /= P.sum(axis=1, keepdims=True)
    if kind == "doubly_stochastic":
        return OperatorRep(P, space)
    phases = np.exp(2j * np.pi * rng.random((d, d)))
    return OperatorRep(P * phases, space)
