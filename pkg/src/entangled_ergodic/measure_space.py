"""Finite probability spaces and the weighted norms on functions over them.

Every measure in this package is atomic: a point mass ``mu_i > 0`` on each of
``d`` atoms.  Almost-everywhere statements therefore become per-atom
statements, and the essential supremum is a plain maximum.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

__all__ = [
    "FiniteMeasureSpace",
    "Func",
    "as_values",
    "norm_p",
    "norm_inf",
    "dual_norm",
    "pairing",
    "conjugate_exponent",
    "real_divide",
]

_MASS_TOL = 1e-12


class FiniteMeasureSpace:
    """Probability measure on ``d`` atoms.

    Parameters
    ----------
    atom_weights : array_like
        Positive masses summing to one (within ``1e-12``).
    name : str, optional
        Label used when operators reference the space in serialized form.
    """

    __slots__ = ("_mu", "name")

    def __init__(self, atom_weights, name="X"):
        mu = np.array(atom_weights, dtype=float).ravel()
        if mu.size < 1:
            raise ValidationError("a measure space needs at least one atom")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            bad = int(np.flatnonzero(~(mu > 0))[0])
            raise ValidationError(f"atom weight mu[{bad}] = {mu[bad]!r} is not positive")
        if abs(mu.sum() - 1.0) > _MASS_TOL:
            raise ValidationError(f"atom weights sum to {mu.sum():.17g}, not 1")
        mu.setflags(write=False)
        self._mu = mu
        self.name = name

    @classmethod
    def uniform(cls, d, name="X"):
        if d < 1:
            raise ValidationError(f"d must be >= 1, got {d}")
        return cls(np.full(d, 1.0 / d), name=name)

    @property
    def mu(self):
        return self._mu

    @property
    def d(self):
        return self._mu.size

    def is_uniform(self):
        return bool(np.all(self._mu == self._mu[0]))

    def to_json(self):
        return {"mu": [float(x) for x in self._mu]}

    @classmethod
    def from_json(cls, obj, name="X"):
        if "mu" in obj:
            return cls(obj["mu"], name=name)
        if "uniform" in obj:
            return cls.uniform(int(obj["uniform"]), name=name)
        raise ValidationError("measure space JSON needs a 'mu' or 'uniform' field")

    def __eq__(self, other):
        return isinstance(other, FiniteMeasureSpace) and np.array_equal(self._mu, other._mu)

    def __hash__(self):
        return hash(self._mu.tobytes())

    def __repr__(self):
        if self.is_uniform():
            return f"FiniteMeasureSpace.uniform({self.d})"
        return f"FiniteMeasureSpace({self._mu.tolist()!r})"


class Func:
    """A function on the atoms of a :class:`FiniteMeasureSpace`.

    Values are stored as an immutable complex array.  Arithmetic with other
    ``Func`` objects on the same space and with scalars is supported.
    """

    __slots__ = ("values", "space")

    def __init__(self, values, space):
        v = np.array(values, dtype=complex).ravel()
        if v.size != space.d:
            raise ValidationError(f"function has {v.size} values but the space has {space.d} atoms")
        v.setflags(write=False)
        self.values = v
        self.space = space

    @classmethod
    def constant(cls, c, space):
        return cls(np.full(space.d, c, dtype=complex), space)

    @classmethod
    def indicator(cls, i, space):
        v = np.zeros(space.d, dtype=complex)
        v[i] = 1.0
        return cls(v, space)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _other(self, other):
        if isinstance(other, Func):
            if other.space != self.space:
                raise ValidationError("functions live on different spaces")
            return other.values
        return other

    def __add__(self, other):
        return Func(self.values + self._other(other), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return Func(self.values - self._other(other), self.space)

    def __rsub__(self, other):
        return Func(self._other(other) - self.values, self.space)

    def __mul__(self, other):
        return Func(self.values * self._other(other), self.space)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Func(self.values / c, self.space)

    def __neg__(self):
        return Func(-self.values, self.space)

    def __abs__(self):
        return Func(np.abs(self.values), self.space)

    def conj(self):
        return Func(self.values.conj(), self.space)

    def allclose(self, other, atol=1e-12):
        return bool(np.allclose(self.values, as_values(other, self.space), rtol=0, atol=atol))

    def __repr__(self):
        return f"Func({self.values.tolist()!r})"


def as_values(f, space=None):
    """Return the complex value array of ``f`` (a :class:`Func` or array_like)."""
    if isinstance(f, Func):
        if space is not None and f.space != space:
            raise ValidationError("function lives on a different space")
        return f.values
    v = np.asarray(f, dtype=complex).ravel()
    if space is not None and v.size != space.d:
        raise ValidationError(f"function has {v.size} values but the space has {space.d} atoms")
    return v


def _space_of(f, space):
    if space is not None:
        return space
    if isinstance(f, Func):
        return f.space
    raise ValidationError("a measure space is required for a bare array")


def _check_p(p):
    if not (isinstance(p, (int, float)) and p >= 1 and math.isfinite(p)):
        raise ValidationError(f"p must be a finite real >= 1, got {p!r}")


def conjugate_exponent(p):
    """Hoelder conjugate ``p'`` with ``1/p + 1/p' = 1`` (``inf`` for ``p == 1``)."""
    _check_p(p)
    return math.inf if p == 1 else p / (p - 1.0)


def norm_p(f, p, space=None):
    """``(sum_i mu_i |f_i|^p)^(1/p)``."""
    _check_p(p)
    space = _space_of(f, space)
    a = np.abs(as_values(f, space))
    if p == 1:
        return float(np.dot(space.mu, a))
    if p == 2:
        return float(math.sqrt(np.dot(space.mu, a * a)))
    return float(np.dot(space.mu, a**p) ** (1.0 / p))


def norm_inf(f, space=None):
    """Maximum modulus; every atom carries mass, so this is the essential sup."""
    v = as_values(f, space)
    return float(np.max(np.abs(v))) if v.size else 0.0


def dual_norm(phi, p, space=None):
    """Norm of the functional ``g -> sum_i mu_i conj(phi_i) g_i`` on ``L^p``.

    This is the ``L^{p'}`` norm of ``phi``; for ``p == 1`` it is ``max |phi_i|``.
    """
    q = conjugate_exponent(p)
    if q == math.inf:
        return norm_inf(phi, space)
    return norm_p(phi, q, _space_of(phi, space))


def pairing(phi, f, space=None):
    """``<phi, f> = sum_i mu_i conj(phi_i) f_i`` (conjugate-linear in ``phi``)."""
    space = _space_of(phi if isinstance(phi, Func) else f, space)
    return complex(np.dot(space.mu * as_values(phi, space).conj(), as_values(f, space)))


def real_divide(x, c):
    """``x / c`` for complex ``x`` and real ``c``, dividing each component.

    numpy divides a complex array by a scalar via complex division, which
    multiplies by a rounded reciprocal; componentwise division keeps e.g.
    ``(N * f) / N == f`` exact.
    """
    x = np.asarray(x)
    if not np.iscomplexobj(x):
        return x / c
    out = np.array(x, dtype=complex)
    out.view(float)[...] /= float(c)
    return out
