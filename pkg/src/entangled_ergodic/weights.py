"""Weight sequences and weighted ergodic averages.

Sequences are indexed from ``n = 1``.  Four kinds are supported:

``trig_poly``
    ``a_n = sum_j b_j rho_j**n`` with every ``|rho_j| = 1``.
``linear``
    ``a_n = <phi, T^n y>`` for an operator ``T``, tagged stable or reversible
    according to the part of ``T``'s JdLG splitting containing ``y``.
``product``
    componentwise product of other sequences.
``explicit``
    a finite list of values ``a_1..a_L``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import NotDunfordSchwartzError, ValidationError
from .jdlg import spectral_split, split_function
from .measure_space import Func, as_values, real_divide
from .operators import is_dunford_schwartz
from .polynomial import PolynomialIndex

__all__ = [
    "WeightSequence",
    "trig_poly",
    "linear_sequence",
    "product",
    "explicit",
    "eval_weights",
    "cesaro_abs_mean",
    "besicovitch_seminorm",
    "besicovitch_profile",
    "weighted_average",
    "correlation_sequence",
]

UNIMODULAR_TOL = 1e-12
TAG_TOL = 1e-9


def _int_power(base, n):
    # binary exponentiation, so that e.g. (-1)**n and (1j)**n stay exact
    base = np.asarray(base, dtype=complex)
    n = np.asarray(n, dtype=np.int64)
    result = np.ones(np.broadcast(base, n).shape, dtype=complex)
    b = np.broadcast_to(base, result.shape).copy()
    e = np.broadcast_to(n, result.shape).copy()
    while np.any(e):
        odd = (e & 1).astype(bool)
        result[odd] *= b[odd]
        b = b * b
        e >>= 1
    return result


class WeightSequence:
    """A lazily evaluated sequence ``(a_n)_{n >= 1}``; use the module-level constructors."""

    __slots__ = ("kind", "params")

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params

    def at(self, indices):
        """Values at the given 1-based indices."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and idx.min() < 1:
            raise ValidationError("sequence indices start at 1")
        kind, prm = self.kind, self.params
        if kind == "trig_poly":
            b, rho = prm["b"], prm["rho"]
            return (b[None, :] * _int_power(rho[None, :], idx[:, None])).sum(axis=1) if idx.size else np.zeros(0, complex)
        if kind == "linear":
            T, y, phi = prm["T"], prm["y"], prm["phi"]
            orb = kernels.orbit(T.entries, y[None, :], idx)[0]
            return orb @ (T.space.mu * phi.conj())
        if kind == "product":
            out = np.ones(idx.shape, dtype=complex)
            for w in prm["factors"]:
                out = out * w.at(idx)
            return out
        if kind == "explicit":
            vals = prm["values"]
            if idx.size and idx.max() > vals.size:
                raise ValidationError(f"explicit sequence has {vals.size} values, index {int(idx.max())} requested")
            return vals[idx - 1]
        raise ValidationError(f"unknown weight kind {kind!r}")

    def __mul__(self, other):
        return product([self, other])

    def to_json(self):
        kind, prm = self.kind, self.params
        pairs = lambda a: [[float(z.real), float(z.imag)] for z in a]
        if kind == "trig_poly":
            return {"kind": kind, "b": pairs(prm["b"]), "rho": pairs(prm["rho"])}
        if kind == "explicit":
            return {"kind": kind, "values": pairs(prm["values"])}
        if kind == "product":
            return {"kind": kind, "factors": [w.to_json() for w in prm["factors"]]}
        return {"kind": kind, "tag": prm["tag"], "y": pairs(prm["y"]), "phi": pairs(prm["phi"])}

    def __repr__(self):
        return f"WeightSequence({self.kind!r})"


def _cvec(x):
    a = np.asarray(x)
    if a.ndim == 2 and a.shape[-1] == 2 and not np.iscomplexobj(a):
        a = a[:, 0] + 1j * a[:, 1]
    return np.atleast_1d(np.asarray(a, dtype=complex))


def trig_poly(b, rho):
    b, rho = _cvec(b), _cvec(rho)
    if b.shape != rho.shape:
        raise ValidationError("trig_poly needs as many coefficients b as frequencies rho")
    bad = np.flatnonzero(np.abs(np.abs(rho) - 1) > UNIMODULAR_TOL)
    if bad.size:
        raise ValidationError(f"frequency rho[{int(bad[0])}] = {rho[bad[0]]} is not unimodular")
    return WeightSequence("trig_poly", b=b, rho=rho)


def linear_sequence(T, y, phi, tag):
    """``a_n = <phi, T^n y>``; ``tag`` (``"stable"``/``"reversible"``) is certified here."""
    if tag not in ("stable", "reversible"):
        raise ValidationError(f"tag must be 'stable' or 'reversible', got {tag!r}")
    y = as_values(y, T.space).copy()
    phi = as_values(phi, T.space).copy()
    fr, fs = split_function(spectral_split(T), y)
    other = fs if tag == "reversible" else fr
    scale = max(1.0, float(np.max(np.abs(y))))
    err = float(np.max(np.abs(other.values)))
    if err > TAG_TOL * scale:
        raise ValidationError(f"y is not in the {tag} part of T: the complementary part has sup norm {err:.3g}")
    return WeightSequence("linear", T=T, y=y, phi=phi, tag=tag)


def product(factors):
    factors = list(factors)
    if not factors:
        raise ValidationError("product needs at least one factor")
    return WeightSequence("product", factors=factors)


def explicit(values):
    return WeightSequence("explicit", values=_cvec(values))


def eval_weights(w, N):
    """``(a_1, ..., a_N)``."""
    return w.at(np.arange(1, int(N) + 1))


def cesaro_abs_mean(w, N):
    """``(1/N) sum_{n<=N} |a_n|``; tends to zero exactly for sequences in the class N."""
    return float(np.mean(np.abs(eval_weights(w, N))))


def _subseq_indices(subseq, N):
    if subseq is None:
        return np.arange(1, N + 1, dtype=np.int64)
    q = subseq if isinstance(subseq, PolynomialIndex) else PolynomialIndex(subseq)
    return q.check_positive(N)


def besicovitch_seminorm(w, p, subseq=None, N=1024):
    """Finite-``N`` estimate ``((1/N) sum_{s<=N} |a_{q(s)}|^p)^(1/p)``."""
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    vals = np.abs(w.at(_subseq_indices(subseq, int(N))))
    return float(np.mean(vals**p) ** (1.0 / p))


def besicovitch_profile(w, p, checkpoints, subseq=None):
    """Seminorm estimates at every checkpoint as ``[(N, estimate), ...]``."""
    cps = [int(n) for n in checkpoints]
    vals = np.abs(w.at(_subseq_indices(subseq, cps[-1]))) ** p
    csum = np.cumsum(vals)
    return [(n, float((csum[n - 1] / n) ** (1.0 / p))) for n in cps]


def weighted_average(T, f, w, subseq=None, N=1024):
    """``(1/N) sum_{n<=N} a_{q(n)} T^{q(n)} f`` (``q`` the identity without ``subseq``)."""
    rep = is_dunford_schwartz(T, 1e-9)
    if not rep:
        raise NotDunfordSchwartzError("T", rep.norm_l1, rep.norm_linf, 1e-9)
    N = int(N)
    idx = _subseq_indices(subseq, N)
    a = w.at(idx)
    orb = kernels.orbit(T.entries, as_values(f, T.space)[None, :], idx)[0]
    return Func(real_divide(a @ orb, N), T.space)


def correlation_sequence(A, T, g, phi, subseq=None, N=1024):
    """Explicit sequence ``c_n = <A T^{q(n)} g, phi>`` for ``n = 1..N``.

    The caller is responsible for ``g`` lying in the stable part of ``T``
    (see :func:`~entangled_ergodic.jdlg.split_function`).
    """
    idx = _subseq_indices(subseq, int(N))
    orb = kernels.orbit(T.entries, as_values(g, T.space)[None, :], idx)[0]
    vals = (orb @ A.entries.T) @ (T.space.mu * as_values(phi, T.space).conj())
    return explicit(vals)
