"""Entangled ergodic averages.

For operators ``T_1..T_m``, transitions ``A_1..A_{m-1}`` and an entanglement
map ``alpha: {1..m} -> {1..k}`` the average at horizon ``N`` is::

    (1/N^k) sum_{1 <= n_1..n_k <= N} T_m^{n_alpha(m)} A_{m-1} ... A_1 T_1^{n_alpha(1)} f

Two evaluators are provided.  :func:`naive_average` enumerates every tuple
with cached matrix powers and is the reference oracle.  :func:`entangled_average`
runs stages left to right over a table indexed by the currently live summation
variables, summing a variable out right after its last occurrence; powers are
produced incrementally by operator-vector products in :mod:`.kernels`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import BudgetError, NotDunfordSchwartzError, ValidationError
from .measure_space import Func, as_values, norm_inf, real_divide
from .operators import is_dunford_schwartz
from .polynomial import PolynomialIndex

__all__ = [
    "EntanglementMap",
    "EntangledProblem",
    "EliminationSchedule",
    "Stage",
    "TrajectoryPoint",
    "certify_joint_bound",
    "elimination_schedule",
    "evaluate_chain",
    "naive_average",
    "entangled_average",
    "absolute_entangled_average",
    "polynomial_entangled_average",
    "average_trajectory",
    "contractivity_bound",
    "DEFAULT_NAIVE_BUDGET",
    "DEFAULT_MEMORY_CAP",
]

DEFAULT_NAIVE_BUDGET = 10**7
# complex entries held by one elimination table (16 bytes each)
DEFAULT_MEMORY_CAP = 2**25
DS_TOL = 1e-9


@dataclass(frozen=True)
class EntanglementMap:
    """``alpha`` as a tuple of 1-based variable labels, one per stage.

    Surjectivity is not required: variables that no stage uses simply
    average a constant.
    """

    alpha: tuple
    k: int

    def __init__(self, alpha, k=None):
        a = tuple(int(x) for x in alpha)
        if not a:
            raise ValidationError("alpha must have at least one entry")
        k = max(a) if k is None else int(k)
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        for i, x in enumerate(a):
            if not 1 <= x <= k:
                raise ValidationError(f"alpha[{i + 1}] = {x} is outside 1..{k}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "k", k)

    @property
    def m(self):
        return len(self.alpha)


@dataclass(frozen=True)
class EntangledProblem:
    """Operators, transitions and entanglement of one average.

    ``C`` is the joint ``L^inf`` bound on ``{A_j T_j^n}``; it only carries
    weight when ``C_certified`` is set (see :func:`certify_joint_bound`).
    """

    T: tuple
    A: tuple
    ent: EntanglementMap
    C: float = 1.0
    C_certified: bool = False
    N_cert: int = 0

    def __post_init__(self):
        object.__setattr__(self, "T", tuple(self.T))
        object.__setattr__(self, "A", tuple(self.A))
        m = self.ent.m
        if len(self.T) != m:
            raise ValidationError(f"alpha has {m} stages but {len(self.T)} operators T were given")
        if len(self.A) != m - 1:
            raise ValidationError(f"{m} stages need {m - 1} transition operators, got {len(self.A)}")
        space = self.T[0].space
        for name, op in self._named():
            if op.space != space:
                raise ValidationError(f"operator {name} lives on a different space")
        for i, T in enumerate(self.T):
            rep = is_dunford_schwartz(T, DS_TOL)
            if not rep:
                raise NotDunfordSchwartzError(f"T{i + 1}", rep.norm_l1, rep.norm_linf, DS_TOL)
        if self.C < 1 and self.C_certified:
            raise ValidationError("the joint bound C must be >= 1")

    def _named(self):
        for i, T in enumerate(self.T):
            yield f"T{i + 1}", T
        for i, A in enumerate(self.A):
            yield f"A{i + 1}", A

    @property
    def space(self):
        return self.T[0].space

    @property
    def m(self):
        return self.ent.m

    @property
    def k(self):
        return self.ent.k

    @property
    def d(self):
        return self.space.d


def certify_joint_bound(p, N_cert=256, C=None):
    """Certify ``sup_{n <= N_cert, j} ||A_j T_j^n||_{inf->inf} <= C``.

    With ``C=None`` the smallest admissible constant (at least 1) is used;
    otherwise the given ``C`` is checked and a :class:`ValidationError` raised
    if the sampled supremum exceeds it.
    """
    sup = 0.0
    for A, T in zip(p.A, p.T[:-1]):
        M = A.entries
        for _ in range(N_cert):
            M = M @ T.entries
            sup = max(sup, float(np.abs(M).sum(axis=1).max()))
    if C is None:
        C = max(1.0, sup)
    elif sup > C:
        raise ValidationError(f"sup ||A_j T_j^n||_inf = {sup:.17g} exceeds C = {C!r} for n <= {N_cert}")
    return replace(p, C=float(C), C_certified=True, N_cert=int(N_cert))


@dataclass(frozen=True)
class EliminationSchedule:
    """Live summation variables per stage (1-based labels)."""

    live: tuple
    width: int
    introduce: dict
    eliminate: dict


def _intervals(var_seq):
    first, last = {}, {}
    for pos, v in enumerate(var_seq):
        if v is None:
            continue
        first.setdefault(v, pos)
        last[v] = pos
    return first, last


def elimination_schedule(ent):
    """First/last-occurrence scan of ``alpha``; ``width`` is the largest live set."""
    first, last = _intervals(ent.alpha)
    live = tuple(
        frozenset(v for v in first if first[v] <= i <= last[v]) for i in range(ent.m)
    )
    width = max((len(s) for s in live), default=0)
    return EliminationSchedule(
        live=live,
        width=width,
        introduce={v: first[v] + 1 for v in first},
        eliminate={v: last[v] + 1 for v in last},
    )


@dataclass
class Stage:
    """One step of a chain.

    ``kind`` is ``"power"`` (apply ``matrix**data[n-1]`` where ``n`` is the
    value of ``var``), ``"fixed"`` (apply ``matrix``) or ``"scalar"`` (multiply
    by ``data[n-1]``).
    """

    kind: str
    matrix: np.ndarray = None
    var: int = None
    data: np.ndarray = None


def _width(var_seq):
    first, last = _intervals(var_seq)
    return max(
        (sum(1 for v in first if first[v] <= i <= last[v]) for i in range(len(var_seq))),
        default=0,
    )


def evaluate_chain(source, stages, N, source_var=None, workers=1, memory_cap=DEFAULT_MEMORY_CAP, backend=None):
    """Average a chain of stages over all assignments of its variables.

    ``source`` is a vector ``(d,)``, or ``(N, d)`` indexed by ``source_var``.
    Every variable occurring in the chain ranges over ``1..N`` and contributes
    a factor ``1/N``; variables that never occur contribute nothing.
    """
    source = np.asarray(source, dtype=complex)
    d = source.shape[-1]
    var_seq = [source_var] + [s.var for s in stages]
    width = _width(var_seq)
    need = N**width * d
    if need > memory_cap:
        raise BudgetError(
            f"elimination table needs N^width*d = {N}^{width}*{d} = {need} entries, above the cap {memory_cap}"
        )
    first, last = _intervals(var_seq)
    live = []
    if source_var is None:
        table = source.copy()
    else:
        if source.shape != (N, d):
            raise ValidationError(f"variable source must have shape ({N}, {d}), got {source.shape}")
        table = source.copy()
        live.append(source_var)

    def eliminate(pos, table):
        for v in [v for v in live if last[v] == pos]:
            ax = live.index(v)
            table = real_divide(table.sum(axis=ax), N)
            live.remove(v)
        return table

    table = eliminate(0, table)
    for pos, st in enumerate(stages, start=1):
        if st.kind == "fixed":
            table = table @ st.matrix.T
        elif st.kind == "power":
            if st.var in live:
                ax = live.index(st.var)
                moved = np.moveaxis(table, ax, 0)
                shp = moved.shape
                out = kernels.diagonal_powers(
                    st.matrix, moved.reshape(N, -1, d), st.data, backend=backend, workers=workers
                )
                table = np.moveaxis(out.reshape(shp), 0, ax)
            else:
                shp = table.shape[:-1]
                out = kernels.orbit(st.matrix, table.reshape(-1, d), st.data, backend=backend, workers=workers)
                table = out.reshape(shp + (N, d))
                live.append(st.var)
        elif st.kind == "scalar":
            seq = np.asarray(st.data, dtype=complex)
            if st.var in live:
                ax = live.index(st.var)
                shape = [1] * table.ndim
                shape[ax] = N
                table = table * seq.reshape(shape)
            else:
                table = table[..., None, :] * seq[:, None]
                live.append(st.var)
        else:
            raise ValidationError(f"unknown stage kind {st.kind!r}")
        table = eliminate(pos, table)
    while live:
        table = real_divide(table.sum(axis=0), N)
        live.pop(0)
    return table


def _exponent_table(p, N, polys):
    """Exponent arrays ``q_j(1..N)`` per variable (identity when ``polys`` is None)."""
    if polys is None:
        base = np.arange(1, N + 1, dtype=np.int64)
        return [base] * p.k
    polys = [q if isinstance(q, PolynomialIndex) else PolynomialIndex(q) for q in polys]
    if len(polys) != p.k:
        raise ValidationError(f"{p.k} summation variables need {p.k} polynomials, got {len(polys)}")
    return [q.check_positive(N) for q in polys]


def _problem_stages(p, exps):
    stages = []
    for i in range(p.m):
        v = p.ent.alpha[i] - 1
        stages.append(Stage("power", p.T[i].entries, v, exps[v]))
        if i < p.m - 1:
            stages.append(Stage("fixed", p.A[i].entries))
    return stages


def _check_N(N):
    if int(N) != N or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    return int(N)


def entangled_average(p, f, N, workers=1, memory_cap=DEFAULT_MEMORY_CAP, backend=None):
    """Entangled average at horizon ``N`` by variable elimination."""
    return _elim(p, f, N, None, workers, memory_cap, backend)


def polynomial_entangled_average(p, f, polys, N, workers=1, memory_cap=DEFAULT_MEMORY_CAP, backend=None):
    """As :func:`entangled_average` with exponents ``q_j(n_j)`` in place of ``n_j``.

    ``polys`` holds one :class:`PolynomialIndex` (or coefficient list) per
    summation variable; each must be positive on ``1..N``.
    """
    return _elim(p, f, N, polys, workers, memory_cap, backend)


def _elim(p, f, N, polys, workers, memory_cap, backend):
    N = _check_N(N)
    v = as_values(f, p.space)
    exps = _exponent_table(p, N, polys)
    out = evaluate_chain(v, _problem_stages(p, exps), N, workers=workers, memory_cap=memory_cap, backend=backend)
    return Func(out, p.space)


def _check_budget(p, N, budget):
    work = N**p.k * p.m
    if work > budget:
        raise BudgetError(f"naive enumeration needs N^k*m = {N}^{p.k}*{p.m} = {work} stage applications, above the budget {budget}")


class _PowerCache:
    def __init__(self, p):
        self.p = p
        self.cache = {}

    def __call__(self, i, e):
        key = (i, int(e))
        M = self.cache.get(key)
        if M is None:
            M = np.linalg.matrix_power(self.p.T[i].entries, int(e))
            self.cache[key] = M
        return M


def naive_average(p, f, N, polys=None, budget=DEFAULT_NAIVE_BUDGET, absolute=False):
    """Reference oracle: enumerate every ``(n_1, ..., n_k)`` in ``[1, N]^k``.

    With ``polys`` the exponents become ``q_j(n_j)``; with ``absolute`` the
    per-tuple modulus is averaged instead of the vector.
    """
    N = _check_N(N)
    _check_budget(p, N, budget)
    v = as_values(f, p.space)
    exps = _exponent_table(p, N, polys)
    power = _PowerCache(p)
    acc = np.zeros(p.d, dtype=float if absolute else complex)
    for tup in itertools.product(range(N), repeat=p.k):
        g = v
        for i in range(p.m):
            j = p.ent.alpha[i] - 1
            g = power(i, exps[j][tup[j]]) @ g
            if i < p.m - 1:
                g = p.A[i].entries @ g
        acc += np.abs(g) if absolute else g
    return Func(real_divide(acc, float(N) ** p.k), p.space)


def absolute_entangled_average(p, f, N, polys=None, budget=DEFAULT_NAIVE_BUDGET):
    """Per-atom average of ``|T_m^{n_alpha(m)} ... A_1 T_1^{n_alpha(1)} f|``.

    The modulus is taken per tuple, so no variable can be summed out early;
    tuples are enumerated depth-first, sharing the chain prefix between
    tuples that agree on the variables used so far.
    """
    N = _check_N(N)
    _check_budget(p, N, budget)
    v = as_values(f, p.space)
    exps = _exponent_table(p, N, polys)
    power = _PowerCache(p)
    used = sorted(set(p.ent.alpha))
    acc = np.zeros(p.d)

    def walk(i, g, assign):
        nonlocal acc
        if i == p.m:
            acc += np.abs(g)
            return
        j = p.ent.alpha[i] - 1
        values = [assign[j]] if j in assign else range(N)
        for n in values:
            h = power(i, exps[j][n]) @ g
            if i < p.m - 1:
                h = p.A[i].entries @ h
            if j in assign:
                walk(i + 1, h, assign)
            else:
                assign[j] = n
                walk(i + 1, h, assign)
                del assign[j]

    walk(0, v, {})
    return Func(acc / float(N) ** len(used), p.space)


@dataclass
class TrajectoryPoint:
    N: int
    value: Func
    linf: float
    cauchy_gap: float = None
    extra: dict = field(default_factory=dict)


def average_trajectory(p, f, checkpoints, variant="plain", polys=None, workers=1, **kw):
    """Recompute the average at each checkpoint and record convergence metrics.

    ``variant`` is ``"plain"``, ``"absolute"`` or ``"polynomial"`` (the latter
    needs ``polys``).  ``cauchy_gap`` is the sup-norm distance to the
    previous checkpoint's average (``None`` for the first).
    """
    cps = [int(n) for n in checkpoints]
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValidationError(f"checkpoints must be strictly increasing, got {cps}")
    if variant == "plain":
        run = lambda N: entangled_average(p, f, N, workers=workers, **kw)
    elif variant == "absolute":
        run = lambda N: absolute_entangled_average(p, f, N, polys=polys, **kw)
    elif variant == "polynomial":
        if polys is None:
            raise ValidationError("the polynomial variant needs polys")
        run = lambda N: polynomial_entangled_average(p, f, polys, N, workers=workers, **kw)
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    out, prev = [], None
    for N in cps:
        val = run(N)
        gap = None if prev is None else norm_inf(val - prev)
        out.append(TrajectoryPoint(N, val, norm_inf(val), gap))
        prev = val
    return out


def contractivity_bound(p, f):
    """``C^(m-1) ||f||_inf``, the sup-norm bound on every average once ``C`` is certified."""
    return p.C ** (p.m - 1) * norm_inf(as_values(f, p.space))
