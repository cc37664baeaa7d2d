"""Backend selection for the operator-power kernels.

The compiled extension ``_kernels`` is used when it imports; otherwise the
numpy fallback in ``_kernels_py`` is used.  Setting the environment variable
``ENTANGLED_ERGODIC_PURE=1`` forces the fallback.

With the compiled extension available and no explicit ``backend``, each
call picks by shape: the compiled loops win when few short vectors are
advanced many times (per-call overhead dominates numpy), while numpy's
batched BLAS products win once the batch is wide.  The crossover points
come from ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

_BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels as _ext
except ImportError:  # extension not built
    _ext = None
else:
    _BACKENDS["cython"] = _ext

if _ext is not None and not os.environ.get("ENTANGLED_ERGODIC_PURE"):
    BACKEND = "cython"
else:
    BACKEND = "python"

__all__ = ["BACKEND", "available_backends", "orbit", "diagonal_powers"]


def available_backends():
    return sorted(_BACKENDS)


# largest rows * d for which the compiled orbit loop beats batched BLAS
ORBIT_COMPILED_MAX = 32
# the compiled per-row powers loop only wins for single short vectors
DIAGONAL_COMPILED_MAX_D = 8


def _auto(backend, use_compiled):
    if backend is not None:
        return backend
    if BACKEND == "cython" and not use_compiled:
        return "python"
    return BACKEND


def _impl(backend):
    name = backend or BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {available_backends()}") from None


def _split_operator(T):
    T = np.ascontiguousarray(T, dtype=np.complex128)
    real = bool(np.all(T.imag == 0))
    return np.ascontiguousarray(T.real), np.ascontiguousarray(T.imag), real


def _chunks(M, workers):
    workers = max(1, min(int(workers), M))
    bounds = np.linspace(0, M, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run(jobs, workers):
    if len(jobs) <= 1 or workers <= 1:
        for job in jobs:
            job()
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(job) for job in jobs]:
            fut.result()


def orbit(T, G, exponents, backend=None, workers=1):
    """Powers of ``T`` applied to each row of ``G``.

    Returns ``out`` of shape ``(M, N, d)`` with ``out[a, t] = T**exponents[t] @ G[a]``.
    Exponents may come in any order; they are visited in sorted order so the
    total work is ``max(exponents)`` applications per row.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    M, d = G.shape
    impl = _impl(_auto(backend, M * d <= ORBIT_COMPILED_MAX))
    t_re, t_im, real = _split_operator(T)
    exps = np.asarray(exponents, dtype=np.int64)
    if exps.size and exps.min() < 0:
        raise ValueError("exponents must be nonnegative")
    order = np.argsort(exps, kind="stable")
    steps = np.diff(exps[order], prepend=0).astype(np.int64)
    out = np.empty((M, exps.size, d), dtype=np.complex128)
    gf = G.view(np.float64)

    def job(a, b):
        res = impl.orbit_sorted(t_re, t_im, real, np.ascontiguousarray(gf[a:b]), steps)
        out[a:b, order] = np.asarray(res).view(np.complex128)

    _run([lambda a=a, b=b: job(a, b) for a, b in _chunks(M, workers)], workers)
    return out


def diagonal_powers(T, X, exponents, backend=None, workers=1):
    """``out[t, a] = T**exponents[t] @ X[t, a]`` for ``X`` of shape ``(N, M, d)``."""
    out = np.array(X, dtype=np.complex128, order="C", copy=True)
    impl = _impl(_auto(backend, out.shape[1] == 1 and out.shape[2] <= DIAGONAL_COMPILED_MAX_D))
    t_re, t_im, real = _split_operator(T)
    exps = np.ascontiguousarray(exponents, dtype=np.int64)
    if exps.size and exps.min() < 0:
        raise ValueError("exponents must be nonnegative")
    if out.shape[0] != exps.size:
        raise ValueError("one exponent per leading slice is required")
    M = out.shape[1]

    def job(a, b):
        part = np.ascontiguousarray(out[:, a:b])
        impl.powers_inplace(t_re, t_im, real, part.view(np.float64), exps)
        out[:, a:b] = part

    _run([lambda a=a, b=b: job(a, b) for a, b in _chunks(M, workers)], workers)
    return out
