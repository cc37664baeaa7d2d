"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same interface and layout: vectors are interleaved (re, im) float64 arrays.
"""

import numpy as np


def _as_complex(x):
    return x.view(np.complex128)


def orbit_sorted(t_re, t_im, real, g, steps):
    tt = (t_re if real else t_re + 1j * t_im).T
    cur = _as_complex(g).copy()
    M, d = cur.shape
    out = np.empty((M, len(steps), d), dtype=np.complex128)
    for t, s in enumerate(steps):
        for _ in range(int(s)):
            cur = cur @ tt
        out[:, t] = cur
    return out.view(np.float64)


def powers_inplace(t_re, t_im, real, x, exps):
    # sort by exponent, then advance every suffix together so each step is one batched product
    tt = (t_re if real else t_re + 1j * t_im).T
    xc = _as_complex(x)
    order = np.argsort(exps, kind="stable")
    y = xc[order]
    prev = 0
    for pos, t in enumerate(order):
        for _ in range(int(exps[t]) - prev):
            y[pos:] = y[pos:] @ tt
        prev = int(exps[t])
    xc[order] = y
