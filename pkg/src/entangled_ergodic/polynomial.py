"""Integer polynomials used as exponent and subsequence indices."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

__all__ = ["PolynomialIndex", "IDENTITY"]


class PolynomialIndex:
    """Polynomial ``q(n) = sum_i coeffs[i] * n**i`` with integer coefficients.

    Coefficients are given in ascending order, so ``[0, 0, 1]`` is ``n**2`` and
    ``[1, 1]`` is ``n + 1``.  The polynomial must be non-constant; positivity
    on ``1..N`` is checked by evaluation with :meth:`check_positive`.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = [int(x) for x in coeffs]
        if any(int(x) != x for x in coeffs):
            raise ValidationError(f"polynomial coefficients must be integers, got {list(coeffs)!r}")
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if len(c) < 2:
            raise ValidationError(f"polynomial {list(coeffs)!r} is constant")
        self.coeffs = tuple(c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros_like(n)
        for c in reversed(self.coeffs):
            out = out * n + c
        return out if out.ndim else int(out)

    def values(self, N):
        """``(q(1), ..., q(N))`` as an int64 array."""
        return self(np.arange(1, N + 1, dtype=np.int64))

    def check_positive(self, N):
        vals = self.values(N)
        bad = np.flatnonzero(vals <= 0)
        if bad.size:
            n = int(bad[0]) + 1
            raise ValidationError(f"polynomial {self} takes the nonpositive value {int(vals[bad[0]])} at n={n}")
        return vals

    def to_json(self):
        return list(self.coeffs)

    def __eq__(self, other):
        return isinstance(other, PolynomialIndex) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if i == 0 else f"{c}*n" + (f"^{i}" if i > 1 else ""))
        return " + ".join(reversed(terms)) or "0"


IDENTITY = PolynomialIndex([0, 1])
