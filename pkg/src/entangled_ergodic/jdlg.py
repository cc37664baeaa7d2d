"""Jacobs-Glicksberg-deLeeuw splitting ``E = E_r + E_s`` of a DS operator.

On a finite space the reversible part is the span of eigenvectors with
unimodular eigenvalues and the stable part is the complementary invariant
subspace.  Both come from a reordered Schur form ``T = Q R Q^H`` whose
leading block carries the unimodular eigenvalues; the spectral projector
follows from one Sylvester equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DefectiveSpectrumError, NotDunfordSchwartzError
from .measure_space import Func, as_values, norm_p
from .operators import OperatorRep, is_dunford_schwartz

__all__ = [
    "SpectralSplit",
    "spectral_split",
    "split_function",
    "verify_split",
    "SplitVerification",
]

DEFAULT_UNIMODULAR_TOL = 1e-8
CLUSTER_TOL = 1e-8
_DEFECT_TOL = 1e-6


@dataclass(frozen=True)
class SpectralSplit:
    """Bases of the reversible and stable parts plus the projector onto ``E_r``.

    ``eigenvalues[i]`` belongs to ``reversible_basis[i]``.
    """

    reversible_basis: list
    eigenvalues: np.ndarray
    stable_basis: list
    projector_r: OperatorRep
    unimodular_tol: float
    stable_spectral_radius: float
    operator: OperatorRep = field(repr=False)

    @property
    def dim_r(self):
        return len(self.reversible_basis)

    @property
    def dim_s(self):
        return len(self.stable_basis)

    def invariant_errors(self):
        """Idempotence, commutation and eigen-residual errors of this split."""
        P = self.projector_r.entries
        T = self.operator.entries
        idem = float(np.abs(P @ P - P).sum(axis=1).max())
        comm = float(np.abs(T @ P - P @ T).sum(axis=1).max())
        eig = 0.0
        for g, lam in zip(self.reversible_basis, self.eigenvalues):
            eig = max(eig, norm_p(Func(T @ g.values - lam * g.values, g.space), 2))
        return {"idempotence": idem, "commutation": comm, "eigen_residual": eig}

    def to_json(self):
        def vecs(basis):
            return [[[float(z.real), float(z.imag)] for z in g.values] for g in basis]

        return {
            "d": self.projector_r.d,
            "dim_r": self.dim_r,
            "dim_s": self.dim_s,
            "unimodular_tol": self.unimodular_tol,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "stable_spectral_radius": self.stable_spectral_radius,
            "reversible_basis": vecs(self.reversible_basis),
            "stable_basis": vecs(self.stable_basis),
        }


def _clusters(values, tol):
    # group eigenvalues whose mutual distance chain stays within tol
    order = sorted(range(len(values)), key=lambda i: (values[i].real, values[i].imag))
    groups = []
    for i in order:
        for g in groups:
            if any(abs(values[i] - values[j]) <= tol for j in g):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def spectral_split(T, unimodular_tol=DEFAULT_UNIMODULAR_TOL):
    """Split the space of ``T`` into reversible and stable parts.

    Raises :class:`DefectiveSpectrumError` when a unimodular eigenvalue has a
    Jordan block, which no power-bounded operator can have.
    """
    rep = is_dunford_schwartz(T, 1e-9)
    if not rep:
        raise NotDunfordSchwartzError("T", rep.norm_l1, rep.norm_linf, 1e-9)
    M = T.entries
    d = T.d
    space = T.space
    thresh = 1.0 - unimodular_tol
    R, Q, r = scipy.linalg.schur(M, output="complex", sort=lambda z: abs(z) >= thresh)
    R11, R12, R22 = R[:r, :r], R[:r, r:], R[r:, r:]

    if r == 0:
        P = np.zeros((d, d), dtype=complex)
    elif r == d:
        P = np.eye(d, dtype=complex)
    else:
        X = scipy.linalg.solve_sylvester(R11, -R22, R12)
        Ps = np.zeros((d, d), dtype=complex)
        Ps[:r, :r] = np.eye(r)
        Ps[:r, r:] = X
        P = Q @ Ps @ Q.conj().T

    rev, lams = [], []
    if r:
        w, V = np.linalg.eig(R11)
        for group in _clusters(list(w), CLUSTER_TOL):
            block = V[:, group]
            block = block / np.linalg.norm(block, axis=0)
            s = np.linalg.svd(block, compute_uv=False)
            if s[-1] < _DEFECT_TOL:
                lam = w[group[0]]
                raise DefectiveSpectrumError(
                    f"unimodular eigenvalue {lam:.6g} (|lambda| = {abs(lam):.12g}) is defective: "
                    f"{len(group)} eigenvalues but eigenvector block singular value {s[-1]:.3g}"
                )
            for i in group:
                g = Q[:, :r] @ V[:, i]
                g = g / norm_p(Func(g, space), 2)
                # Rayleigh refinement of the eigenvalue against the full matrix
                lam = complex(np.vdot(g * space.mu, M @ g) / np.vdot(g * space.mu, g))
                rev.append(Func(g, space))
                lams.append(lam)

    stab = []
    if r < d:
        if r == 0:
            S = Q
        else:
            S = Q @ np.vstack([-X, np.eye(d - r)])
        for j in range(d - r):
            g = S[:, j]
            stab.append(Func(g / norm_p(Func(g, space), 2), space))
    rho_s = float(np.abs(np.diag(R22)).max()) if r < d else 0.0

    return SpectralSplit(
        reversible_basis=rev,
        eigenvalues=np.array(lams, dtype=complex),
        stable_basis=stab,
        projector_r=OperatorRep(P, space),
        unimodular_tol=unimodular_tol,
        stable_spectral_radius=rho_s,
        operator=T,
    )


def split_function(s, f):
    """Return ``(f_r, f_s)`` with ``f_r = P_r f`` and ``f_s = f - f_r``."""
    v = as_values(f, s.projector_r.space)
    fr = s.projector_r.entries @ v
    return Func(fr, s.projector_r.space), Func(v - fr, s.projector_r.space)


@dataclass
class SplitVerification:
    invariants: dict
    checkpoints: list
    profiles: list
    eventually_decreasing: list
    final_ratio: list
    passed: bool

    def to_json(self):
        return {
            "invariants": self.invariants,
            "checkpoints": self.checkpoints,
            "profiles": self.profiles,
            "eventually_decreasing": self.eventually_decreasing,
            "final_ratio": self.final_ratio,
            "passed": self.passed,
        }


def _default_checkpoints(N):
    cps, n = [], 1
    while n < N:
        cps.append(n)
        n *= 4
    cps.append(N)
    return cps


def verify_split(T, s, trials=8, N=4096, seed=0, checkpoints=None, decay_factor=0.05, inv_tol=1e-9):
    """Cross-check a split by Cesaro means of stable-part correlations.

    For random ``f`` and functionals ``phi`` this computes
    ``D_N = (1/N) sum_{n<=N} |<phi, T^n f_s>|`` at the checkpoints.  A trial
    passes when its profile is non-increasing over the second half of the
    checkpoints and ``D_N <= decay_factor * D_1`` at the last one (trials with
    ``f_s = 0`` pass trivially).  The structural invariants of ``s`` are
    re-checked against ``inv_tol``.
    """
    cps = list(checkpoints) if checkpoints is not None else _default_checkpoints(N)
    N = cps[-1]
    rng = np.random.default_rng(seed)
    space = T.space
    d = T.d
    errs = s.invariant_errors()
    inv_ok = errs["idempotence"] <= inv_tol and errs["commutation"] <= inv_tol and errs["eigen_residual"] <= inv_tol
    errs = dict(errs, dims_sum=s.dim_r + s.dim_s, ok=bool(inv_ok and s.dim_r + s.dim_s == d))

    profiles, dec, ratios = [], [], []
    ok = errs["ok"]
    half = len(cps) // 2
    for _ in range(trials):
        f = rng.normal(size=d) + 1j * rng.normal(size=d)
        phi = rng.normal(size=d) + 1j * rng.normal(size=d)
        _, fs = split_function(s, f)
        if np.max(np.abs(fs.values)) <= 1e-12 * max(1.0, np.max(np.abs(f))):
            profiles.append([0.0] * len(cps))
            dec.append(True)
            ratios.append(0.0)
            continue
        orbit = kernels.orbit(T.entries, fs.values[None, :], np.arange(1, N + 1))[0]
        corr = np.abs(orbit @ (space.mu * phi.conj()))
        csum = np.cumsum(corr)
        prof = [float(csum[n - 1] / n) for n in cps]
        tail = prof[half:]
        mono = all(b <= a for a, b in zip(tail, tail[1:]))
        ratio = prof[-1] / prof[0] if prof[0] > 0 else (0.0 if prof[-1] == 0 else float("inf"))
        profiles.append(prof)
        dec.append(bool(mono))
        ratios.append(float(ratio))
        ok = ok and mono and ratio <= decay_factor
    return SplitVerification(errs, cps, profiles, dec, ratios, bool(ok))
