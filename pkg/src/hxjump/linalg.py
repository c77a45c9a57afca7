"""Direct solves, PCG with Lanczos harvesting, and dense spectral oracles."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

DENSE_LIMIT = 4000


class NotSPDError(np.linalg.LinAlgError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"matrix is not positive definite (pivot at index {index})")


class BreakdownError(RuntimeError):
    """Non-positive curvature or preconditioned residual norm inside PCG."""


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    perm: np.ndarray
    bands: np.ndarray       # lower banded storage of the permuted factor
    n: int

    def solve(self, b: np.ndarray) -> np.ndarray:
        return solve(self, b)


def _as_csr(mat) -> sp.csr_matrix:
    m = sp.csr_matrix(mat, dtype=float)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    return m


def cholesky_factor(mat) -> CholeskyFactor:
    """Banded Cholesky after reverse Cuthill-McKee reordering."""
    m = _as_csr(mat)
    n = m.shape[0]
    if n == 0:
        return CholeskyFactor(np.zeros(0, np.int64), np.zeros((1, 0)), 0)
    perm = np.asarray(reverse_cuthill_mckee(m, symmetric_mode=True), dtype=np.int64)
    pm = m[perm][:, perm].tocoo()
    low = pm.row >= pm.col
    r, c, v = pm.row[low], pm.col[low], pm.data[low]
    bw = int((r - c).max()) if len(r) else 0
    bands = np.zeros((bw + 1, n))
    np.add.at(bands, (r - c, c), v)
    try:
        fac = la.cholesky_banded(bands, lower=True, check_finite=True)
    except la.LinAlgError as exc:
        found = re.search(r"(\d+)", str(exc))
        k = int(found.group(1)) - 1 if found else 0
        raise NotSPDError(int(perm[min(max(k, 0), n - 1)])) from exc
    return CholeskyFactor(perm, fac, n)


def solve(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.n:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, factor has {factor.n}")
    if factor.n == 0:
        return b.copy()
    inv = np.empty_like(factor.perm)
    inv[factor.perm] = np.arange(factor.n)
    y = la.cho_solve_banded((factor.bands, True), b[factor.perm], check_finite=False)
    return y[inv]


# --------------------------------------------------------------------------

Operator = Callable[[np.ndarray], np.ndarray]


def as_operator(obj) -> Operator:
    if obj is None:
        return lambda x: np.array(x, dtype=float, copy=True)
    if callable(obj) and not sp.issparse(obj) and not isinstance(obj, np.ndarray):
        return obj
    return lambda x: obj @ x


@dataclass(frozen=True, eq=False)
class PCGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residuals: np.ndarray          # relative B-norm residuals, one per iterate
    alphas: np.ndarray
    betas: np.ndarray
    breakdown: str = ""

    def lanczos_matrix(self) -> np.ndarray:
        return lanczos_tridiagonal(self.alphas, self.betas)

    def ritz_values(self) -> np.ndarray:
        t = self.lanczos_matrix()
        if t.size == 0:
            return np.zeros(0)
        d = np.diag(t).copy()
        e = np.diag(t, 1).copy()
        return la.eigvalsh_tridiagonal(d, e) if len(d) > 1 else d


def lanczos_tridiagonal(alphas, betas) -> np.ndarray:
    a = np.asarray(alphas, float)
    b = np.asarray(betas, float)
    k = len(a)
    t = np.zeros((k, k))
    for j in range(k):
        t[j, j] = 1.0 / a[j] + (b[j - 1] / a[j - 1] if j > 0 else 0.0)
        if j + 1 < k:
            t[j, j + 1] = t[j + 1, j] = np.sqrt(b[j]) / a[j]
    return t


def pcg(A, B, b: np.ndarray, tol: float = 1e-8, maxit: int = 500, x0=None) -> PCGResult:
    """Preconditioned CG; the stopping test uses sqrt(r'Br) relative to its start."""
    apply_a = as_operator(A)
    apply_b = as_operator(B)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x) if x0 is not None else b.copy()
    z = apply_b(r)
    rz = float(r @ z)
    alphas, betas, hist = [], [], [1.0]
    if rz < 0:
        return PCGResult(x, 0, False, np.array(hist), np.zeros(0), np.zeros(0), "negative r'Br")
    if rz == 0.0:
        return PCGResult(x, 0, True, np.array([0.0]), np.zeros(0), np.zeros(0))
    norm0 = np.sqrt(rz)
    p = z.copy()
    for it in range(1, maxit + 1):
        ap = apply_a(p)
        curv = float(p @ ap)
        if not curv > 0:
            return PCGResult(x, it - 1, False, np.array(hist), np.array(alphas), np.array(betas),
                             "non-positive curvature")
        alpha = rz / curv
        x = x + alpha * p
        r = r - alpha * ap
        z = apply_b(r)
        rz_new = float(r @ z)
        alphas.append(alpha)
        if rz_new < 0:
            return PCGResult(x, it, False, np.array(hist), np.array(alphas), np.array(betas[:len(alphas) - 1]),
                             "negative r'Br")
        rel = np.sqrt(rz_new) / norm0
        hist.append(rel)
        beta = rz_new / rz
        betas.append(beta)
        if rel <= tol:
            return PCGResult(x, it, True, np.array(hist), np.array(alphas), np.array(betas[:-1]))
        rz = rz_new
        p = z + beta * p
    return PCGResult(x, maxit, False, np.array(hist), np.array(alphas), np.array(betas[:-1]))


# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumReport:
    method: str
    eigenvalues: np.ndarray
    n_s: int = 0
    iterations: int | None = None
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool | None = None

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_ns_plus_1(self) -> float:
        return float(self.eigenvalues[self.n_s])

    @property
    def cond(self) -> float:
        return self.lambda_max / self.lambda_min

    @property
    def reduced_cond(self) -> float:
        return reduced_condition(self.eigenvalues, self.n_s)


def reduced_condition(eigenvalues, n_s: int) -> float:
    ev = np.sort(np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), float))
    if not 0 <= n_s < len(ev):
        raise ValueError(f"n_s = {n_s} must be below the dimension {len(ev)}")
    return float(ev[-1] / ev[n_s])


def materialize(B, n: int) -> np.ndarray:
    if isinstance(B, np.ndarray):
        return np.array(B, dtype=float)
    if sp.issparse(B):
        return B.toarray()
    eye = np.eye(n)
    try:
        out = np.asarray(B(eye), dtype=float)
        if out.shape == (n, n):
            return out
    except (ValueError, TypeError):
        pass
    return np.column_stack([B(eye[:, j]) for j in range(n)])


def dense_generalized_spectrum(A, B=None, n_s: int = 0, limit: int = DENSE_LIMIT) -> SpectrumReport:
    """Eigenvalues of BA through B = L L', L' A L."""
    a = A.toarray() if sp.issparse(A) else np.asarray(A, float)
    n = a.shape[0]
    if n > limit:
        raise ValueError(f"dimension {n} exceeds the dense limit {limit}")
    if B is None:
        ev = la.eigvalsh(a)
        return SpectrumReport("dense", ev, n_s)
    bm = materialize(B, n)
    scale = max(np.abs(bm).max(), np.finfo(float).tiny)
    asym = np.abs(bm - bm.T).max()
    if asym > 1e-10 * scale:
        raise ValueError(f"preconditioner is not symmetric (defect {asym / scale:.2e})")
    bm = 0.5 * (bm + bm.T)
    try:
        lo = la.cholesky(bm, lower=True)
    except la.LinAlgError as exc:
        raise NotSPDError(-1, "preconditioner is not positive definite") from exc
    ev = la.eigvalsh(lo.T @ a @ lo)
    return SpectrumReport("dense", ev, n_s)


def lanczos_spectrum(A, B, n_s: int = 0, tol: float = 1e-14, maxit: int = 500, seed: int = 0) -> SpectrumReport:
    """Ritz values from a PCG run on a seeded white-noise right-hand side.

    The tolerance is tighter than for solves so the extreme Ritz values settle.
    """
    n = A.shape[0]
    rhs = np.random.default_rng(seed).standard_normal(n)
    res = pcg(A, B, rhs, tol=tol, maxit=maxit)
    return SpectrumReport("lanczos", res.ritz_values(), n_s, res.iterations, res.residuals, res.converged)
