"""Additive auxiliary-space preconditioner for the edge system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .assembly import MaxwellSystem


@dataclass(frozen=True, eq=False)
class HxPreconditioner:
    """B r = D^-1 r + Pi Lap^-1 Pi' r + G L^-1 G' r, with exact inner solves."""
    inv_diag: np.ndarray
    Pi: sp.csr_matrix
    G: sp.csr_matrix
    vector_factor: linalg.CholeskyFactor
    scalar_factor: linalg.CholeskyFactor

    @property
    def shape(self) -> tuple[int, int]:
        n = len(self.inv_diag)
        return n, n

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        d = self.inv_diag if r.ndim == 1 else self.inv_diag[:, None]
        out = d * r
        out += self.Pi @ linalg.solve(self.vector_factor, self.Pi.T @ r)
        out += self.G @ linalg.solve(self.scalar_factor, self.G.T @ r)
        return out

    __call__ = apply

    def __matmul__(self, r):
        return self.apply(r)

    def terms(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The three additive contributions separately (smoother, vector, gradient)."""
        return (
            self.inv_diag * r,
            self.Pi @ linalg.solve(self.vector_factor, self.Pi.T @ r),
            self.G @ linalg.solve(self.scalar_factor, self.G.T @ r),
        )


def build_hx(A, vector_laplacian, G, Pi, scalar=None) -> HxPreconditioner:
    """Factor the auxiliary operators; the scalar one defaults to G'AG."""
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("edge operator must be square")
    if G.shape[0] != n or Pi.shape[0] != n:
        raise ValueError(f"transfer operators must have {n} rows, got G {G.shape} and Pi {Pi.shape}")
    if vector_laplacian.shape != (Pi.shape[1], Pi.shape[1]):
        raise ValueError("vector Laplacian does not match the interpolation columns")
    if scalar is None:
        scalar = sp.csr_matrix(G.T @ A @ G)
    if scalar.shape != (G.shape[1], G.shape[1]):
        raise ValueError("scalar operator does not match the gradient columns")
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise linalg.NotSPDError(int(np.argmin(diag)), "edge operator has a non-positive diagonal")
    return HxPreconditioner(
        inv_diag=1.0 / diag,
        Pi=sp.csr_matrix(Pi),
        G=sp.csr_matrix(G),
        vector_factor=linalg.cholesky_factor(vector_laplacian),
        scalar_factor=linalg.cholesky_factor(scalar),
    )


def build_for_system(system: MaxwellSystem) -> HxPreconditioner:
    return build_hx(system.A, system.vector_laplacian, system.G, system.Pi)


def measure(A, B, n_s: int = 0, method: str = "auto", tol: float = 1e-14, maxit: int = 500,
            seed: int = 0) -> linalg.SpectrumReport:
    """Spectrum of BA: dense when small enough (or asked), otherwise Lanczos from PCG."""
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= linalg.DENSE_LIMIT else "lanczos"
    if method == "dense":
        return linalg.dense_generalized_spectrum(A, B, n_s)
    if method == "lanczos":
        return linalg.lanczos_spectrum(A, B, n_s, tol=tol, maxit=maxit, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def additive_bound(system: MaxwellSystem, v, p, w) -> dict:
    """Split energies of a decomposition v = G p + Pi w + R and the implied constant.

    The sum of (D R, R), (Lap w, w) and (L p, p) dominates v' B^-1 v for any
    such split, so C = sum / (A v, v) bounds lambda_min(BA)^-1 from above.
    """
    v = np.asarray(v, float)
    r = v - system.G @ p - system.Pi @ w
    jac = float(r @ (system.A.diagonal() * r))
    vec = float(w @ (system.vector_laplacian @ w))
    scal = float(p @ (system.G.T @ (system.A @ (system.G @ p))))
    energy = float(v @ (system.A @ v))
    total = jac + vec + scal
    return {"smoother": jac, "vector": vec, "gradient": scal, "total": total,
            "energy": energy, "constant": total / energy if energy > 0 else float("nan")}
