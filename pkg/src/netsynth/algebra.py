"""Generalized Vandermonde matrices, the Wronskian factorization, and a stable solve."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .monomials import MonomialBasis, MultiPoly, factorial_product, recenter

NONSINGULAR_TOL = 1e-10
SOFT_CONDITION_CAP = 1e12


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class GeneralizedVandermonde:
    basis: MonomialBasis
    points: np.ndarray = field(repr=False)  # (N, n); column j of matrix is q(points[j])
    matrix: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def build_vandermonde(points, basis: MonomialBasis) -> GeneralizedVandermonde:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if basis.n == 1 else pts.reshape(1, -1)
    if pts.shape[1] != basis.n:
        raise ValueError(f"points have dimension {pts.shape[1]}, basis expects {basis.n}")
    if pts.shape[0] != len(basis):
        raise ValueError(f"need {len(basis)} points, got {pts.shape[0]}")
    return GeneralizedVandermonde(basis, pts, basis.evaluate(pts).T.copy())


@dataclass(frozen=True)
class NonsingularityCheck:
    nonsingular: bool
    margin: float  # (s_min / s_max) / tol; > 1 means nonsingular
    s_min: float
    s_max: float

    def __bool__(self) -> bool:
        return self.nonsingular

    @property
    def condition(self) -> float:
        return math.inf if self.s_min == 0 else self.s_max / self.s_min


def is_nonsingular(Q, tol: float = NONSINGULAR_TOL) -> NonsingularityCheck:
    """Smallest singular value against tol * ||Q||_2."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = Q.matrix if isinstance(Q, GeneralizedVandermonde) else np.asarray(Q, dtype=float)
    if not np.all(np.isfinite(M)):
        return NonsingularityCheck(False, 0.0, 0.0, math.inf)
    s = np.linalg.svd(M, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    if smax == 0:
        return NonsingularityCheck(False, 0.0, 0.0, 0.0)
    rel = smin / smax
    return NonsingularityCheck(rel > tol, rel / tol, smin, smax)


def log_determinant(Q) -> tuple[float, float]:
    """(sign, log|det|) from an LU factorization."""
    M = Q.matrix if isinstance(Q, GeneralizedVandermonde) else np.asarray(Q, dtype=float)
    sign, logabs = np.linalg.slogdet(M)
    return float(sign), float(logabs)


def schur_seed_points(n: int, d: int, base) -> np.ndarray:
    """Points whose i-th coordinate is base_j ** ((d+1) ** (i-1))."""
    b = np.asarray(base, dtype=float).reshape(-1)
    N = math.comb(n + d, d)
    if b.shape[0] != N:
        raise ValueError(f"need {N} base values, got {b.shape[0]}")
    if np.any(b <= 0):
        raise ValueError("base values must be positive")
    if len(np.unique(b)) != len(b):
        raise ValueError("base values must be distinct")
    return np.column_stack([b ** ((d + 1) ** i) for i in range(n)])


@dataclass(frozen=True)
class WronskianCheck:
    lhs: np.ndarray
    M_prime: np.ndarray
    Q: np.ndarray
    max_abs_error: float
    scale: float
    upper_triangular: bool
    diagonal_ok: bool


def wronskian_factor_check(p: MultiPoly, points) -> WronskianCheck:
    """Check M_W(1) = M' Q for f_j(x) = p(w_j * x) (componentwise scaling).

    M_W(1)[i, j] = w_j^{lambda_i} (D^{lambda_i} p)(w_j); M'[i, j] is the
    coefficient of x^{lambda_j - lambda_i} in D^{lambda_i} p.
    """
    if np.any(p.center != 0):
        p = recenter(p, np.zeros(p.n))
    d = p.degree
    if p.basis.d != d:
        p = p.with_degree(d)
    basis = p.basis
    if np.any(p.coeffs == 0):
        raise ValueError("polynomial must have all non-zero coefficients")
    V = build_vandermonde(points, basis)
    W = V.points
    N = len(basis)
    lhs = np.empty((N, N))
    Mp = np.zeros((N, N))
    for i, lam in enumerate(basis.indices):
        dp = p.derivative(lam)
        lhs[i] = np.prod(W ** np.array(lam), axis=1) * dp(W)
        for j, mu in enumerate(basis.indices):
            diff = tuple(b - a for a, b in zip(lam, mu))
            if min(diff) >= 0 and sum(diff) <= d:
                Mp[i, j] = dp.coeffs[basis.position(diff)]
    prod = Mp @ V.matrix
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(prod))), 1.0)
    err = float(np.max(np.abs(lhs - prod)))
    upper = bool(np.all(np.tril(Mp, -1) == 0))
    diag = np.array([factorial_product(lam) * p.coeffs[i] for i, lam in enumerate(basis.indices)])
    diag_ok = bool(np.allclose(np.diag(Mp), diag, rtol=1e-12, atol=0))
    return WronskianCheck(lhs, Mp, V.matrix, err, scale, upper, diag_ok)


@dataclass(frozen=True)
class LinearSolveReport:
    solution: np.ndarray
    residual_norm: float
    condition_estimate: float


def solve_coefficients(A, B) -> LinearSolveReport:
    """Solve A X = B by Householder QR after row equilibration.

    Each right-hand column is solved on its own against the shared factorization,
    so a column's solution does not depend on which other columns are present.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    B2 = B.reshape(-1, 1) if vector else B
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if B2.shape[0] != A.shape[0]:
        raise ValueError("row count of B does not match A")
    if not np.all(np.isfinite(A)):
        raise SingularMatrixError("matrix has non-finite entries")
    rows = np.linalg.norm(A, axis=1)
    if np.any(rows == 0):
        raise SingularMatrixError("matrix has a zero row")
    S = 1.0 / rows
    As = A * S[:, None]
    Qf, R = sla.qr(As)
    rdiag = np.abs(np.diag(R))
    n = A.shape[0]
    if rdiag.min() <= n * np.finfo(float).eps * rdiag.max():
        raise SingularMatrixError("matrix is singular to working precision")
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > 1.0 / (n * np.finfo(float).eps):
        raise SingularMatrixError(f"matrix is singular to working precision (cond {cond:.3g})")
    X = np.empty((n, B2.shape[1]))
    for j in range(B2.shape[1]):
        X[:, j] = sla.solve_triangular(R, Qf.T @ (S * B2[:, j]))
    resid = float(np.linalg.norm(A @ X - B2))
    return LinearSolveReport(X[:, 0] if vector else X, resid, max(cond, 1.0))


def gram_rank(samples: np.ndarray, rtol: float = 1e-10) -> int:
    """Numerical rank of the Gram matrix of sampled functions (columns of samples)."""
    G = samples.T @ samples
    s = np.linalg.svd(G, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
