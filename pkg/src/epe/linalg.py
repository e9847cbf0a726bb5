"""Sparse solver contracts: SPD systems, saddle-point systems, general LU.

Every solve recomputes its true relative residual from the returned vector
and reports it; a solve that cannot meet its tolerance raises instead of
returning silently wrong results. All paths are deterministic: identical
inputs produce identical outputs (no randomized pivoting, fixed iteration
order).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class DimensionMismatch(ValueError):
    """Operand shapes are inconsistent."""


class NotConverged(RuntimeError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class SingularSystem(RuntimeError):
    """Factorization failed or produced non-finite values."""


@dataclass(frozen=True)
class LinearSolveReport:
    iterations: int
    relative_residual: float
    wall_time: float


def _check_square(A, b):
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    if b.shape != (n,):
        raise DimensionMismatch(f"rhs shape {b.shape} does not match matrix {A.shape}")
    return n


def spd_solve(A: sp.spmatrix, b: np.ndarray, tol: float = 1e-10, maxiter: int | None = None):
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Returns (x, LinearSolveReport); the reported relative residual is
    recomputed as ||A x - b|| / ||b|| after the iteration. Nonpositive
    curvature (an indefinite matrix) aborts with NotConverged.
    """
    start = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = _check_square(A, b)
    if not (0.0 < tol < 1.0):
        raise ValueError(f"tol must lie in (0, 1), got {tol!r}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0 or n == 0:
        return np.zeros(n), LinearSolveReport(0, 0.0, time.perf_counter() - start)
    if maxiter is None:
        maxiter = max(1000, 10 * n)

    diag = A.diagonal()
    inv_diag = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    iterations = 0
    for iterations in range(1, maxiter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0 or not np.isfinite(pAp):
            raise NotConverged(
                "conjugate gradients hit nonpositive curvature; matrix is not SPD",
                iterations,
                float(np.linalg.norm(b - A @ x) / bnorm),
            )
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= 0.1 * tol * bnorm:
            break
        z = inv_diag * r
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next

    residual = float(np.linalg.norm(b - A @ x) / bnorm)
    if residual > tol:
        raise NotConverged("conjugate gradients did not reach tolerance", iterations, residual)
    return x, LinearSolveReport(iterations, residual, time.perf_counter() - start)


class SpdSolver:
    """Reusable CG context for one SPD matrix (caches CSR form and tolerance)."""

    def __init__(self, A: sp.spmatrix, tol: float = 1e-10):
        self.A = A.tocsr()
        self.tol = tol

    def solve(self, b: np.ndarray):
        return spd_solve(self.A, b, tol=self.tol)


class LuSolver:
    """Sparse LU with honest residual reporting; reusable across solves."""

    def __init__(self, K: sp.spmatrix, tol: float = 1e-9):
        self.K = K.tocsc()
        self.tol = tol
        try:
            self.lu = spla.splu(self.K)
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc

    def solve(self, rhs: np.ndarray):
        start = time.perf_counter()
        rhs = np.asarray(rhs, dtype=float)
        _check_square(self.K, rhs)
        rnorm = np.linalg.norm(rhs)
        if rnorm == 0.0:
            return np.zeros(self.K.shape[0]), LinearSolveReport(0, 0.0, time.perf_counter() - start)
        x = self.lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SingularSystem("factorization produced non-finite solution")
        residual = float(np.linalg.norm(rhs - self.K @ x) / rnorm)
        if residual > self.tol:
            raise NotConverged("direct solve residual above tolerance", 0, residual)
        return x, LinearSolveReport(0, residual, time.perf_counter() - start)


def saddle_blocks(A: sp.spmatrix, B: sp.spmatrix, C: sp.spmatrix) -> sp.csc_matrix:
    """Symmetric indefinite matrix [[A, -B^T], [-B, -C]] of the Biot step."""
    nu, npp = A.shape[0], C.shape[0]
    if B.shape != (npp, nu):
        raise DimensionMismatch(f"coupling block shape {B.shape}, expected ({npp}, {nu})")
    return sp.bmat([[A, -B.T], [-B, -C]], format="csc")


class SaddleSolver:
    """Solver for a(u,v)/pressure saddle systems with blocks (A, B, C).

    Solves [[A, -B^T], [-B, -C]] (u, p) = (f_u, -f_p), i.e.
        A u - B^T p = f_u
        B u + C   p = f_p
    with A SPD, C symmetric positive semidefinite, and C + B A^{-1} B^T
    definite. Below ``direct_threshold`` total unknowns a sparse direct
    factorization is used (built once, reused per solve); above it, a
    Schur-complement CG in the pressure variable.
    """

    def __init__(
        self,
        A: sp.spmatrix,
        B: sp.spmatrix,
        C: sp.spmatrix,
        tol: float = 1e-9,
        direct_threshold: int = 200_000,
    ):
        self.A, self.B, self.C = A.tocsr(), B.tocsr(), C.tocsr()
        self.nu, self.np = A.shape[0], C.shape[0]
        self.tol = tol
        self.direct = (self.nu + self.np) <= direct_threshold
        if self.direct:
            self._lu = LuSolver(saddle_blocks(A, B, C), tol=tol)
        else:
            try:
                self._lu_A = spla.splu(self.A.tocsc())
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc

    def solve(self, f_u: np.ndarray, f_p: np.ndarray):
        start = time.perf_counter()
        f_u = np.asarray(f_u, dtype=float)
        f_p = np.asarray(f_p, dtype=float)
        if f_u.shape != (self.nu,) or f_p.shape != (self.np,):
            raise DimensionMismatch(
                f"rhs shapes {f_u.shape}, {f_p.shape} do not match blocks ({self.nu}, {self.np})"
            )
        rhs_norm = float(np.sqrt(f_u @ f_u + f_p @ f_p))
        if rhs_norm == 0.0:
            return (np.zeros(self.nu), np.zeros(self.np)), LinearSolveReport(
                0, 0.0, time.perf_counter() - start
            )

        if self.direct:
            x = self._lu.lu.solve(np.concatenate([f_u, -f_p]))
            if not np.all(np.isfinite(x)):
                raise SingularSystem("saddle factorization produced non-finite solution")
            u, p = x[: self.nu], x[self.nu :]
            iterations = 0
        else:
            u, p, iterations = self._solve_schur(f_u, f_p)

        ru = self.A @ u - self.B.T @ p - f_u
        rp = self.B @ u + self.C @ p - f_p
        residual = float(np.sqrt(ru @ ru + rp @ rp) / rhs_norm)
        if residual > self.tol:
            raise NotConverged("saddle solve residual above tolerance", iterations, residual)
        return (u, p), LinearSolveReport(
            iterations, residual, time.perf_counter() - start
        )

    def _solve_schur(self, f_u, f_p):
        # (C + B A^-1 B^T) p = f_p - B A^-1 f_u, then A u = f_u + B^T p
        Ainv = self._lu_A.solve
        rhs = f_p - self.B @ Ainv(f_u)

        def schur_mv(q):
            return self.C @ q + self.B @ Ainv(self.B.T @ q)

        p, iterations = _matfree_cg(
            schur_mv, rhs, np.maximum(self.C.diagonal(), 1e-300), self.tol * 0.01, self.np
        )
        u = Ainv(f_u + self.B.T @ p)
        return u, p, iterations


def _matfree_cg(matvec, b, diag, tol, n, maxiter=None):
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    if maxiter is None:
        maxiter = max(1000, 10 * n)
    inv_diag = 1.0 / diag
    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    iterations = 0
    for iterations in range(1, maxiter + 1):
        Ap = matvec(p)
        pAp = p @ Ap
        if pAp <= 0.0 or not np.isfinite(pAp):
            raise NotConverged("Schur CG hit nonpositive curvature", iterations, float("nan"))
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            break
        z = inv_diag * r
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next
    return x, iterations


def saddle_solve(
    A: sp.spmatrix,
    B: sp.spmatrix,
    C: sp.spmatrix,
    f_u: np.ndarray,
    f_p: np.ndarray,
    tol: float = 1e-9,
    direct_threshold: int = 200_000,
):
    """One-shot saddle solve; see SaddleSolver for the system convention."""
    return SaddleSolver(A, B, C, tol=tol, direct_threshold=direct_threshold).solve(f_u, f_p)
