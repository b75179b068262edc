"""
Dense complex matrices in working precision (binary64).

A CMatrix is a 2-D numpy complex128 array. The kernels here are the exact
reference path that emulated runs are compared against: products,
one-sided Jacobi SVD, matrix volume and the Binet-Cauchy identity.
"""

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from errors import DimensionMismatch, NoConvergenceError, TooLargeError, ValidationError

CMatrix = np.ndarray

HERMITIAN_TOLERANCE = 1e-12
BINET_CAUCHY_MAX_ROWS = 12


def as_cmatrix(a, name: str = "matrix") -> CMatrix:
    """
    Convert input to a 2-D complex128 array.

    Vectors become single columns. Raises DimensionMismatch for empty or
    higher-dimensional input.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {np.shape(a)}")
    return arr


def identity(n: int) -> CMatrix:
    return np.eye(n, dtype=np.complex128)


def fro_norm(a: CMatrix) -> float:
    return float(np.linalg.norm(a, 'fro'))


def hermitian_defect(a: CMatrix) -> float:
    """Relative distance ||A - A^H||_F / ||A||_F"""
    scale = fro_norm(a)
    return fro_norm(a - a.conj().T) / scale if scale > 0 else 0.0


def is_hermitian(a: CMatrix, tol: float = HERMITIAN_TOLERANCE) -> bool:
    return a.shape[0] == a.shape[1] and hermitian_defect(a) <= tol


def gemm_exact(a: CMatrix, b: CMatrix, conjugate_transpose_a: bool = False) -> CMatrix:
    """
    Working-precision product A·B, or A^H·B when conjugate_transpose_a is set.

    Raises:
        DimensionMismatch: inner dimensions differ
    """
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    left = a.conj().T if conjugate_transpose_a else a
    if left.shape[1] != b.shape[0]:
        raise DimensionMismatch(
            f"Inner dimensions differ: {left.shape[0]}x{left.shape[1]} times {b.shape[0]}x{b.shape[1]}"
        )
    return left @ b


@dataclass
class SvdResult:
    """
    Singular values in descending order, optionally with factors so that
    A = u @ diag(singular_values) @ v^H.
    """
    singular_values: np.ndarray
    u: Optional[CMatrix] = None
    v: Optional[CMatrix] = None
    sweeps: int = 0
    converged: bool = True

    def reconstruct(self) -> CMatrix:
        if self.u is None or self.v is None:
            raise ValueError("SVD factors were not computed")
        return (self.u * self.singular_values) @ self.v.conj().T


def _round_robin(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Tournament ordering of all column pairs: n-1 rounds (n even) in which
    every column appears at most once, so one round rotates independently.
    """
    m = n + (n % 2)
    slots = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(slots[i], slots[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            ps, qs = zip(*pairs)
            rounds.append((np.array(ps), np.array(qs)))
        slots = [slots[0], slots[-1]] + slots[1:-1]
    return rounds


def svd_jacobi(a: CMatrix, compute_vectors: bool = False, max_sweeps: int = 60,
               tol: Optional[float] = None) -> SvdResult:
    """
    One-sided (Hestenes) Jacobi SVD.

    Columns are orthogonalized by complex plane rotations in round-robin
    order until every pair satisfies |u_p^H u_q| <= tol * ||u_p|| ||u_q||.
    Wide matrices are handled through their conjugate transpose.

    Args:
        a: Nonzero M x N matrix
        compute_vectors: Also return u (M x k) and v (N x k), k = min(M, N)
        max_sweeps: Sweep limit
        tol: Pair orthogonality tolerance, default rows * machine epsilon

    Raises:
        ValidationError: a is the zero matrix
        NoConvergenceError: sweep limit reached (best iterate in .result)
    """
    a = as_cmatrix(a)
    if not np.any(a):
        raise ValidationError("svd_jacobi requires a nonzero matrix")

    transposed = a.shape[0] < a.shape[1]
    work = a.conj().T.copy() if transposed else a.copy()
    m, n = work.shape
    v = np.eye(n, dtype=np.complex128)
    if tol is None:
        tol = m * np.finfo(np.float64).eps
    # columns below eps * ||A||_F are numerically zero and need no rotation
    floor = (np.finfo(np.float64).eps * fro_norm(work)) ** 2

    schedule = _round_robin(n)
    converged = n == 1
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for ps, qs in schedule:
            up, uq = work[:, ps], work[:, qs]
            alpha = np.sum(up.real ** 2 + up.imag ** 2, axis=0)
            beta = np.sum(uq.real ** 2 + uq.imag ** 2, axis=0)
            gamma = np.sum(up.conj() * uq, axis=0)
            g = np.abs(gamma)
            active = (g > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > floor)
            if not np.any(active):
                continue
            rotated = True
            ps, qs = ps[active], qs[active]
            up, uq = up[:, active], uq[:, active]
            alpha, beta, g = alpha[active], beta[active], g[active]
            phase = gamma[active] / g

            # real rotation after removing the phase of u_p^H u_q
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.hypot(1.0, t)
            s = c * t

            uq = uq * phase.conj()
            work[:, ps] = c * up - s * uq
            work[:, qs] = s * up + c * uq
            vp, vq = v[:, ps], v[:, qs] * phase.conj()
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq
        converged = not rotated

    sigma = np.sqrt(np.sum(work.real ** 2 + work.imag ** 2, axis=0))
    order = np.argsort(-sigma, kind='stable')
    sigma = sigma[order]

    u_factor = v_factor = None
    if compute_vectors:
        cols = work[:, order]
        safe = np.where(sigma > 0.0, sigma, 1.0)
        u_factor = np.where(sigma > 0.0, cols / safe, 0.0)
        v_factor = v[:, order]
        if transposed:
            u_factor, v_factor = v_factor, u_factor

    result = SvdResult(sigma, u_factor, v_factor, sweeps, converged)
    if not converged:
        raise NoConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps", result=result)
    return result


def singular_values(a: CMatrix) -> np.ndarray:
    return svd_jacobi(a).singular_values


def volume(a: CMatrix) -> float:
    """
    Matrix volume sqrt(max(det A^H A, det A A^H)): the product of the
    min(M, N) singular values. Equals |det A| for square A.
    """
    a = as_cmatrix(a)
    if not np.any(a):
        return 0.0
    return float(math.prod(singular_values(a)))


def binet_cauchy_terms(a: CMatrix, b: CMatrix) -> Tuple[complex, complex, float]:
    """
    Both sides of det(A^H B) = sum_I conj(det A_I) det B_I over all row sets I
    of size N, plus the scale sum_I |det A_I| |det B_I|.

    Raises:
        DimensionMismatch: shapes differ or M < N
        TooLargeError: M > 12 (C(M, N) enumeration)
    """
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    if a.shape != b.shape:
        raise DimensionMismatch(f"A and B must share a shape, got {a.shape} and {b.shape}")
    m, n = a.shape
    if m < n:
        raise DimensionMismatch(f"Binet-Cauchy needs M >= N, got {m}x{n}")
    if m > BINET_CAUCHY_MAX_ROWS:
        raise TooLargeError(f"Binet-Cauchy enumeration limited to M <= {BINET_CAUCHY_MAX_ROWS}, got M={m}")

    lhs = complex(np.linalg.det(a.conj().T @ b))
    rhs = 0j
    scale = 0.0
    for rows in itertools.combinations(range(m), n):
        idx = list(rows)
        det_a = complex(np.linalg.det(a[idx, :]))
        det_b = complex(np.linalg.det(b[idx, :]))
        rhs += det_a.conjugate() * det_b
        scale += abs(det_a) * abs(det_b)
    return lhs, rhs, scale


def binet_cauchy_check(a: CMatrix, b: CMatrix) -> float:
    """Absolute defect |det(A^H B) - sum_I conj(det A_I) det B_I|"""
    lhs, rhs, _ = binet_cauchy_terms(a, b)
    return abs(lhs - rhs)
