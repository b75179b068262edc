"""
Cholesky-based least-squares detector under emulated precision.

    A = H^H H            gram_lp      (sequential sums over rows of H)
    A = L L^H            cholesky_lp  (right-looking, column by column)
    W = L^-H (L^-1 H^H)  weight_lp    (forward then back substitution)
    X = W Y              apply_lp

Every dot product is summed in index order. Loops run over the summation
index while numpy handles all entries that share it, so each entry still sees
its terms one at a time, in order.

solve_lp never raises for numerical trouble; it records the failing stage in
the returned LsSolution. solve_exact runs the same chain in binary64 with
numpy kernels and is the reference for measure_error.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from dense_complex import CMatrix, as_cmatrix, fro_norm, gemm_exact
from errors import CholeskyBreakdown, DimensionMismatch, NumericalFailure, SolveBreakdown
from precision import PrecisionContext, WORKING, cdiv_real, cmul_acc, quantize, round_array
from utils import get_logger

logger = get_logger('ls_pipeline', 'ls_pipeline')


class FailureStage(Enum):
    NONE = "none"
    GRAM = "gram"
    CHOLESKY = "cholesky"
    SOLVE = "solve"
    APPLY = "apply"


@dataclass
class LsSolution:
    """Outcome of one solve; x, w (and l) are None when the solve failed"""
    x: Optional[CMatrix] = None
    w: Optional[CMatrix] = None
    l: Optional[CMatrix] = None
    a: Optional[CMatrix] = None
    failed: bool = False
    failure_stage: FailureStage = FailureStage.NONE
    error: Optional[str] = None


@dataclass
class ErrorMeasurement:
    """
    rel_err: ||X~ - X|| / ||X||
    backward_err: ||L~ L~^H - A~|| / ||A||  (A~ the matrix that entered Cholesky)
    gram_err: ||A~ - H^H H|| / ||H^H H||
    apply_err: part of rel_err added by the final W·Y product alone
    """
    rel_err: float = math.nan
    backward_err: float = math.nan
    gram_err: float = math.nan
    apply_err: float = math.nan
    failed: bool = False
    failure_stage: FailureStage = FailureStage.NONE
    error: Optional[str] = None


def gram_lp(h: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """
    A = H^H H under ctx.

    Entry (j, k) accumulates conj(h_ij) h_ik for i = 1..M in order. Only the
    lower triangle is kept; the upper one is its conjugate mirror and the
    diagonal is real.
    """
    h = as_cmatrix(h, "H")
    m, n = h.shape
    acc = np.zeros((n, n), dtype=np.complex128)
    for i in range(m):
        row = h[i, :]
        acc = cmul_acc(acc, row[:, np.newaxis], row[np.newaxis, :], ctx)

    lower = np.tril(acc, -1)
    return lower + lower.conj().T + np.diag(acc.diagonal().real).astype(np.complex128)


def cholesky_lp(a: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """
    Right-looking Cholesky under ctx:

        for j = 1..N:
            L_jj      = sqrt(A_jj)
            L_j+1:N,j = A_j+1:N,j / L_jj
            A         = A - L_:,j L_:,j^H

    Raises:
        CholeskyBreakdown: a pivot is not positive after rounding
        LowPrecisionOverflow: binary16 range exceeded
    """
    a = quantize(as_cmatrix(a, "A"), ctx)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch(f"Cholesky needs a square matrix, got {a.shape}")

    l = np.zeros_like(a)
    for j in range(n):
        pivot = float(a[j, j].real)
        if not pivot > 0.0:
            raise CholeskyBreakdown(j, pivot)
        ljj = float(round_array(math.sqrt(pivot), ctx))
        if ljj == 0.0:
            raise CholeskyBreakdown(j, pivot)
        l[j, j] = ljj
        if j + 1 == n:
            break

        col = cdiv_real(a[j + 1:, j], ljj, ctx)
        l[j + 1:, j] = col
        # trailing update A_rc -= l_r conj(l_c), written as acc + conj(-l_c) l_r
        a[j + 1:, j + 1:] = cmul_acc(a[j + 1:, j + 1:], -col[np.newaxis, :], col[:, np.newaxis], ctx)

    return l


def forward_substitution_lp(l: CMatrix, b: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """Z = L^-1 B, column-oriented; row i subtracts L_ik z_k for k = 1..i-1 in order"""
    n = l.shape[0]
    z = np.array(b, dtype=np.complex128)
    for k in range(n):
        d = float(l[k, k].real)
        if d == 0.0:
            raise SolveBreakdown(k)
        z[k, :] = cdiv_real(z[k, :], d, ctx)
        if k + 1 < n:
            z[k + 1:, :] = cmul_acc(z[k + 1:, :], -l[k + 1:, k].conj()[:, np.newaxis], z[k, np.newaxis, :], ctx)
    return z


def back_substitution_lp(l: CMatrix, z: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """W = L^-H Z, from the last row up"""
    n = l.shape[0]
    w = np.array(z, dtype=np.complex128)
    for k in reversed(range(n)):
        d = float(l[k, k].real)
        if d == 0.0:
            raise SolveBreakdown(k)
        w[k, :] = cdiv_real(w[k, :], d, ctx)
        if k > 0:
            # (L^H)_ik = conj(L_ki)
            w[:k, :] = cmul_acc(w[:k, :], -l[k, :k][:, np.newaxis], w[k, np.newaxis, :], ctx)
    return w


def weight_lp(l: CMatrix, h: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """
    W = L^-H (L^-1 H^H) by two triangular solves under ctx; no triangular
    inverse is formed.

    Raises:
        SolveBreakdown: a diagonal entry of L is zero
    """
    l = as_cmatrix(l, "L")
    h = as_cmatrix(h, "H")
    if l.shape[0] != l.shape[1] or l.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"L {l.shape} does not match H {h.shape}")
    z = forward_substitution_lp(l, h.conj().T, ctx)
    return back_substitution_lp(l, z, ctx)


def apply_lp(w: CMatrix, y: CMatrix, ctx: PrecisionContext) -> CMatrix:
    """X = W Y under ctx, summing over the columns of W in order"""
    w = as_cmatrix(w, "W")
    y = as_cmatrix(y, "Y")
    if w.shape[1] != y.shape[0]:
        raise DimensionMismatch(f"W {w.shape} does not match Y {y.shape}")
    acc = np.zeros((w.shape[0], y.shape[1]), dtype=np.complex128)
    for j in range(w.shape[1]):
        acc = cmul_acc(acc, w[:, j].conj()[:, np.newaxis], y[j, np.newaxis, :], ctx)
    return acc


def dot_lp(a: np.ndarray, b: np.ndarray, ctx: PrecisionContext) -> np.ndarray:
    """
    Inner products a^H b along the last axis, summed left to right under ctx.
    Leading axes are a batch of independent vector pairs.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Vector batches differ in shape: {a.shape} vs {b.shape}")
    acc = np.zeros(a.shape[:-1], dtype=np.complex128)
    for k in range(a.shape[-1]):
        acc = cmul_acc(acc, a[..., k], b[..., k], ctx)
    return acc


def _check_shapes(h: CMatrix, y: CMatrix):
    if y.shape[0] != h.shape[0]:
        raise DimensionMismatch(f"Y has {y.shape[0]} rows, H has {h.shape[0]}")
    if h.shape[0] < h.shape[1]:
        raise DimensionMismatch(f"H must have at least as many rows as columns, got {h.shape}")


def solve_lp(h: CMatrix, y: CMatrix, ctx: PrecisionContext, apply_wy_in_lp: bool = True) -> LsSolution:
    """
    Gram -> Cholesky -> weight matrix -> W·Y under ctx.

    H and Y are converted into ctx first. With apply_wy_in_lp=False the final
    product is done in working precision. A failing stage is recorded in the
    result instead of raising.
    """
    h = quantize(as_cmatrix(h, "H"), ctx)
    y = quantize(as_cmatrix(y, "Y"), ctx)
    _check_shapes(h, y)

    solution = LsSolution()
    stage = FailureStage.GRAM
    try:
        solution.a = gram_lp(h, ctx)
        stage = FailureStage.CHOLESKY
        solution.l = cholesky_lp(solution.a, ctx)
        stage = FailureStage.SOLVE
        w = weight_lp(solution.l, h, ctx)
        stage = FailureStage.APPLY
        x = apply_lp(w, y, ctx if apply_wy_in_lp else WORKING)
    except NumericalFailure as e:
        logger.info(f"Low-precision solve failed at {stage.value} stage ({ctx.describe()}): {e}")
        solution.failed = True
        solution.failure_stage = stage
        solution.error = str(e)
        return solution

    solution.w = w
    solution.x = x
    return solution


def solve_exact(h: CMatrix, y: CMatrix) -> LsSolution:
    """Reference solve in binary64 (numpy Cholesky and triangular solves)"""
    h = as_cmatrix(h, "H")
    y = as_cmatrix(y, "Y")
    _check_shapes(h, y)

    a = gemm_exact(h, h, conjugate_transpose_a=True)
    try:
        l = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as e:
        return LsSolution(a=a, failed=True, failure_stage=FailureStage.CHOLESKY, error=f"Exact Cholesky failed: {e}")

    z = np.linalg.solve(l, h.conj().T)
    w = np.linalg.solve(l.conj().T, z)
    return LsSolution(x=w @ y, w=w, l=l, a=a)


def _relative(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def measure_error(h: CMatrix, y: CMatrix, ctx: PrecisionContext, apply_wy_in_lp: bool = True) -> ErrorMeasurement:
    """
    Run the emulated and the exact solve on the same (ctx-quantized) H, Y
    and compare them.

    Raises:
        NumericalFailure: the exact reference solve itself fails
    """
    h = quantize(as_cmatrix(h, "H"), ctx)
    y = quantize(as_cmatrix(y, "Y"), ctx)

    exact = solve_exact(h, y)
    if exact.failed:
        raise NumericalFailure(f"Reference solve failed: {exact.error}")

    approx = solve_lp(h, y, ctx, apply_wy_in_lp)
    result = ErrorMeasurement(failed=approx.failed, failure_stage=approx.failure_stage, error=approx.error)
    a_norm = fro_norm(exact.a)

    if approx.a is not None:
        result.gram_err = _relative(fro_norm(approx.a - exact.a), a_norm)
    if approx.l is not None:
        llh = gemm_exact(approx.l, approx.l.conj().T)
        result.backward_err = _relative(fro_norm(llh - approx.a), a_norm)
    if approx.failed:
        return result

    x_norm = float(np.linalg.norm(exact.x))
    result.rel_err = _relative(float(np.linalg.norm(approx.x - exact.x)), x_norm)
    if apply_wy_in_lp:
        result.apply_err = _relative(float(np.linalg.norm(approx.x - approx.w @ y)), x_norm)
    return result


def consistent_rhs(h: CMatrix, x0: CMatrix) -> CMatrix:
    """Noise-free received signal Y = H X0 in working precision"""
    return gemm_exact(h, x0)
