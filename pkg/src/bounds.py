"""
Round-off bound evaluators.

Classical worst-case bounds are linear in the unit round-off u; the
probabilistic ones are linear in eps = u/sqrt(3) and bound mean (RMS) errors
over random inputs, not worst cases. All evaluators return the bare leading
terms with constant 1.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, NamedTuple

import numpy as np

from dense_complex import CMatrix, as_cmatrix, fro_norm, gemm_exact, svd_jacobi
from errors import DimensionMismatch, RankDeficientError
from precision import PrecisionContext

RANK_TOLERANCE = 1e-12


@dataclass
class ConditionNumbers:
    cond2: float
    cond_f: float
    rank: int
    size: int

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.size


def _conditions_from_singular_values(s: np.ndarray, allow_rank_deficient: bool) -> ConditionNumbers:
    keep = s > RANK_TOLERANCE * s[0]
    rank = int(np.count_nonzero(keep))
    if rank < s.size and not allow_rank_deficient:
        raise RankDeficientError(rank, s.size)
    s = s[keep]
    cond2 = float(s[0] / s[-1])
    cond_f = math.sqrt(math.fsum(s ** 2)) * math.sqrt(math.fsum(s ** -2.0))
    return ConditionNumbers(cond2, cond_f, rank, int(keep.size))


def condition_numbers(a: CMatrix, allow_rank_deficient: bool = False) -> ConditionNumbers:
    """
    cond_2 = s_1 / s_r and cond_F = ||A||_F ||A^+||_F from Jacobi singular
    values; singular values at or below 1e-12 * s_1 count as zero.

    Raises:
        RankDeficientError: the tolerance dropped a singular value and
            allow_rank_deficient is False
    """
    return _conditions_from_singular_values(svd_jacobi(a).singular_values, allow_rank_deficient)


def cond2(a: CMatrix) -> float:
    return condition_numbers(a).cond2


def cond_f(a: CMatrix) -> float:
    return condition_numbers(a).cond_f


class GramConditions(NamedTuple):
    cond2_h: float
    cond_f_a: float


def gram_conditions(h: CMatrix) -> GramConditions:
    """
    cond_2(H) and cond_F(H^H H) from one SVD of H (the singular values of
    H^H H are the squares of those of H).
    """
    return gram_conditions_from_spectrum(svd_jacobi(h).singular_values)


def gram_conditions_from_spectrum(s: np.ndarray) -> GramConditions:
    """Same as gram_conditions for H with known non-increasing singular values s"""
    s = np.asarray(s, dtype=np.float64)
    cond_h = _conditions_from_singular_values(s, allow_rank_deficient=False)
    cond_f_a = math.sqrt(math.fsum(s ** 4)) * math.sqrt(math.fsum(s ** -4.0))
    return GramConditions(cond_h.cond2, cond_f_a)


class ClassicalBound(NamedTuple):
    elementwise: CMatrix
    fro: float
    spectral: float


def bound_classical(a: CMatrix, l_exact: CMatrix, ctx: PrecisionContext) -> ClassicalBound:
    """
    Worst-case Cholesky backward error:
    |dA| <= (N+1) u |L||L^H|, ||dA||_F <= (N+1) sqrt(N) u ||A||_F,
    ||dA||_2 <= (N+1) N u ||A||_2.
    """
    a = as_cmatrix(a, "A")
    l_exact = as_cmatrix(l_exact, "L")
    n = a.shape[0]
    if a.shape != (n, n) or l_exact.shape != (n, n):
        raise DimensionMismatch(f"A {a.shape} and L {l_exact.shape} must be the same square size")
    abs_l = np.abs(l_exact)
    elementwise = (n + 1) * ctx.u * (abs_l @ abs_l.T)
    spectral_norm = float(svd_jacobi(a).singular_values[0]) if np.any(a) else 0.0
    return ClassicalBound(
        elementwise=elementwise,
        fro=(n + 1) * math.sqrt(n) * ctx.u * fro_norm(a),
        spectral=(n + 1) * n * ctx.u * spectral_norm,
    )


def bound_scalar_higham(n: int, norm_a: float, norm_b: float, ctx: PrecisionContext) -> float:
    """|d(a^H b)| ~ sqrt(N) eps ||a|| ||b||"""
    return math.sqrt(n) * ctx.eps * norm_a * norm_b


def bound_scalar_new(n: int, inner_abs: float, norm_a: float, norm_b: float, ctx: PrecisionContext) -> float:
    """|d(a^H b)| ~ sqrt(N) eps |a^H b| + eps ||a|| ||b||"""
    return math.sqrt(n) * ctx.eps * inner_abs + ctx.eps * norm_a * norm_b


def bound_gram(m: int, fro_a: float, ctx: PrecisionContext) -> float:
    """Dominant Gram product term sqrt(M) eps ||A||_F"""
    return math.sqrt(m) * ctx.eps * fro_a


def bound_gram_diag(n: int, fro_a: float, ctx: PrecisionContext) -> float:
    """Secondary Gram term from |dA_ij| ~ eps sqrt(A_ii A_jj): sqrt(N) eps ||A||_F"""
    return math.sqrt(n) * ctx.eps * fro_a


def bound_cholesky(n: int, fro_a: float, ctx: PrecisionContext) -> float:
    """Per-factor Cholesky backward error ||dA_1||_F ~ sqrt(N) eps ||A||_F"""
    return math.sqrt(n) * ctx.eps * fro_a


def bound_cholesky_symmetric(n: int, fro_a: float, ctx: PrecisionContext) -> float:
    """dA = dA_1 + dA_1^H"""
    return 2.0 * bound_cholesky(n, fro_a, ctx)


def bound_final(m: int, n: int, cond_f_a: float, ctx: PrecisionContext) -> float:
    """Relative solution error (sqrt(M)/N) eps cond_F(H^H H)"""
    return math.sqrt(m) / n * ctx.eps * cond_f_a


def bound_final_cond2(m: int, cond2_h: float, ctx: PrecisionContext) -> float:
    """Upper form sqrt(M) eps cond_2(H)^2"""
    return math.sqrt(m) * ctx.eps * cond2_h ** 2


@dataclass
class BoundReport:
    rows: int
    cols: int
    mantissa_bits: int
    u: float
    eps: float
    fro_A: float
    cond2_H: float
    condF_A: float
    classical_elementwise_max: float
    classical_fro: float
    classical_spectral: float
    gram_bound: float
    gram_bound_diag: float
    cholesky_bound: float
    cholesky_bound_symmetric: float
    final_bound: float
    final_bound_cond2_form: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def bound_report(h: CMatrix, ctx: PrecisionContext) -> BoundReport:
    """
    Evaluate every bound for one channel matrix H (M x N, M >= N).

    Raises:
        RankDeficientError: H is numerically rank deficient
    """
    h = as_cmatrix(h, "H")
    m, n = h.shape
    if m < n:
        raise DimensionMismatch(f"H must have at least as many rows as columns, got {h.shape}")

    conds = gram_conditions(h)
    a = gemm_exact(h, h, conjugate_transpose_a=True)
    try:
        l_exact = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise RankDeficientError(n - 1, n)

    fro_a = fro_norm(a)
    classical = bound_classical(a, l_exact, ctx)
    return BoundReport(
        rows=m,
        cols=n,
        mantissa_bits=ctx.mantissa_bits,
        u=ctx.u,
        eps=ctx.eps,
        fro_A=fro_a,
        cond2_H=conds.cond2_h,
        condF_A=conds.cond_f_a,
        classical_elementwise_max=float(np.max(classical.elementwise)),
        classical_fro=classical.fro,
        classical_spectral=classical.spectral,
        gram_bound=bound_gram(m, fro_a, ctx),
        gram_bound_diag=bound_gram_diag(n, fro_a, ctx),
        cholesky_bound=bound_cholesky(n, fro_a, ctx),
        cholesky_bound_symmetric=bound_cholesky_symmetric(n, fro_a, ctx),
        final_bound=bound_final(m, n, conds.cond_f_a, ctx),
        final_bound_cond2_form=bound_final_cond2(m, conds.cond2_h, ctx),
    )
