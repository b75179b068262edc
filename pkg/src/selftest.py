"""
Statistical self-test of the rounding engine, the scalar-product laws and
the Cholesky pipeline, at a scale that runs in well under a minute.

Every check is seeded and returns a CheckResult; the workflow collects them
into a pass/fail table.
"""

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
import pandas as pd

from bounds import bound_cholesky, bound_classical
from dense_complex import binet_cauchy_terms, identity
from ensembles import (RandsvdSpec, RngStream, complex_gaussian, haar_unitary, orthogonal_partner,
                       randsvd, random_unit_vectors)
from errors import EXIT_NUMERICAL, exit_code_for
from ls_pipeline import dot_lp, gram_lp, measure_error
from precision import PrecisionContext, quantize, round_array
from utils import get_logger, rms
from workflow_result import WorkflowResult

logger = get_logger('selftest', 'selftest')

ROUNDING_BITS = (5, 8, 10, 23)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    expected: str
    detail: str = ''


def _random_normals(gen: np.random.Generator, count: int) -> np.ndarray:
    """Uniform significands in [1, 2) with random sign and binade"""
    significand = gen.uniform(1.0, 2.0, count)
    exponent = gen.integers(-20, 21, count)
    sign = np.where(gen.random(count) < 0.5, -1.0, 1.0)
    return sign * np.ldexp(significand, exponent)


def _ratio_in(value: float, lo: float, hi: float) -> bool:
    return bool(lo <= value <= hi)


class SelfTest:
    """
    Seeded statistical checks. `scale` multiplies the sample counts; 1.0 is
    the quick default used by the CLI.
    """

    def __init__(self, seed: int = 0, scale: float = 1.0):
        self.stream = RngStream(seed, (0x5e1f,))
        self.scale = scale

    def _n(self, base: int) -> int:
        return max(2, int(base * self.scale))

    def check_rounding_engine(self) -> List[CheckResult]:
        results = []
        for i, b in enumerate(ROUNDING_BITS):
            ctx = PrecisionContext(b)
            gen = self.stream.spawn(1, i).generator()
            x = _random_normals(gen, self._n(100_000))
            r = round_array(x, ctx)

            idempotent = np.array_equal(round_array(r, ctx), r)
            xs = np.sort(x)
            monotone = bool(np.all(np.diff(round_array(xs, ctx)) >= 0.0))
            grid = np.ldexp(gen.integers(2 ** b, 2 ** (b + 1), 1000).astype(np.float64), gen.integers(-30, 0, 1000))
            exact = np.array_equal(round_array(grid, ctx), grid)
            max_rel = float(np.max(np.abs(r - x) / np.abs(x)))

            results.append(CheckResult(
                name=f"rounding b={b}",
                passed=idempotent and monotone and exact and max_rel <= ctx.u,
                measured=max_rel / ctx.u,
                expected="max rel err / u <= 1",
                detail=f"idempotent={idempotent} monotone={monotone} exact={exact}",
            ))

            # Error over the binade floor is uniform on [-u, u] for uniform significands
            floor = np.ldexp(1.0, np.frexp(x)[1] - 1)
            rms_floor = rms((r - x) / floor)
            rms_rel = rms((r - x) / x)
            results.append(CheckResult(
                name=f"rounding RMS b={b}",
                passed=abs(rms_floor / ctx.eps - 1.0) <= 0.05 and rms_rel <= ctx.eps,
                measured=rms_floor / ctx.eps,
                expected="RMS / eps within 5% of 1",
                detail=f"plain relative RMS / eps = {rms_rel / ctx.eps:.3f}",
            ))
        return results

    def check_eps_constants(self) -> List[CheckResult]:
        half, single = PrecisionContext(10), PrecisionContext(23)
        ok = half.eps == 2.0 ** -11 / math.sqrt(3.0) and single.eps == 2.0 ** -24 / math.sqrt(3.0)
        return [CheckResult("eps constants", ok, half.eps, "2^-11/sqrt(3) and 2^-24/sqrt(3)")]

    def check_classical_gap(self) -> List[CheckResult]:
        ctx = PrecisionContext(10)
        results = []
        for n in (8, 32, 64):
            a = identity(n)
            ratio = bound_classical(a, a, ctx).fro / bound_cholesky(n, math.sqrt(n), ctx)
            expected = (n + 1) * math.sqrt(3.0)
            results.append(CheckResult(
                name=f"classical/probabilistic N={n}",
                passed=abs(ratio / expected - 1.0) <= 1e-12,
                measured=ratio,
                expected=f"(N+1) sqrt(3) = {expected:.6g}",
            ))
        return results

    def _scalar_errors(self, n: int, orthogonal: bool, ctx: PrecisionContext, index: int) -> np.ndarray:
        gen = self.stream.spawn(2, index).generator()
        a = quantize(random_unit_vectors(n, self._n(500), gen), ctx)
        b = quantize(orthogonal_partner(a, gen), ctx) if orthogonal else a
        exact = np.sum(a.conj() * b, axis=-1)
        return dot_lp(a, b, ctx) - exact

    def _scalar_rms(self, n: int, orthogonal: bool, ctx: PrecisionContext, index: int) -> float:
        return rms(np.abs(self._scalar_errors(n, orthogonal, ctx, index)))

    def check_scalar_product_laws(self) -> List[CheckResult]:
        # The sqrt(N) law needs N u << 1; at b=10 and N=1024 the running sum
        # stagnates (N u = 1/2), so the parallel law is checked at b=23.
        ctx = PrecisionContext(10)
        wide = PrecisionContext(23)
        par_64, par_1024 = self._scalar_rms(64, False, wide, 0), self._scalar_rms(1024, False, wide, 1)
        ort_64, ort_1024 = self._scalar_rms(64, True, ctx, 2), self._scalar_rms(1024, True, ctx, 3)

        drift = self._scalar_errors(1024, False, ctx, 4).real
        mean_drift, rms_drift = float(np.mean(drift)), rms(drift)
        return [
            CheckResult("scalar product parallel", _ratio_in(par_1024 / par_64, 2.8, 5.7),
                        par_1024 / par_64, "b=23, N=1024/N=64 RMS ratio in [2.8, 5.7]"),
            CheckResult("scalar product orthogonal", ort_1024 / ort_64 <= 1.8 and ort_1024 <= 3.0 * ctx.eps,
                        ort_1024 / ort_64, "ratio <= 1.8 and RMS <= 3 eps",
                        f"RMS / eps = {ort_1024 / ctx.eps:.3f}"),
            CheckResult("scalar product stagnation", mean_drift < 0.0 and -mean_drift >= 0.9 * rms_drift,
                        mean_drift / ctx.eps, "b=10, N=1024: mean error negative and >= 0.9 RMS",
                        f"RMS / eps = {rms_drift / ctx.eps:.3f}"),
        ]

    def _mean_backward_err(self, n: int, trials: int, ctx: PrecisionContext) -> float:
        errs = []
        for t in range(trials):
            gen = self.stream.spawn(3, n, t).generator()
            h = randsvd(RandsvdSpec(n, n, cond=10.0), gen)
            x0 = complex_gaussian(gen, (n, 1))
            errs.append(measure_error(h, h @ x0, ctx).backward_err)
        return math.fsum(errs) / len(errs)

    def check_cholesky_backward_scaling(self) -> List[CheckResult]:
        ctx = PrecisionContext(10)
        trials = self._n(20)
        small, large = self._mean_backward_err(16, trials, ctx), self._mean_backward_err(64, trials, ctx)
        bounded = small <= 4 * math.sqrt(16) * ctx.eps and large <= 4 * math.sqrt(64) * ctx.eps
        return [CheckResult("cholesky backward error", bounded and _ratio_in(large / small, 1.4, 2.9),
                            large / small, "N=64/N=16 ratio in [1.4, 2.9], mean <= 4 sqrt(N) eps",
                            f"N=16: {small / ctx.eps:.2f} eps, N=64: {large / ctx.eps:.2f} eps")]

    def _mean_gram_err(self, m: int, trials: int, ctx: PrecisionContext) -> float:
        errs = []
        for t in range(trials):
            gen = self.stream.spawn(4, m, t).generator()
            h = quantize(randsvd(RandsvdSpec(m, 8, cond=10.0), gen), ctx)
            exact = h.conj().T @ h
            errs.append(np.linalg.norm(gram_lp(h, ctx) - exact) / np.linalg.norm(exact))
        return math.fsum(errs) / len(errs)

    def check_gram_scaling(self) -> List[CheckResult]:
        ctx = PrecisionContext(10)
        trials = self._n(50)
        ratio = self._mean_gram_err(256, trials, ctx) / self._mean_gram_err(16, trials, ctx)
        return [CheckResult("gram product scaling", _ratio_in(ratio, 2.8, 5.7), ratio,
                            "M=256/M=16 ratio in [2.8, 5.7]")]

    def check_binet_cauchy(self) -> List[CheckResult]:
        gen = self.stream.spawn(5).generator()
        worst = 0.0
        for shape in ((5, 2), (6, 3)):
            for _ in range(self._n(20)):
                lhs, rhs, scale = binet_cauchy_terms(complex_gaussian(gen, shape), complex_gaussian(gen, shape))
                worst = max(worst, abs(lhs - rhs) / scale)
        return [CheckResult("binet-cauchy identity", worst <= 1e-12, worst, "defect / scale <= 1e-12")]

    def check_subset_volume(self) -> List[CheckResult]:
        """C(M,N) times the mean squared volume of random row subsets of a Haar block is 1"""
        m, n = 8, 2
        gen = self.stream.spawn(6).generator()
        samples = self._n(2000)
        values = np.empty(samples)
        for s in range(samples):
            block = haar_unitary(m, gen)[:, :n]
            rows = np.sort(gen.choice(m, size=n, replace=False))
            values[s] = abs(np.linalg.det(block[rows, :])) ** 2
        scaled = math.comb(m, n) * values
        mean = math.fsum(scaled) / samples
        stderr = float(np.std(scaled, ddof=1)) / math.sqrt(samples)
        return [CheckResult("subset volume mean", abs(mean - 1.0) <= 3 * stderr, mean,
                            "1 within 3 standard errors", f"stderr {stderr:.3g}")]

    def check_haar_marginal(self) -> List[CheckResult]:
        n = 16
        gen = self.stream.spawn(7).generator()
        samples = self._n(2000)
        values = np.array([abs(haar_unitary(n, gen)[0, 0]) ** 2 for _ in range(samples)])
        mean = math.fsum(values) / samples
        stderr = float(np.std(values, ddof=1)) / math.sqrt(samples)
        return [CheckResult("haar marginal", abs(mean - 1.0 / n) <= 3 * stderr, mean,
                            "E|q11|^2 = 1/16 within 3 standard errors")]

    def checks(self) -> List[Callable[[], List[CheckResult]]]:
        return [
            self.check_eps_constants,
            self.check_rounding_engine,
            self.check_classical_gap,
            self.check_binet_cauchy,
            self.check_subset_volume,
            self.check_haar_marginal,
            self.check_scalar_product_laws,
            self.check_gram_scaling,
            self.check_cholesky_backward_scaling,
        ]

    def run(self) -> pd.DataFrame:
        results: List[CheckResult] = []
        for check in self.checks():
            for result in check():
                level = logger.info if result.passed else logger.warning
                level(f"{result.name}: {'PASS' if result.passed else 'FAIL'} (measured {result.measured:.4g})")
                results.append(result)
        return pd.DataFrame([r.__dict__ for r in results])


def run_selftest_workflow(seed: int = 0, scale: float = 1.0) -> WorkflowResult:
    """
    Run every check.

    Returns:
        WorkflowResult: data is the pass/fail table; exit_code is 3 when a
        check failed
    """
    try:
        table = SelfTest(seed, scale).run()
        failed = int((~table['passed']).sum())
        if failed:
            logger.warning(f"Self-test: {failed} of {len(table)} checks failed")
            return WorkflowResult(success=False, data=table, error=f"{failed} self-test check(s) failed",
                                  exit_code=EXIT_NUMERICAL)
        logger.info(f"Self-test: all {len(table)} checks passed")
        return WorkflowResult(success=True, data=table)

    except Exception as e:
        error_msg = f"Error in self-test workflow: {str(e)}"
        logger.error(error_msg)
        return WorkflowResult(success=False, error=error_msg, exit_code=exit_code_for(e))


if __name__ == "__main__":
    result = run_selftest_workflow()
    if result.data is not None:
        print(result.data.to_string(index=False))
