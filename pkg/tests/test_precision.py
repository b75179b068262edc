import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from errors import DomainError, LowPrecisionOverflow, ValidationError
from precision import (ExponentRange, PrecisionContext, cdiv_real, cmul_acc, lp_add, lp_cmul_acc, lp_div,
                       lp_mul, lp_sqrt, lp_sub, quantize, round_array, round_complex, round_real)


def _random_normals(gen, count):
    significand = gen.uniform(1.0, 2.0, count)
    sign = np.where(gen.random(count) < 0.5, -1.0, 1.0)
    return sign * np.ldexp(significand, gen.integers(-30, 31, count))


class TestPrecisionContext:
    def test_unit_roundoff_and_eps(self):
        assert PrecisionContext(10).u == 2.0 ** -11
        assert PrecisionContext(10).eps == 2.0 ** -11 / math.sqrt(3.0)
        assert PrecisionContext(23).eps == 2.0 ** -24 / math.sqrt(3.0)

    def test_eps_halves_per_extra_bit(self):
        assert PrecisionContext(11).eps == PrecisionContext(10).eps / 2

    @pytest.mark.parametrize("bits", [0, 53, -1])
    def test_rejects_bad_width(self, bits):
        with pytest.raises(ValidationError):
            PrecisionContext(bits)

    def test_presets(self):
        assert PrecisionContext.preset('half').mantissa_bits == 10
        assert PrecisionContext.preset('bfloat16').mantissa_bits == 7
        assert PrecisionContext.preset('single').mantissa_bits == 23
        assert PrecisionContext.preset('working').is_working
        assert PrecisionContext.preset('half', clamp=True).exponent_range is ExponentRange.IEEE_BINARY16

    def test_preset_errors(self):
        with pytest.raises(ValidationError):
            PrecisionContext.preset('quad')
        with pytest.raises(ValidationError):
            PrecisionContext.preset('single', clamp=True)

    def test_binary16_max_finite(self, half_clamped):
        assert half_clamped.max_finite == 65504.0
        assert PrecisionContext(10).max_finite == math.inf


class TestRoundReal:
    def test_below_half_ulp_rounds_down(self, half):
        assert round_real(1 + 2.0 ** -12, half) == 1.0

    def test_ties_go_to_even(self, half):
        assert round_real(1 + 2.0 ** -11, half) == 1.0
        assert round_real(1 + 3 * 2.0 ** -11, half) == 1 + 2.0 ** -9

    def test_representable_value_is_unchanged(self, half):
        assert round_real(1 + 2.0 ** -10, half) == 1 + 2.0 ** -10

    def test_one_third(self, half):
        assert round_real(1 / 3, half) == 0.333251953125

    def test_sign_and_zero(self, half):
        assert round_real(-1 / 3, half) == -0.333251953125
        assert round_real(0.0, half) == 0.0

    def test_unbounded_range_keeps_huge_exponents(self, half):
        assert round_real(3.0 * 2.0 ** 200, half) == 3.0 * 2.0 ** 200

    def test_working_precision_is_identity(self, working):
        x = np.array([1 / 3, math.pi, 1e-300])
        assert_array_equal(round_array(x, working), x)


class TestBinary16Clamp:
    def test_max_finite_survives(self, half_clamped):
        assert round_real(65504.0, half_clamped) == 65504.0
        assert round_real(65519.0, half_clamped) == 65504.0

    @pytest.mark.parametrize("value", [65520.0, 70000.0, -1e6])
    def test_overflow_raises(self, half_clamped, value):
        with pytest.raises(LowPrecisionOverflow):
            round_real(value, half_clamped)

    def test_subnormal_grid(self, half_clamped):
        assert round_real(2.0 ** -20, half_clamped) == 2.0 ** -20
        assert round_real(3 * 2.0 ** -26, half_clamped) == 2.0 ** -24
        assert round_real(2.0 ** -26, half_clamped) == 0.0

    def test_unbounded_does_not_flush(self, half):
        assert round_real(2.0 ** -26, half) == 2.0 ** -26


class TestScalarOps:
    def test_add_sub_mul(self, half):
        assert lp_add(1.0, 2.0 ** -12, half) == 1.0
        # 1 - 2^-12 is a tie between 1 - 2^-11 and 1
        assert lp_sub(1.0, 2.0 ** -12, half) == 1.0
        assert lp_mul(3.0, 5.0, half) == 15.0

    def test_sqrt_two(self, half):
        assert lp_sqrt(2.0, half) == 1.4140625

    def test_div_one_third(self, half):
        assert lp_div(1.0, 3.0, half) == 0.333251953125

    def test_domain_errors(self, half):
        with pytest.raises(DomainError):
            lp_sqrt(-1.0, half)
        with pytest.raises(DomainError):
            lp_div(1.0, 0.0, half)
        with pytest.raises(DomainError):
            cdiv_real(np.array([1 + 1j]), 0.0, half)


class TestComplexMultiplyAccumulate:
    def test_exact_product(self, half):
        assert lp_cmul_acc(0j, 1 + 0j, 1 + 0j, half) == 1 + 0j

    def test_single_product_rounding_without_fma(self):
        ctx = PrecisionContext(10, fma=False)
        assert lp_cmul_acc(0j, 1 + 0j, complex(1 / 3, 0), ctx) == complex(0.333251953125, 0)

    @pytest.mark.parametrize("fma", [True, False])
    def test_conjugates_first_argument(self, fma):
        ctx = PrecisionContext(10, fma=fma)
        assert lp_cmul_acc(1 + 0j, 1j, 1j, ctx) == 2 + 0j

    def test_fma_and_plain_models_differ_somewhere(self, rng, half):
        a = quantize(rng.standard_normal(2000) + 1j * rng.standard_normal(2000), half)
        b = quantize(rng.standard_normal(2000) + 1j * rng.standard_normal(2000), half)
        acc = quantize(rng.standard_normal(2000) + 1j * rng.standard_normal(2000), half)
        fused = cmul_acc(acc, a, b, half)
        plain = cmul_acc(acc, a, b, PrecisionContext(10, fma=False))
        assert np.any(fused != plain)
        # both stay close to the exact value
        exact = acc + a.conj() * b
        scale = np.abs(acc) + np.abs(a) * np.abs(b)
        assert np.all(np.abs(fused - exact) <= 4 * half.u * scale)
        assert np.all(np.abs(plain - exact) <= 6 * half.u * scale)

    def test_fused_keeps_product_residual(self, half):
        x = 1 + 2.0 ** -10
        product = round_real(x * x, half)
        assert product == 1 + 2.0 ** -9
        fused = lp_cmul_acc(complex(-product, 0), complex(x, 0), complex(x, 0), half)
        plain = lp_cmul_acc(complex(-product, 0), complex(x, 0), complex(x, 0), PrecisionContext(10, fma=False))
        assert fused == complex(2.0 ** -20, 0)
        assert plain == 0j

    def test_unfused_error_not_below_fused(self, rng, half):
        count = 20_000
        a = quantize(rng.standard_normal(count) + 1j * rng.standard_normal(count), half)
        b = quantize(rng.standard_normal(count) + 1j * rng.standard_normal(count), half)
        exact = a.conj() * b

        def rms_error(ctx):
            return math.sqrt(np.mean(np.abs(cmul_acc(np.zeros(count), a, b, ctx) - exact) ** 2))

        assert rms_error(PrecisionContext(10, fma=False)) >= 1.05 * rms_error(half)

    def test_results_are_representable(self, rng, half):
        z = cmul_acc(0.1 + 0.2j, 0.3 - 0.7j, 1.1 + 0.4j, half)
        assert_array_equal(round_complex(z, half), z)


class TestRoundingProperties:
    @pytest.mark.parametrize("bits", [5, 8, 10, 23])
    def test_idempotent_monotone_and_bounded(self, rng, bits):
        ctx = PrecisionContext(bits)
        x = np.sort(_random_normals(rng, 20_000))
        r = round_array(x, ctx)
        assert_array_equal(round_array(r, ctx), r)
        assert np.all(np.diff(r) >= 0.0)
        assert np.max(np.abs(r - x) / np.abs(x)) <= ctx.u

    @pytest.mark.parametrize("bits", [5, 8, 10, 23])
    def test_short_significands_are_exact(self, rng, bits):
        ctx = PrecisionContext(bits)
        x = np.ldexp(rng.integers(2 ** bits, 2 ** (bits + 1), 1000).astype(float), rng.integers(-40, 10, 1000))
        assert_array_equal(round_array(x, ctx), x)

    @pytest.mark.parametrize("bits", [5, 10, 23])
    def test_rms_rounding_error_matches_eps(self, rng, bits):
        ctx = PrecisionContext(bits)
        x = _random_normals(rng, 100_000)
        err = round_array(x, ctx) - x
        binade = np.ldexp(1.0, np.frexp(x)[1] - 1)
        rms_binade = math.sqrt(math.fsum((err / binade) ** 2) / x.size)
        rms_relative = math.sqrt(math.fsum((err / x) ** 2) / x.size)
        assert abs(rms_binade / ctx.eps - 1.0) <= 0.05
        assert rms_relative <= ctx.eps

    @pytest.mark.slow
    @pytest.mark.parametrize("bits", [5, 8, 10, 23])
    def test_million_sample_fuzz(self, bits):
        ctx = PrecisionContext(bits)
        gen = np.random.default_rng(bits)
        x = np.sort(_random_normals(gen, 1_000_000))
        r = round_array(x, ctx)
        assert_array_equal(round_array(r, ctx), r)
        assert np.all(np.diff(r) >= 0.0)
        assert np.max(np.abs(r - x) / np.abs(x)) <= ctx.u
        binade = np.ldexp(1.0, np.frexp(x)[1] - 1)
        assert abs(math.sqrt(math.fsum(((r - x) / binade) ** 2) / x.size) / ctx.eps - 1.0) <= 0.05


def test_quantize_returns_a_copy(half):
    a = np.array([[1 / 3 + 1j / 7]])
    q = quantize(a, half)
    q[0, 0] = 0
    assert a[0, 0] == 1 / 3 + 1j / 7
