"""
Software emulation of low-precision floating point on top of binary64.

Values are always carried as numpy float64/complex128; a PrecisionContext
decides how every result is rounded. Rounding keeps `mantissa_bits` stored
fraction bits (plus the implicit leading one) with ties to even.

All functions here are pure. Array versions broadcast like numpy ufuncs and
are what the pipeline uses; the scalar `lp_*` functions wrap them.

Products of two representable numbers are exact in binary64 for
mantissa_bits <= 25, so a binary64 operation followed by one rounding is a
correctly rounded low-precision operation there (double rounding through
binary64 is innocuous for +, -, *, / and sqrt at those widths).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from errors import DomainError, LowPrecisionOverflow, ValidationError

ArrayLike = Union[float, complex, np.ndarray]

WORKING_MANTISSA_BITS = 52

# IEEE binary16 exponent range
BINARY16_EMAX = 15
BINARY16_EMIN = -14


class Rounding(Enum):
    NEAREST_EVEN = "nearest-even"


class ExponentRange(Enum):
    UNBOUNDED = "unbounded"
    IEEE_BINARY16 = "ieee-binary16"


@dataclass(frozen=True)
class PrecisionContext:
    """
    Governs every emulated operation.

    Attributes:
        mantissa_bits: Stored fraction bits b (1..52)
        rounding: Rounding mode (round to nearest, ties to even)
        fma: Whether multiply-accumulate is fused (one rounding) or not
        exponent_range: UNBOUNDED rounds the significand only; IEEE_BINARY16
            adds the binary16 exponent range (subnormals, overflow error)
    """
    mantissa_bits: int = 10
    rounding: Rounding = Rounding.NEAREST_EVEN
    fma: bool = True
    exponent_range: ExponentRange = ExponentRange.UNBOUNDED

    def __post_init__(self):
        if not 1 <= int(self.mantissa_bits) <= WORKING_MANTISSA_BITS:
            raise ValidationError(
                f"mantissa_bits must be in 1..{WORKING_MANTISSA_BITS}, got {self.mantissa_bits}"
            )

    @property
    def u(self) -> float:
        """Unit round-off 2^(-b-1)"""
        return math.ldexp(1.0, -self.mantissa_bits - 1)

    @property
    def eps(self) -> float:
        """Scaled precision u/sqrt(3), the RMS relative rounding error"""
        return self.u / math.sqrt(3.0)

    @property
    def is_working(self) -> bool:
        return self.mantissa_bits >= WORKING_MANTISSA_BITS and self.exponent_range is ExponentRange.UNBOUNDED

    @property
    def max_finite(self) -> float:
        if self.exponent_range is ExponentRange.IEEE_BINARY16:
            return math.ldexp(2.0 - math.ldexp(1.0, -self.mantissa_bits), BINARY16_EMAX)
        return math.inf

    def describe(self) -> str:
        return (f"b={self.mantissa_bits} ({self.exponent_range.value}, "
                f"{'fma' if self.fma else 'no-fma'}), u={self.u:.6e}, eps={self.eps:.6e}")

    @classmethod
    def preset(cls, name: str, fma: bool = True, clamp: bool = False) -> "PrecisionContext":
        """
        Named formats: half (b=10), bfloat16 (b=7), single (b=23), working (b=52).
        `clamp` selects the binary16 exponent range and is only valid for half.
        """
        key = name.strip().lower()
        if key not in PRECISION_PRESETS:
            raise ValidationError(f"Unknown precision '{name}' (expected one of {sorted(PRECISION_PRESETS)})")
        if clamp and key != 'half':
            raise ValidationError("The binary16 exponent clamp is only available for the 'half' preset")
        exponent_range = ExponentRange.IEEE_BINARY16 if clamp else ExponentRange.UNBOUNDED
        return cls(PRECISION_PRESETS[key], Rounding.NEAREST_EVEN, fma, exponent_range)


PRECISION_PRESETS = {
    'half': 10,
    'bfloat16': 7,
    'single': 23,
    'working': WORKING_MANTISSA_BITS,
}

WORKING = PrecisionContext(WORKING_MANTISSA_BITS)


def round_array(x: ArrayLike, ctx: PrecisionContext) -> np.ndarray:
    """
    Round real values to the nearest representable value under ctx.

    Raises:
        LowPrecisionOverflow: binary16 range and a result above the max finite value
    """
    x = np.asarray(x, dtype=np.float64)
    if ctx.is_working:
        return x

    bits = ctx.mantissa_bits + 1
    m, e = np.frexp(x)  # x = m * 2**e, 0.5 <= |m| < 1
    r = np.ldexp(np.rint(np.ldexp(m, bits)), e - bits)

    if ctx.exponent_range is ExponentRange.IEEE_BINARY16:
        tiny = np.abs(x) < math.ldexp(1.0, BINARY16_EMIN)
        if np.any(tiny):
            # fixed subnormal grid below the smallest normal number
            quantum_exp = BINARY16_EMIN - ctx.mantissa_bits
            r = np.where(tiny, np.ldexp(np.rint(np.ldexp(x, -quantum_exp)), quantum_exp), r)
        if np.any(np.abs(r) > ctx.max_finite):
            raise LowPrecisionOverflow(
                f"Value {float(np.max(np.abs(x)))!r} overflows binary16 (max {ctx.max_finite!r})"
            )

    return r


def round_complex(z: ArrayLike, ctx: PrecisionContext) -> np.ndarray:
    """Round real and imaginary parts independently"""
    z = np.asarray(z, dtype=np.complex128)
    if ctx.is_working:
        return z
    flat = np.ascontiguousarray(np.atleast_1d(z)).ravel()
    parts = round_array(flat.view(np.float64), ctx)
    return parts.view(np.complex128).reshape(z.shape)


def quantize(a: ArrayLike, ctx: PrecisionContext) -> np.ndarray:
    """Convert a working-precision matrix into ctx (storage rounding)"""
    return round_complex(a, ctx).copy()


def _pack(re: ArrayLike, im: ArrayLike) -> np.ndarray:
    re, im = np.broadcast_arrays(np.asarray(re, dtype=np.float64), np.asarray(im, dtype=np.float64))
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out


def cmul_acc(acc: ArrayLike, a: ArrayLike, b: ArrayLike, ctx: PrecisionContext) -> np.ndarray:
    """
    Elementwise acc + conj(a) * b under ctx.

    With FMA each real multiply-accumulate is rounded once (four roundings of
    the running real/imaginary parts). Without FMA the same four
    accumulations are made, but each real product is rounded before it is
    added, so the unfused result carries every FMA rounding plus one per
    product.
    """
    acc = np.asarray(acc, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    ar, ai = a.real, a.imag
    br, bi = b.real, b.imag

    # conj(a) * b = (ar*br + ai*bi) + i (ar*bi - ai*br)
    if ctx.fma:
        t = round_complex(_pack(acc.real + ar * br, acc.imag + ar * bi), ctx)
        return round_complex(_pack(t.real + ai * bi, t.imag - ai * br), ctx)

    p = round_complex(_pack(ar * br, ar * bi), ctx)
    q = round_complex(_pack(ai * bi, ai * br), ctx)
    t = round_complex(_pack(acc.real + p.real, acc.imag + p.imag), ctx)
    return round_complex(_pack(t.real + q.real, t.imag - q.imag), ctx)


def cdiv_real(z: ArrayLike, d: ArrayLike, ctx: PrecisionContext) -> np.ndarray:
    """Complex values divided by a real divisor, each component rounded once"""
    z = np.asarray(z, dtype=np.complex128)
    d = np.asarray(d, dtype=np.float64)
    if np.any(d == 0.0):
        raise DomainError("Division by zero")
    return round_complex(_pack(z.real / d, z.imag / d), ctx)


# Scalar operations

def round_real(x: float, ctx: PrecisionContext) -> float:
    return float(round_array(x, ctx))


def lp_add(x: float, y: float, ctx: PrecisionContext) -> float:
    return round_real(x + y, ctx)


def lp_sub(x: float, y: float, ctx: PrecisionContext) -> float:
    return round_real(x - y, ctx)


def lp_mul(x: float, y: float, ctx: PrecisionContext) -> float:
    return round_real(x * y, ctx)


def lp_div(x: float, y: float, ctx: PrecisionContext) -> float:
    if y == 0.0:
        raise DomainError(f"Division of {x!r} by zero")
    return round_real(x / y, ctx)


def lp_sqrt(x: float, ctx: PrecisionContext) -> float:
    if x < 0.0:
        raise DomainError(f"Square root of negative value {x!r}")
    return round_real(math.sqrt(x), ctx)


def lp_cmul_acc(acc: complex, a: complex, b: complex, ctx: PrecisionContext) -> complex:
    return complex(cmul_acc(acc, a, b, ctx))
