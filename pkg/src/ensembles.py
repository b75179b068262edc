"""
Reproducible random matrices and vectors.

Every draw comes from an RngStream: a (seed, stream_id) pair feeding numpy's
counter-based Philox generator through a SeedSequence spawn key. Streams are
plain values, so a sweep can hand (seed, point, trial) to any worker and get
the same numbers on any platform and with any number of workers.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from dense_complex import CMatrix
from errors import ValidationError


@dataclass(frozen=True)
class RngStream:
    seed: int = 0
    stream_id: Tuple[int, ...] = ()

    def spawn(self, *index: int) -> "RngStream":
        """Child stream, independent of its siblings and its parent"""
        return RngStream(self.seed, self.stream_id + tuple(int(i) for i in index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.seed) & (2 ** 64 - 1), spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class RandsvdSpec:
    """
    RANDSVD ensemble descriptor.

    With `singular_values` unset the spectrum is geometric:
    sigma_j = cond^(-(j-1)/(n-1)), j = 1..n, n = min(rows, cols).
    """
    rows: int
    cols: int
    cond: float = 1.0
    singular_values: Optional[Tuple[float, ...]] = field(default=None)
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(f"RANDSVD dimensions must be positive, got {self.rows}x{self.cols}")
        if not self.cond >= 1.0:
            raise ValidationError(f"RANDSVD condition number must be >= 1, got {self.cond}")
        if self.singular_values is not None:
            sv = np.asarray(self.singular_values, dtype=np.float64)
            if sv.shape != (min(self.rows, self.cols),):
                raise ValidationError(
                    f"Expected {min(self.rows, self.cols)} singular values, got {sv.size}"
                )
            if np.any(sv <= 0.0) or np.any(np.diff(sv) > 0.0):
                raise ValidationError("Explicit singular values must be positive and non-increasing")

    def spectrum(self) -> np.ndarray:
        n = min(self.rows, self.cols)
        if self.singular_values is not None:
            return np.asarray(self.singular_values, dtype=np.float64)
        if n == 1:
            return np.ones(1)
        sigma = self.cond ** (-np.arange(n) / (n - 1))
        # pin the last value so sigma_1 / sigma_n is exactly cond
        sigma[-1] = 1.0 / self.cond
        return sigma


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ValidationError(f"Expected an RngStream or numpy Generator, got {type(rng).__name__}")


def complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex Gaussian entries, E|z|^2 = 1"""
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / math.sqrt(2.0)


def haar_unitary(n: int, rng) -> CMatrix:
    """
    Haar-distributed n x n unitary: QR of a complex Gaussian matrix with
    columns rephased so that R has a positive real diagonal.
    """
    if n < 1:
        raise ValidationError(f"Unitary size must be >= 1, got {n}")
    gen = _as_generator(rng)
    q, r = np.linalg.qr(complex_gaussian(gen, (n, n)))
    d = np.diagonal(r)
    phase = d / np.abs(d)
    return q * phase[np.newaxis, :]


def randsvd(spec: RandsvdSpec, rng=None) -> CMatrix:
    """
    H = U diag(sigma) V with U the first min(M, N) columns of a Haar M x M
    unitary and V the first min(M, N) rows of an independent Haar N x N
    unitary. Without `rng` the stream is RngStream(spec.seed).
    """
    gen = _as_generator(rng if rng is not None else RngStream(spec.seed))
    n = min(spec.rows, spec.cols)
    u = haar_unitary(spec.rows, gen)[:, :n]
    v = haar_unitary(spec.cols, gen)[:n, :]
    return (u * spec.spectrum()[np.newaxis, :]) @ v


def random_unit_vector(n: int, rng) -> CMatrix:
    """Uniformly distributed direction in C^n as an n x 1 matrix"""
    if n < 1:
        raise ValidationError(f"Vector length must be >= 1, got {n}")
    gen = _as_generator(rng)
    x = complex_gaussian(gen, (n, 1))
    return x / np.linalg.norm(x)


def random_unit_vectors(n: int, count: int, rng) -> np.ndarray:
    """`count` independent unit vectors as rows of a count x n array"""
    gen = _as_generator(rng)
    x = complex_gaussian(gen, (count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def orthogonal_partner(a: np.ndarray, rng) -> np.ndarray:
    """
    For each row a_i, a random unit vector b_i with a_i^H b_i = 0, built by
    one Gram-Schmidt step (repeated once) in working precision.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    b = random_unit_vectors(a.shape[1], a.shape[0], rng)
    norms2 = np.sum(np.abs(a) ** 2, axis=1, keepdims=True)
    for _ in range(2):
        b = b - a * (np.sum(a.conj() * b, axis=1, keepdims=True) / norms2)
    return b / np.linalg.norm(b, axis=1, keepdims=True)
