import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dense_complex import singular_values
from ensembles import (RandsvdSpec, RngStream, haar_unitary, orthogonal_partner, randsvd, random_unit_vector,
                       random_unit_vectors)
from errors import ValidationError


class TestRngStream:
    def test_same_stream_same_numbers(self):
        a = RngStream(7, (3, 4)).generator().standard_normal(5)
        b = RngStream(7, (3, 4)).generator().standard_normal(5)
        assert_array_equal(a, b)

    def test_siblings_differ(self):
        a = RngStream(7).spawn(0).generator().standard_normal(5)
        b = RngStream(7).spawn(1).generator().standard_normal(5)
        assert not np.array_equal(a, b)

    def test_spawn_extends_stream_id(self):
        assert RngStream(1, (2,)).spawn(3, 4) == RngStream(1, (2, 3, 4))


class TestHaarUnitary:
    def test_scalar_has_unit_modulus(self, stream):
        q = haar_unitary(1, stream)
        assert abs(abs(q[0, 0]) - 1.0) <= 1e-14

    @pytest.mark.parametrize("n", [2, 8, 33])
    def test_unitary(self, stream, n):
        q = haar_unitary(n, stream)
        assert np.linalg.norm(q.conj().T @ q - np.eye(n)) <= 1e-12 * n

    def test_rejects_empty(self, stream):
        with pytest.raises(ValidationError):
            haar_unitary(0, stream)

    def test_first_column_is_rotation_invariant(self, stream):
        n, samples = 8, 4000
        gen = stream.generator()
        cols = np.array([haar_unitary(n, gen)[:, 0] for _ in range(samples)])
        # mean of q_1 is zero
        stderr = np.sqrt(np.mean(np.abs(cols) ** 2, axis=0) / samples)
        assert np.all(np.abs(cols.mean(axis=0)) <= 4 * stderr)
        # |q_i1|^2 equal across i, each 1/n
        power = np.abs(cols) ** 2
        power_err = power.std(axis=0, ddof=1) / math.sqrt(samples)
        assert np.all(np.abs(power.mean(axis=0) - 1.0 / n) <= 4 * power_err)

    @pytest.mark.slow
    def test_marginal_power(self, stream):
        gen = stream.generator()
        values = np.array([abs(haar_unitary(16, gen)[0, 0]) ** 2 for _ in range(10_000)])
        assert abs(values.mean() - 1 / 16) <= 3 * values.std(ddof=1) / math.sqrt(values.size)


class TestRandsvd:
    def test_geometric_spectrum(self):
        sigma = RandsvdSpec(4, 4, cond=100.0).spectrum()
        assert_allclose(sigma, [1.0, 100 ** (-1 / 3), 100 ** (-2 / 3), 1e-2], rtol=1e-15)
        assert sigma[0] / sigma[-1] == 100.0

    def test_unit_condition(self, stream):
        s = singular_values(randsvd(RandsvdSpec(6, 3, cond=1.0), stream))
        assert_allclose(s, np.ones(3), atol=1e-10)

    def test_recovers_spectrum(self, stream):
        s = singular_values(randsvd(RandsvdSpec(4, 4, cond=100.0), stream))
        assert_allclose(s, RandsvdSpec(4, 4, cond=100.0).spectrum(), rtol=1e-8)

    def test_tall_shape(self, stream):
        h = randsvd(RandsvdSpec(64, 12, cond=10.0), stream)
        assert h.shape == (64, 12)
        s = singular_values(h)
        assert s[0] == pytest.approx(1.0, rel=1e-10)
        assert s[-1] == pytest.approx(0.1, rel=1e-8)

    def test_wide_shape(self, stream):
        h = randsvd(RandsvdSpec(3, 7, cond=5.0), stream)
        assert h.shape == (3, 7)
        s = singular_values(h)
        assert s[0] / s[-1] == pytest.approx(5.0, rel=1e-8)

    def test_explicit_spectrum(self, stream):
        spec = RandsvdSpec(5, 3, singular_values=(2.0, 1.0, 0.5))
        assert_allclose(singular_values(randsvd(spec, stream)), [2.0, 1.0, 0.5], rtol=1e-10)

    def test_seed_determinism(self):
        spec = RandsvdSpec(8, 4, cond=10.0, seed=3)
        assert_array_equal(randsvd(spec), randsvd(spec))
        assert not np.array_equal(randsvd(spec), randsvd(RandsvdSpec(8, 4, cond=10.0, seed=4)))

    @pytest.mark.parametrize("kwargs", [
        dict(rows=0, cols=3),
        dict(rows=3, cols=3, cond=0.5),
        dict(rows=3, cols=2, singular_values=(1.0,)),
        dict(rows=3, cols=2, singular_values=(1.0, 2.0)),
        dict(rows=3, cols=2, singular_values=(1.0, 0.0)),
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(ValidationError):
            RandsvdSpec(**kwargs)

    def test_single_column_spectrum(self):
        assert_array_equal(RandsvdSpec(5, 1, cond=10.0).spectrum(), [1.0])


class TestRandomVectors:
    def test_unit_vector(self, stream):
        x = random_unit_vector(12, stream)
        assert x.shape == (12, 1)
        assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-15)

    def test_batch(self, stream):
        x = random_unit_vectors(6, 50, stream)
        assert x.shape == (50, 6)
        assert_allclose(np.linalg.norm(x, axis=1), np.ones(50), atol=1e-15)

    def test_orthogonal_partner(self, stream):
        a = random_unit_vectors(64, 20, stream.spawn(0))
        b = orthogonal_partner(a, stream.spawn(1))
        assert_allclose(np.abs(np.sum(a.conj() * b, axis=1)), np.zeros(20), atol=1e-15)
        assert_allclose(np.linalg.norm(b, axis=1), np.ones(20), atol=1e-15)

    def test_rejects_bad_generator(self):
        with pytest.raises(ValidationError):
            random_unit_vector(3, 42)
