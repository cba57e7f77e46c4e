import math

import numpy as np
import pytest

from memchan_lab.numerics import (
    ProbDist,
    coherent_info_bits,
    entropy_rate_estimate,
    find_root_bisect,
    fit_exponential_decay,
    fit_poly_exponential_decay,
    perron_eigen,
    shannon_entropy,
)


def binary_entropy(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


class TestProbDist:
    def test_clips_tiny_negatives(self):
        p = ProbDist(np.array([1.0, -1e-13, 1e-13]))
        assert p.values.min() == 0.0

    def test_rejects_real_negatives(self):
        with pytest.raises(ValueError):
            ProbDist(np.array([1.1, -0.1]))

    def test_rejects_bad_normalization(self):
        with pytest.raises(ValueError):
            ProbDist(np.array([0.5, 0.4]))

    def test_random_normalized_vectors_are_valid(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rng.random(rng.integers(1, 40))
            p = ProbDist(v / v.sum())
            assert abs(p.values.sum() - 1.0) < 1e-9


class TestShannonEntropy:
    def test_uniform_four_outcomes(self):
        assert shannon_entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-12)

    def test_point_mass(self):
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_binary_closed_form(self):
        assert shannon_entropy([0.9, 0.1]) == pytest.approx(binary_entropy(0.1), abs=1e-12)

    def test_nats_base(self):
        s = shannon_entropy([0.5, 0.5], base="e")
        assert s == pytest.approx(math.log(2.0), abs=1e-12)

    def test_range_and_product_additivity(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            a = rng.random(rng.integers(2, 9))
            b = rng.random(rng.integers(2, 9))
            a /= a.sum()
            b /= b.sum()
            sa, sb = shannon_entropy(a), shannon_entropy(b)
            assert 0.0 <= sa <= math.log2(a.size) + 1e-12
            prod = np.outer(a, b).ravel()
            assert shannon_entropy(prod) == pytest.approx(sa + sb, abs=1e-10)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            shannon_entropy([0.7, 0.7])


class TestCoherentInfo:
    def test_noiseless(self):
        assert coherent_info_bits(1, 2, 0.0) == 1.0

    def test_fully_dephasing(self):
        assert coherent_info_bits(1, 2, 1.0) == 0.0

    def test_maximal_diagonal_entropy(self):
        assert coherent_info_bits(10, 3, 10 * math.log2(3)) == 0.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            coherent_info_bits(1, 2, 1.5)
        with pytest.raises(ValueError):
            coherent_info_bits(1, 2, -0.5)


class TestEntropyRateEstimate:
    def test_exact_line(self):
        fit = entropy_rate_estimate([(4, 2.0), (6, 3.0), (8, 4.0)])
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)

    def test_shifted_line(self):
        fit = entropy_rate_estimate([(4, 2.3), (6, 3.3), (8, 4.3)])
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(0.3, abs=1e-12)
        assert fit.max_abs_residual < 1e-12

    def test_needs_three_distinct(self):
        with pytest.raises(ValueError):
            entropy_rate_estimate([(4, 2.0), (4, 2.1), (4, 2.2)])


class TestExponentialFit:
    def test_pure_exponential(self):
        pts = [(s, math.exp(-2.0 * s)) for s in (1, 2, 3)]
        fit = fit_exponential_decay(pts)
        assert fit.rate == pytest.approx(-2.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_amplitude(self):
        pts = [(s, 5.0 * math.exp(-0.5 * s)) for s in (1, 2, 3, 4)]
        fit = fit_exponential_decay(pts)
        assert fit.rate == pytest.approx(-0.5, abs=1e-12)
        assert fit.log_amplitude == pytest.approx(math.log(5.0), abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_exponential_decay([(1, 1.0), (2, 0.0), (3, 0.1)])

    def test_poly_exponential(self):
        pts = [(s, 2.0 * s**1.5 * math.exp(-0.7 * s)) for s in (1, 2, 3, 4, 5)]
        fit = fit_poly_exponential_decay(pts)
        assert fit.rate == pytest.approx(-0.7, abs=1e-9)
        assert fit.poly_exponent == pytest.approx(1.5, abs=1e-9)


class TestBisection:
    def test_linear(self):
        res = find_root_bisect(lambda x: x - 1.0, 0.0, 2.0, tol=1e-12)
        assert res.x == pytest.approx(1.0, abs=1e-11)
        assert res.residual <= 1e-12

    def test_sqrt2(self):
        res = find_root_bisect(lambda x: x * x - 2.0, 1.0, 2.0, tol=1e-10)
        assert res.x == pytest.approx(math.sqrt(2.0), abs=1e-9)

    def test_iteration_bound(self):
        for f, a, b in [
            (lambda x: x - 1.0, 0.0, 2.0),
            (lambda x: x * x - 2.0, 1.0, 2.0),
            (
                lambda k: (k + 2) * math.log2(k + 2) + k * math.log2(k) - 2.0,
                1e-6,
                1.0,
            ),
        ]:
            tol = 1e-10
            res = find_root_bisect(f, a, b, tol=tol)
            assert res.iterations <= math.ceil(math.log2((b - a) / tol)) + 2

    def test_no_sign_change(self):
        with pytest.raises(ValueError):
            find_root_bisect(lambda x: x * x + 1.0, -1.0, 1.0)


class TestPerron:
    def test_diag_dominant(self):
        lam, _, _ = perron_eigen(np.array([[2.0, 1e-9], [1e-9, 1.0]]))
        assert lam == pytest.approx(2.0, abs=1e-8)

    def test_column_stochastic(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            d = int(rng.integers(2, 6))
            m = rng.uniform(0.05, 1.0, (d, d))
            m /= m.sum(axis=0, keepdims=True)
            lam, left, right = perron_eigen(m)
            assert lam == pytest.approx(1.0, abs=1e-10)
            assert np.abs(m @ right - lam * right).max() <= 1e-10 * np.abs(m).max()
            assert left @ right == pytest.approx(1.0, abs=1e-10)
            assert lam >= np.abs(np.linalg.eigvals(m)).max() - 1e-10

    def test_symmetric_closed_form(self):
        e = math.e
        lam, left, right = perron_eigen(np.array([[e, 1 / e], [1 / e, e]]))
        assert lam == pytest.approx(e + 1 / e, abs=1e-12)
        assert np.all(right > 0) and np.all(left > 0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            perron_eigen(np.array([[1.0, 0.0], [1.0, 1.0]]))
