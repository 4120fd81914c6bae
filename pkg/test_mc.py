"""蒙特卡洛估计与 Ryser 积和式：可复现性、置信区间与精确值核对。"""
import math

import numpy as np
import pytest

from polytail.errors import DimensionMismatch, ParameterError, SizeLimit
from polytail.mc import (
    build_matrix,
    clopper_pearson,
    estimate_moment,
    estimate_tail,
    permanent_sample,
    permanent_tail_table,
    ryser,
    sample_matrix,
)
from polytail.moments import enumerate_outcomes
from polytail.poly import complete_multilinear, evaluate, linear, matrix_variables, permanent_poly
from polytail.rv import bernoulli, exponential, rademacher


class TestRyser:
    def test_small_matrices(self):
        assert ryser(np.array([[1.0, 2.0], [3.0, 4.0]])) == pytest.approx(10.0)
        assert ryser(np.ones((3, 3))) == pytest.approx(6.0)
        assert ryser(np.eye(5)) == pytest.approx(1.0)

    def test_gray_code_columns(self):
        assert ryser(np.ones((13, 13))) == pytest.approx(float(math.factorial(13)), rel=1e-6)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_matches_polynomial_form(self, n, rng):
        a = rng.normal(size=(n, n))
        assert ryser(a) == pytest.approx(evaluate(permanent_poly(n), matrix_variables(a, False)))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_symmetric_matches_polynomial_form(self, n, rng):
        entries = rng.normal(size=n * (n + 1) // 2)
        assert ryser(build_matrix(entries, n, True)) == pytest.approx(evaluate(permanent_poly(n, True), entries))

    def test_requires_square(self):
        with pytest.raises(DimensionMismatch):
            ryser(np.ones((2, 3)))

    def test_second_moment_of_rademacher_permanent(self):
        table = enumerate_outcomes(permanent_poly(3), [rademacher()] * 9)
        assert table.raw_moment(2) == pytest.approx(6.0)


class TestSampling:
    def test_chunk_split_invariance(self):
        dists = [bernoulli(0.3), exponential(2.0), rademacher()]
        whole = sample_matrix(dists, 9, 0, 10)
        parts = np.vstack([sample_matrix(dists, 9, 0, 4), sample_matrix(dists, 9, 4, 6)])
        np.testing.assert_array_equal(whole, parts)

    def test_column_distributions(self):
        samples = sample_matrix([bernoulli(1.0), rademacher()], 1, 0, 100)
        assert (samples[:, 0] == 1.0).all()
        assert set(np.unique(samples[:, 1])) <= {-1.0, 1.0}


class TestEstimates:
    def test_deterministic_tail(self, rademacher_pair):
        poly, dists = rademacher_pair
        est = estimate_tail(poly, dists, 0.5, 1000, seed=3)
        assert est.p_hat == 1.0
        assert est.ci_high == 1.0

    def test_thread_count_invariance(self):
        poly, dists = complete_multilinear(5, 2), [bernoulli(0.4)] * 5
        single = estimate_tail(poly, dists, 1.0, 10000, seed=17, threads=1)
        multi = estimate_tail(poly, dists, 1.0, 10000, seed=17, threads=4)
        assert single == multi

    def test_estimate_close_to_exact(self):
        poly, dists = linear(6), [bernoulli(0.5)] * 6
        exact = enumerate_outcomes(poly, dists).tail(2.0)
        est = estimate_tail(poly, dists, 2.0, 20000, seed=5, confidence=0.999999)
        assert est.ci_low <= exact <= est.ci_high

    def test_upper_direction(self):
        poly, dists = linear(1), [bernoulli(0.5)]
        est = estimate_tail(poly, dists, 0.5, 4000, seed=2, direction="upper")
        assert abs(est.p_hat - 0.5) < 0.05

    def test_unknown_direction(self, rademacher_pair):
        poly, dists = rademacher_pair
        with pytest.raises(ParameterError):
            estimate_tail(poly, dists, 0.5, 10, seed=1, direction="lower")

    def test_moment_of_constant_magnitude(self, rademacher_pair):
        poly, dists = rademacher_pair
        est = estimate_moment(poly, dists, 2, 5000, seed=4)
        assert est.value == 1.0 and est.stderr == 0.0

    def test_central_moment_estimate(self):
        poly, dists = linear(2), [exponential(1.0)] * 2
        est = estimate_moment(poly, dists, 2, 200000, seed=8, central=True)
        assert est.value == pytest.approx(2.0, abs=5 * est.stderr + 1e-9)

    def test_clopper_pearson(self):
        low, high = clopper_pearson(0, 100, 0.95)
        assert low == 0.0 and 0.0 < high < 0.05
        low, high = clopper_pearson(50, 100, 0.95)
        assert low < 0.5 < high


class TestPermanentSampling:
    def test_reproducible(self):
        a = permanent_sample(4, rademacher(), False, 11, 500, threads=1)
        b = permanent_sample(4, rademacher(), False, 11, 500, threads=3)
        np.testing.assert_array_equal(a, b)

    def test_table_columns_and_bound(self):
        df = permanent_tail_table(5, rademacher(), False, 2000, [0.5, 1.0, 2.0], seed=6)
        assert list(df.columns) == ["t", "lambda", "p_hat", "ci_low", "ci_high", "bound"]
        assert (df["bound"] >= df["p_hat"]).all()

    def test_symmetric_entries(self):
        values = permanent_sample(3, bernoulli(1.0), True, 1, 3)
        np.testing.assert_allclose(values, 6.0)

    def test_size_limit(self):
        with pytest.raises(SizeLimit):
            permanent_sample(1000, rademacher(), False, 1, 1)
