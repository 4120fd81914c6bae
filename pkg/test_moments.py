"""中心化分解、精确矩展开、全支撑枚举与矩引理上界。"""
import math
from fractions import Fraction

import numpy as np
import pytest

from polytail.errors import NonFiniteSupport, ParameterError
from polytail.moments import (
    MarkovParameters,
    best_even_k,
    center,
    central_moment,
    elementary_second_moment,
    enumerate_oracle,
    enumerate_outcomes,
    even_k_star,
    exact_moment_expansion,
    initial_moment_bound,
    markov_optimize,
    markov_parameters,
    moment_lemma_bound,
    reconstruct,
    sum_moment_check,
    uncentered_moment_bound,
)
from polytail.poly import PoweredHyperedge, PoweredPolynomial, complete_multilinear, evaluate, linear, product
from polytail.rv import bernoulli, exponential, finite_support, rademacher
from polytail.settings import BUDGETS
from polytail.smoothness import mu_profile


def _pair(dist):
    return PoweredPolynomial(2, [(PoweredHyperedge((0, 1), (1, 1)), 1.0)]), [dist] * 2


class TestCenter:
    def test_constant_is_expectation(self):
        poly, dists = _pair(bernoulli(0.5))
        decomp = center(poly, dists)
        assert decomp.constant == pytest.approx(0.25)

    def test_components_grouped_by_size_and_sign(self):
        poly = linear(3, [1.0, -2.0, 3.0])
        decomp = center(poly, [bernoulli(0.5)] * 3)
        keys = [(c.eta, c.q, c.sign) for c in decomp.components]
        assert keys == [(1, 1, -1), (1, 1, 1)]
        assert decomp.m == 2

    def test_reconstruct_matches_evaluate(self, powered_example):
        dists = [finite_support([(0.0, 0.25), (1.0, 0.25), (2.0, 0.5)])] * 2
        decomp = center(powered_example, dists)
        for point in ([0.0, 0.0], [1.0, 2.0], [2.0, 1.0]):
            assert reconstruct(decomp, point) == pytest.approx(evaluate(powered_example, point))

    def test_exact_mode_is_rational(self):
        poly, dists = _pair(bernoulli(0.5))
        decomp = center(poly, dists, exact=True)
        assert decomp.constant == Fraction(1, 4)


class TestExpansion:
    def test_sum_of_bernoullis(self):
        poly = linear(2)
        dists = [bernoulli(0.5)] * 2
        assert exact_moment_expansion(poly, dists, 2) == pytest.approx(1.5)
        assert enumerate_outcomes(poly, dists).tail(1.0) == pytest.approx(0.5)

    def test_rademacher_product(self):
        poly, dists = _pair(rademacher())
        assert exact_moment_expansion(poly, dists, 2) == 1.0

    def test_zeroth_moment(self, powered_example):
        assert exact_moment_expansion(powered_example, [exponential(1.0)] * 2, 0) == 1.0

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_profile_and_naive_agree(self, k, powered_example):
        dists = [finite_support([(-1.0, 0.3), (2.0, 0.7)])] * 2
        profile = exact_moment_expansion(powered_example, dists, k, method="profile", exact=True)
        naive = exact_moment_expansion(powered_example, dists, k, method="naive", exact=True)
        assert profile == naive

    def test_matches_enumeration_exactly(self):
        poly = complete_multilinear(4, 2)
        dists = [bernoulli(0.25)] * 4
        table = enumerate_outcomes(poly, dists, exact=True)
        for k in (1, 2, 3):
            assert exact_moment_expansion(poly, dists, k, exact=True) == table.raw_moment(k)
        assert central_moment(poly, dists, 4, exact=True) == table.abs_central_moment(4)

    def test_continuous_distributions(self):
        # Var(X₀X₁)，X ~ Exp(1)：E[X²]² − E[X]⁴ = 4 − 1
        poly, dists = _pair(exponential(1.0))
        assert central_moment(poly, dists, 2) == pytest.approx(3.0)

    def test_odd_central_moment_rejected(self):
        with pytest.raises(ParameterError):
            central_moment(linear(2), [bernoulli(0.5)] * 2, 3)

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            exact_moment_expansion(linear(2), [bernoulli(0.5)] * 2, 2, method="fft")


class TestOracle:
    def test_oracle_values(self):
        result = enumerate_oracle(linear(2), [bernoulli(0.5)] * 2, 2, 1.0, exact=True)
        assert result.mean == 1
        assert result.moment == Fraction(3, 2)
        assert result.central_moment == Fraction(1, 2)
        assert result.tail_two_sided == Fraction(1, 2)

    def test_upper_tail(self):
        table = enumerate_outcomes(linear(3), [bernoulli(0.5)] * 3)
        assert table.tail(1.5, direction="upper") == pytest.approx(0.125)

    def test_non_finite_support(self):
        with pytest.raises(NonFiniteSupport):
            enumerate_outcomes(linear(2), [exponential(1.0)] * 2)

    def test_markov_inequality_dominates_tail(self):
        poly = complete_multilinear(5, 2)
        table = enumerate_outcomes(poly, [bernoulli(0.3)] * 5)
        for k in (2, 4, 6):
            for lam in (0.5, 1.0, 2.0, 4.0):
                assert table.tail(lam) <= table.abs_central_moment(k) / lam**k + 1e-12


class TestMomentInequalities:
    def test_sum_moment_check(self):
        poly = linear(3, [1.0, -2.0, 0.5])
        decomp = center(poly, [bernoulli(0.4)] * 3)
        lhs, rhs = sum_moment_check(decomp, [bernoulli(0.4)] * 3, 4)
        assert lhs <= rhs * (1 + 1e-12)

    def test_elementary_second_moment(self):
        out = elementary_second_moment(complete_multilinear(4, 2), [rademacher()] * 4)
        assert out["variance"] == pytest.approx(6.0)
        assert out["bound"] == pytest.approx(24.0)

    def test_elementary_second_moment_needs_zero_mean(self):
        with pytest.raises(ParameterError):
            elementary_second_moment(complete_multilinear(4, 2), [bernoulli(0.5)] * 4)


class TestLemmaBounds:
    @pytest.mark.parametrize("R", [1.0, 2.0, 4.0])
    def test_degree_one_closed_form(self, R):
        value = moment_lemma_bound(1, 1.0, 1.0, [1.0, 1.0], 2, constant=R)
        assert value == pytest.approx(math.log(max(2 * R, 4 * R * R)))

    def test_rejects_odd_k(self):
        with pytest.raises(ParameterError):
            moment_lemma_bound(1, 1.0, 1.0, [1.0, 1.0], 3)

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_lemma_dominates_exact_moment(self, k):
        poly = product(linear(2, [1.0, -1.0]), complete_multilinear(3, 2))
        dists = [bernoulli(0.5)] * poly.n
        profile = mu_profile(poly, dists)
        log_bound = moment_lemma_bound(poly.q, float(poly.gamma), 1.0, profile, k, constant=4.0)
        assert math.log(central_moment(poly, dists, k)) <= log_bound

    def test_gamma_variant_dominates(self, powered_example):
        dists = [rademacher()] * 2
        profile = mu_profile(powered_example, dists)
        log_bound = moment_lemma_bound(powered_example.q, 3.0, 1.0, profile, 4, variant="gamma_variant", constant=4.0)
        assert math.log(central_moment(powered_example, dists, 4)) <= log_bound

    def test_initial_and_uncentered_bounds(self):
        poly = complete_multilinear(4, 2)
        dists = [bernoulli(0.5)] * 4
        profile = mu_profile(poly, dists)
        assert math.log(central_moment(poly, dists, 2)) <= initial_moment_bound(2, 1.0, 1.0, profile, 2, 4.0)
        assert math.log(exact_moment_expansion(poly, dists, 4)) <= uncentered_moment_bound(2, 1.0, profile, 4, 4.0)


class TestMarkov:
    @pytest.mark.parametrize("K,expected", [(7.3, 6), (2.0, 2), (1.2, 2), (8.0, 8)])
    def test_even_k_star(self, K, expected):
        assert even_k_star(K) == expected

    def test_bound_is_probability(self):
        params = markov_parameters(complete_multilinear(5, 2), [bernoulli(0.5)] * 5, 4.0)
        for lam in (0.1, 1.0, 10.0, 1e4):
            result = markov_optimize(params, lam)
            assert result.log_bound <= 0.0
            assert result.k_star >= 2 and result.k_star % 2 == 0

    def test_large_deviation_decays(self):
        params = MarkovParameters(1, 1.0, 1.0, (10.0, 1.0), "general", 4.0)
        small = markov_optimize(params, 1e3)
        large = markov_optimize(params, 1e5)
        assert large.log_bound < small.log_bound < 0.0

    def test_nonincreasing_on_fine_grid(self):
        params = MarkovParameters(2, 1.0, 1.0, (6.0, 3.0, 1.0), "general", 4.0)
        bounds = [markov_optimize(params, lam).log_bound for lam in np.geomspace(1e2, 1e5, 2000)]
        assert all(b <= a + 1e-12 for a, b in zip(bounds, bounds[1:]))

    def test_k_star_attains_reported_bound(self):
        params = MarkovParameters(2, 1.0, 1.0, (6.0, 3.0, 1.0), "general", 4.0)
        lam = 3e3
        result = markov_optimize(params, lam)
        lemma = moment_lemma_bound(2, 1.0, 1.0, [6.0, 3.0, 1.0], result.k_star, constant=4.0)
        assert result.log_bound == pytest.approx(min(0.0, lemma - result.k_star * math.log(lam)))
        for k in range(2, result.k_star, 2):
            other = moment_lemma_bound(2, 1.0, 1.0, [6.0, 3.0, 1.0], k, constant=4.0)
            assert other - k * math.log(lam) >= result.log_bound - 1e-9

    def test_best_even_k_truncates_at_budget(self, monkeypatch):
        monkeypatch.setitem(BUDGETS, "markov_k", 6)
        k, value = best_even_k(lambda ks: np.zeros(len(ks)), 100, 1.0)
        assert k == 6 and value == pytest.approx(-6.0)

    def test_best_even_k_extra_candidate(self):
        k, _ = best_even_k(lambda ks: np.zeros(len(ks)), 2, 1.0, extra=(3,))
        assert k == 3

    def test_zero_profile(self):
        result = markov_optimize(MarkovParameters(1, 1.0, 1.0, (0.0, 0.0)), 1.0)
        assert result.log_bound == -math.inf

    def test_lambda_must_be_positive(self):
        with pytest.raises(ParameterError):
            markov_optimize(MarkovParameters(1, 1.0, 1.0, (1.0, 1.0)), 0.0)
