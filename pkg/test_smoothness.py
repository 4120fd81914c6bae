"""μ 剖面：精确计算、见证与乘积恒等式。"""
import math

import pytest

from polytail.errors import BudgetExceeded, DimensionMismatch
from polytail.poly import PoweredHyperedge, complete_multilinear, linear, permanent_poly, product
from polytail.rv import bernoulli, exponential, poisson, rademacher
from polytail.settings import BUDGETS
from polytail.smoothness import mu, mu_bruteforce, mu_profile, product_profile


class TestMu:
    def test_exact_power_match(self, powered_example):
        value, witness = mu(powered_example, [bernoulli(0.5)] * 2, 2)
        assert value == 1.0
        assert witness == PoweredHyperedge((1,), (2,))

    def test_mu_zero_is_absolute_expectation(self, powered_example):
        dists = [exponential(1.0)] * 2
        assert mu(powered_example, dists, 0)[0] == pytest.approx(6.0 * 6.0 + 2.0)

    def test_complete_bernoulli(self):
        value, _ = mu(complete_multilinear(4, 2), [bernoulli(0.5)] * 4, 1)
        assert value == pytest.approx(1.5)

    @pytest.mark.parametrize("n,q,p", [(5, 2, 0.3), (6, 3, 0.5), (7, 3, 0.1)])
    def test_complete_closed_form(self, n, q, p):
        profile = mu_profile(complete_multilinear(n, q), [bernoulli(p)] * n)
        for r in range(q + 1):
            assert profile[r] == pytest.approx(math.comb(n - r, q - r) * p ** (q - r))

    def test_top_order_is_max_weight(self):
        poly = linear(3, [1.0, -4.0, 2.0])
        assert mu(poly, [poisson(2.0)] * 3, 1)[0] == 4.0

    def test_witness_tie_is_lexicographic(self):
        _, witness = mu(complete_multilinear(4, 2), [rademacher()] * 4, 1)
        assert witness == PoweredHyperedge((0,), (1,))

    def test_dimension_mismatch(self, powered_example):
        with pytest.raises(DimensionMismatch):
            mu(powered_example, [rademacher()], 1)

    def test_budget(self, monkeypatch):
        monkeypatch.setitem(BUDGETS, "mu_subedges", 10)
        with pytest.raises(BudgetExceeded):
            mu_profile(complete_multilinear(6, 3), [rademacher()] * 6)


class TestBruteForce:
    @pytest.mark.parametrize("poly_factory", [
        lambda: complete_multilinear(5, 3),
        lambda: permanent_poly(2, symmetric=True),
        lambda: product(linear(2, [1.0, -2.0]), complete_multilinear(3, 2)),
    ])
    def test_matches_enumeration_over_all_subedges(self, poly_factory):
        poly = poly_factory()
        dists = [exponential(1.5) if v % 2 else bernoulli(0.4) for v in range(poly.n)]
        profile = mu_profile(poly, dists)
        for r in range(poly.q + 1):
            assert profile[r] == pytest.approx(mu_bruteforce(poly, dists, r))

    def test_powered_example(self, powered_example):
        dists = [poisson(1.0)] * 2
        for r in range(powered_example.q + 1):
            assert mu(powered_example, dists, r)[0] == pytest.approx(mu_bruteforce(powered_example, dists, r))


class TestProduct:
    def test_product_identity(self):
        f = complete_multilinear(4, 2, scale=0.5)
        g = linear(3, [1.0, 3.0, -2.0])
        df, dg = [bernoulli(0.3)] * 4, [exponential(2.0)] * 3
        expected = product_profile(mu_profile(f, df).values, mu_profile(g, dg).values)
        actual = mu_profile(product(f, g), df + dg).values
        assert list(actual) == pytest.approx(expected)
