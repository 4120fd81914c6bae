"""下界构造：二项工具、各情形实例与精确尾概率校验。"""
import math

import numpy as np
import pytest

from polytail.errors import BudgetExceeded, ParameterError
from polytail.lowerbounds import (
    BinomialBase,
    _lift_log_sf,
    binom_tail_lb,
    certify,
    check_caps,
    construct_thm_LB,
    dominant_index,
    exact_upper_tail,
    lb_one,
    lb_two,
    lb_two_blocks,
    lift_degree,
    lift_factor_probability,
    log_binom_sf,
    pmf_lower_bound_check,
)
from polytail.moments import enumerate_outcomes
from polytail.poly import expectation
from polytail.settings import BUDGETS


class TestBinomialTools:
    def test_sf_matches_direct_sum(self):
        value = log_binom_sf(3, 5, 0.5)
        assert math.exp(value) == pytest.approx((10 + 5 + 1) / 32)

    def test_sf_edge_cases(self):
        assert log_binom_sf(0, 5, 0.3) == 0.0
        assert log_binom_sf(6, 5, 0.3) == -math.inf

    def test_deep_tail_does_not_underflow(self):
        value = log_binom_sf(900, 1000, 0.01)
        assert math.isfinite(value) and value < -3000

    def test_binomial_tail_lower_bound(self):
        check = binom_tail_lb(27, 27, 100000)
        assert check.holds
        assert -15.0 < check.log_lhs < -11.0

    def test_binomial_tail_needs_large_mean(self):
        with pytest.raises(ParameterError):
            binom_tail_lb(10, 5, 1000)

    @pytest.mark.parametrize("n,p,c", [(100, 0.1, 5), (50, 0.5, 25), (20, 0.05, 0), (30, 0.2, 12)])
    def test_pmf_lower_bound(self, n, p, c):
        assert pmf_lower_bound_check(n, p, c).holds

    @pytest.mark.parametrize("m", [1, 2, 3, 7, 10, 101])
    def test_lift_factor_probability(self, m):
        assert lift_factor_probability(m) >= 0.5


class TestLbOne:
    def test_parameters(self):
        inst = lb_one(2, 1.0, 4.0, 1.0)
        assert inst.parameters["m"] == 16
        assert inst.base.p == pytest.approx(1 / 16)
        assert inst.mu_profile()[1] == pytest.approx(15 / 16)
        assert inst.case_id == "lb_one_large"

    def test_caps_verified_against_polynomial(self):
        caps = check_caps(lb_one(2, 1.0, 4.0, 1.0), verify=True)
        assert caps["ok"]
        assert caps["mu"] == pytest.approx(caps["analytic"])

    def test_small_case_certifies(self):
        report = certify(lb_one(2, 0.5, 1.0, 1.0))
        assert report["lower_bound_holds"]
        assert report["tail_method"] == "exact"

    def test_tail_matches_enumeration(self):
        inst = lb_one(1, 1.0, 2.0, 1.0)
        table = enumerate_outcomes(inst.polynomial(), inst.dists())
        assert math.exp(exact_upper_tail(inst, 1.5).log_tail) == pytest.approx(table.tail(1.5, direction="upper"))

    def test_requires_lambda_at_least_cap(self):
        with pytest.raises(ParameterError):
            lb_one(2, 1.0, 0.5, 1.0)


class TestLbTwo:
    def test_block_count(self):
        assert lb_two_blocks(2, 27.0, 1.0, 1.0) == 128

    def test_mean_and_profile(self):
        inst = lb_two(2, 27.0, 1.0, 10.0, 1.0)
        assert inst.mean() == pytest.approx(27.0)
        assert check_caps(inst)["ok"]
        assert certify(inst)["lower_bound_holds"]

    def test_requires_mean_gap(self):
        with pytest.raises(ParameterError):
            lb_two(2, 20.0, 1.0, 5.0, 1.0)


class TestLift:
    def test_lift_preserves_mean_and_tail_structure(self):
        base = lb_one(1, 1.0, 1.0, 1.0)
        lifted = lift_degree(base, 2, 1.0)
        assert lifted.q == 2 and lifted.lift_m == 2
        poly = lifted.polynomial()
        assert expectation(poly, lifted.dists()) == pytest.approx(lifted.mean())
        table = enumerate_outcomes(poly, lifted.dists())
        tail = exact_upper_tail(lifted, 0.5)
        assert math.exp(tail.log_tail) == pytest.approx(table.tail(0.5, direction="upper"))

    def test_lift_twice_rejected(self):
        lifted = lift_degree(lb_one(1, 1.0, 1.0, 1.0), 2, 1.0)
        with pytest.raises(ParameterError):
            lift_degree(lifted, 3, 1.0)

    @pytest.mark.parametrize("m", [1, 7, 200, 5000])
    def test_lift_survival_matches_blockwise_sum(self, m):
        expected = [log_binom_sf(k, m, 0.5) for k in range(m + 2)]
        np.testing.assert_allclose(_lift_log_sf(m), expected, rtol=1e-9)

    def test_large_lift_factor(self):
        base = lb_one(1, 0.01, 1.0, 1.0)
        lifted = lift_degree(base, 2, 0.01)
        assert lifted.lift_m >= 200
        tail = exact_upper_tail(lifted)
        assert tail.tail_method == "exact"
        floor = exact_upper_tail(base).log_tail + math.log(lift_factor_probability(lifted.lift_m))
        assert floor - 1e-9 <= tail.log_tail <= 0.0

    def test_lift_size_budget(self, monkeypatch):
        monkeypatch.setitem(BUDGETS, "lift_m", 100)
        with pytest.raises(BudgetExceeded):
            lift_degree(lb_one(1, 0.01, 1.0, 1.0), 2, 0.01)


class TestConstruction:
    def test_dominant_index_tie_takes_smallest(self):
        assert dominant_index([1.0, 1.0, 1.0], 0.5) == 1

    def test_case_one(self):
        inst = construct_thm_LB(2, [1.0, 1.0, 1.0], 0.5)
        assert inst.parameters["case"] == "one"
        assert inst.q == 2
        report = certify(inst)
        assert report["lower_bound_holds"] and report["case_bound_holds"] and report["caps"]["ok"]

    def test_case_two(self):
        inst = construct_thm_LB(1, [1.0, 1.0], 4.0)
        assert inst.parameters["case"] == "two"
        report = certify(inst)
        assert report["lower_bound_holds"] and report["case_bound_holds"]

    def test_case_three(self):
        inst = construct_thm_LB(1, [100.0, 1.0], 2.0)
        assert inst.parameters["case"] == "three"
        assert inst.base.kind == "blocks"
        report = certify(inst)
        assert report["lower_bound_holds"] and report["case_bound_holds"] and report["caps"]["ok"]

    def test_json(self):
        payload = construct_thm_LB(2, [1.0, 1.0, 1.0], 0.5).to_json()
        assert payload["q"] == 2
        assert payload["caps"] == [1.0, 1.0, 1.0]

    def test_rejects_bad_vector(self):
        with pytest.raises(ParameterError):
            construct_thm_LB(2, [1.0, 1.0], 1.0)

    def test_blocks_base_values(self):
        base = BinomialBase("blocks", 2, 3.0, 10, 0.5)
        assert base.n_vars == 20
        assert base.mean() == pytest.approx(3.0 * 10 * 0.25)
        assert base.min_count(7.0) == 3
