"""尾概率上界：各定理求值、Markov 路径与对比表。"""
import json
import math

import numpy as np
import pytest

from polytail.errors import KimVuConditionViolated, MissingInput, ParameterError
from polytail.poly import complete_multilinear, linear
from polytail.rv import bernoulli, exponential, rademacher
from polytail.tailbounds import (
    THEOREM_IDS,
    ConstantsConfig,
    applicable_theorems,
    compare_bounds,
    cycles_epsilon,
    cycles_markov,
    evaluate_bound,
    kimvu_constants,
    kimvu_dominance,
    load_constants,
    markov_bound,
    permanent_markov,
    threshold_form,
)


class TestConstants:
    def test_defaults_positive(self):
        constants = ConstantsConfig()
        assert all(v > 0 for v in constants.to_json().values())

    def test_rejects_non_positive(self):
        with pytest.raises(ParameterError):
            ConstantsConfig(R_main=0.0)

    def test_partial_file(self, write_json):
        constants = load_constants(write_json("c.json", {"R_main": 3.0}))
        assert constants.R_main == 3.0
        assert constants.c_perm == ConstantsConfig().c_perm

    def test_unknown_key(self, write_json):
        with pytest.raises(ParameterError):
            load_constants(write_json("c.json", {"R_mian": 2.0}))


class TestMainBounds:
    def test_special_closed_form(self):
        report = evaluate_bound("main1special", {"mu": [10.0, 1.0], "L": 1.0, "q": 1}, 5.0, ConstantsConfig(R_main=1.0))
        assert report.log_bound == pytest.approx(min(0.0, 2.0 - 2.5))

    @pytest.mark.parametrize("R", [1.0, 2.0, 8.0])
    def test_special_general_R(self, R):
        report = evaluate_bound("main1special", {"mu": [10.0, 1.0], "L": 1.0, "q": 1}, 5.0, ConstantsConfig(R_main=R))
        assert report.log_bound == pytest.approx(min(0.0, 2.0 - 2.5 / R))

    def test_zero_deviation_is_trivial(self):
        for tid in ("main1special", "main1", "main2"):
            report = evaluate_bound(tid, {"mu": [10.0, 1.0], "L": 1.0, "q": 1, "gamma": 1.0}, 0.0)
            assert report.bound == 1.0

    def test_monotone_in_lambda(self):
        inputs = {"mu": [6.0, 3.0, 1.0], "L": 1.0, "q": 2, "gamma": 1.0}
        bounds = [evaluate_bound("main1", inputs, lam).bound for lam in (1, 10, 100, 1000, 10000)]
        assert bounds == sorted(bounds, reverse=True)
        assert bounds[-1] < 1e-6

    def test_main2_uses_gamma_dependent_constant(self):
        inputs = {"mu": [1.0, 1.0], "L": 1.0, "q": 1, "gamma": 2.0}
        report = evaluate_bound("main2", inputs, 100.0, ConstantsConfig(Q_main2=2.0))
        assert report.constants["R"] == pytest.approx(8.0)

    def test_missing_input(self):
        with pytest.raises(MissingInput):
            evaluate_bound("main1", {"mu": [1.0, 1.0], "L": 1.0, "q": 1}, 1.0)

    def test_unknown_theorem(self):
        with pytest.raises(ParameterError):
            evaluate_bound("azuma", {}, 1.0)

    def test_threshold_form(self):
        inputs = {"mu": [4.0, 1.0], "L": 1.0, "q": 1}
        dev = threshold_form(inputs, 9.0, ConstantsConfig(R_main=1.0))
        assert dev == pytest.approx(max(math.sqrt(9.0 * 4.0), 9.0))

    def test_report_json(self):
        report = evaluate_bound("main1special", {"mu": [10.0, 1.0], "L": 1.0, "q": 1}, 5.0)
        payload = json.loads(json.dumps(report.to_json()))
        assert payload["theorem"] == "main1special"
        assert set(payload["terms"]) == {"sqrt", "power"}


class TestKimVu:
    def test_constants(self):
        assert kimvu_constants(2) == (2.0, 4.0)

    def test_bound_and_threshold(self):
        report = evaluate_bound("kimvu", {"E": [100.0, 10.0, 1.0], "n": 2}, 1.0)
        assert report.log_bound == 0.0
        assert report.extra["threshold"] == pytest.approx(2.0 * math.sqrt(1000.0))

    def test_condition_two(self):
        with pytest.raises(KimVuConditionViolated) as info:
            evaluate_bound("kimvu", {"E": [100.0, 2.0, 1.0], "n": 2}, 1.0)
        assert info.value.condition == 2 and info.value.index == 1

    def test_condition_one(self):
        with pytest.raises(KimVuConditionViolated) as info:
            evaluate_bound("kimvu", {"E": [100.0, 10.0, 1.0], "n": 2, "mu": [200.0, 1.0, 1.0]}, 1.0)
        assert info.value.condition == 1 and info.value.index == 0

    def test_dominance(self):
        lhs, rhs = kimvu_dominance([100.0, 10.0, 1.0], [50.0, 5.0, 1.0], 1.0)
        assert lhs >= rhs


class TestOtherBounds:
    def test_permanent_example(self):
        report = evaluate_bound("permanent", {"n": 4, "t": 16.0}, 16.0 * math.sqrt(24), ConstantsConfig(c_perm=1.0))
        assert report.bound == pytest.approx(math.exp(-2.0))

    def test_permanent_floor(self):
        report = evaluate_bound("permanent", {"n": 4, "t": 1e6}, 1e6 * math.sqrt(24))
        assert report.log_bound == -4.0

    def test_bblm_is_one_sided(self):
        report = evaluate_bound("bblm", {"mu": [2.0, 1.0], "q": 1}, 1.0)
        assert "one-sided" in report.notes
        assert 0.0 < report.bound <= 1.0

    def test_hypercontractivity_decays(self):
        small = evaluate_bound("hyper", {"variance": 1.0, "q": 2}, 10.0)
        large = evaluate_bound("hyper", {"variance": 1.0, "q": 2}, 1000.0)
        assert large.bound < small.bound

    def test_cycles_flags_epsilon(self):
        report = evaluate_bound("cycles", {"n": 10, "q": 5}, 1.0)
        assert report.extra["eps"] == pytest.approx(cycles_epsilon(10, 5))
        assert report.notes

    def test_markov_reports_k_star(self):
        inputs = {"mu": [10.0, 1.0], "L": 1.0, "q": 1, "gamma": 1.0}
        report = evaluate_bound("markov", inputs, 1000.0)
        assert report.k_star is not None and report.k_star % 2 == 0
        assert markov_bound(inputs, 1000.0, ConstantsConfig()).log_bound == report.log_bound

    def test_every_theorem_id_evaluates(self):
        inputs = {
            "mu": [6.0, 3.0, 1.0], "L": 1.0, "q": 2, "gamma": 1.0, "variance": 2.0,
            "n": 20, "t": 2.0, "E": [1e4, 100.0, 1.0],
        }
        for tid in THEOREM_IDS:
            report = evaluate_bound(tid, inputs, 3.0)
            assert report.log_bound <= 0.0


class TestMarkovPaths:
    def test_permanent_markov(self):
        result = permanent_markov(8, 50.0, 1.0)
        assert result.log_bound <= 0.0
        assert result.k_star >= 2

    def test_permanent_markov_huge_deviation(self):
        result = permanent_markov(3, 1e9, 1.0)
        assert result.k_star == 3

    def test_cycles_markov(self):
        result = cycles_markov(50, 3, 100.0, 1.0)
        assert result.k_star % 2 == 0
        assert result.log_bound < 0.0

    @pytest.mark.parametrize("n", [50, 200])
    def test_cycles_markov_nonincreasing_in_lambda(self, n):
        bounds = [cycles_markov(n, 3, lam, 4.0).log_bound for lam in np.geomspace(10.0, 1e5, 2000)]
        assert all(b <= a + 1e-12 for a, b in zip(bounds, bounds[1:]))

    def test_permanent_markov_nonincreasing_in_t(self):
        bounds = [permanent_markov(6, t, 1.0).log_bound for t in np.geomspace(0.1, 1e8, 2000)]
        assert all(b <= a + 1e-12 for a, b in zip(bounds, bounds[1:]))


class TestCompare:
    def test_applicable_theorems(self):
        ids = applicable_theorems(linear(4), [bernoulli(0.5)] * 4)
        assert "main1special" in ids and "bblm" in ids and "hyper" not in ids
        assert "hyper" in applicable_theorems(linear(4), [rademacher()] * 4)
        assert "main1special" not in applicable_theorems(linear(2, [1.0, -1.0]), [exponential(1.0)] * 2)

    def test_bounds_dominate_exact_tail(self):
        table = compare_bounds(linear(4), [bernoulli(0.5)] * 4, [0.5, 1.0, 1.5, 2.0])
        assert "exact_tail" in table.columns
        for tid in ("main1special", "main1", "main2", "markov"):
            assert (table[tid] >= table["exact_tail"]).all()
            assert (table[tid] <= 1.0).all()

    def test_no_exact_tail_for_continuous(self):
        table = compare_bounds(linear(3), [exponential(1.0)] * 3, [1.0, 2.0])
        assert "exact_tail" not in table.columns
        assert list(table["lambda"]) == [1.0, 2.0]

    def test_kimvu_column(self):
        poly = complete_multilinear(4, 2)
        table = compare_bounds(poly, [bernoulli(0.5)] * 4, [1.0], kimvu_E=[1e4, 100.0, 1.0])
        assert "kimvu" in table.columns
