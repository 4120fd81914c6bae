"""随机变量族：矩、矩有界参数、计数器随机流。"""
import math

import numpy as np
import pytest
from scipy import integrate, stats

from polytail.errors import ParameterError
from polytail.rv import (
    DistributionSpec,
    RandomStream,
    abs_moment,
    bernoulli,
    binomial,
    block_uniforms,
    certify,
    check_moment_bounded,
    conditional_abs_means,
    dists_from_json,
    exponential,
    factorial_moment_check,
    finite_support,
    geometric,
    log_abs_moment,
    mixed_moment_bound_check,
    moment_bound_certificate,
    moment_bound_parameter,
    normal,
    poisson,
    rademacher,
    raw_moment,
    sample,
    sample_many,
    uniform,
)


class TestMoments:
    def test_abs_moment_examples(self):
        assert abs_moment(bernoulli(0.3), 5) == pytest.approx(0.3)
        assert abs_moment(exponential(1.0), 3) == pytest.approx(6.0)
        assert abs_moment(rademacher(), 7) == 1.0

    def test_raw_moment_examples(self):
        assert raw_moment(rademacher(), 3) == 0.0
        assert raw_moment(bernoulli(0.4), 2) == pytest.approx(0.4)
        assert raw_moment(normal(0, 1), 4) == pytest.approx(3.0)

    def test_normal_against_quadrature(self):
        dist = normal(0.7, 1.3)
        for d in (1, 2, 3, 5, 6):
            value, _ = integrate.quad(lambda x: abs(x) ** d * stats.norm.pdf(x, 0.7, 1.3), -np.inf, np.inf)
            assert abs_moment(dist, d) == pytest.approx(value, rel=1e-8)

    def test_uniform_straddling_zero(self):
        value, _ = integrate.quad(lambda x: abs(x) ** 3 / 3.0, -1.0, 2.0)
        assert abs_moment(uniform(-1.0, 2.0), 3) == pytest.approx(value, rel=1e-10)

    @pytest.mark.parametrize("dist", [poisson(2.5), geometric(0.3), binomial(7, 0.4)])
    def test_discrete_moments_match_scipy(self, dist):
        frozen = {
            "poisson": lambda: stats.poisson(dist.param("mean")),
            "geometric": lambda: stats.geom(dist.param("p")),
            "binomial": lambda: stats.binom(int(dist.param("n")), dist.param("p")),
        }[dist.family]()
        for d in range(1, 7):
            assert abs_moment(dist, d) == pytest.approx(frozen.moment(d), rel=1e-9)

    def test_large_order_stays_in_log_space(self):
        assert math.isfinite(log_abs_moment(exponential(0.01), 60))

    def test_zero_order(self):
        assert abs_moment(poisson(3.0), 0) == 1.0

    def test_finite_support_sum_checked(self):
        with pytest.raises(ParameterError):
            finite_support([(0.0, 0.5), (1.0, 0.4)])

    def test_invalid_probability(self):
        with pytest.raises(ParameterError):
            bernoulli(1.5)


class TestMomentBounded:
    def test_parameters(self):
        assert moment_bound_parameter(uniform(0, 1)) == 1.0
        assert moment_bound_parameter(exponential(1.0)) == 1.0
        assert moment_bound_parameter(poisson(0.5)) == pytest.approx(1.5)
        assert moment_bound_parameter(normal(0, 1)) == pytest.approx(math.sqrt(2 / math.pi) / math.log(2))

    def test_exponential_is_tight(self):
        report = check_moment_bounded(exponential(1.0), 1.0, 20)
        assert report.holds
        assert report.worst_ratio == pytest.approx(1.0)

    def test_poisson_fails_with_small_L(self):
        report = check_moment_bounded(poisson(0.5), 0.5, 2)
        assert not report.holds
        assert report.worst_index == 2
        assert report.worst_ratio == pytest.approx(1.5)

    def test_rademacher_holds(self):
        assert check_moment_bounded(rademacher(), 1.0, 10).holds

    @pytest.mark.parametrize("dist", [
        bernoulli(0.2), rademacher(), uniform(-1, 3), exponential(2.0), normal(0.5, 2.0),
        poisson(0.5), poisson(4.0), geometric(0.4), binomial(10, 0.3),
    ])
    def test_certified_parameter_holds(self, dist):
        report = certify(dist, 20)
        assert report.holds
        assert report.to_json()["status"] == "certified"

    def test_two_sided_discrete_rule_is_flagged(self):
        dist = finite_support([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])
        L, basis, certified = moment_bound_certificate(dist, "discrete_two_sided")
        assert L == 1.0
        assert not certified
        assert certify(dist, 10, rule="discrete_two_sided").to_json()["status"] == "unproven-in-paper"

    def test_conditional_abs_means(self):
        dist = finite_support([(-2.0, 0.25), (0.0, 0.25), (1.0, 0.5)])
        pos, neg = conditional_abs_means(dist)
        assert pos == pytest.approx(2 / 3)
        assert neg == pytest.approx(2.0)
        assert conditional_abs_means(bernoulli(0.5))[1] == 0.0

    def test_factorial_consequence(self):
        for _, lhs, rhs in factorial_moment_check(poisson(1.5), 2.5, 15):
            assert lhs <= rhs + 1e-12

    def test_mixed_moment_bound(self):
        out = mixed_moment_bound_check(exponential(1.0), [2, 1, 3], 1.0)
        assert out["centered_lhs"] <= out["centered_rhs"] * (1 + 1e-9)
        assert out["plain_lhs"] == pytest.approx(out["plain_rhs"])

    def test_invalid_L(self):
        with pytest.raises(ParameterError):
            check_moment_bounded(rademacher(), 0.0, 3)


class TestSampling:
    def test_degenerate_bernoulli(self):
        stream = RandomStream(7)
        assert sample(bernoulli(1.0), stream) == 1.0
        assert sample(bernoulli(0.0), stream) == 0.0

    def test_exponential_mean(self):
        draws = sample_many(exponential(1.0), 11, 0, 10**6)
        assert abs(draws.mean() - 1.0) < 0.005

    def test_block_split_invariance(self):
        whole = block_uniforms(5, 0, 1000)
        parts = np.concatenate([block_uniforms(5, 0, 300), block_uniforms(5, 300, 700)])
        np.testing.assert_array_equal(whole, parts)

    def test_stream_matches_block(self):
        stream = RandomStream(5, 42)
        assert stream.uniform() == block_uniforms(5, 42, 1)[0]
        assert stream.uniform() == block_uniforms(5, 42, 1, draw=1)[0]

    def test_uniforms_open_interval(self):
        u = block_uniforms(123, 0, 10000)
        assert u.min() > 0.0 and u.max() < 1.0

    def test_spawn_is_independent_of_parent_draws(self):
        parent = RandomStream(5, 0)
        parent.uniform()
        child = parent.spawn(9)
        assert child.uniform() == block_uniforms(5, 9, 1)[0]

    def test_seed_range(self):
        with pytest.raises(ParameterError):
            RandomStream(-1)


class TestJson:
    def test_broadcast(self):
        dists = dists_from_json({"family": "bernoulli", "p": 0.25}, 3)
        assert dists == [bernoulli(0.25)] * 3

    def test_round_trip_finite_support(self):
        dist = finite_support([(0.0, 0.5), (2.0, 0.5)])
        assert DistributionSpec.from_json(dist.to_json()) == dist

    def test_unknown_family(self):
        with pytest.raises(ParameterError):
            dists_from_json([{"family": "cauchy"}])
