"""冻结校准套件与常数反推。"""
import math

import pytest

from polytail.errors import ParameterError
from polytail.moments import enumerate_outcomes
from polytail.poly import linear
from polytail.rv import bernoulli
from polytail.settings import CALIBRATION_SUITE
from polytail.suite import (
    CALIBRATED,
    CalibrationReport,
    calibrate,
    frozen_suite,
    implied_main_constant,
    implied_moment_constant,
    lambda_grid,
    suite_hash,
)
from polytail.tailbounds import ConstantsConfig, evaluate_bound


class TestSuite:
    def test_hash_is_stable(self):
        assert suite_hash(frozen_suite()) == suite_hash(frozen_suite())

    def test_recorded_suite_identity(self):
        assert len(frozen_suite()) == CALIBRATION_SUITE["n_instances"]
        assert suite_hash(frozen_suite(CALIBRATION_SUITE["seed"] + 1)) != suite_hash(frozen_suite())

    def test_instances_are_enumerable(self):
        for inst in frozen_suite()[:10]:
            assert inst.poly.n <= 8
            assert len(inst.dists) == inst.poly.n

    def test_lambda_grid(self):
        assert lambda_grid(4.0, 4) == [1.0, 2.0, 3.0, 4.0]


class TestImpliedConstants:
    def test_main_constant_makes_bound_tight(self):
        poly, dists = linear(3), [bernoulli(0.5)] * 3
        tail = enumerate_outcomes(poly, dists).tail(1.5)
        R = implied_main_constant([1.5, 1.0], 1, 1.0, 1.0, 1.5, tail, "r")
        report = evaluate_bound("main1special", {"mu": [1.5, 1.0], "L": 1.0, "q": 1}, 1.5, ConstantsConfig(R_main=R))
        assert report.bound == pytest.approx(tail)

    def test_trivial_tail_needs_no_constant(self):
        assert implied_main_constant([1.0, 1.0], 1, 1.0, 1.0, 1.0, 0.0, "r") == 0.0

    def test_moment_constant_makes_lemma_tight(self):
        from polytail.moments import moment_lemma_bound

        mus = [2.0, 1.0]
        R3 = implied_moment_constant(mus, 1, 1.0, 1.0, 2, 50.0)
        assert moment_lemma_bound(1, 1.0, 1.0, mus, 2, constant=R3) == pytest.approx(math.log(50.0))


class TestCalibrationReport:
    def test_power_of_two(self):
        report = CalibrationReport("h", 1, {"R_main": 3.0, "Q_main2": 0.5, "R3_moment": 4.0})
        assert report.power_of_two("R_main") == 4.0
        assert report.recommended() == {"R_main": 8.0, "Q_main2": 2.0, "R3_moment": 8.0}
        assert report.constants().R_main == 8.0

    def test_drift(self):
        report = CalibrationReport("h", 1, {"R_main": 3.0, "Q_main2": 0.5, "R3_moment": 1.5})
        assert report.drift(ConstantsConfig(R_main=8.0, Q_main2=2.0, R3_moment=2.0)) == {"R3_moment": (2.0, 4.0)}

    def test_rows(self):
        report = CalibrationReport("h", 2, {"R_main": 3.0})
        (row,) = report.rows()
        assert row["shipped_value"] == 8.0 and row["n_instances"] == 2

    def test_small_calibration(self):
        report = calibrate(frozen_suite()[:4], moment_orders=(2,))
        assert set(report.implied) == set(CALIBRATED)
        assert all(v >= 0 and math.isfinite(v) for v in report.implied.values())
        assert len(report.to_frame()) == len(CALIBRATED)

    @pytest.mark.slow
    def test_shipped_constants_cover_suite(self):
        report = calibrate()
        shipped = ConstantsConfig()
        for name in CALIBRATED:
            assert report.implied[name] <= getattr(shipped, name)
        assert report.recommended() == {name: getattr(shipped, name) for name in CALIBRATED}
        assert not report.drift()
        assert report.n_instances == CALIBRATION_SUITE["n_instances"]
        assert report.suite_hash == suite_hash(frozen_suite(CALIBRATION_SUITE["seed"]))
