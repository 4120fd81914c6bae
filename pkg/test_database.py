"""归档库：建表、幂等写入与查询。"""
from polytail.census import run_census
from polytail.database import census_rows
from polytail.suite import CalibrationReport


class TestArchiveDatabase:
    def test_tables_created(self, archive):
        assert archive.tables() == ["calibration_runs", "census_records", "scenario_runs"]

    def test_census_rows_round_trip(self, archive):
        result = run_census(2, 2, 2, 2, 1)
        rows = census_rows(result)
        assert archive.insert_batch("census_records", rows) == len(result.records) > 0
        stored = archive.query("SELECT * FROM census_records ORDER BY rowid")
        first = result.records[0]
        assert stored[0]["Dtotal"] == " ".join(str(x) for x in first.Dbar)
        assert stored[0]["nubar"] == " ".join(str(x) for x in first.nubar)
        assert stored[0]["count"] == first.count

    def test_rerun_is_idempotent(self, archive):
        rows = census_rows(run_census(2, 1, 1, 1, 1))
        archive.insert_batch("census_records", rows)
        archive.insert_batch("census_records", rows)
        assert len(archive.query("SELECT * FROM census_records")) == len(rows)

    def test_calibration_rows(self, archive):
        report = CalibrationReport("abc", 3, {"R_main": 1.5, "Q_main2": 0.7, "R3_moment": 2.5})
        archive.insert_batch("calibration_runs", report.rows())
        latest = archive.get_latest("calibration_runs", "suite_hash", "abc")
        assert latest["constant"] == "R3_moment"
        assert latest["shipped_value"] == 8.0

    def test_get_latest_missing(self, archive):
        assert archive.get_latest("scenario_runs", "scenario", "linear") is None

    def test_empty_batch(self, archive):
        assert archive.insert_batch("scenario_runs", []) == 0
