import math

import pytest

from helmholtz_lab.functionals import CSV_COLUMNS, FunctionalName, FunctionalReport, Verdict, reports_frame


def test_coercion():
    report = FunctionalReport("beta", 0.25, "satisfied")
    assert report.name is FunctionalName.BETA
    assert report.verdict is Verdict.SATISFIED


def test_invalid_name():
    with pytest.raises(ValueError):
        FunctionalReport("entropy", 1.0)


def test_row():
    report = FunctionalReport(
        FunctionalName.RADIATION_EIKONAL,
        1.5,
        parameters={"delta": 0.5, "R": 1.0, "lambda": 2.0, "shells": 12},
    )
    row = report.to_row()
    assert list(row) == CSV_COLUMNS
    assert row["name"] == "radiation_eikonal"
    assert row["delta"] == 0.5
    assert row["verdict"] is None
    assert row["R0"] is None


def test_frame():
    frame = reports_frame(
        [
            FunctionalReport("mc_norm", 0.7, parameters={"R0": 1.0, "N": 65}),
            FunctionalReport("gamma_est", float("nan"), Verdict.UNKNOWN),
        ]
    )
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["name"].tolist() == ["mc_norm", "gamma_est"]
    assert frame.loc[0, "N"] == 65
    assert math.isnan(frame.loc[1, "value"])
    assert frame.loc[1, "verdict"] == "unknown"


def test_empty_frame():
    frame = reports_frame([])
    assert frame.empty
    assert list(frame.columns) == CSV_COLUMNS
