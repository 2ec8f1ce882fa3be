import hashlib
import json
import pathlib

import pytest
from freezegun import freeze_time

from src.skinburst import __version__, output
from src.skinburst.core.exceptions import BadInitialCellError


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (0.1, "1.0000000000000001e-01"),
        (-2.5, "-2.5000000000000000e+00"),
        (7, "7"),
        (True, "true"),
        (float("nan"), "nan"),
        (None, ""),
        ("LEFT_LOOP", "LEFT_LOOP"),
    ],
)
def test_format_value(value: object, expected: str) -> None:
    assert output.format_value(value) == expected


def test_csv_header_and_rows(tmp_path: pathlib.Path) -> None:
    out = output.RunOutput(tmp_path, "spectrum")
    path = out.csv("table.csv", ["n [cell]", "P_n"], [[1, 0.5], [2, 0.25]])
    assert path.read_text() == (
        "# n [cell],P_n\n"
        "1,5.0000000000000000e-01\n"
        "2,2.5000000000000000e-01\n"
    )


def test_csv_is_reproducible(tmp_path: pathlib.Path) -> None:
    rows = [[1, 1 / 3], [2, 2 / 3]]
    first = output.RunOutput(tmp_path / "a", "x").csv("t.csv", ["n", "x"], rows)
    second = output.RunOutput(tmp_path / "b", "x").csv("t.csv", ["n", "x"], rows)
    assert first.read_bytes() == second.read_bytes()


@freeze_time("2024-06-11 10:00:00")
def test_manifest_lists_every_output(tmp_path: pathlib.Path) -> None:
    out = output.RunOutput(tmp_path, "dynamics")
    table = out.csv("dissipation.csv", ["n", "P"], [[1, 1.0]])
    out.text("dissipation.gp", "plot 1\n")
    manifest = out.finish({"lattice": {"N": 10}})

    assert manifest.started == "2024-06-11T10:00:00+00:00"
    assert manifest.duration == 0.0
    assert manifest.version == __version__
    assert manifest.outputs["dissipation.csv"] == hashlib.sha256(
        table.read_bytes()
    ).hexdigest()
    written = json.loads((tmp_path / output.MANIFEST).read_text())
    assert written["command"] == "dynamics"
    assert sorted(written["outputs"]) == ["dissipation.csv", "dissipation.gp"]
    assert written["config"] == {"lattice": {"N": 10}}


def test_error_record() -> None:
    record = output.error_record(BadInitialCellError("Initial cell 0 outside."))
    assert record == {"error": "bad_initial_cell", "message": "Initial cell 0 outside."}


def test_report_error_writes_file(tmp_path: pathlib.Path, capsys) -> None:
    output.report_error(BadInitialCellError("outside"), tmp_path / "out")
    record = json.loads((tmp_path / "out" / output.ERROR_RECORD).read_text())
    assert record["error"] == "bad_initial_cell"
    assert json.loads(capsys.readouterr().err) == record
