import csv
import json

import numpy as np
import pytest

from porelayer.report import ReportError, write_report, write_rows_csv, write_sweep_csv


def test_report_sorted_and_typed(tmp_path):
    p = write_report(tmp_path, {"b": np.float64(1.5), "a": [np.int64(2), True], "c": np.eye(2)})
    text = p.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [2, True], "b": 1.5, "c": [[1.0, 0.0], [0.0, 1.0]]}


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), [1.0, np.nan]])
def test_non_finite_values_rejected(tmp_path, bad):
    with pytest.raises(ReportError):
        write_report(tmp_path, {"x": {"y": bad}})


def test_unserialisable_rejected(tmp_path):
    with pytest.raises(TypeError):
        write_report(tmp_path, {"x": object()})


def test_sweep_csv(tmp_path):
    p = write_sweep_csv(tmp_path / "s.csv", [0.5, 0.25], {"n1": [1.0, 0.25], "n2": [None, 2.0]})
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["eps", "n1", "n2"]
    assert rows[1] == ["0.5", "1.0", ""]
    assert float(rows[2][2]) == 2.0


def test_rows_csv(tmp_path):
    p = write_rows_csv(tmp_path / "r.csv", ["k", "v"], [(1, 0.1), (2, np.float64(0.2))])
    assert p.read_text().splitlines() == ["k,v", "1,0.1", "2,0.2"]
