import json
import math

import numpy as np

from logmodcert import report


def test_to_jsonable_converts_numpy_and_non_finite():
    payload = {"a": np.float64(1.5), "b": np.arange(3), "c": math.inf, "d": np.bool_(True), "e": (1, float("nan"))}
    out = report.to_jsonable(payload)
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": "inf", "d": True, "e": [1, "nan"]}
    json.dumps(out)


def test_build_report_shape():
    doc = report.build_report(False, {"x": 1}, None, ["b.csv", "a.json"])
    assert doc == {"status": "fail", "metrics": {"x": 1}, "artifacts": ["a.json", "b.csv"]}
    assert "certificate" in report.build_report(True, {}, {"C": 1.0})


def test_write_json_is_deterministic(tmp_path):
    path = tmp_path / "r.json"
    report.write_json(str(path), {"b": 2, "a": np.float32(0.5)})
    first = path.read_bytes()
    report.write_json(str(path), {"a": 0.5, "b": 2})
    assert path.read_bytes() == first
    assert not (tmp_path / "r.json.tmp").exists()


def test_write_csv_and_gnuplot_script(tmp_path):
    csv_path = report.write_csv(str(tmp_path / "curve.csv"), ["t", "y"], [[0.1, 1], [0.2, 2]])
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "t,y"
    assert lines[1] == "0.1,1"
    script = report.write_gnuplot_script(csv_path, 1, [2], ["y"], logscale="x")
    text = open(script).read()
    assert text.index("set terminal") < text.index("set output")
    assert "'curve.csv' using 1:2" in text
    assert "set logscale x" in text
