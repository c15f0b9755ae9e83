import csv
import io
import json

import pytest

from hbmgreen import cli
from hbmgreen.errors import SpecParseError


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines() if line]


def test_eval_green_json_schema():
    code, out, _ = run("eval", "green", "--n", "3", "--lambda", "0.5", "--x", "0,0,1.5", "--y", "0.4,0,2.5")
    assert code == 0
    (rec,) = records(out)
    assert list(rec) == ["inputs", "value", "abs_err", "method", "wall_time"]
    assert rec["inputs"] == {"n": 3, "lambda": 0.5, "a": 1.0, "x": [0.0, 0.0, 1.5], "y": [0.4, 0.0, 2.5]}
    assert rec["value"] > 0 and rec["method"].startswith("quadrature:")


def test_eval_lambda_list_and_csv_columns():
    code, out, _ = run("eval", "comparator", "--lambda", "0,2", "--x", "0,0,1.5", "--y", "1,0,2",
                       "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "lambda", "a", "x", "y", "value", "abs_err", "method", "wall_time"]
    assert [r[1] for r in rows[1:]] == ["0", "2"]


def test_eval_kernel_uses_bessel_index():
    code, out, _ = run("eval", "kernel", "--nu", "0.5", "--t", "1", "--x", "2", "--y", "1.5")
    assert code == 0
    (rec,) = records(out)
    assert rec["inputs"]["nu"] == 0.5
    assert rec["value"] > 0


def test_floats_keep_seventeen_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.to_json({"v": float("nan")}) == '{"v": null}'


def test_bounds_prints_summary():
    code, out, err = run("bounds", "potential", "--n", "3", "--a", "0",
                         "--grid", "height:0.5:2:2;rho:0.1:10:3")
    assert code == 0
    summary = json.loads(err.splitlines()[-1])
    assert summary["finite_positive"] and summary["points"] == len(records(out))
    assert {"min", "max", "spread", "stable"} <= set(summary)
    assert list(records(out)[0]) == ["inputs", "value", "comparator", "ratio", "abs_err", "method", "wall_time"]


def test_simulate_bessel_csv(tmp_path):
    target = tmp_path / "paths.csv"
    code, out, _ = run("simulate", "bessel", "--nu", "0.5", "--x", "2", "--paths", "20", "--dt", "0.01",
                       "--horizon", "1", "--seed", "3", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(target.open()))
    assert len(rows) == 20
    assert list(rows[0]) == ["path_id", "t", "A", "B", "hit_time", "survived"]


def test_simulate_hbm_records():
    code, out, _ = run("simulate", "hbm", "--n", "3", "--x", "0,0,2", "--y", "0,0,2.5", "--paths", "5",
                       "--dt", "0.01", "--horizon", "1")
    assert code == 0
    recs = records(out)
    assert len(recs) == 5 and len(recs[0]["occupation"]) == 1 and len(recs[0]["exit_tilde"]) == 2


def test_verify_reflection_passes():
    code, out, err = run("verify", "reflection")
    assert code == 0
    recs = records(out)
    assert recs and all(r["passed"] for r in recs)
    assert list(recs[0]) == ["suite", "case", "error", "tolerance", "passed", "wall_time"]
    assert err.startswith("PASS")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comparator run\nn = 3\nlambda = 2\nx = 0,0,1.5\ny = 1,0,2\n")
    code, out, _ = run("eval", "comparator", "--config", str(cfg), "--lambda", "0.5")
    assert code == 0
    assert records(out)[0]["inputs"]["lambda"] == 0.5


@pytest.mark.parametrize("argv", [
    ("verify", "nonsense"),
    ("eval", "nonsense"),
    ("eval", "green", "--format", "xml", "--x", "0,0,2", "--y", "0,0,3"),
    ("bounds", "green", "--grid", "height:1:2"),
    ("bounds", "green", "--grid", "t:1:2:3"),
    ("eval", "green", "--lambda", "abc"),
    ("eval", "green", "--x", "0,0,2"),
    ("eval", "green", "--config", "/nonexistent/run.cfg"),
])
def test_malformed_input_exits_two(argv):
    code, _, err = run(*argv)
    assert code == 2
    assert err.startswith("hbmgreen:")


def test_domain_failure_exits_one():
    code, _, err = run("eval", "green", "--x", "0,0,2", "--y", "0,0,0.5")
    assert code == 1
    assert "BelowBarrier" in err


def test_parsers():
    assert cli.parse_config("a = 1\n# note\n\nn=4\n") == {"a": "1", "n": "4"}
    with pytest.raises(SpecParseError):
        cli.parse_config("just words")
    grid = cli.parse_grid("height:0.1:10:3;rho:0:1:5:linear")
    assert list(grid["height"].values()) == pytest.approx([0.1, 1.0, 10.0])
    assert len(grid["rho"].values(refine=1)) == 9
