import io
import json
import subprocess
import sys

import pytest

from aportrait.cli import build_parser, main, read_config, resolve


def run(argv, tmp_path=None):
    out = io.StringIO()
    if tmp_path is not None:
        argv = list(argv) + ["--out", str(tmp_path)]
    code = main(argv, stdout=out)
    return code, out.getvalue()


def test_exponents_detects_period(tmp_path):
    code, text = run(["exponents", "--system", "silnikov", "--set", "a=1", "--set", "b=0.8"],
                     tmp_path)
    assert code == 0
    summary = json.loads((tmp_path / "exponents.json").read_text())
    gfe = summary["methods"]["GFE"]
    assert gfe["signature"] == "(0*, -, -)"
    assert gfe["average"] == pytest.approx([0.0002, -0.1456, -0.6542], abs=0.02)
    assert summary["plan"]["T"] == pytest.approx(6.2848, abs=0.01)
    assert "LE_O" in text


def test_exponents_rosenbrock(tmp_path):
    code, _ = run(["exponents", "--system", "rosenbrock", "--T", "1.0471975512", "--m", "1"],
                  tmp_path)
    assert code == 0
    summary = json.loads((tmp_path / "exponents.json").read_text())
    assert summary["methods"]["GFE"]["average"] == pytest.approx([2.0, -13.0], abs=1e-6)


def test_exponents_lorenz_sums(tmp_path):
    code, _ = run(["exponents", "--system", "lorenz", "--T", "0.4", "--m", "100"], tmp_path)
    assert code == 0
    summary = json.loads((tmp_path / "exponents.json").read_text())
    for m in summary["methods"].values():
        assert sum(m["average"]) == pytest.approx(-41 / 3, abs=1e-3)
    rows = (tmp_path / "exponents.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 100


def test_exponents_unresolved_orbit_fails(tmp_path):
    code, _ = run(["exponents", "--set", "b=0.314", "--transient", "10"], tmp_path)
    assert code != 0


def test_period_with_crossings(tmp_path):
    code, text = run(["period", "--set", "b=0.392", "--crossings"], tmp_path)
    assert code == 0
    assert "rotation: 2" in text and "period: 12.71" in text
    rows = (tmp_path / "crossings.csv").read_text().splitlines()
    assert rows[0] == "t,x1,x2,x3" and len(rows) == 3


def test_period_circle(tmp_path):
    code, text = run(["period", "--system", "circle"], tmp_path)
    assert code == 0 and "period: 6.283185" in text and "rotation: 1" in text


def test_portrait_outputs(tmp_path):
    code, _ = run(["portrait", "--system", "lorenz", "--T", "0.4", "--m", "50",
                   "--transient", "20", "--views", "xy,xz"], tmp_path)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["portrait.json", "portrait_xy.svg", "portrait_xz.svg"]
    doc = json.loads((tmp_path / "portrait.json").read_text())
    assert doc["format"] == "aportrait/1" and len(doc["samples"]) == 51


def test_portrait_single_sample(tmp_path):
    code, _ = run(["portrait", "--system", "lorenz", "--m", "0"], tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "portrait.json").read_text())
    assert len(doc["samples"]) == 1


def test_sweep_rows_in_input_order(tmp_path):
    code, _ = run(["sweep", "--values", "0.8,0.6,0.5", "--workers", "2"], tmp_path)
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("b,classification,period,rotation,cycles,GFE_c1")
    rows = [ln.split(",") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["0.8", "0.6", "0.5"]
    assert all(r[1] == "closed" and r[3] == "1" and r[4] == "1" for r in rows)


def test_sweep_empty(tmp_path):
    code, text = run(["sweep", "--values", ""], tmp_path)
    assert code == 0
    assert (tmp_path / "sweep.csv").read_text().count("\n") == 1


def test_sweep_records_row_failures(tmp_path):
    code, _ = run(["sweep", "--values", "0.8,-50", "--seed", "3,0,0", "--transient", "50"],
                  tmp_path)
    assert code == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
    assert all("error" in r for r in rows)


def test_compare_identical_sets(tmp_path):
    code, text = run(["compare", "--set", "b=0.6", "--set2", "b=0.6", "--span", "100"],
                     tmp_path)
    assert code == 0
    score = float(text.strip().split()[-1])
    assert score > 0.99
    header = (tmp_path / "compare.csv").read_text().splitlines()[0]
    assert header == "t,chaotic,periodic,shift,score"


def test_compare_needs_closed_orbit(tmp_path):
    code, _ = run(["compare", "--set", "b=0.314", "--set2", "b=0.314", "--transient", "5"],
                  tmp_path)
    assert code == 2


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["portrait", "--system", "silnikov", "--set", "b=0.314", "--T", "1", "--m", "40",
            "--transient", "10", "--views", "iso"]
    assert run(argv, a)[0] == 0 and run(argv, b)[0] == 0
    for name in ("portrait.json", "portrait_iso.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep defaults\nsystem = silnikov\nset = a=1, b=0.5\nT = 2.5\nm = 3\n")
    assert read_config(str(cfg))["set"] == ["a=1", "b=0.5"]
    rc = resolve(["exponents", "--config", str(cfg), "--set", "b=0.6", "--m", "7"])
    assert rc.parameters == {"a": 1.0, "b": 0.6}
    assert rc.T == 2.5 and rc.m == 7
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["exponents", "--config", str(bad)]) == 2


def test_help_lists_every_flag():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name in ("exponents", "period", "portrait", "sweep", "compare"):
        text = sub[name].format_help()
        for flag in ("--system", "--set", "--seed", "--T", "--m", "--transient", "--tol-abs",
                     "--tol-rel", "--out", "--views", "--workers", "--config"):
            assert flag in text


def test_unknown_flag_and_bad_values(tmp_path):
    with pytest.raises(SystemExit):
        main(["period", "--frobnicate"])
    assert main(["period", "--set", "b=abc"]) == 2
    assert main(["period", "--set", "zeta=1"]) == 2
    assert main(["period", "--seed", "1,2"]) == 2
    assert main(["portrait", "--system", "circle", "--views", "xz"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "aportrait", "period", "--system", "circle",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "rotation: 1" in proc.stdout
