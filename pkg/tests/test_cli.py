import json
import subprocess
import sys

import pytest

from bihat.cli import main

LEMMA = {"id": "lemma_run", "check_kind": "discrete_lemma"}
IDENTITY = {
    "id": "pp",
    "check_kind": "exact_identity",
    "inequality": "paraproduct_reconstruction",
    "N_list": [64],
    "families": [{"kind": "gaussian", "params": {"width": [0.1, 0.2]}}],
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2) + "\n")
    return p


def test_verify_lemma(tmp_path, capsys):
    p = _write(tmp_path, LEMMA)
    assert main(["verify", str(p)]) == 0
    csv_text = (tmp_path / "lemma_run.report.csv").read_bytes().decode()
    assert csv_text.splitlines()[0] == "l,a,b,n,m,s,lhs,rhs,ratio"
    assert "\r\n" in csv_text
    assert capsys.readouterr().out.count("PASS") == 1


def test_verify_infinite_q(tmp_path, capsys):
    cfg = {"id": "bad", "check_kind": "ratio_sweep", "inequality": "pdo_bound", "n": 1,
           "exponents": {"p1": 2, "p2": 2, "s": 1},
           "families": [{"kind": "gaussian"}]}
    p = _write(tmp_path, cfg)
    assert main(["verify", str(p)]) == 2
    err = capsys.readouterr().err
    assert "scaling gives q = ∞" in err
    assert f"{p}:" in err


def test_verify_single_resolution(tmp_path, capsys):
    cfg = {"id": "kato_ponce", "check_kind": "ratio_sweep", "N_list": [128],
           "exponents": {"p1": 4, "p2": 4, "m": 1}, "families": [{"kind": "gaussian"}]}
    assert main(["verify", str(_write(tmp_path, cfg))]) == 2
    assert "resolution" in capsys.readouterr().err


def test_unknown_key_line_anchored(tmp_path, capsys):
    cfg = dict(IDENTITY)
    cfg["bogus"] = 1
    p = _write(tmp_path, cfg)
    assert main(["verify", str(p)]) == 2
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(p.read_text().splitlines(), 1) if '"bogus"' in s)
    assert f"{p}:{line}:" in err or f"{p}:1:" in err
    assert "bogus" in err


def test_bad_family_value_line(tmp_path, capsys):
    cfg = dict(IDENTITY)
    cfg["families"] = [{"kind": "gaussian", "params": {"width": "wide"}}]
    p = _write(tmp_path, cfg)
    assert main(["verify", str(p)]) == 2
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(p.read_text().splitlines(), 1) if '"width"' in s)
    assert f"{p}:{line}:" in err


def test_invalid_json(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text('{\n  "id": "x",\n  oops\n}\n')
    assert main(["verify", str(p)]) == 2
    assert f"{p}:3:" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["verify", str(tmp_path / "none.json")]) == 2


def test_failing_identity_exit_1(tmp_path):
    cfg = dict(IDENTITY, tolerance=1e-300)
    assert main(["verify", str(_write(tmp_path, cfg))]) == 1


def test_verify_output_path_and_report(tmp_path, capsys):
    cfg = dict(IDENTITY, output_path="out/pp_run")
    assert main(["verify", str(_write(tmp_path, cfg))]) == 0
    jpath = tmp_path / "out" / "pp_run.json"
    cpath = tmp_path / "out" / "pp_run.csv"
    assert jpath.exists() and cpath.exists()
    capsys.readouterr()
    assert main(["report", str(jpath), "--format", "json"]) == 0
    assert capsys.readouterr().out == jpath.read_text()
    assert main(["report", str(jpath), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out == cpath.read_bytes().decode()
    rows = out.splitlines()
    assert rows[0].startswith("trial_id") and len(rows) == 1 + 4
    assert main(["report", str(jpath)]) == 0
    assert capsys.readouterr().out.rstrip().endswith("PASS")


def test_report_errors(tmp_path):
    assert main(["report", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["report", str(bad), "--format", "json"]) == 2
    assert main(["report", str(bad)]) == 2


def test_rerun_byte_identical(tmp_path):
    p = _write(tmp_path, IDENTITY)
    assert main(["verify", str(p)]) == 0
    first = (tmp_path / "pp.report.json").read_bytes(), (tmp_path / "pp.report.csv").read_bytes()
    assert main(["verify", str(p)]) == 0
    second = (tmp_path / "pp.report.json").read_bytes(), (tmp_path / "pp.report.csv").read_bytes()
    assert first == second


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    data = json.loads(out)
    assert "thm_bp_poincare" in data["inequalities"]
    assert "lemma_lem" in data["lemmas"]
    assert "bessel_order" in data["symbols"]
    assert main(["list"]) == 0
    assert capsys.readouterr().out == out
    assert list(data["inequalities"]) == sorted(data["inequalities"])


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["verify"], ["report", "x", "--format", "xml"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bihat", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "lemma_lem" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "bihat", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
