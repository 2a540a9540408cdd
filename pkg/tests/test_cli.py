import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from tomostab.cli import (SUITES, BodySpec, SuiteConfig, default_pairs, main,
                          parse_body_spec, run_suite)
from tomostab.reports import emit_report, to_csv, to_json


# -- body specs ---------------------------------------------------------------

def test_parse_examples():
    s = parse_body_spec('{"family":"ellipsoid","dim":3,"params":[1,2,3]}')
    assert isinstance(s, BodySpec) and s.family == "ellipsoid" and s.dim == 3
    s = parse_body_spec('{"family":"lp_ball","dim":5,"params":[4]}')
    assert s.family == "lp_ball" and s.dim == 5


@pytest.mark.parametrize("text, match", [
    ('{"family":"ellipsoid","dim":3,"params":[1,-2,3]}', "non-positive semi-axis"),
    ('{"family":"blob","dim":3}', "supported"),
    ('{"family":"ball","dim":7}', "outside"),
    ('{"family":"ball"', "malformed"),
    ('[1, 2]', "object"),
    ('{"family":"polytope","dim":2,"params":[[1,0],[0,1],[-1,-1]]}', "symmetric"),
    ('{"family":"zonotope","dim":3,"params":{"g":1}}', "vectors"),
])
def test_parse_errors(text, match):
    with pytest.raises(ValueError, match=match):
        parse_body_spec(text)


def test_every_suite_has_defaults():
    for suite in SUITES:
        n = 4 if suite.startswith("frac-section") else 3
        if suite != "identities":
            assert default_pairs(suite, n)


# -- suites -------------------------------------------------------------------

def test_bp_stability_concentric_balls():
    pair = (parse_body_spec('{"family":"ball","dim":3,"params":[1.1]}'),
            parse_body_spec('{"family":"ball","dim":3}'))
    (r,) = run_suite(SuiteConfig("bp-stability", 3), [pair])
    assert r.passed and r.margin == pytest.approx(0.6597 - 0.5457, abs=1e-4)


def test_identities_under_tolerance():
    pair = (parse_body_spec('{"family":"ball","dim":3}'),
            parse_body_spec('{"family":"ellipsoid","dim":3,"params":[1,1.2,0.9]}'))
    reports = run_suite(SuiteConfig("identities", 3), [pair])
    assert len(reports) >= 4
    assert all(r.passed for r in reports)


def test_alpha_gates():
    pair = [(parse_body_spec('{"family":"ball","dim":4,"params":[1.05]}'),
             parse_body_spec('{"family":"ball","dim":4}'))]
    assert run_suite(SuiteConfig("frac-section", 4, alpha=0.0), pair)[0].passed
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("frac-section", 4, alpha=-0.1), pair)
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("frac-section", 4), pair)
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("bp-stability", 4, alpha=1.0), pair)
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("frac-projection", 3, alpha=2.5))
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("corollary-n4", 5))


def test_pair_failure_recorded_not_raised():
    bad = ({"family": "lp_ball", "dim": 3, "params": [4]}, {"family": "ball", "dim": 3})
    good = ({"family": "ball", "dim": 3, "params": [1.1]}, {"family": "ball", "dim": 3})
    reports = run_suite(SuiteConfig("shephard", 3), [bad, good])
    assert len(reports) == 2
    assert any(f.startswith("error:") for f in reports[0].flags) and math.isnan(reports[0].margin)
    assert reports[1].passed


def test_empty_pairs_rejected():
    with pytest.raises(ValueError):
        run_suite(SuiteConfig("bp-stability", 3), [])


# -- report emission ----------------------------------------------------------

def _one_report():
    pair = ({"family": "ball", "dim": 3, "params": [1.1]}, {"family": "ball", "dim": 3})
    return run_suite(SuiteConfig("bp-stability", 3), [pair])


def test_csv_one_row_and_header(tmp_path):
    path = emit_report(_one_report(), str(tmp_path / "r.csv"), "csv")
    rows = list(csv.reader(open(path, encoding="utf-8")))
    assert len(rows) == 2
    for field in ("theorem", "bodies", "epsilon", "lhs", "rhs", "constant", "margin", "pass",
                  "flags", "resolution", "lmax", "schema_version"):
        assert field in rows[0]


def test_empty_report_list_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], str(tmp_path / "r.json"))
    with pytest.raises(ValueError):
        to_csv([])


def test_unwritable_path():
    with pytest.raises(OSError):
        emit_report(_one_report(), "/nonexistent-dir/r.json")


def test_json_and_csv_agree():
    reports = _one_report()
    doc = json.loads(to_json(reports))
    assert doc["schema_version"]
    rows = list(csv.DictReader(io.StringIO(to_csv(reports))))
    for j, c in zip(doc["reports"], rows):
        for f in ("epsilon", "lhs", "rhs", "constant", "margin"):
            assert float(c[f]) == j[f]
        assert c["pass"] == str(j["pass"])
        assert int(c["resolution"]) == j["resolution"] and int(c["lmax"]) == j["lmax"]


def test_twelve_significant_digits():
    row = json.loads(to_json(_one_report()))["reports"][0]
    assert row["epsilon"] == float(f"{math.pi * 0.21:.12g}")


# -- command line -------------------------------------------------------------

def test_main_writes_deterministic_json(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["--suite", "bp-separation", "--dim", "3", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["run"]["seed"] == 7 and len(doc["reports"]) >= 2
    # the randomized family logs its drawn parameters
    labels = [b["label"] for r in doc["reports"] for b in r["bodies"]]
    assert any(label.startswith(("PB", "0.8*PB")) for label in labels)


def test_main_bodies_file(tmp_path):
    bodies = tmp_path / "bodies.json"
    bodies.write_text(json.dumps([[{"family": "cube", "dim": 3},
                                   {"family": "ball", "dim": 3, "params": [1.3]}]]))
    out = tmp_path / "r.csv"
    assert main(["--suite", "shephard", "--bodies", str(bodies), "--format", "csv",
                 "--out", str(out)]) == 0
    assert "cube3" in out.read_text()


def test_main_exit_codes(tmp_path, capsys, monkeypatch):
    assert main(["--suite", "frac-section", "--dim", "4", "--alpha", "-0.1"]) == 2
    assert "outside" in capsys.readouterr().err
    assert main(["--suite", "corollary-n4", "--dim", "5"]) == 2
    with pytest.raises(SystemExit):
        main(["--suite", "nope"])
    bodies = tmp_path / "b.json"
    bodies.write_text(json.dumps([[{"family": "ball", "dim": 3, "params": [1.1]},
                                   {"family": "ball", "dim": 3}]]))
    argv = ["--suite", "bp-stability", "--bodies", str(bodies), "--out", str(tmp_path / "o.json")]
    assert main(argv) == 0

    # a violated inequality whose hypothesis holds exits 1
    from dataclasses import replace

    import tomostab.cli as cli
    real = cli.VERIFIERS["bp-stability"]

    def violated(K, L, settings):
        return replace(real(K, L, settings), passed=False)

    monkeypatch.setitem(cli.VERIFIERS, "bp-stability", violated)
    assert main(argv) == 1


def test_console_entry_point_module():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "tomostab.cli", "--suite", "corollary-n4",
                           "--dim", "3", "--format", "csv"], capture_output=True, text=True,
                          env=env, timeout=300)
    assert proc.returncode == 0
    lines = proc.stdout.strip().splitlines()
    assert lines[0].startswith("schema_version") and len(lines) == 4
