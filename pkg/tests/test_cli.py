import csv
import json

import numpy as np
import pytest

from ovalbowl import cli
from ovalbowl.errors import ConfigError


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_parse_helpers():
    a = cli.parse_a_values("0.05:0.32:0.03,1/3")
    assert a[0] == 0.05 and a[-2] == pytest.approx(0.32) and a[-1] == pytest.approx(1 / 3)
    assert len(a) == 11 and np.all(np.diff(a) > 0)
    assert cli.parse_taus("-5:-9") == [-5, -6, -7, -8, -9]
    assert cli.parse_taus("-5,-6.5") == [-5, -6.5]
    assert cli.parse_taus("") == []
    assert cli.parse_taus(None) is None


@pytest.mark.parametrize("argv", [["solve", "--a", "0.5", "--xi", "-200"],
                                  ["solve", "--a", "0.2", "--xi", "200"],
                                  ["solve", "--a", "0.2", "--xi", "-200", "--nx", "100"],
                                  ["sweep", "--a-values", "0.3,0.2", "--xi", "-200"],
                                  ["bowl", "--dimension", "5"],
                                  ["bowl", "--theta", "0.9"],
                                  ["bowl", "--quad-order", "10"],
                                  ["bowl", "--cap", "1.5"],
                                  ["bowl", "--tau0", "3"]])
def test_config_rejection(argv, tmp_path):
    assert run(*argv, "--out", tmp_path) == 2


def test_config_file_and_override(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"dimension": 3, "r-max": 2.0, "step": 0.01}))
    args = cli.build_parser().parse_args(["bowl", "--config", str(cfgp), "--step", "0.005"])
    cfg = cli.resolve_config(args)
    assert cfg.dimension == 3 and cfg.r_max == 2.0 and cfg.step == 0.005
    cfgp.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError):
        cli.resolve_config(cli.build_parser().parse_args(["bowl", "--config", str(cfgp)]))
    cfgp.write_text("[1, 2]")
    assert run("bowl", "--config", cfgp) == 2


def test_bowl_command(tmp_path, capsys):
    assert run("bowl", "--dimension", "2", "--out", tmp_path) == 0
    p = tmp_path / "bowl_d2_c0.707107.csv"
    assert p.read_text().startswith("# bowl dimension=2 speed=0.7071067811865476")
    assert run("bowl", "--dimension", "3", "--r-max", "2", "--step", "0.01", "--out", tmp_path) == 0
    assert "u''(0)=0.3333333" in capsys.readouterr().out


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    code = run("solve", "--a", "1/3", "--xi", "-40", "--nx", "161", "--nr", "81", "--tau0", "-2",
               "--out", out, "--tag", "t")
    assert code == 0
    return out


def test_solve_outputs(solved):
    files = sorted(p.name for p in solved.iterdir())
    stem = [f for f in files if f.endswith(".json") and not f.endswith("_report.json")][0][:-5]
    assert stem + ".csv" in files and stem + "_report.json" in files
    meta = json.loads((solved / (stem + ".json")).read_text())
    assert meta["format_version"] == 1 and meta["config"]["a"] == pytest.approx(1 / 3)
    rep = json.loads((solved / (stem + "_report.json")).read_text())
    assert abs(rep["k"] - 1 / 3) < 1e-2
    assert rep["spectral"][0]["p_plus_residual"] <= 1e-8


def test_solve_deterministic(solved, tmp_path):
    assert run("solve", "--a", "1/3", "--xi", "-40", "--nx", "161", "--nr", "81", "--out", tmp_path,
               "--tag", "t") == 0
    name = [p.name for p in tmp_path.iterdir() if p.suffix == ".csv"][0]
    assert (tmp_path / name).read_bytes() == (solved / name).read_bytes()


def _solution_path(d):
    return [p for p in d.iterdir() if p.suffix == ".json" and not p.name.endswith("_report.json")][0]


def test_verify(solved, tmp_path):
    sol = _solution_path(solved)
    code = run("verify", sol, "--tau0=-2,-20", "--out", tmp_path)
    rows = list(csv.reader(l for l in (tmp_path / (sol.stem + "_asymptotics.csv")).read_text().splitlines()
                           if not l.startswith("#")))
    assert rows[0][0] == "tau" and len(rows) == 3
    assert rows[2][-1].startswith("range")  # tau outside the usable range
    assert code in (0, 1)
    js = json.loads((tmp_path / (sol.stem + "_asymptotics.json")).read_text())
    assert set(js["summary"]) >= {"parabolic_trend", "tip_trend", "meancurv_bounded"}


def test_verify_empty_ladder(solved, tmp_path):
    sol = _solution_path(solved)
    assert run("verify", sol, "--tau0", "", "--out", tmp_path) == 0
    lines = (tmp_path / (sol.stem + "_asymptotics.csv")).read_text().splitlines()
    assert lines[0].startswith("# ovalbowl format_version=1 config=") and len(lines) == 2


def test_diff_same_file(solved, tmp_path):
    sol = _solution_path(solved)
    assert run("diff", sol, sol, "--tau0", "-2", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "diff_report.json").read_text())
    for k in ("w_H_norm", "wC_H_norm", "p_plus_mismatch", "p0_mismatch", "W_tip_norm"):
        assert rep[k] == 0.0
    assert all(D == 0.0 for _, D in rep["hausdorff_by_h"])


def test_diff_version_mismatch(solved, tmp_path):
    sol = _solution_path(solved)
    other = tmp_path / sol.name
    meta = json.loads(sol.read_text())
    meta["format_version"] = 2
    other.write_text(json.dumps(meta))
    (tmp_path / (sol.stem + ".csv")).write_bytes((solved / (sol.stem + ".csv")).read_bytes())
    assert run("diff", sol, other, "--out", tmp_path / "o") == 2


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    code = run("sweep", "--a-values", "0.25,1/3", "--xi", "-20", "--nx", "81", "--nr", "41", "--out", tmp_path)
    path = tmp_path / "family_xim20.csv"
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ovalbowl format_version=1")
    rows = list(csv.DictReader(lines[1:]))
    assert [float(r["a"]) for r in rows] == sorted(float(r["a"]) for r in rows)
    assert rows[0]["k_increasing"] == "True" and rows[1]["k_increasing"] == "True"
    assert code == 0


def test_sweep_parallel(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert run("sweep", "--a-values", "0.25,1/3", "--xi", "-20", "--nx", "81", "--nr", "41", "--out", tmp_path) == 0
    rows = list(csv.DictReader(l for l in (tmp_path / "family_xim20.csv").read_text().splitlines()[1:]))
    assert len(rows) == 2
