import json
import shutil
from pathlib import Path

import pytest

from nonlocal_parabolic.cli import OUTPUT_ENV, render_report, run

ROOT = Path(__file__).parent.parent
DATA = Path(__file__).parent / "data"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    for cfg in (ROOT / "configs").glob("*.toml"):
        shutil.copy(cfg, tmp_path / cfg.name)
    return tmp_path


def write_config(path, text):
    path.write_text(text)
    return str(path)


ZERO_CONFIG = """
T = 0.5
nt = 8
output_dir = "zero_out"

[domain]
dim = 1
extents = [1.0]
nodes = [9]

[potential]
name = "sine"

[u0]
name = "zero"
"""


def test_missing_config(workdir, capsys):
    assert run(["solve", "--config", str(workdir / "nope.toml")]) == 1
    assert "nope.toml" in capsys.readouterr().err


def test_bad_key_named_on_stderr(workdir, capsys):
    cfg = write_config(workdir / "bad.toml", "[outer]\nspeed = 1\n")
    assert run(["solve", "--config", cfg]) == 1
    assert "outer.speed" in capsys.readouterr().err


def test_zero_config_emits_zero_fields(workdir):
    cfg = write_config(workdir / "zero.toml", ZERO_CONFIG)
    assert run(["solve", "--config", cfg]) == 0
    out = workdir / "zero_out"
    for name in ("v.csv", "w_star.csv", "u_step00008.csv"):
        rows = (out / name).read_text().splitlines()[1:]
        assert rows and all(float(r.split(",")[-1]) == 0.0 for r in rows)
    report = json.loads((out / "report.json").read_text())
    assert report["iterations"] == 1 and report["passed"]


def test_certified_reference(workdir):
    out = workdir / "ref"
    assert run(["solve", "--config", str(workdir / "certified_reference.toml"), "--output-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["certificate"]["MKT2"] == 0.25 and report["certificate"]["certified"]
    assert report["checks"]["weak_residual"]["value"] <= 1e-8
    assert all(c["pass"] for c in report["checks"]["lemma31"].values())
    assert sorted(p.name for p in out.iterdir()) == [
        "report.json", "u_step00000.csv", "u_step00008.csv", "u_step00016.csv", "v.csv", "w_star.csv"]


def test_output_dir_env_override(workdir, monkeypatch):
    target = workdir / "from_env"
    monkeypatch.setenv(OUTPUT_ENV, str(target))
    assert run(["solve", "--config", write_config(workdir / "zero.toml", ZERO_CONFIG)]) == 0
    assert (target / "report.json").exists()


def test_nonconvergence_exit_code(workdir):
    text = (workdir / "certified_reference.toml").read_text().replace("max_iter = 500", "max_iter = 1")
    cfg = write_config(workdir / "short.toml", text)
    out = workdir / "short"
    assert run(["solve", "--config", cfg, "--output-dir", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["converged"] is False and len(report["history"]) == 1


def test_solve_is_deterministic(workdir):
    cfg = str(workdir / "sine_potential_sweep.toml")
    outs = []
    for k in range(2):
        out = workdir / f"run{k}"
        assert run(["solve", "--config", cfg, "--seed", "3", "--starts", "3", "--output-dir", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]


def test_multistart_seeds_change_only_start_fields(workdir):
    cfg = str(workdir / "sine_potential_sweep.toml")
    reports = []
    for seed in (1, 2):
        out = workdir / f"seed{seed}"
        assert run(["solve", "--config", cfg, "--seed", str(seed), "--starts", "3", "--output-dir", str(out)]) == 0
        reports.append(json.loads((out / "report.json").read_text()))
    a, b = reports
    assert a["problem"] == b["problem"] and a["certificate"] == b["certificate"]
    assert [r["start_l2"] for r in a["multistart"]["runs"]] != [r["start_l2"] for r in b["multistart"]["runs"]]


def test_subcommands(workdir, capsys):
    out = workdir / "ell"
    assert run(["solve-elliptic", "--config", str(workdir / "elliptic_2d.toml"), "--output-dir", str(out)]) == 0
    rep = json.loads((out / "elliptic_report.json").read_text())
    assert rep["pass"] and rep["residual"] <= 1e-10

    out = workdir / "par"
    assert run(["solve-parabolic", "--config", str(workdir / "parabolic_1d.toml"), "--output-dir", str(out)]) == 0
    assert json.loads((out / "parabolic_report.json").read_text())["pass"]
    capsys.readouterr()
    assert run(["oracle", "--mode", "scalar", "--config", str(workdir / "scalar.toml"),
                "--output-dir", str(workdir / "orc")]) == 0
    scalar = json.loads(capsys.readouterr().out)
    assert abs(scalar["V"] ** 2 - (1 - 2.718281828459045 ** -scalar["V"])) <= 1e-12

    assert run(["oracle", "--mode", "monolithic", "--compare", "--config", str(workdir / "certified_reference.toml"),
                "--output-dir", str(workdir / "orc")]) == 0
    assert json.loads(capsys.readouterr().out)["fixedpoint_distance"] <= 1e-8

    assert run(["validate-potential", "--name", "hyperbolic", "--interval=-50,50", "--samples", "1000"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]
    assert run(["validate-potential", "--name", "nope"]) == 1
    capsys.readouterr()

    assert run(["certify-uniqueness", "--config", str(workdir / "sine_potential_sweep.toml")]) == 0
    assert json.loads(capsys.readouterr().out)["MKT2"] == pytest.approx(1.25)

    sweep_cfg = write_config(workdir / "sweep.toml", (workdir / "sine_potential_sweep.toml").read_text()
                             .replace('"../out/sine_potential"', '"sweep_out"').replace("[33]", "[17]"))
    assert run(["sweep-T", "--config", sweep_cfg, "--T-list", "0.5,1", "--starts", "2"]) == 0
    lines = (workdir / "sweep_out" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "T,MKT2,certified,converged,iterations,dispersion"
    assert lines[1].startswith("0.5,1.25,true,true,")
    assert lines[2].startswith("1,5,false,")


def test_render_empty_history():
    assert render_report({"history": []}) == f"{'iteration':>9}  {'update_norm':>24}\n"


def test_render_golden():
    report = json.loads((DATA / "golden_report.json").read_text())
    assert render_report(report) == (DATA / "golden_report.txt").read_text()


def test_report_subcommand(tmp_path, capsys):
    assert run(["report", str(DATA / "golden_report.json")]) == 0
    assert capsys.readouterr().out == (DATA / "golden_report.txt").read_text()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["report", str(bad)]) == 1
