import csv
import json
import subprocess
import sys

import pytest

from radialcone import runner
from radialcone.cli import main
from radialcone.config import RunConfig

# coarse grid for speed; the default residual tolerance is set for h = 1/512
COARSE = {"grid": {"R": 4.0, "h": 1 / 128}, "diagnostics": {"residual_tolerance": 5e-3}}


def write_config(path, coarse=True, **sections):
    raw = RunConfig().to_dict()
    for name, values in {**(COARSE if coarse else {}), **sections}.items():
        raw[name].update(values)
    path.write_text(RunConfig.from_dict(raw).to_toml())
    return str(path)


def test_check_exit_codes(tmp_path, capsys):
    an = write_config(tmp_path / "an.toml")
    assert main(["check", "--config", an]) == 2
    assert "[FAIL] f'(0) != 0" in capsys.readouterr().out
    lin = write_config(tmp_path / "lin.toml", model={"n": 2, "alpha": 3.0, "profile": "linear"})
    assert main(["check", "--config", lin]) == 0
    low = write_config(tmp_path / "low.toml", model={"alpha": 2.0, "profile": "linear"})
    assert main(["check", "--config", low]) == 2
    assert "= 4" in capsys.readouterr().out


def test_config_errors_exit_64(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\ndimension = 3\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 64
    assert "model.dimension" in capsys.readouterr().err
    assert main(["check", "--config", str(tmp_path / "missing.toml")]) == 64
    wide = write_config(tmp_path / "wide.toml", data={"center": 3.8})
    assert main(["run", "--config", wide, "--out", str(tmp_path / "o")]) == 64


def test_default_run_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path / "c.toml", coarse=False)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 0
    assert all(report["acceptance"].values())
    row = report["diagnostics"]["energy_flux"][0]
    assert row["relative"] <= report["config"]["diagnostics"]["residual_tolerance"]
    series = (out / "series.ndjson").read_text().splitlines()
    assert len(series) == report["run"]["steps"] + 1
    assert set(json.loads(series[0])) >= {"t", "energy", "sup_u", "cone_u"}
    with open(out / "slices.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "r", "u", "ut", "ur", "e_plus", "m"]
    assert "exit 0" in (out / "summary.txt").read_text()


def test_zero_data_report_is_all_zero(tmp_path):
    cfg = write_config(tmp_path / "z.toml", data={"family": "zero"})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    diag = json.loads((out / "report.json").read_text())["diagnostics"]

    # coordinates, grid metadata and the bound shapes (functions of T only) are skipped
    def numbers(obj, skip=("S", "T", "t", "r", "scales", "apex_time", "h", "dt", "slices",
                           "tolerance", "growth", "rhs")):
        if isinstance(obj, dict):
            for k, v in obj.items():
                if k not in skip:
                    yield from numbers(v, skip)
        elif isinstance(obj, list):
            for v in obj:
                yield from numbers(v, skip)
        elif isinstance(obj, float):
            yield obj

    values = list(numbers(diag))
    assert values and all(v == 0.0 for v in values)


def test_blowup_threshold_zero_exits_3(tmp_path):
    cfg = write_config(tmp_path / "b.toml", solver={"blowup_threshold": 0.0})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 3
    assert (out / "last_good.csv").exists()
    assert json.loads((out / "report.json").read_text())["status"] == "blow-up suspected"


def test_mms_command(tmp_path, capsys):
    grids = [1 / 32, 1 / 64, 1 / 128]
    ok = write_config(tmp_path / "m.toml", mms={"grids": grids, "R": 4.0})
    assert main(["mms", "--config", ok, "--out", str(tmp_path / "m"), "--jobs", "1"]) == 0
    assert "orders within [1.8, 2.2]: ok" in capsys.readouterr().out
    one = write_config(tmp_path / "one.toml", mms={"grids": [1 / 64]})
    assert main(["mms", "--config", one, "--jobs", "1"]) == 64


@pytest.mark.slow
def test_mms_mutated_closure_exits_1(tmp_path, capsys):
    cfg = write_config(tmp_path / "m.toml", mms={"closure": "even"})
    assert main(["mms", "--config", cfg, "--out", str(tmp_path / "m"), "--jobs", "3"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_single_point_sweep_matches_run(tmp_path):
    cfg = write_config(tmp_path / "s.toml", sweep={"parameters": {"amplitude": [1e-3]}})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "run")]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "sweep"), "--jobs", "1"]) == 0
    one = tmp_path / "sweep" / "run_000"
    for name in ("report.json", "series.ndjson", "slices.csv", "summary.txt"):
        assert (one / name).read_bytes() == (tmp_path / "run" / name).read_bytes()


def test_amplitude_sweep_with_invalid_alpha(tmp_path):
    cfg = write_config(tmp_path / "s.toml", grid={"R": 4.0, "h": 1 / 128},
                       diagnostics={"checks": ["probes"]},
                       sweep={"parameters": {"amplitude": [1e-3, 1e-2, 1e-1], "alpha": [4.0, -1.0]}})
    code, rows = runner.execute_sweep(RunConfig.load(cfg), tmp_path / "sw", jobs=2)
    assert code == 1
    assert len(rows) == 6
    failed = [r for r in rows if r["status"] == "failed"]
    assert {r["alpha"] for r in failed} == {-1.0}
    assert all(r["exit_code"] == 64 for r in failed)
    for r in rows:
        if r["status"] == "ok":
            tip = [float(x) for x in r["tip_energy"].split(";")]
            assert all(a > b for a, b in zip(tip, tip[1:]))
    with open(tmp_path / "sw" / "aggregate.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 6


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path / "c.toml", model={"n": 2, "alpha": 3.0, "profile": "linear"})
    proc = subprocess.run([sys.executable, "-m", "radialcone", "check", "--config", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
