import pytest

from radialcone.config import DIAGNOSTIC_CHECKS, RunConfig
from radialcone.errors import ConfigError


def test_defaults_round_trip_through_toml():
    cfg = RunConfig()
    again = RunConfig.from_toml(cfg.to_toml())
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


def test_round_trip_keeps_every_edited_value():
    cfg = RunConfig().replace("model", n=2, alpha=3.0, profile="power", profile_params={"exponent": 2.0})
    cfg = cfg.replace("solver", blowup_threshold=5.0, apex=0.75, snapshot_stride=4)
    cfg = cfg.replace("sweep", parameters={"amplitude": [1e-3, 1e-2]})
    assert RunConfig.from_toml(cfg.to_toml()) == cfg


def test_shipped_default_matches_code_defaults(tmp_path):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / "default.toml"
    assert RunConfig.load(path) == RunConfig()


@pytest.mark.parametrize("text,where", [
    ("[model]\ndimension = 3\n", "model.dimension"),
    ("[grid]\nh = 0.01\nspacing = 2\n", "grid.spacing"),
    ("[plots]\nx = 1\n", "plots"),
    ("[solver]\ncfl = 'fast'\n", "solver.cfl"),
    ("[model]\nn = 2.5\n", "model.n"),
    ("[diagnostics]\nchecks = ['energy_flux', 'vibes']\n", "diagnostics.checks"),
    ("[diagnostics]\nregions = [[1.0, 0.5]]\n", "diagnostics.regions[0]"),
    ("[sweep.parameters]\nwidth = [0.1]\n", "sweep.parameters.width"),
])
def test_bad_keys_are_rejected_with_location(text, where):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_toml(text)
    assert where in str(info.value)


def test_grid_spacing_or_count():
    cfg = RunConfig.from_toml("[grid]\nR = 2.0\nJ = 256\n")
    assert cfg.grid.h is None and cfg.grid.spacing() == 2.0 / 256
    with pytest.raises(ConfigError):
        RunConfig.from_toml("[grid]\nh = 0.01\nJ = 256\n")


def test_integers_coerce_to_floats():
    cfg = RunConfig.from_toml("[model]\nalpha = 4\n[grid]\nR = 2\n")
    assert isinstance(cfg.model.alpha, float) and isinstance(cfg.grid.R, float)


def test_unparseable_and_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_toml("[model\n")
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.toml")


def test_report_view_excludes_run_local_sections():
    d = RunConfig().to_dict(include_run_local=False)
    assert "output" not in d and "sweep" not in d
    assert d["diagnostics"]["checks"] == list(DIAGNOSTIC_CHECKS)
