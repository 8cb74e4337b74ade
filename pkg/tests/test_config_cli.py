"""Config ingestion and the CLI pipeline: validation diagnostics, caching,
determinism, manifest completeness."""

import hashlib
import json
from pathlib import Path

import pytest

from cnls.cli import main
from cnls.config import load_config
from cnls.errors import AdmissibilityError, ConfigurationError

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def _write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


GOOD = """
[couplings]
beta = 2.0
[potentials]
family = "constant"
[domain]
lambda_radius = 4.5
o_radius = 3.5
[landscape]
spacing = 0.875
[eps]
ladder = [0.3, 0.2, 0.1]
[grids]
landscape_n = 512
"""


def test_load_shipped_configs():
    for name in ("single_well.toml", "constant.toml", "two_well.toml",
                 "vanishing_point.toml"):
        cfg = load_config(CONFIGS / name)
        assert cfg.couplings.beta > cfg.beta0
        assert all(0.0 < e < cfg.eps_limit for e in cfg.eps_ladder)


def test_parse_error_carries_location(tmp_path):
    path = _write(tmp_path, "couplings = {beta = }")
    with pytest.raises(ConfigurationError) as err:
        load_config(path)
    assert "parse error" in str(err.value)


def test_missing_key_diagnostic(tmp_path):
    path = _write(tmp_path, "[potentials]\nfamily = 'constant'\n")
    with pytest.raises(ConfigurationError) as err:
        load_config(path)
    assert "couplings.beta" in str(err.value) or "domain" in str(err.value)


def test_beta_below_threshold_rejected(tmp_path):
    path = _write(tmp_path, GOOD.replace("beta = 2.0", "beta = 0.9"))
    with pytest.raises(AdmissibilityError):
        load_config(path)


def test_ladder_above_limit_rejected(tmp_path):
    path = _write(tmp_path, GOOD.replace("ladder = [0.3, 0.2, 0.1]",
                                         "ladder = [0.6]"))
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_cli_bad_config_exit_2(tmp_path, capsys):
    path = _write(tmp_path, GOOD.replace("beta = 2.0", "beta = 0.9"))
    rc = main(["landscape", "--config", str(path), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "AdmissibilityError"


def test_cli_oracle_cache(tmp_path):
    path = _write(tmp_path, GOOD)
    out = tmp_path / "out"
    assert main(["oracle", "--config", str(path), "--out", str(out),
                 "--log-level", "WARNING"]) == 0
    first = json.loads((out / "oracle.json").read_text())
    assert first["from_cache"] is False
    cache_files = list((out / "cache").glob("oracle_*.json"))
    assert len(cache_files) == 1
    before = cache_files[0].read_bytes()
    assert main(["oracle", "--config", str(path), "--out", str(out),
                 "--log-level", "WARNING"]) == 0
    second = json.loads((out / "oracle.json").read_text())
    assert second["from_cache"] is True
    assert second["energy"] == first["energy"]
    assert cache_files[0].read_bytes() == before


def test_cli_landscape_deterministic(tmp_path):
    path = _write(tmp_path, GOOD)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["landscape", "--config", str(path), "--out", str(out),
                     "--log-level", "WARNING"]) == 0
        outs.append((out / "landscape.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_ground_state_and_manifest(tmp_path):
    path = _write(tmp_path, GOOD)
    out = tmp_path / "out"
    assert main(["ground-state", "--config", str(path), "--out", str(out),
                 "--a-val", "1.0", "--b-val", "1.0",
                 "--log-level", "WARNING"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "ground-state"
    listed = {a["path"] for a in manifest["artifacts"]}
    assert {"ground_state.fsnap", "ground_state.json",
            "ground_state.csv"} <= listed
    for art in manifest["artifacts"]:
        blob = (out / art["path"]).read_bytes()
        assert hashlib.sha256(blob).hexdigest() == art["sha256"]
        assert len(blob) == art["bytes"]
    gs = json.loads((out / "ground_state.json").read_text())
    assert gs["strict_vector"] is True
    assert gs["residual"] <= 1e-8


def test_cli_full_pipeline(tmp_path):
    path = _write(tmp_path, GOOD + "\n")
    out = tmp_path / "all"
    assert main(["all", "--config", str(path), "--out", str(out),
                 "--log-level", "WARNING"]) == 0
    for name in ("oracle.json", "landscape.csv", "landscape.json",
                 "eps_series.csv", "verify_report.json", "decay_profile.csv",
                 "manifest.json"):
        assert (out / name).exists(), name
    report = json.loads((out / "verify_report.json").read_text())
    assert "band" in report and "tails" in report
    series = (out / "eps_series.csv").read_text().splitlines()
    assert series[0].startswith("eps,level,")
    # verify subcommand reloads the stored snapshots and reproduces itself
    assert main(["verify", "--config", str(path), "--out", str(out),
                 "--log-level", "WARNING"]) == 0
    report2 = json.loads((out / "verify_report.json").read_text())
    assert report2["band"]["rate"] == pytest.approx(report["band"]["rate"],
                                                    rel=1e-12)


def test_workers_env_override(tmp_path, monkeypatch):
    path = _write(tmp_path, GOOD)
    monkeypatch.setenv("CNLS_WORKERS", "2")
    out = tmp_path / "w"
    assert main(["landscape", "--config", str(path), "--out", str(out),
                 "--log-level", "WARNING"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["run"]["workers"] == 2
