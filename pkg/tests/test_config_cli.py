import json
import math
from pathlib import Path

import numpy as np
import pytest

from qwalk_billiards import cli
from qwalk_billiards.cache import cache_path, get_or_compute
from qwalk_billiards.config import load_config, parse_angle, resolve_stages
from qwalk_billiards.errors import ConfigError, NumericalError
from qwalk_billiards.geometry import build_geometry
from qwalk_billiards.pipeline import compare, load_manifest, run
from qwalk_billiards.walker import CoinParameters, build_step_operator, read_operator_entries

PRESETS = Path(__file__).resolve().parent.parent / "presets"
SMOKE = PRESETS / "quarter_stadium_10x5_smoke.json"
SMOKE_RECT = PRESETS / "rectangle_10x5_smoke.json"


def test_parse_angle():
    assert parse_angle("pi/4") == pytest.approx(math.pi / 4)
    assert parse_angle("pi/3") == pytest.approx(math.pi / 3)
    assert parse_angle("3*pi/8") == pytest.approx(3 * math.pi / 8)
    assert parse_angle("pi") == pytest.approx(math.pi)
    assert parse_angle(0.25) == 0.25
    with pytest.raises(ConfigError):
        parse_angle("tau/4")


def test_resolve_stages_inserts_dependencies():
    assert resolve_stages(["stats"]) == ("spectrum", "stats")
    assert resolve_stages(["scars", "evolve"]) == ("evolve", "spectrum", "scars")
    assert resolve_stages(["pr", "stats", "spectrum"]) == ("spectrum", "stats", "pr")
    with pytest.raises(ConfigError):
        resolve_stages(["husimi"])


def test_all_presets_load():
    for preset in sorted(PRESETS.glob("*.json")):
        config = load_config(preset)
        assert config.stages
        assert 0 <= config.coins.alpha <= math.pi / 2


def test_config_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad.write_text(json.dumps({"geometry": {"kind": "rectangle", "m_R": 8, "n_U": 4}, "extra": 1}))
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text(
        json.dumps(
            {
                "geometry": {"kind": "rectangle", "m_R": 8, "n_U": 4},
                "coins": {"alpha": "pi", "beta": "pi/4"},
            }
        )
    )
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text(
        json.dumps(
            {
                "geometry": {"kind": "rectangle", "m_R": 8, "n_U": 4},
                "scars": {"orbit_file": "does_not_exist.json"},
            }
        )
    )
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_hash_ignores_directories(tmp_path):
    config = load_config(SMOKE)
    moved = load_config(SMOKE, output_dir=tmp_path / "elsewhere", cache_dir=tmp_path / "c")
    assert config.config_hash == moved.config_hash
    other = load_config(SMOKE_RECT)
    assert other.config_hash != config.config_hash


def test_start_site_center():
    config = load_config(PRESETS / "rectangle_150x75_evolution.json")
    assert config.start_site() == (75, 37)
    smoke = load_config(SMOKE)
    assert smoke.start_site() == (5, 2)


def test_run_writes_manifest_and_artifacts(tmp_path):
    config = load_config(SMOKE, output_dir=tmp_path / "out", cache_dir=tmp_path / "cache")
    manifest = run(config)
    assert set(manifest.stages) == {"evolve", "spectrum", "stats", "pr", "scars"}
    assert not manifest.partial
    for entry in manifest.artifacts:
        path = tmp_path / "out" / entry["path"]
        assert path.exists(), entry
        assert entry["config"] == config.config_hash
    for csv_file in (tmp_path / "out").glob("*.csv"):
        first = csv_file.read_text().splitlines()[0]
        assert first == f"# config={config.config_hash}"
        assert csv_file.with_suffix(csv_file.suffix + ".meta.json").exists()
    loaded = load_manifest(tmp_path / "out")
    assert loaded["config_hash"] == config.config_hash


def test_cache_roundtrip_and_corruption(tmp_path, caplog):
    g = build_geometry("quarter_stadium", 8, 4)
    op = build_step_operator(g, CoinParameters(math.pi / 4, math.pi / 4))
    dec1, hit1 = get_or_compute(tmp_path, op)
    assert not hit1
    dec2, hit2 = get_or_compute(tmp_path, op)
    assert hit2
    assert np.abs(dec1.eigenphases - dec2.eigenphases).max() < 1e-10
    assert np.abs(dec1.eigenvectors - dec2.eigenvectors).max() == 0.0

    path = cache_path(tmp_path, op.parameter_hash)
    path.write_bytes(path.read_bytes()[:100])  # truncate
    with caplog.at_level("WARNING"):
        dec3, hit3 = get_or_compute(tmp_path, op)
    assert not hit3
    assert "recomputing" in caplog.text
    assert np.abs(dec3.eigenphases - dec1.eigenphases).max() < 1e-10


def test_cli_stage_command(tmp_path):
    code = cli.main(
        [
            "stats",
            "--config",
            str(SMOKE),
            "--output-dir",
            str(tmp_path / "out"),
            "--cache-dir",
            str(tmp_path / "cache"),
        ]
    )
    assert code == 0
    assert (tmp_path / "out" / "spacing_histogram.csv").exists()
    assert (tmp_path / "out" / "spectral_fits.json").exists()


def test_cli_export_operator(tmp_path):
    code = cli.main(
        [
            "spectrum",
            "--config",
            str(SMOKE),
            "--output-dir",
            str(tmp_path / "out"),
            "--cache-dir",
            str(tmp_path / "cache"),
            "--export-operator",
        ]
    )
    assert code == 0
    dim, params, matrix = read_operator_entries(tmp_path / "out" / "operator.txt")
    assert dim == 112 == matrix.shape[0]  # 2 x 56 sites at (10, 5)


def test_cli_config_error_exit_code(tmp_path):
    assert cli.main(["stats", "--config", str(tmp_path / "nope.json")]) == 2


def test_cli_numerical_error_exit_code(monkeypatch):
    def boom(config):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["stats", "--config", str(SMOKE)]) == 3


def test_cli_compare_requires_manifests(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = cli.main(
        ["compare", "--config-a", str(SMOKE), "--config-b", str(SMOKE_RECT)]
    )
    assert code == 2


def test_cli_compare_run_missing(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = cli.main(
        [
            "compare",
            "--config-a",
            str(SMOKE),
            "--config-b",
            str(SMOKE_RECT),
            "--output-dir",
            "cmp",
            "--run-missing",
        ]
    )
    assert code == 0
    report = json.loads((tmp_path / "cmp" / "compare.json").read_text())
    metrics = {row["metric"] for row in report["rows"]}
    assert {"mean_pr", "delta", "rms_poisson", "scarring"} <= metrics
    assert (tmp_path / "cmp" / "compare.csv").exists()


def test_compare_self_is_all_zero(tmp_path):
    config = load_config(SMOKE, output_dir=tmp_path / "out", cache_dir=tmp_path / "cache")
    run(config)
    report = compare(tmp_path / "out", tmp_path / "out", tmp_path / "cmp")
    for row in report["rows"]:
        if row["delta"] is not None:
            assert row["delta"] == 0.0


def test_compare_incompatible_stages(tmp_path):
    config = load_config(
        PRESETS / "rectangle_150x75_evolution.json",
        output_dir=tmp_path / "evolve_only",
    )
    config = config.with_stages(["evolve"])
    # shrink the run so it stays fast
    import dataclasses

    from qwalk_billiards.config import EvolutionSettings, GeometrySettings

    config = dataclasses.replace(
        config,
        geometry=GeometrySettings(kind=config.geometry.kind, m_R=8, n_U=4),
        evolution=EvolutionSettings(start=(4, 2), steps=4, snapshot_times=(4,)),
    )
    run(config)
    with pytest.raises(ConfigError):
        compare(tmp_path / "evolve_only", tmp_path / "evolve_only", None)


def test_cli_selftest():
    assert cli.main(["selftest", "--seed", "20240801"]) == 0


def test_partial_manifest_on_failure(tmp_path):
    config = load_config(SMOKE, output_dir=tmp_path / "out", cache_dir=None)
    import dataclasses

    from qwalk_billiards.config import ScarSettings

    broken = dataclasses.replace(
        config,
        stages=("spectrum", "scars"),
        # populated PR window but an empty quantization ladder
        scars=ScarSettings(pr_window=(10.0, 60.0), k_min=-5.0, k_max=-4.0),
    )
    with pytest.raises(Exception):
        run(broken)
    manifest = load_manifest(tmp_path / "out")
    assert manifest["partial"] is True
    assert manifest["error"]
