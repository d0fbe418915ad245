from __future__ import annotations

import json
from pathlib import Path

from nonholo.core import paths
from nonholo.core.settings import Settings, load_settings, save_settings


def test_missing_file_writes_defaults(tmp_path: Path) -> None:
    path = tmp_path / "conf" / "settings.json"
    settings = load_settings(path)
    assert settings == Settings()
    assert json.loads(path.read_text(encoding="utf-8"))["fiber_radius"] == 10.0


def test_round_trip_and_unknown_keys(tmp_path: Path) -> None:
    path = tmp_path / "settings.json"
    save_settings(Settings(drift_tol=1e-6, ledger_path="runs.db", workers=2), path)
    loaded = load_settings(path)
    assert loaded.drift_tol == 1e-6 and loaded.ledger_path == "runs.db" and loaded.workers == 2

    path.write_text(json.dumps({"fiber_samples": 8, "theme": "dark"}), encoding="utf-8")
    loaded = load_settings(path)
    assert loaded.fiber_samples == 8
    assert loaded.default_seed == Settings().default_seed


def test_corrupt_file_falls_back_to_defaults(tmp_path: Path) -> None:
    path = tmp_path / "settings.json"
    path.write_text("{not json", encoding="utf-8")
    assert load_settings(path) == Settings()
    # left untouched for the user to repair
    assert path.read_text(encoding="utf-8") == "{not json"
    path.write_text("[1, 2]", encoding="utf-8")
    assert load_settings(path) == Settings()


def test_home_override(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.setenv("NONHOLO_HOME", str(tmp_path))
    assert paths.settings_path() == tmp_path.resolve() / "settings.json"
    monkeypatch.delenv("NONHOLO_HOME")
    assert paths.settings_path() == paths.base_path() / "settings.json"
    assert (paths.scenarios_dir() / "veselova-affine.cfg").exists()
