import pytest

from tenuniq.config import DEFAULT_R_CAP, Settings, load_settings, log_level, max_workers
from tenuniq.exceptions import ConfigError


def test_defaults_without_file():
    settings = load_settings(None)
    assert settings == Settings()
    assert settings.r_cap == DEFAULT_R_CAP


def test_yaml_overrides(tmp_path):
    path = tmp_path / "tenuniq.yaml"
    path.write_text("r_cap: 40\nfalsify_trials: 16\n")
    settings = load_settings(str(path))
    assert settings.r_cap == 40 and settings.falsify_trials == 16
    assert settings.rank_tol == Settings().rank_tol


@pytest.mark.parametrize("body", ["unknown_key: 1\n", "- 1\n- 2\n", "r_cap: 0\n", "r_cap: [\n"])
def test_bad_config_files(tmp_path, body):
    path = tmp_path / "bad.yaml"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_settings(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "absent.yaml"))


def test_empty_config_file(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_settings(str(path)) == Settings()


def test_environment(monkeypatch):
    monkeypatch.setenv("TENUNIQ_THREADS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("TENUNIQ_THREADS", "zero")
    assert max_workers() >= 1
    monkeypatch.setenv("TENUNIQ_LOG_LEVEL", "debug")
    assert log_level() == "DEBUG"
