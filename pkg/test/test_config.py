"""Test run configuration files."""

import pytest

from sasv.Config import ConfigError, RunConfig, load_config, parse_config_text


def test_defaults():
    cfg = parse_config_text("", environ={})
    assert cfg.get("epochs") == 50
    assert cfg.get("n_speakers") == 8
    assert cfg.train_config().lambdas == (1.0, 0.1, 0.1, 0.2)
    assert cfg.dataset_config().seed == 0


def test_settings_and_comments():
    text = """
    # a small run
    n_speakers = 4   # speakers
    epochs=3
    learning_rate = 5e-4
    lambdas = 1.0, 0.0, 0.1, 0.2
    grl_ramp = yes
    normalize = off
    ablation = no-triplet
    """
    cfg = parse_config_text(text, environ={})
    train = cfg.train_config()
    assert cfg.dataset_config().n_speakers == 4
    assert train.epochs == 3
    assert train.learning_rate == 5e-4
    assert train.lambdas == (1.0, 0.0, 0.1, 0.2)
    assert train.grl_ramp is True
    assert train.normalize is False
    assert train.effective_lambdas() == (1.0, 0.0, 0.1, 0.0)


def test_unknown_key():
    with pytest.raises(ConfigError) as err:
        parse_config_text("epochs = 3\nwarmup = 5\n", environ={})
    assert "line 2" in str(err.value)
    assert "warmup" in str(err.value)
    with pytest.raises(ConfigError):
        RunConfig({"warmup": 5})


@pytest.mark.parametrize(
    "line",
    [
        "epochs = three",
        "epochs = 2.5",
        "grl_ramp = maybe",
        "lambdas = 1.0, 0.1",
        "mining =",
        "just some words",
    ],
)
def test_bad_lines(line):
    with pytest.raises(ConfigError):
        parse_config_text(line, environ={})


def test_invalid_values_are_rejected_early():
    with pytest.raises(ConfigError):
        parse_config_text("batch_size = 4", environ={})
    with pytest.raises(ConfigError):
        parse_config_text("n_speakers = 1", environ={})


def test_duplicate_key():
    with pytest.raises(ConfigError) as err:
        parse_config_text("seed = 1\nseed = 2\n", environ={})
    assert "duplicate" in str(err.value)


def test_seed_from_environment():
    cfg = parse_config_text("seed = 1", environ={"SASV_SEED": "42"})
    assert cfg.train_config().seed == 42
    assert cfg.dataset_config().seed == 42
    with pytest.raises(ConfigError):
        parse_config_text("", environ={"SASV_SEED": "x"})


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs = 2\n")
    assert load_config(str(path), environ={}).train_config().epochs == 2
    assert load_config(None, environ={}).train_config().epochs == 50
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.cfg"), environ={})
