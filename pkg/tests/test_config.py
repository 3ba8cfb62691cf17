import pytest

from ermbridge.config import (KEY_TYPES, Experiment, copy_config, parse_config, recipe,
                              serialize, validate)
from ermbridge.errors import ConfigError


@pytest.mark.parametrize("exp", list(Experiment))
def test_serialize_round_trip(exp):
    cfg = recipe(exp)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)


def test_every_key_is_serialized():
    keys = {line.split(" = ")[0] for line in serialize(recipe("GaussGridShift")).splitlines()}
    assert keys == set(KEY_TYPES)


def test_overrides_and_comments():
    text = """
    # a comment
    experiment = GaussGridShift
    train.lr = 1e-3   # trailing comment
    sample.boxes = 1, 3
    seeds = 4
    """
    cfg = parse_config(text)
    assert cfg.experiment is Experiment.GAUSS_GRID
    assert cfg.train.lr == 1e-3
    assert cfg.sample.boxes == [1.0, 3.0]
    assert cfg.seeds == [4]
    assert cfg.train.batch_size == recipe("GaussGridShift").train.batch_size


def test_default_experiment_is_swiss_roll():
    assert parse_config("").experiment is Experiment.SWISS_ROLL


@pytest.mark.parametrize("text,line", [
    ("train.lr = 1e-3\ntrain.learning_rate = 2", 2),
    ("train.lr = 1e-3\n\ntrain.lr = 2e-3", 3),
    ("train.epochs = many", 1),
    ("experiment = Unknown", 1),
    ("just words", 1),
    ("seeds = 0\ntrain.lr = -1e-3", 2),
    ("kernel.sigma_end = 0\n", 1),
    ("sample.steps = 10\nsample.snapshots = 0, 0.25", 2),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_negative_lr_message():
    with pytest.raises(ConfigError, match="train.lr"):
        parse_config("train.lr = -0.1")


def test_validate_catches_snapshot_range():
    cfg = recipe("SwissRollToSCurve")
    cfg.sample.snapshots = [0.0, 1.5]
    with pytest.raises(ConfigError):
        validate(cfg)


def test_kernel_variance_derivation():
    cfg = recipe("GaussGridShift")
    assert cfg.kernel_variance == pytest.approx(cfg.kernel.sigma_end ** 2 * cfg.kernel.horizon)
    cfg.kernel.variance = 2.5
    assert cfg.kernel_variance == 2.5


def test_copy_is_deep():
    a = recipe("GaussGridShift")
    b = copy_config(a)
    b.sample.boxes.append(9.0)
    b.train.lr = 1.0
    assert a.sample.boxes == [1.0, 2.0, 5.0] and a.train.lr == 5e-4
