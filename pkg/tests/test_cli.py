import os

import numpy as np
import pytest

from ermbridge.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from ermbridge.config import parse_config, recipe
from ermbridge.experiments import derived_seed, make_split, read_metrics, run_experiment

TINY = """
experiment = {exp}
seeds = 0
data.n_train = 64
data.n_test = 32
train.batch_size = 32
train.epochs = 3
train.hidden = 8
sample.steps = 20
metrics.n_projections = 20
"""


def write_cfg(tmp_path, exp="SwissRollToSCurve", extra=""):
    path = tmp_path / "run.cfg"
    path.write_text(TINY.format(exp=exp) + extra)
    return str(path)


def test_invalid_key_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("train.lr = 1e-3\ntrain.bogus = 1\n")
    assert main(["train", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_negative_lr_exits_nonzero(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("train.lr = -1\n")
    assert main(["experiment", "--config", str(path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["fly"])


def test_stepwise_pipeline(tmp_path):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "run")
    for cmd in ("generate", "train", "sample", "evaluate"):
        assert main([cmd, "--config", cfg, "--out", out]) == EXIT_OK, cmd
    seed_dir = os.path.join(out, "seed0")
    for name in ("x_train.csv", "y_terminal.csv", "loss_trace.csv", "potential.npz", "samples.csv"):
        assert os.path.exists(os.path.join(seed_dir, name)), name
    rows = read_metrics(os.path.join(out, "metrics.csv"))
    assert rows[0]["name"] == "sliced_w1_terminal" and float(rows[0]["value"]) > 0


def test_experiment_command_gauss_grid(tmp_path):
    cfg = write_cfg(tmp_path, "GaussGridShift", "sample.boxes = 1, 5\n")
    out = str(tmp_path / "gg")
    assert main(["experiment", "--config", cfg, "--out", out, "--plots"]) == EXIT_OK
    names = {r["name"] for r in read_metrics(os.path.join(out, "metrics.csv"))}
    assert {"sliced_w1_terminal", "sliced_w1_box1", "sliced_w1_box5"} <= names
    assert os.path.exists(os.path.join(out, "seed0", "samples_box5.csv"))
    assert os.path.exists(os.path.join(out, "seed0", "density.csv"))
    assert os.path.exists(os.path.join(out, "config.txt"))


def test_custom_data_flag(tmp_path):
    r = np.random.default_rng(0)
    src, tgt = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(src, r.normal(size=(120, 3)), delimiter=",")
    np.savetxt(tgt, r.normal(size=(120, 3)) + 1, delimiter=",")
    cfg = write_cfg(tmp_path, "CustomData")
    out = str(tmp_path / "custom")
    assert main(["experiment", "--config", cfg, "--out", out, "--data", str(src), str(tgt),
                 "--seed", "5"]) == EXIT_OK
    assert os.path.isdir(os.path.join(out, "seed5"))


def test_mismatched_custom_dimensions(tmp_path):
    r = np.random.default_rng(0)
    src, tgt = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(src, r.normal(size=(120, 3)), delimiter=",")
    np.savetxt(tgt, r.normal(size=(120, 2)), delimiter=",")
    cfg = write_cfg(tmp_path, "CustomData")
    assert main(["generate", "--config", cfg, "--out", str(tmp_path),
                 "--data", str(src), str(tgt)]) == EXIT_CONFIG


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_abort_exit_code(tmp_path):
    # an enormous learning rate drives the network to a non-finite loss
    cfg = write_cfg(tmp_path, extra="train.lr = 1e300\ntrain.optimizer = sgd\n")
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_NUMERIC


def test_split_is_seeded():
    cfg = parse_config(TINY.format(exp="GaussGridShift"))
    a, b, c = make_split(cfg, 0), make_split(cfg, 0), make_split(cfg, 1)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)
    assert derived_seed(0, "test") != derived_seed(1, "test")
    box = a.tests["box1"][0]
    assert np.all(np.abs(box) <= 1.0)


def test_bundled_surrogate_loads():
    cfg = recipe("CustomData")
    split = make_split(cfg, 0)
    assert split.X.shape == (cfg.data.n_train, 100)
    assert split.tests["terminal"][1].shape == (cfg.data.n_test, 100)


def test_run_experiment_summary_rows(tmp_path):
    cfg = parse_config(TINY.format(exp="SwissRollToSCurve"))
    cfg.seeds = [0, 1]
    cfg.out = str(tmp_path / "two")
    results = run_experiment(cfg)
    assert [r.seed for r in results] == [0, 1]
    rows = read_metrics(os.path.join(cfg.out, "metrics.csv"))
    seeds = {r["seed"] for r in rows}
    assert {"0", "1", "mean", "std"} <= seeds
    w = [float(r["value"]) for r in rows if r["name"] == "sliced_w1_terminal"]
    assert w[2] == pytest.approx((w[0] + w[1]) / 2)
