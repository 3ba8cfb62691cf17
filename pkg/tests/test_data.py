import numpy as np
import pytest
from scipy import stats

from ermbridge.data import (PointCloud, gaussian_grid_mixture, load_columnar, make_rng,
                            s_curve, save_columnar, single_cell_surrogate, swiss_roll,
                            truncated_normal)
from ermbridge.errors import ParseError, UsageError


def test_point_cloud_rejects_bad_input():
    with pytest.raises(UsageError):
        PointCloud(np.array([[np.nan, 0.0]]))
    with pytest.raises(UsageError):
        PointCloud(np.zeros((2, 2, 2)))
    with pytest.raises(UsageError):
        PointCloud(np.zeros((0, 2)))
    assert PointCloud(np.zeros(3)).points.shape == (3, 1)


def test_swiss_roll_radius_and_determinism():
    a = swiss_roll(1000, noise=0.0, seed=4)
    assert np.all(np.linalg.norm(a.points, axis=1) <= 1.05)
    np.testing.assert_array_equal(a.points, swiss_roll(1000, 0.0, 4).points)
    with pytest.raises(UsageError):
        swiss_roll(0)


def test_s_curve_range():
    c = s_curve(2000, noise=0.0, seed=1)
    assert np.all(np.abs(c.points[:, 1]) <= 1.0)
    assert np.all(np.abs(c.points[:, 0]) <= 0.5)
    np.testing.assert_array_equal(c.points, s_curve(2000, 0.0, 1).points)


def test_grid_mixture():
    one = gaussian_grid_mixture(side=1, n=5000, seed=0)
    assert np.abs(one.points.mean(axis=0)).max() < 0.1
    big = gaussian_grid_mixture(side=5, spacing=4.0, n=10000, seed=2)
    assert np.abs(big.points.mean(axis=0)).max() < 0.15
    np.testing.assert_array_equal(big.points, gaussian_grid_mixture(5, 4.0, 10000, 2).points)


def test_truncated_normal_wide_box_acceptance():
    _, rate = truncated_normal(2000, -10, 10, seed=0, dim=1, return_rate=True)
    assert rate > 0.9999


def test_truncated_normal_variance_and_ks():
    c = truncated_normal(50000, -1, 1, seed=3, dim=1)
    assert abs(c.points.var() - 0.2911) < 0.01
    assert np.all(np.abs(c.points) <= 1)
    dist = stats.truncnorm(-1, 1)
    assert stats.kstest(c.points[:, 0], dist.cdf).pvalue > 0.001
    with pytest.raises(UsageError):
        truncated_normal(10, 1, 1)


def test_streams_are_independent():
    a = make_rng(5, "a").standard_normal(4)
    b = make_rng(5, "b").standard_normal(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, make_rng(5, "a").standard_normal(4))
    with pytest.raises(UsageError):
        make_rng(-1)


def test_columnar_round_trip(tmp_path, rng):
    pts = PointCloud(rng.normal(size=(17, 3)) * 1e3)
    path = tmp_path / "p.csv"
    save_columnar(path, pts)
    back = load_columnar(path)
    np.testing.assert_allclose(back.points, pts.points, rtol=1e-12)


def test_columnar_small_file(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,0\n1,2\n")
    np.testing.assert_array_equal(load_columnar(p).points, [[0, 0], [1, 2]])


@pytest.mark.parametrize("text,line", [
    ("x,y\n0,0\n", 1),
    ("0,0\n1\n", 2),
    ("0,0\n\n1,1\n", 2),
    ("0,0\n1,abc\n", 2),
    ("", 1),
])
def test_columnar_errors_name_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError) as err:
        load_columnar(p)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_surrogate_shapes():
    s, t = single_cell_surrogate(300, dim=100, seed=1)
    assert s.points.shape == (300, 100) and t.points.shape == (300, 100)
    assert np.all(np.isfinite(s.points))
