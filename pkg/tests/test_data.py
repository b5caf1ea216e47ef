import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swsgp import data
from swsgp.errors import ConfigError, DataError, ParseError


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_fixture_values(tmp_path):
    ds = data.load_csv(write(tmp_path, "a,b,y\n1,2,3\n4.5,5,6\n-1,0.25,7\n"))
    np.testing.assert_array_equal(ds.X, [[1, 2], [4.5, 5], [-1, 0.25]])
    np.testing.assert_array_equal(ds.y, [3, 6, 7])
    assert ds.name == "d"


def test_target_column_by_name(tmp_path):
    ds = data.load_csv(write(tmp_path, "y,a\n1,2\n3,4\n"), target_column="y")
    np.testing.assert_array_equal(ds.y, [1, 3])
    np.testing.assert_array_equal(ds.X, [[2], [4]])


def test_parse_error_location(tmp_path):
    with pytest.raises(ParseError) as exc:
        data.load_csv(write(tmp_path, "a,y\n1,2\n3,oops\n"))
    assert (exc.value.row, exc.value.column) == (3, 2)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        data.load_csv(tmp_path / "nope.csv")


def test_label_remap(tmp_path):
    ds = data.load_csv(write(tmp_path, "a,y\n1,0\n2,1\n3,1\n"), task=data.CLASSIFICATION)
    np.testing.assert_array_equal(ds.y, [-1, 1, 1])


def test_bad_classification_labels():
    with pytest.raises(DataError):
        data.Dataset(np.zeros((2, 1)), np.array([0.0, 2.0]), data.CLASSIFICATION)


def test_non_finite_rejected():
    with pytest.raises(DataError):
        data.Dataset(np.array([[np.nan]]), np.array([1.0]))


def test_normalize_idempotent_on_standard_data(rng):
    X = rng.standard_normal((50, 3))
    X = (X - X.mean(0)) / X.std(0)
    y = rng.standard_normal(50)
    y = (y - y.mean()) / y.std()
    ds = data.normalize(data.Dataset(X, y))
    np.testing.assert_allclose(ds.X, X, atol=1e-12)
    np.testing.assert_allclose(ds.y, y, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_target_inverse_roundtrip(seed):
    r = np.random.default_rng(seed)
    raw = data.Dataset(r.standard_normal((20, 2)) * 5 + 3, r.standard_normal(20) * 7 - 2)
    ds = data.normalize(raw)
    np.testing.assert_allclose(ds.inverse_targets(ds.y), raw.y, atol=1e-12)
    np.testing.assert_allclose(ds.inverse_inputs(ds.X), raw.X, atol=1e-12)


def test_constant_column(caplog):
    ds = data.normalize(data.Dataset(np.array([[1.0, 2.0], [1.0, 3.0]]), np.array([1.0, 2.0])))
    np.testing.assert_array_equal(ds.X[:, 0], 0.0)
    assert ds.feature_stds[0] == 1.0
    assert "constant" in caplog.text


def test_double_normalize_rejected(rng):
    ds = data.normalize(data.Dataset(rng.standard_normal((4, 1)), rng.standard_normal(4)))
    with pytest.raises(DataError):
        data.normalize(ds)


def test_reference_statistics(rng):
    train = data.normalize(data.Dataset(rng.standard_normal((30, 2)), rng.standard_normal(30)))
    test = data.normalize(data.Dataset(rng.standard_normal((5, 2)) + 1, rng.standard_normal(5)), reference=train)
    assert test.target_mean == train.target_mean
    np.testing.assert_array_equal(test.feature_means, train.feature_means)


def test_metrics_preserved_in_original_units(rng):
    raw = data.Dataset(rng.standard_normal((40, 1)), rng.standard_normal(40) * 3 + 10)
    ds = data.normalize(raw)
    pred = ds.y + 0.1 * rng.standard_normal(40)
    direct = np.sqrt(np.mean((ds.inverse_targets(pred) - raw.y) ** 2))
    assert direct == pytest.approx(ds.target_std * np.sqrt(np.mean((pred - ds.y) ** 2)), rel=1e-10)


def test_folds_partition(rng):
    ds = data.Dataset(np.arange(23.0)[:, None], np.arange(23.0))
    tests = [data.split_folds(ds, 10, k, seed=4)[1] for k in range(10)]
    assert sorted(np.concatenate([t.y for t in tests]).tolist()) == list(range(23))
    tr, te = data.split_folds(ds, 10, 2, seed=4)
    assert set(tr.y) | set(te.y) == set(range(23)) and not set(tr.y) & set(te.y)


def test_folds_deterministic_and_sizes():
    ds = data.Dataset(np.arange(10.0)[:, None], np.arange(10.0))
    a = data.split_folds(ds, 2, 0, seed=1)[1].y
    b = data.split_folds(ds, 2, 0, seed=1)[1].y
    np.testing.assert_array_equal(a, b)
    assert sorted(len(data.split_folds(ds, 2, k)[1].y) for k in range(2)) == [5, 5]


def test_fold_index_out_of_range():
    ds = data.Dataset(np.zeros((4, 1)), np.zeros(4))
    with pytest.raises(ConfigError):
        data.split_folds(ds, 2, 2)


def test_stratified_folds_balanced(rng):
    y = np.where(rng.random(500) < 0.3, 1.0, -1.0)
    ds = data.Dataset(rng.standard_normal((500, 1)), y, data.CLASSIFICATION)
    expected = (y == 1).sum() / 10
    for k in range(10):
        te = data.split_folds(ds, 10, k, seed=0)[1]
        assert abs((te.y == 1).sum() - expected) <= 5


def test_synthetic_empty_and_reproducible():
    assert data.synthetic_1d(0).N == 0
    a, b = data.synthetic_1d(50, seed=3), data.synthetic_1d(50, seed=3)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    assert np.all((a.X >= -3) & (a.X <= 3))


def test_synthetic_noise_variance():
    ds = data.synthetic_1d(100_000, seed=0)
    resid = ds.y - data.synthetic_function(ds.X[:, 0])
    assert resid.var() == pytest.approx(data.SYNTHETIC_NOISE_VARIANCE, rel=0.05)


def test_subsample(rng):
    ds = data.synthetic_1d(100, seed=0)
    sub = data.subsample(ds, 10, seed=1)
    assert sub.N == 10
    np.testing.assert_array_equal(sub.X, data.subsample(ds, 10, seed=1).X)
    assert data.subsample(ds, 1000) is ds


def test_manifest(tmp_path):
    write(tmp_path, "a,y\n1,0\n2,1\n", "c.csv")
    man = write(tmp_path, '{"toy": {"path": "c.csv", "task": "classification"}}', "m.json")
    ds = data.load_named("toy", manifest=data.read_manifest(man))
    np.testing.assert_array_equal(ds.y, [-1, 1])
    with pytest.raises(ConfigError):
        data.load_named("missing", manifest={})
