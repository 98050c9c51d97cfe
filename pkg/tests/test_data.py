import math
import warnings

import numpy as np
import pytest

from vqc_lottery.data import Dataset, load_builtin, load_csv, prepare, save_csv, scale_features, simplify, split
from vqc_lottery.errors import ConfigError, ContractError, ParseError, SchemaError


def test_builtin_shapes():
    iris = load_builtin("iris")
    assert (len(iris), iris.n_features, iris.n_classes) == (150, 4, 3)
    assert list(np.bincount(iris.labels)) == [50, 50, 50]
    wine = load_builtin("wine")
    assert (len(wine), wine.n_features, wine.n_classes) == (178, 13, 3)
    assert list(np.bincount(wine.labels)) == [59, 71, 48]


def test_simplified_variants():
    iris2 = load_builtin("iris2")
    assert (len(iris2), iris2.n_classes) == (100, 2)
    wine2 = load_builtin("wine2")
    assert (len(wine2), wine2.n_classes) == (130, 2)
    with pytest.raises(ContractError):
        simplify(iris2)


def test_unknown_builtin():
    with pytest.raises(ConfigError):
        load_builtin("mnist")


def test_load_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError):
        load_csv(empty)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2,a\n1,b\n")
    with pytest.raises(SchemaError, match=":2:"):
        load_csv(ragged)
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,a\n1,x,b\n")
    with pytest.raises(ParseError, match=":2:"):
        load_csv(bad)


def test_load_csv_header_and_label_order(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("cls,f1,f2\n10,1,2\n9,3,4\n10,5,6\n")
    ds = load_csv(f, label_column="cls", header=True)
    assert ds.class_names == ("9", "10")
    assert list(ds.labels) == [1, 0, 1]
    np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])


def test_save_load_round_trip(tmp_path):
    ds = load_builtin("iris")
    save_csv(ds, tmp_path / "iris.csv")
    back = load_csv(tmp_path / "iris.csv")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_scaling():
    ds = Dataset(np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]]), np.array([0, 1, 0]), 2)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        out = scale_features(ds)
    np.testing.assert_allclose(out.features[:, 0], [0, math.pi / 2, math.pi])
    np.testing.assert_allclose(out.features[:, 1], math.pi / 2)
    already = Dataset(np.array([[0.0], [math.pi]]), np.array([0, 1]), 2)
    np.testing.assert_allclose(scale_features(already).features, already.features)


def test_constant_column_warns():
    ds = Dataset(np.ones((3, 1)), np.array([0, 1, 0]), 2)
    with pytest.warns(UserWarning):
        scale_features(ds)


def test_stratified_split_sizes():
    iris = load_builtin("iris")
    s = split(iris, 0.8, seed=3)
    assert (len(s.train), len(s.validation)) == (120, 30)
    assert list(np.bincount(iris.labels[s.train])) == [40, 40, 40]
    assert list(np.bincount(iris.labels[s.validation])) == [10, 10, 10]
    assert not set(s.train) & set(s.validation)
    s2 = split(iris, 0.8, seed=3)
    np.testing.assert_array_equal(s.train, s2.train)
    assert not np.array_equal(split(iris, 0.8, seed=4).train, s.train)


def test_split_two_per_class():
    ds = Dataset(np.arange(4.0)[:, None], np.array([0, 0, 1, 1]), 2)
    s = split(ds, 0.5, seed=0)
    assert len(s.train) == 2 and len(s.validation) == 2
    assert sorted(ds.labels[s.train]) == [0, 1]


def test_split_contracts():
    ds = Dataset(np.arange(3.0)[:, None], np.array([0, 1, 1]), 2)
    with pytest.raises(ContractError):
        split(ds, 0.8)
    with pytest.raises(ContractError):
        split(load_builtin("iris"), 1.0)


def test_prepare_uses_training_statistics():
    data = prepare(load_builtin("wine"), seed=1)
    assert data.train.features.min() == pytest.approx(0.0)
    assert data.train.features.max() == pytest.approx(math.pi)
    np.testing.assert_allclose(data.train.features.min(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(data.train.features.max(axis=0), math.pi, atol=1e-12)
