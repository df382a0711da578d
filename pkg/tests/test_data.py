import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussmix.data import (load_csv, normalize_train_test, synth_gaussian_subspace, synth_mlp,
                           synth_two_gaussians, synth_uniform, train_test_split, write_csv)
from gaussmix.errors import DegenerateError, ParseError
from gaussmix.regression import LabeledDataset
from gaussmix.rng import RngStream


def test_load_toy(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("a,b,y\n1,2,3\n4.5,-1,0\n0,0,1e-3\n")
    data = load_csv(p)
    assert np.array_equal(data.X, [[1, 2], [4.5, -1], [0, 0]])
    assert np.array_equal(data.Y, [3, 0, 1e-3])


@pytest.mark.parametrize("body,row,col", [("a,b,y\n1,2,3\n4,x,0\n", 3, 2), ("a,b,y\n1,2\n", 2, None)])
def test_parse_errors(tmp_path, body, row, col):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert err.value.row == row and err.value.column == col
    if col:
        assert "'x'" in str(err.value) and "(b)" in str(err.value)


def test_empty_files(tmp_path):
    for body in ("", "a,y\n"):
        p = tmp_path / "e.csv"
        p.write_text(body)
        with pytest.raises(ParseError):
            load_csv(p)


@given(arrays(np.float64, (4, 3), elements=st.floats(-1e6, 1e6, allow_subnormal=False)))
def test_round_trip_lossless(tmp_path_factory, M):
    if not np.abs(M[:, :2]).any() or not np.abs(M[:, 2]).any():
        return
    data = LabeledDataset.from_arrays(M[:, :2], M[:, 2])
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(data, p)
    back = load_csv(p)
    assert np.array_equal(back.X, data.X) and np.array_equal(back.Y, data.Y)


class TestNormalize:
    def test_scale_and_test_rows(self):
        tr = LabeledDataset.from_arrays(np.array([[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), np.ones(3))
        with pytest.warns(UserWarning, match="underdetermined"):
            te = LabeledDataset.from_arrays(np.array([[4.0, 0.0]]), np.ones(1), allow_underdetermined=True)
            tr2, te2, scale = normalize_train_test(tr, te)
        assert scale == 2.0
        assert np.linalg.norm(tr2.X, axis=1).max() == pytest.approx(1.0)
        assert np.linalg.norm(te2.X[0]) == pytest.approx(2.0)
        assert np.array_equal(tr2.Y, tr.Y) and tr2.c_y == 1.0

    def test_idempotent(self):
        tr = synth_uniform(100, 5, 0)
        a, ta, _ = normalize_train_test(tr, tr)
        b, tb, s = normalize_train_test(a, ta)
        assert s == pytest.approx(1.0) and np.allclose(a.X, b.X)

    def test_degenerate(self):
        z = LabeledDataset(np.zeros((3, 2)), np.ones(3), 1.0, 1.0)
        with pytest.raises(DegenerateError):
            normalize_train_test(z, z)


def test_split():
    data = synth_uniform(101, 3, 4)
    tr, te = train_test_split(data, 0.8, RngStream(2))
    assert (tr.n, te.n) == (81, 20)
    both = np.vstack([tr.X, te.X])
    assert np.array_equal(np.sort(both, axis=0), np.sort(data.X, axis=0))
    tr2, _ = train_test_split(data, 0.8, RngStream(2))
    assert np.array_equal(tr.X, tr2.X)
    with pytest.raises(ValueError):
        train_test_split(data, 1.0, 0)


class TestGenerators:
    def test_gaussian_subspace_structure(self):
        data, params = synth_gaussian_subspace(300, 20, 4, rng=1, return_params=True)
        assert np.linalg.matrix_rank(data.X) <= 4
        Q = params["basis"]
        assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-10)
        with pytest.raises(ValueError):
            synth_gaussian_subspace(10, 3, 4)

    def test_gaussian_subspace_variance(self):
        data, p = synth_gaussian_subspace(100_000, 16, 4, 0.1, rng=3, return_params=True)
        want = np.sum((p["basis"].T @ p["theta0"]) ** 2) + 0.01 / 3
        assert np.var(data.Y) == pytest.approx(want, rel=0.05)

    def test_mlp(self):
        a = synth_mlp(4096, 512, rng=2)
        assert a.X.min() > 0 and a.X.max() < 1
        assert np.array_equal(a.X, synth_mlp(4096, 512, rng=2).X)
        s = np.linalg.svd(a.X - a.X.mean(axis=0), compute_uv=False) ** 2
        energy = np.cumsum(s) / s.sum()
        # two latent dimensions: the spectrum collapses fast, but five values give about 94%
        assert energy[4] >= 0.93
        assert np.searchsorted(energy, 0.99) + 1 <= 16

    def test_uniform(self):
        a = synth_uniform(4000, 8, rng=5)
        assert np.abs(a.X).max() <= 1
        assert np.all(np.abs(a.X.mean(axis=0)) <= 3 * np.sqrt(1 / 3 / 4000))
        assert np.array_equal(a.Y, synth_uniform(4000, 8, rng=5).Y)

    def test_two_gaussians(self):
        a = synth_two_gaussians(4000, 32, 2.0, rng=0)
        assert set(np.unique(a.Y)) == {-1.0, 1.0}
        assert abs(np.mean(a.Y)) < 0.05
