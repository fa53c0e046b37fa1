import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow import (Dataset, KMeansBinEncoder, SplitSpec, fit_encoder, load_dataset, make_split,
                   train_histogram)
from qflow.dataenc import (DegenerateFeatureError, Split, encode_sample, kmeans_1d, nearest_bin,
                           read_uci_csv)
from qflow.qstate import measurement_distribution


def brute_force_kmeans(x, k):
    """Optimal 1-D clustering by enumerating every split of the sorted values."""
    xs = np.sort(x)
    best, best_cuts = math.inf, None
    for cuts in itertools.combinations(range(1, len(xs)), k - 1):
        groups = np.split(xs, cuts)
        sse = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
        if sse < best - 1e-12:
            best, best_cuts = sse, cuts
    groups = np.split(xs, best_cuts)
    centers = np.array([g.mean() for g in groups])
    labels = np.concatenate([np.full(len(g), i) for i, g in enumerate(groups)])
    order = np.argsort(x, kind="stable")
    out = np.empty(len(x), dtype=int)
    out[order] = labels
    return centers, out


def test_kmeans_examples():
    np.testing.assert_allclose(kmeans_1d([1, 2, 10, 11, 20, 21], 3), [1.5, 10.5, 20.5])
    np.testing.assert_allclose(kmeans_1d([0, 0, 0, 1, 1, 1], 2), [0, 1])


def test_kmeans_matches_brute_force_on_random_sets():
    rng = np.random.default_rng(0)
    for _ in range(20):
        k = int(rng.integers(2, 5))
        n = int(rng.integers(k + 2, 14))
        x = np.concatenate([rng.normal(loc=rng.uniform(-10, 10), size=n // 2),
                            rng.exponential(3.0, size=n - n // 2)])
        centers, labels = brute_force_kmeans(x, k)
        ours = kmeans_1d(x, k)
        np.testing.assert_array_equal(nearest_bin(x, ours), labels)
        np.testing.assert_allclose(ours, centers, atol=1e-9)


def test_kmeans_result_is_lloyd_fixed_point():
    rng = np.random.default_rng(1)
    x = rng.normal(size=200)
    c = kmeans_1d(x, 3)
    assign = nearest_bin(x, c)
    np.testing.assert_allclose([x[assign == b].mean() for b in range(3)], c, atol=1e-10)


def test_kmeans_degenerate_feature():
    with pytest.raises(DegenerateFeatureError):
        kmeans_1d([1, 1, 2], 3)
    with pytest.raises(DegenerateFeatureError):
        fit_encoder(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]), 3)


def test_nearest_bin_tie_goes_low():
    assert nearest_bin(np.array([1.0]), np.array([0.0, 2.0]))[0] == 0


def test_iris_encoder_shape(iris, iris12_split):
    enc = fit_encoder(iris12_split.train(iris), 3)
    assert enc.centroids_.shape == (4, 3)
    assert (enc.binary_dim_, enc.num_qubits_, enc.dim_) == (12, 4, 16)
    assert np.all(np.diff(enc.centroids_, axis=1) > 0)


def test_iris_rows_encode_to_four_halves(iris, iris12_split):
    enc = fit_encoder(iris12_split.train(iris), 3)
    for row in iris.features:
        amps = encode_sample(enc, row).amplitudes
        nz = np.flatnonzero(amps)
        assert nz.size == 4 and np.all(nz < 12)
        np.testing.assert_allclose(amps[nz], 0.5, atol=1e-15)


def test_wine_with_constant_column_matches_table_dims(wine):
    ds = load_dataset("wine", append_constant=True)
    split = make_split(ds, SplitSpec(1, 2))
    enc = KMeansBinEncoder(n_bins=2, allow_degenerate=True).fit(split.train(ds))
    assert (enc.binary_dim_, enc.num_qubits_) == (28, 5)
    amps = enc.encode_sample(ds.features[0]).amplitudes
    assert amps.shape == (32,)
    nz = np.flatnonzero(amps)
    assert nz.size == 14
    np.testing.assert_allclose(amps[nz], 1 / math.sqrt(14))


def test_wine_default_dims(wine):
    assert wine.n_features == 13
    enc = fit_encoder(make_split(wine, SplitSpec(2, 3)).train(wine), 2)
    assert (enc.binary_dim_, enc.num_qubits_) == (26, 5)


def test_equidistant_value_takes_lower_bin():
    enc = fit_encoder(np.array([[0.0], [0.0], [2.0], [2.0]]), 2)
    assert enc.bins(np.array([[1.0]]))[0, 0] == 0


def test_histogram_examples():
    enc = fit_encoder(np.array([[0.0, 0.0], [1.0, 5.0], [2.0, 9.0]]), 3)
    nhist, X = train_histogram(enc, np.array([[0.0, 9.0]]))
    assert set(np.flatnonzero(nhist.probs)) == {0, 5}
    np.testing.assert_allclose(nhist.probs[[0, 5]], 0.5)
    nhist, _ = enc.histogram(np.array([[0.0, 0.0], [2.0, 9.0]]))
    np.testing.assert_allclose(nhist.probs[np.flatnonzero(nhist.probs)], 0.25)
    assert np.count_nonzero(nhist.probs) == 4


def test_iris_histogram_matches_direct_average(iris, iris12_split):
    train = iris12_split.train(iris)
    enc = fit_encoder(train, 3)
    nhist, X = enc.histogram(train)
    counts = np.zeros(16)
    for row in train:
        for f, value in enumerate(row):
            counts[f * 3 + int(np.argmin(np.abs(enc.centroids_[f] - value)))] += 1
    np.testing.assert_allclose(nhist.probs, counts / counts.sum(), atol=1e-15)
    assert abs(nhist.probs.sum() - 1) < 1e-12
    assert np.count_nonzero(nhist.probs) <= 12
    np.testing.assert_allclose(measurement_distribution(X).probs, nhist.probs, atol=1e-12)


def test_encoder_is_permutation_invariant(iris, iris12_split):
    train = iris12_split.train(iris)
    a = fit_encoder(train, 3).centroids_
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(len(train))
        np.testing.assert_array_equal(fit_encoder(train[perm], 3).centroids_, a)


@settings(max_examples=200, deadline=None)
@given(row=st.lists(st.floats(-100, 100), min_size=4, max_size=4))
def test_encoding_has_f_equal_amplitudes(iris, row):
    enc = fit_encoder(iris.features[iris.labels == 1], 3)
    amps = enc.encode_sample(row).amplitudes
    nz = np.flatnonzero(amps)
    assert nz.size == 4
    np.testing.assert_allclose(amps[nz], 0.5, atol=1e-15)
    assert {int(i) // 3 for i in nz} == {0, 1, 2, 3}


def test_encoder_round_trips_through_dict(iris, iris12_split):
    enc = fit_encoder(iris12_split.train(iris), 3)
    back = KMeansBinEncoder.from_dict(enc.to_dict())
    np.testing.assert_array_equal(back.centroids_, enc.centroids_)
    np.testing.assert_array_equal(back.transform(iris.features), enc.transform(iris.features))


def test_encoder_feature_count_checked(iris, iris12_split):
    enc = fit_encoder(iris12_split.train(iris), 3)
    with pytest.raises(ValueError):
        enc.encode_sample([1.0, 2.0])
    with pytest.raises(ValueError):
        enc.transform(np.ones((2, 5)))


def test_encoder_get_params():
    assert KMeansBinEncoder(n_bins=4).get_params() == {"n_bins": 4, "allow_degenerate": False}


def test_table_split_counts(iris, wine):
    assert make_split(iris, SplitSpec(1, 2)).counts == (25, 25, 50)
    assert make_split(iris, SplitSpec(2, 3)).counts == (25, 25, 50)
    assert make_split(wine, SplitSpec(2, 3)).counts[0] == 35
    assert make_split(wine, SplitSpec(1, 2)).counts[0] == 29


def test_split_roles_are_disjoint_and_labelled(iris):
    split = make_split(iris, SplitSpec(1, 2, seed=3))
    assert not set(split.train_idx) & set(split.test_idx)
    assert np.all(iris.labels[split.train_idx] == 1)
    np.testing.assert_array_equal(iris.labels[split.test_idx] == 2, split.test_is_anomaly)


def test_split_is_seeded(iris):
    a = make_split(iris, SplitSpec(1, 2, seed=1))
    b = make_split(iris, SplitSpec(1, 2, seed=1))
    c = make_split(iris, SplitSpec(1, 2, seed=2))
    np.testing.assert_array_equal(a.train_idx, b.train_idx)
    assert not np.array_equal(a.train_idx, c.train_idx)


def test_two_row_toy_split():
    ds = Dataset(np.array([[0.0], [1.0], [5.0]]), np.array([1, 1, 2]))
    assert make_split(ds, SplitSpec(1, 2, 0.5)).counts == (1, 1, 1)


def test_split_errors(iris):
    with pytest.raises(ValueError):
        SplitSpec(1, 1)
    with pytest.raises(ValueError):
        make_split(iris, SplitSpec(1, 7))


def test_split_round_trips(iris):
    split = make_split(iris, SplitSpec(2, 3, seed=4))
    back = Split.from_dict(split.to_dict("iris"))
    np.testing.assert_array_equal(back.test_idx, split.test_idx)
    assert back.spec == split.spec and back.dataset_hash == iris.content_hash()


def test_fixture_datasets(iris, wine):
    assert iris.features.shape == (150, 4)
    assert np.bincount(iris.labels).tolist() == [0, 50, 50, 50]
    assert wine.features.shape == (178, 13)
    assert np.bincount(wine.labels).tolist() == [0, 59, 71, 48]


def test_data_dir_override(tmp_path, monkeypatch):
    (tmp_path / "iris.data").write_text("1,2,3,4,a\n2,3,4,5,b\n\n")
    monkeypatch.setenv("QFLOW_DATA_DIR", str(tmp_path))
    ds = load_dataset("iris")
    assert ds.features.shape == (2, 4) and ds.labels.tolist() == [1, 2]
    with pytest.raises(FileNotFoundError):
        load_dataset("wine")


def test_unknown_dataset():
    with pytest.raises(ValueError):
        load_dataset("mnist")


def test_read_uci_class_column_first(tmp_path):
    path = tmp_path / "x.data"
    path.write_text("3,1.0,2.0\n1,3.0,4.0\n3,5.0,6.0\n")
    ds = read_uci_csv(path, 0)
    assert ds.labels.tolist() == [1, 2, 1]
    np.testing.assert_array_equal(ds.features[1], [3.0, 4.0])
