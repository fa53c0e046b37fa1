import math
import warnings

import numpy as np
import pytest
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import OneClassSVM

from qflow.baselines import (IsolationForestDetector, LocalOutlierFactorDetector,
                             OneClassSVMDetector, average_path_length, isoforest_fit,
                             isoforest_score, lof_fit, lof_score, ocsvm_fit, ocsvm_score)
from qflow.baselines.ocsvm import rbf_kernel, solve_dual


def naive_lof(train, queries, k):
    """Local outlier factor written out loop by loop."""
    def dist(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    n = len(train)

    def kdist_and_neighbors(p, exclude):
        ds = [(dist(p, train[j]), j) for j in range(n) if j != exclude]
        kd = sorted(d for d, _ in ds)[k - 1]
        return kd, [j for d, j in ds if d <= kd]

    kd_train = [kdist_and_neighbors(train[i], i)[0] for i in range(n)]

    def lrd(p, exclude):
        _, nb = kdist_and_neighbors(p, exclude)
        total = 0.0
        for o in nb:
            total += max(kd_train[o], dist(p, train[o]))
        return len(nb) / total

    lrd_train = [lrd(train[i], i) for i in range(n)]
    out = []
    for q in queries:
        _, nb = kdist_and_neighbors(q, None)
        lq = lrd(q, None)
        out.append(sum(lrd_train[o] for o in nb) / len(nb) / lq)
    return np.array(out)


def test_lof_matches_naive_on_random_sets():
    rng = np.random.default_rng(0)
    for _ in range(50):
        train = rng.normal(size=(20, int(rng.integers(1, 4)))) * rng.uniform(0.5, 3)
        queries = rng.normal(size=(10, train.shape[1])) * 2
        k = int(rng.integers(2, 10))
        model = LocalOutlierFactorDetector(n_neighbors=k, standardize=False).fit(train)
        np.testing.assert_allclose(model.anomaly_score(queries),
                                   naive_lof(train.tolist(), queries.tolist(), k), atol=1e-9)


def test_lof_tie_inclusive_neighborhood():
    train = np.array([[0.0], [1.0], [-1.0], [5.0]])
    model = LocalOutlierFactorDetector(n_neighbors=1, standardize=False).fit(train)
    q = np.array([[0.0]]) + 0.0
    np.testing.assert_allclose(model.anomaly_score(q), naive_lof(train.tolist(), [[0.0]], 1))
    np.testing.assert_allclose(model.anomaly_score([[0.5]]),
                               naive_lof(train.tolist(), [[0.5]], 1), atol=1e-12)


def test_lof_uniform_grid_is_about_one():
    g = np.arange(10.0)
    train = np.array([[x, y] for x in g for y in g])
    model = LocalOutlierFactorDetector(n_neighbors=8, standardize=False).fit(train)
    assert abs(model.anomaly_score([[4.0, 5.0]])[0] - 1.0) <= 0.2


def test_lof_cluster_with_distant_outlier():
    rng = np.random.default_rng(1)
    grid = np.array([[x, y] for x in range(6) for y in range(6)], dtype=float)
    cluster = grid + rng.uniform(-0.1, 0.1, size=grid.shape)
    data = np.vstack([cluster, [[15.0, 15.0]]])
    model = LocalOutlierFactorDetector(n_neighbors=5, standardize=False).fit(data)
    lof = model.train_lof_
    assert lof[-1] > 2 > lof[:-1].max()
    naive = naive_lof(data[:-1].tolist(), [[15.0, 15.0]], 5)
    fitted = LocalOutlierFactorDetector(n_neighbors=5, standardize=False).fit(data[:-1])
    np.testing.assert_allclose(fitted.anomaly_score([[15.0, 15.0]]), naive, atol=1e-9)
    assert naive[0] > 2


def test_lof_duplicates_give_finite_or_unit_ratios():
    train = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]])
    model = LocalOutlierFactorDetector(n_neighbors=3, standardize=False).fit(train)
    assert np.all(np.isinf(model.lrd_[:5]))
    assert np.all(model.train_lof_[:5] == 1.0)
    assert model.anomaly_score([[0.0, 0.0]])[0] == 1.0


def test_lof_k_capped():
    model = LocalOutlierFactorDetector(n_neighbors=20).fit(np.random.default_rng(0).normal(size=(6, 2)))
    assert model.n_neighbors_ == 5


def test_average_path_length_values():
    np.testing.assert_allclose(average_path_length([0, 1, 2]), [0, 0, 1])
    m = 256
    h = math.log(m - 1) + 0.5772156649
    assert average_path_length([m])[0] == pytest.approx(2 * h - 2 * (m - 1) / m)


def test_isoforest_score_at_average_path_is_half():
    model = IsolationForestDetector(n_estimators=5, random_state=0).fit(
        np.random.default_rng(0).normal(size=(64, 2)))
    c = average_path_length([model.max_samples_])[0]
    assert 2.0 ** (-c / c) == 0.5
    h = model.mean_path_length(np.zeros((1, 2)))
    s = model.anomaly_score(np.zeros((1, 2)))
    assert s[0] == pytest.approx(2.0 ** (-h[0] / c))


def test_isoforest_isolates_distant_point():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        blob = rng.normal(size=(100, 2))
        data = np.vstack([blob, [[10.0, 10.0]]])
        model = IsolationForestDetector(random_state=seed).fit(data)
        scores = model.anomaly_score(data)
        assert scores[-1] > scores[:-1].max()


def test_isoforest_tree_depths_and_range():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 3))
    model = IsolationForestDetector(n_estimators=20, random_state=1).fit(X)
    limit = math.ceil(math.log2(model.max_samples_))
    for tree in model.trees_:
        assert tree.depth_of_leaves().max() <= limit
    s = model.anomaly_score(rng.normal(size=(50, 3)) * 3)
    assert np.all((s > 0) & (s < 1))
    again = IsolationForestDetector(n_estimators=20, random_state=1).fit(X)
    np.testing.assert_array_equal(again.anomaly_score(X), model.anomaly_score(X))


def test_isoforest_rejects_bad_subsample():
    with pytest.raises(ValueError):
        IsolationForestDetector(max_samples=50).fit(np.zeros((10, 2)))


def test_ocsvm_forced_alphas():
    alpha, _, converged = solve_dual(rbf_kernel(np.array([[0.0], [1.0]]),
                                                np.array([[0.0], [1.0]]), 1.0), nu=1.0)
    np.testing.assert_allclose(alpha, [0.5, 0.5])
    assert converged


def test_ocsvm_identical_points_inside():
    model = OneClassSVMDetector(standardize=False).fit(np.ones((10, 3)))
    assert model.anomaly_score(np.ones((1, 3)))[0] <= 0


def test_ocsvm_dual_feasibility_and_optimality():
    rng = np.random.default_rng(3)
    for nu in (0.05, 0.1, 0.3, 0.7):
        X = rng.normal(size=(60, 3))
        model = OneClassSVMDetector(nu=nu).fit(X)
        a = model.dual_coef_
        C = 1 / (nu * len(X))
        assert abs(a.sum() - 1) <= 1e-8
        assert np.all(a >= 0) and np.all(a <= C)
        Z = model.scaler_.transform(X)
        K = rbf_kernel(Z, Z, model.gamma_)
        u = np.full(len(X), 1 / len(X))
        assert model.dual_objective_ <= 0.5 * u @ K @ u + 1e-12
        grad = K @ a
        free = (a > 1e-9) & (a < C - 1e-9)
        assert np.all(np.abs(grad[free] - model.rho_) <= 1e-5)
        assert np.all(grad[a <= 1e-12] >= model.rho_ - 1e-5)
        assert np.all(grad[a >= C - 1e-12] <= model.rho_ + 1e-5)


def test_ocsvm_agrees_with_libsvm():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 2))
    Q = rng.normal(size=(40, 2)) * 2
    ours = OneClassSVMDetector(nu=0.2, gamma=0.5, standardize=False, tol=1e-9).fit(X)
    ref = OneClassSVM(nu=0.2, gamma=0.5, tol=1e-9).fit(X)
    # libsvm's coefficients are ours scaled by nu * l, with the opposite sign convention
    np.testing.assert_allclose(ours.anomaly_score(Q) * 0.2 * 80, -ref.decision_function(Q),
                               atol=1e-4)


def test_ocsvm_convergence_warning():
    X = np.random.default_rng(5).normal(size=(40, 2))
    with pytest.warns(ConvergenceWarning):
        model = OneClassSVMDetector(max_iter=1).fit(X)
    assert not model.converged_
    assert abs(model.dual_coef_.sum() - 1) <= 1e-8


def test_ocsvm_bad_nu():
    with pytest.raises(ValueError):
        OneClassSVMDetector(nu=0).fit(np.zeros((3, 1)))


@pytest.mark.parametrize("est", [IsolationForestDetector(n_estimators=20),
                                 LocalOutlierFactorDetector(n_neighbors=5),
                                 OneClassSVMDetector()])
def test_outlier_api(est):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 2))
    est.fit(X)
    far = np.array([[20.0, 20.0]])
    assert est.predict(far)[0] == -1
    assert set(est.predict(X)) <= {-1, 1}
    np.testing.assert_allclose(est.score_samples(X), -est.anomaly_score(X))
    np.testing.assert_allclose(est.decision_function(X), est.threshold_ - est.anomaly_score(X))
    assert np.mean(est.predict(X) == -1) <= 0.2
    assert "contamination" in est.get_params()
    with pytest.raises(ValueError):
        est.anomaly_score(np.zeros((1, 3)))


def test_functional_wrappers():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 2))
    row = np.array([0.1, -0.2])
    assert isoforest_score(isoforest_fit(X, 10, 32, 1), row) == pytest.approx(
        IsolationForestDetector(10, 32, random_state=1).fit(X).anomaly_score([row])[0])
    assert lof_score(lof_fit(X, 5), row) == pytest.approx(
        LocalOutlierFactorDetector(5).fit(X).anomaly_score([row])[0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ocsvm_score(ocsvm_fit(X), row) == pytest.approx(
            OneClassSVMDetector().fit(X).anomaly_score([row])[0])
