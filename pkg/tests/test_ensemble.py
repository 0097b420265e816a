import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from deccs import ensemble as E
from deccs.data import make_blobs, make_two_rings
from deccs.metrics import nmi


def points(n_min=12, n_max=40):
    return st.integers(n_min, n_max).flatmap(
        lambda n: arrays(np.float64, (n, 2), elements=st.floats(-10, 10, allow_nan=False)))


@pytest.mark.parametrize("seed", range(10))
def test_every_member_recovers_blobs(seed):
    data = make_blobs(seed=seed)
    parts = E.run_ensemble(E.default_ensemble(4), data.values, np.random.default_rng(seed))
    assert [nmi(p, data.labels) for p in parts] == [1.0] * 4


@pytest.mark.parametrize("seed", range(3))
def test_rings_single_linkage_and_spectral(seed):
    data = make_two_rings(seed=seed)
    rng = np.random.default_rng(seed)
    assert nmi(E.agglomerative(data.values, 2, "single"), data.labels) == 1.0
    assert nmi(E.spectral(data.values, 2, rng=rng), data.labels) == 1.0
    assert nmi(E.kmeans(data.values, 2, rng=rng)[0], data.labels) < 0.2


def test_kmeans_outputs_are_a_lloyd_fixed_point():
    data = make_blobs(k=3, std=0.5, spacing=2.0, seed=1)
    labels, centers, inertia, restarts = E.kmeans(data.values, 3, rng=np.random.default_rng(0), full_output=True)
    d = ((data.values[:, None, :] - centers[None]) ** 2).sum(-1)
    assert np.array_equal(d.argmin(axis=1), labels)
    assert np.allclose(centers, E.compute_centers(data.values, labels))
    assert inertia == pytest.approx(d.min(axis=1).sum())
    assert inertia == pytest.approx(restarts.min())
    assert restarts.size == 10


def test_kmeans_matches_brute_force_on_tiny_data():
    rng = np.random.default_rng(3)
    Z = np.vstack([rng.normal(0, 0.3, (4, 2)), rng.normal(3, 0.3, (4, 2))])
    best = np.inf
    for mask in range(1, 2 ** 7):
        lab = np.array([0] + [(mask >> i) & 1 for i in range(7)])
        cost = sum(((Z[lab == c] - Z[lab == c].mean(0)) ** 2).sum() for c in (0, 1))
        best = min(best, cost)
    _, _, inertia, _ = E.kmeans(Z, 2, rng=rng, full_output=True)
    assert inertia == pytest.approx(best)


def test_kmeans_deterministic_under_seed():
    Z = make_blobs(seed=4, std=1.0).values
    a = E.kmeans(Z, 4, rng=np.random.default_rng(9))
    b = E.kmeans(Z, 4, rng=np.random.default_rng(9))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_kmeans_handles_duplicate_points():
    Z = np.repeat(np.array([[0.0, 0.0], [1.0, 1.0]]), 5, axis=0)
    labels, _ = E.kmeans(Z, 3, rng=np.random.default_rng(0))
    assert labels.shape == (10,)


@pytest.mark.parametrize("seed", range(5))
def test_gmm_log_likelihood_monotone(seed):
    data = make_blobs(k=3, std=1.2, spacing=3.0, seed=seed)
    _, trace, (weights, means, covs) = E.gmm(data.values, 3, rng=np.random.default_rng(seed),
                                               full_output=True, tol=0.0, max_iter=60)
    assert np.all(np.diff(trace) >= -1e-8)
    assert weights.sum() == pytest.approx(1.0)
    assert np.all(np.linalg.eigvalsh(covs) > 0)


def test_agglomerative_matches_scipy():
    hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    rng = np.random.default_rng(0)
    for linkage in ("ward", "single"):
        for _ in range(5):
            Z = rng.normal(size=(60, 2))
            ours = E.agglomerative(Z, 4, linkage)
            ref = hierarchy.fcluster(hierarchy.linkage(Z, method=linkage), 4, criterion="maxclust")
            assert nmi(ours, ref) == 1.0


def test_agglomerative_rejects_unknown_linkage():
    with pytest.raises(ValueError):
        E.agglomerative(np.zeros((5, 2)), 2, "average")


@given(points())
@settings(max_examples=40, deadline=None)
def test_laplacian_spectrum_bounds(Z):
    n = Z.shape[0]
    U, evals = E.spectral_embedding(Z + 1e-6 * np.arange(n)[:, None], 2, n_neighbors=min(10, n - 1))
    assert evals.min() >= -1e-8
    assert evals.max() <= 2 + 1e-8
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)


def test_laplacian_zero_eigenvalue_per_component():
    # two far-apart groups give a graph with two connected components
    Z = np.vstack([np.arange(15)[:, None] * [1.0, 0.0], 1000 + np.arange(15)[:, None] * [1.0, 0.0]])
    A = E.knn_affinity(Z, 3)
    evals = np.linalg.eigvalsh(E.normalized_laplacian(A))
    assert np.sum(evals < 1e-10) == 2


def test_knn_affinity_symmetric():
    Z = np.random.default_rng(1).normal(size=(30, 2))
    A = E.knn_affinity(Z, 5)
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    assert set(np.unique(A)) <= {0.0, 0.5, 1.0}


def test_member_validation_and_errors():
    with pytest.raises(ValueError):
        E.MemberSpec("dbscan", 2)
    with pytest.raises(ValueError):
        E.MemberSpec("kmeans", 1)
    with pytest.raises(ValueError):
        E.EnsembleSpec((E.MemberSpec("kmeans", 2),))
    with pytest.raises(ValueError):
        E.kmeans(np.zeros((3, 2)), 5)


def test_ensemble_dict_round_trip():
    spec = E.default_ensemble(3, linkage="single")
    assert E.EnsembleSpec.from_dicts(spec.to_dict()) == spec
    assert spec.ks == [3, 3, 3, 3]


def test_run_ensemble_member_error_names_member():
    spec = E.EnsembleSpec((E.MemberSpec("kmeans", 2), E.MemberSpec("spectral", 2, n_neighbors=50)))
    with pytest.raises(E.MemberError) as info:
        E.run_ensemble(spec, np.random.default_rng(0).normal(size=(20, 2)), np.random.default_rng(0))
    assert info.value.index == 1


def test_compute_centers_rejects_empty_cluster():
    with pytest.raises(ValueError):
        E.compute_centers(np.zeros((3, 2)), np.array([0, 0, 2]))
