import numpy as np
import pytest

from cluster.cluster_io import read_clusters, read_ksweep, write_clusters, write_ksweep
from cluster.k_sweep import restarts_per_k, sweep_k
from cluster.kmeans import KMeansParams, kmeans_best_of, lloyd
from cluster.silhouette import silhouette
from signature.signature_builder import ZoneSignature, build_matrix, signatures_from_permits
from synth.city_generator import SyntheticSpec, generate
from synth.recovery import score_recovery
from utils.errors import ClusteringError
from utils.seed_utils import derive_seed


def brute_force_silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    """逐點、逐群直接依定義計算，作為獨立的對照。"""
    n = len(points)
    scores = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            scores.append(0.0)
            continue
        cohesion = sum(np.linalg.norm(points[i] - points[j]) for j in same) / len(same)
        separation = min(
            sum(np.linalg.norm(points[i] - points[j]) for j in range(n) if labels[j] == other)
            / sum(1 for j in range(n) if labels[j] == other)
            for other in set(labels.tolist()) if other != labels[i]
        )
        denominator = max(cohesion, separation)
        scores.append(0.0 if denominator == 0 else (separation - cohesion) / denominator)
    return float(np.mean(scores))


def two_blobs(rng: np.random.Generator, n_per: int = 10) -> np.ndarray:
    return np.vstack([rng.normal(0.0, 0.05, (n_per, 8)), rng.normal(1.0, 0.05, (n_per, 8))])


# --- silhouette ---
def test_silhouette_hand_example():
    points = np.array([[0.0], [1.0], [10.0], [11.0]])
    expected = (2 * 9.5 / 10.5 + 2 * 8.5 / 9.5) / 4
    assert silhouette(points, np.array([0, 0, 1, 1])) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.899749, abs=1e-6)


def test_silhouette_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(4, 41))
        k = int(rng.integers(2, min(6, n - 1) + 1))
        points = rng.random((n, 8))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        rng.shuffle(labels)
        assert silhouette(points, labels) == pytest.approx(brute_force_silhouette(points, labels), abs=1e-9)


def test_silhouette_is_label_permutation_invariant():
    rng = np.random.default_rng(3)
    points = rng.random((30, 8))
    labels = np.concatenate([np.arange(4), rng.integers(0, 4, 26)])
    relabelled = np.array([3, 0, 2, 1])[labels]
    assert silhouette(points, relabelled) == pytest.approx(silhouette(points, labels), abs=1e-12)


def test_silhouette_range_and_singletons():
    points = np.array([[0.0], [0.1], [5.0]])
    value = silhouette(points, np.array([0, 0, 1]))
    assert -1.0 <= value <= 1.0
    # 單點群集的分數為 0
    assert value == pytest.approx((4.9 / 5.0 + 4.8 / 4.9) / 3, abs=1e-12)


def test_silhouette_undefined_cases():
    points = np.random.default_rng(0).random((4, 8))
    with pytest.raises(ClusteringError) as excinfo:
        silhouette(points, np.zeros(4, dtype=int))
    assert excinfo.value.code == "silhouette_undefined"
    with pytest.raises(ClusteringError):
        silhouette(points, np.arange(4))
    with pytest.raises(ClusteringError):
        silhouette(points, np.array([0, 0, 1, 1]), k=3)
    with pytest.raises(ClusteringError) as excinfo:
        silhouette(points, np.array([0, 0, 2, 2]))
    assert excinfo.value.code == "silhouette_undefined"
    with pytest.raises(ClusteringError):
        silhouette(points, np.array([-1, -1, 0, 0]))


# --- lloyd ---
def test_lloyd_inertia_never_increases():
    rng = np.random.default_rng(11)
    for trial in range(50):
        points = rng.random((int(rng.integers(10, 60)), 8))
        model = lloyd(points, int(rng.integers(2, 7)), seed=trial)
        history = np.array(model.inertia_history)
        assert len(history) >= 1
        assert np.all(np.diff(history) <= 1e-12)
        assert model.inertia == history[-1]


def test_lloyd_k_equals_n_has_zero_inertia():
    points = np.random.default_rng(1).random((6, 8))
    model = lloyd(points, 6, seed=0)
    assert model.inertia == pytest.approx(0.0, abs=1e-24)
    assert sorted(model.assignments.tolist()) == list(range(6))


def test_lloyd_k_one_centroid_is_the_mean():
    points = np.random.default_rng(2).random((25, 8))
    model = lloyd(points, 1, seed=0)
    np.testing.assert_allclose(model.centroids[0], points.mean(axis=0), atol=1e-9)


def test_lloyd_hand_example_in_one_dimension():
    points = np.array([[0.0], [1.0], [10.0], [11.0]])
    for seed in range(5):
        model = lloyd(points, 2, seed=seed)
        assert sorted(model.centroids[:, 0].tolist()) == [0.5, 10.5]
        assert model.inertia == pytest.approx(1.0, abs=1e-12)
        assert model.assignments[0] == model.assignments[1] != model.assignments[2] == model.assignments[3]


def test_converged_centroids_are_the_means_of_their_members():
    rng = np.random.default_rng(31)
    for trial in range(20):
        points = rng.dirichlet(np.ones(8), size=int(rng.integers(15, 60)))
        model = lloyd(points, int(rng.integers(2, 6)), seed=trial)
        assert model.iterations_run < 300
        for cluster in range(model.k):
            members = points[model.assignments == cluster]
            np.testing.assert_allclose(model.centroids[cluster], members.mean(axis=0), atol=1e-12)


def test_single_restart_equals_lloyd_at_the_first_derived_seed():
    points = two_blobs(np.random.default_rng(8), n_per=12)
    best = kmeans_best_of(points, KMeansParams(k=3, restarts=1, seed=17))
    single = lloyd(points, 3, seed=derive_seed(17, 0))
    np.testing.assert_array_equal(best.assignments, single.assignments)
    np.testing.assert_array_equal(best.centroids, single.centroids)
    assert best.inertia == single.inertia
    assert best.seed_used == single.seed_used
    assert best.silhouette == pytest.approx(silhouette(points, single.assignments), abs=1e-12)


def test_lloyd_errors():
    points = np.random.default_rng(0).random((3, 8))
    with pytest.raises(ClusteringError) as excinfo:
        lloyd(points, 4, seed=0)
    assert excinfo.value.code == "k_exceeds_points"
    with pytest.raises(ClusteringError) as excinfo:
        lloyd(points, 0, seed=0)
    assert excinfo.value.code == "invalid_k"


def test_lloyd_never_leaves_an_empty_cluster():
    # 大量重複點：初始化時剩下的點都和既有中心重合
    points = np.vstack([np.zeros((8, 8)), np.ones((2, 8))])
    model = lloyd(points, 3, seed=5)
    assert (model.cluster_sizes() > 0).all()


@pytest.mark.parametrize("init", ["kmeans++", "uniform"])
def test_lloyd_is_deterministic_per_seed(init):
    points = np.random.default_rng(9).random((40, 8))
    a = lloyd(points, 4, seed=123, init=init)
    b = lloyd(points, 4, seed=123, init=init)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    np.testing.assert_array_equal(a.centroids, b.centroids)


# --- kmeans_best_of / sweep ---
def test_kmeans_best_of_separates_two_blobs():
    points = two_blobs(np.random.default_rng(4))
    model = kmeans_best_of(points, KMeansParams(k=2, restarts=10, seed=1))
    assert set(model.assignments[:10].tolist()) != set(model.assignments[10:].tolist())
    assert len(set(model.assignments[:10].tolist())) == 1
    assert model.silhouette > 0.8


def test_kmeans_best_of_is_independent_of_worker_count():
    points = np.random.default_rng(8).random((60, 8))
    params = KMeansParams(k=4, restarts=12, seed=77)
    serial = kmeans_best_of(points, params, n_jobs=1)
    threaded = kmeans_best_of(points, params, n_jobs=4)
    np.testing.assert_array_equal(serial.assignments, threaded.assignments)
    np.testing.assert_array_equal(serial.centroids, threaded.centroids)
    assert serial.seed_used == threaded.seed_used


def test_sweep_selects_two_for_two_blobs_and_reproduces_with_best_of():
    points = two_blobs(np.random.default_rng(6))
    params = KMeansParams(k=2, restarts=8, seed=3)
    report = sweep_k(points, 2, 6, params)
    assert report.selected_k == 2
    assert [e.k for e in report.entries] == [2, 3, 4, 5, 6]
    again = kmeans_best_of(points, KMeansParams(k=2, restarts=8, seed=3))
    np.testing.assert_array_equal(again.assignments, report.selected_model.assignments)
    assert report.entry_for(2).winning_seed == again.seed_used


def test_sweep_clamps_k_max_and_rejects_empty_ranges():
    points = np.random.default_rng(0).random((5, 8))
    report = sweep_k(points, 2, 100, KMeansParams(k=2, restarts=2, seed=0))
    assert max(e.k for e in report.entries) == 4
    with pytest.raises(ClusteringError) as excinfo:
        sweep_k(points, 5, 10, KMeansParams(k=2, restarts=2, seed=0))
    assert excinfo.value.code == "empty_sweep"
    with pytest.raises(ClusteringError):
        sweep_k(np.random.default_rng(0).random((2, 8)), 2, 10, KMeansParams(k=2, restarts=2, seed=0))


def test_restart_budgets():
    assert restarts_per_k([2, 3, 4], 10, "per_k") == {2: 10, 3: 10, 4: 10}
    assert restarts_per_k([2, 3, 4], 10, "total") == {2: 4, 3: 3, 4: 3}
    assert restarts_per_k([2, 3, 4], 2, "total") == {2: 1, 3: 1, 4: 1}


def test_kmeans_params_validation():
    with pytest.raises(ValueError):
        KMeansParams(k=2, restarts=0)
    with pytest.raises(ValueError):
        KMeansParams(k=2, init="random-partition")


@pytest.mark.slow
def test_planted_k_is_recovered_on_synthetic_cities():
    successes = 0
    for seed in range(20):
        city = generate(SyntheticSpec(n_zones=150, n_clusters=5, concentration=200.0,
                                      permits_per_zone=(300, 600), seed=seed))
        matrix = signatures_from_permits(city.permits)
        report = sweep_k(matrix, 2, 10, KMeansParams(k=2, restarts=20, seed=seed))
        if report.selected_k == 5 and score_recovery(city.truth, report.selected_model) >= 0.95:
            successes += 1
    assert successes >= 19


# --- io ---
def test_cluster_files_round_trip(tmp_path):
    points = two_blobs(np.random.default_rng(12))
    normalized = points - points.min() + 0.01
    normalized = normalized / normalized.sum(axis=1, keepdims=True)
    matrix = build_matrix([ZoneSignature(f"{10001 + i}", tuple(row), 10) for i, row in enumerate(normalized)])
    report = sweep_k(matrix, 2, 4, KMeansParams(k=2, restarts=3, seed=0))
    model = report.selected_model

    write_clusters(tmp_path, model)
    again = read_clusters(tmp_path)
    assert again.zone_ids == matrix.zone_ids
    np.testing.assert_array_equal(again.assignments, model.assignments)
    np.testing.assert_array_equal(again.centroids, model.centroids)
    assert again.silhouette == model.silhouette
    assert again.inertia_history == model.inertia_history

    sweep_again = read_ksweep(write_ksweep(tmp_path / "ksweep.csv", report))
    assert sweep_again.selected_k == report.selected_k
    assert sweep_again.entries == report.entries
