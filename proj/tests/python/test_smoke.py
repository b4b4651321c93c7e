import itertools

import numpy as np
import pytest

import owdisc


def test_version():
    assert owdisc.__version__ == "0.1.0"


def test_embedding_set_normalizes_rows():
    s = owdisc.EmbeddingSet(np.array([[3.0, 4.0], [0.0, 2.0]], dtype=np.float32), [1, 0])
    assert len(s) == 2
    np.testing.assert_allclose(s.vectors[0], [0.6, 0.8], rtol=1e-6)
    assert s.labels == [1, 0]
    with pytest.raises(owdisc.ValidationError):
        owdisc.EmbeddingSet(np.zeros((1, 2), dtype=np.float32))


def test_cef_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = owdisc.EmbeddingSet(rng.normal(size=(10, 8)).astype(np.float32), list(range(10)))
    owdisc.save_embeddings(s, tmp_path / "x.cef")
    assert owdisc.load_embeddings(tmp_path / "x.cef") == s
    (tmp_path / "bad.cef").write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(owdisc.FormatError, match="bad magic"):
        owdisc.load_embeddings(tmp_path / "bad.cef")


def test_assignment_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        cost = rng.integers(0, 10, size=(5, 5)).astype(float)
        best = min(sum(cost[i, p[i]] for i in range(5)) for p in itertools.permutations(range(5)))
        _, total = owdisc.solve_assignment(cost)
        assert total == best


def test_matching_and_scores():
    match = owdisc.match_from_cooccurrence([[3, 0], [0, 2], [0, 0]], tau=0.3)
    assert match["unseen_prototype_indices"] == [2]
    assert match["class_to_prototypes"] == [[0], [1]]
    assert abs(owdisc.h_score(0.770, 0.628) - 0.692) <= 5e-4


def test_discovery_on_s1():
    source, target, truth, seen, total = owdisc.generate("s1")
    assert (seen, total) == (10, 15)
    assignments, confidences, report = owdisc.crow_discover(source, target, total, truth=truth)
    assert assignments.shape == (3000,)
    assert report["eval"]["h_score"] >= 0.95
    assert report["match"]["matched_count"] + report["match"]["unseen_count"] == 15
    again, _, _ = owdisc.crow_discover(source, target, total, truth=truth)
    np.testing.assert_array_equal(assignments, again)
    assert owdisc.evaluate(assignments, truth, seen) == report["eval"]


def test_config_and_errors():
    config = owdisc.DiscoveryConfig()
    assert config.tau == 0.3 and config.lambda_ == 0.1 and config.adapter == "linear-residual"
    config.tau = 2.0
    with pytest.raises(owdisc.ValidationError):
        config.validate()
    source, target, _, _, _ = owdisc.generate("bimodal-overlap")
    with pytest.raises(owdisc.StageError, match="target-prototypes"):
        owdisc.crow_discover(source, target, 10**6)


def test_baselines_and_estimate():
    config = owdisc.DiscoveryConfig()
    config.iterations = 50
    source, target, truth, seen, total = owdisc.generate("bimodal-overlap")
    _, accuracy = owdisc.kmeans_baseline(target, total, truth, config)
    assert 0.0 <= accuracy <= 1.0
    grid = owdisc.simple_threshold_grid(seen)
    _, _, report = owdisc.simple_baseline(source, target, total, grid[4], config, truth)
    assert report["method"] == "simple"
    estimate = owdisc.estimate_num_classes(source, target, 3, 6, config=config)
    assert 3 <= estimate["k"] <= 6
