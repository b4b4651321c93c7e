"""Open-world class discovery on precomputed embeddings."""

import json

import numpy as np

from . import _core
from ._core import (
    DiscoveryConfig,
    EmbeddingSet,
    Error,
    FormatError,
    StageError,
    ValidationError,
    h_score,
    load_embeddings,
    preset_names,
    save_embeddings,
    simple_threshold_grid,
    solve_assignment,
)

__version__ = _core.__version__

__all__ = [
    "DiscoveryConfig",
    "EmbeddingSet",
    "Error",
    "FormatError",
    "StageError",
    "ValidationError",
    "crow_discover",
    "estimate_num_classes",
    "evaluate",
    "generate",
    "h_score",
    "kmeans",
    "kmeans_baseline",
    "load_embeddings",
    "match_from_cooccurrence",
    "preset_names",
    "save_embeddings",
    "simple_baseline",
    "simple_threshold_grid",
    "solve_assignment",
]


def _embedding(x, labels=None):
    if isinstance(x, EmbeddingSet):
        return x
    return EmbeddingSet(np.ascontiguousarray(x, dtype=np.float32), None if labels is None else list(labels))


def generate(preset="s1", seed=None):
    """Returns (source, target, target_truth, seen_count, target_class_count)."""
    source, target, truth, seen, total = _core.generate(preset, seed)
    return source, target, np.asarray(truth, dtype=np.uint32), seen, total


def kmeans(points, k, seed=0, restarts=1):
    centroids, assignments, inertia = _core.kmeans(np.ascontiguousarray(points, dtype=np.float32), k, seed, restarts)
    return centroids, np.asarray(assignments), inertia


def match_from_cooccurrence(cooccurrence, tau=0.3):
    return json.loads(_core.match_from_cooccurrence(np.asarray(cooccurrence, dtype=np.int64), tau))


def evaluate(predictions, truth, seen_count):
    return json.loads(_core.evaluate(list(map(int, predictions)), list(map(int, truth)), seen_count))


def _run(result):
    (assignments, confidences), report = result
    return np.asarray(assignments, dtype=np.uint32), np.asarray(confidences, dtype=np.float32), json.loads(report)


def crow_discover(source, target, classes, config=None, truth=None):
    """Cluster-then-match discovery.

    `classes` is the number of target classes or a (k_min, k_max, mode)
    tuple to estimate it. Returns (assignments, confidences, report).
    """
    truth = [] if truth is None else list(map(int, truth))
    return _run(_core.crow_discover(source, target, classes, config or DiscoveryConfig(), truth))


def simple_baseline(source, target, target_class_count, entropy_threshold, config=None, truth=None):
    truth = [] if truth is None else list(map(int, truth))
    return _run(
        _core.simple_baseline(source, target, target_class_count, config or DiscoveryConfig(), entropy_threshold, truth)
    )


def kmeans_baseline(target, k, truth, config=None):
    clusters, accuracy = _core.kmeans_baseline(target, k, list(map(int, truth)), config or DiscoveryConfig())
    return np.asarray(clusters, dtype=np.uint32), accuracy


def estimate_num_classes(source, target, k_min, k_max, mode="union", config=None):
    return json.loads(_core.estimate_num_classes(source, target, k_min, k_max, mode, config or DiscoveryConfig()))
