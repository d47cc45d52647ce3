"""Distance metrics and a deterministic k-means engine.

Two metrics are supported: plain Euclidean, and cosine distance with
spherical centroid updates (mean of the unit-normalized members,
renormalized to unit length). For unit vectors the two agree up to the
identity ||x - y||^2 = 2 * (1 - cos_sim(x, y)).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import load_embeddings

COSINE_TOLERANCE = 1e-6
EUCLIDEAN_TOLERANCE_FACTOR = 1e-4
DEFAULT_MAX_ITERATIONS = 300
# slack for the in-loop monotonicity assertion, covers float jitter only
_INERTIA_SLACK = 1e-9


def cosine_similarity(x: np.ndarray, y: np.ndarray) -> float:
    """Inner product of the two directions, clamped to [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm input")
    return float(np.clip(x @ y / (nx * ny), -1.0, 1.0))


def cosine_distance(x: np.ndarray, y: np.ndarray) -> float:
    """1 - cosine similarity; ranges over [0, 2]."""
    return 1.0 - cosine_similarity(x, y)


def euclidean_distance(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


@dataclass
class KmeansConfig:
    k: int
    metric: str = "euclidean"
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    seed: int = 1
    tolerance: float | None = None  # None: metric-dependent default

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.metric not in ("cosine", "euclidean"):
            raise ValueError(f"unknown metric: {self.metric!r}")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.tolerance is not None and self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    inertia_history: list[float]


def _cost_matrix(points: np.ndarray, centroids: np.ndarray, metric: str) -> np.ndarray:
    """Per-point, per-centroid cost: squared Euclidean distance, or cosine
    distance for unit-normalized inputs. Uses the inner-product expansion so
    memory stays at (n, k) even for wide data."""
    if metric == "euclidean":
        sq_p = np.einsum("ij,ij->i", points, points)[:, None]
        sq_c = np.einsum("ij,ij->i", centroids, centroids)[None, :]
        return np.maximum(sq_p + sq_c - 2.0 * points @ centroids.T, 0.0)
    return 1.0 - points @ centroids.T


def _assigned_costs(points: np.ndarray, centroids: np.ndarray,
                    labels: np.ndarray, metric: str) -> np.ndarray:
    """Exact per-point cost against the assigned centroid (no cancellation)."""
    if metric == "euclidean":
        diff = points - centroids[labels]
        return np.einsum("ij,ij->i", diff, diff)
    return 1.0 - np.einsum("ij,ij->i", points, centroids[labels])


def _kmeanspp(points: np.ndarray, k: int, metric: str,
              rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each next centroid drawn with probability
    proportional to its cost against the nearest centroid chosen so far."""
    n = len(points)
    chosen = [int(rng.integers(0, n))]
    costs = _cost_matrix(points, points[chosen], metric)[:, 0]
    while len(chosen) < k:
        costs[chosen] = 0.0
        total = costs.sum()
        if total <= 0.0:
            remaining = np.setdiff1d(np.arange(n), np.array(chosen))
            nxt = int(rng.choice(remaining))
        else:
            nxt = int(rng.choice(n, p=costs / total))
        chosen.append(nxt)
        costs = np.minimum(costs, _cost_matrix(points, points[[nxt]], metric)[:, 0])
    return points[chosen].copy()


def kmeans(points: np.ndarray, cfg: KmeansConfig,
           initial_centroids: np.ndarray | None = None) -> ClusterAssignment:
    """Lloyd iterations under the configured metric.

    Assignment goes to the nearest centroid (ties to the lowest cluster id);
    the update step takes the arithmetic mean, renormalized to unit length
    under the cosine metric. Clusters that come out of an assignment empty
    are reseeded with the point currently farthest from its own centroid,
    so the result always carries exactly k centroids. Stops once the largest
    centroid shift drops to the tolerance or ``max_iterations`` is reached.

    Inertia is the clustering objective: the sum of squared Euclidean
    distances, or the sum of cosine distances. It is checked in-loop to be
    non-increasing across iterations.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = len(points)
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds number of points ({n})")
    if not np.isfinite(points).all():
        raise ValueError("points contain NaN/Inf")

    if cfg.metric == "cosine":
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero vector not allowed under the cosine metric")
        work = points / norms[:, None]
        tolerance = COSINE_TOLERANCE if cfg.tolerance is None else cfg.tolerance
    else:
        work = points
        if cfg.tolerance is None:
            scale = float(np.mean(np.linalg.norm(points, axis=1))) or 1.0
            tolerance = EUCLIDEAN_TOLERANCE_FACTOR * scale
        else:
            tolerance = cfg.tolerance

    if initial_centroids is not None:
        centroids = np.asarray(initial_centroids, dtype=np.float64).copy()
        if centroids.shape != (cfg.k, points.shape[1]):
            raise ValueError("initial_centroids shape mismatch")
        if cfg.metric == "cosine":
            centroids /= np.linalg.norm(centroids, axis=1)[:, None]
    else:
        rng = np.random.default_rng(cfg.seed)
        centroids = _kmeanspp(work, cfg.k, cfg.metric, rng)

    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0

    def _assign_and_measure():
        lab = np.argmin(_cost_matrix(work, centroids, cfg.metric), axis=1)
        # reseed empty clusters with the globally worst-fitting point
        point_costs = _assigned_costs(work, centroids, lab, cfg.metric)
        reseeded: set[int] = set()
        for j in range(cfg.k):
            if np.any(lab == j):
                continue
            order = np.argsort(-point_costs, kind="stable")
            pick = next(int(i) for i in order if int(i) not in reseeded)
            reseeded.add(pick)
            centroids[j] = work[pick]
            lab[pick] = j
            point_costs[pick] = 0.0
        inertia = float(point_costs.sum())
        if history and inertia > history[-1] + _INERTIA_SLACK * max(1.0, history[-1]):
            raise AssertionError(
                f"inertia increased: {history[-1]} -> {inertia} at iteration {iterations}"
            )
        history.append(inertia)
        return lab

    for _ in range(cfg.max_iterations):
        iterations += 1
        labels = _assign_and_measure()
        new_centroids = np.empty_like(centroids)
        for j in range(cfg.k):
            members = work[labels == j]
            mean = members.mean(axis=0)
            if cfg.metric == "cosine":
                norm = np.linalg.norm(mean)
                new_centroids[j] = mean / norm if norm > 0.0 else centroids[j]
            else:
                new_centroids[j] = mean
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift <= tolerance:
            break

    # align reported labels/inertia with the final centroids
    labels = _assign_and_measure()
    return ClusterAssignment(
        labels=labels,
        centroids=centroids,
        inertia=history[-1],
        iterations_run=iterations,
        inertia_history=history,
    )


def save_assignment(ids: list[str], assignment: ClusterAssignment,
                    path: str | Path) -> None:
    """CSV with header ``id,cluster``, one row per point."""
    if len(ids) != len(assignment.labels):
        raise ValueError("ids and labels length mismatch")
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,cluster\n")
        for pid, label in zip(ids, assignment.labels):
            if "," in pid or "\n" in pid:
                raise ValueError(f"id not serializable in assignment CSV: {pid!r}")
            fh.write(f"{pid},{int(label)}\n")


def load_assignment(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "id,cluster":
        raise ValueError(f"{path}: expected 'id,cluster' header")
    ids, labels = [], []
    for line in lines[1:]:
        pid, _, label = line.rpartition(",")
        ids.append(pid)
        labels.append(int(label))
    return ids, np.array(labels, dtype=np.int64)


def save_centroids(centroids: np.ndarray, path: str | Path) -> None:
    """Embedding-file format with synthetic names ``centroid_<i>``."""
    k, dim = centroids.shape
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{k} {dim}\n")
        for i, row in enumerate(centroids):
            fh.write(f"centroid_{i} " + " ".join(f"{v:.6f}" for v in row) + "\n")


def load_centroids(path: str | Path) -> np.ndarray:
    _, mat = load_embeddings(path)
    return mat
