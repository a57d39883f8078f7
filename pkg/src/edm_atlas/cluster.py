"""K-means++ with restarts, divisive hierarchical clustering, and natural-k discovery.

Divisive clustering repeatedly bisects the cluster with the largest
heterogeneity score H(C) = var(C) * (1 + sil(C)) * log(|C| + 1), where
sil(C) is the mean silhouette of a tentative 2-means split of C. Natural-k
discovery sweeps k-means over a k range and picks the argmax of a weighted
consensus of silhouette, Calinski-Harabasz, and an elbow score on the
inertia curve.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .table import FeatureMatrix

logger = logging.getLogger(__name__)

KMEANS_RESTARTS = 50
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6
SPLIT_RESTARTS = 10
H_SPLIT_RESTARTS = 5
H_MIN_SIZE = 4

CONSENSUS_WEIGHTS = (0.5, 0.3, 0.2)  # silhouette, calinski-harabasz, elbow
DEFAULT_K_RANGE = (15, 40)


def _as_array(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D data matrix")
    return arr


@dataclass
class SplitNode:
    """One node of the divisive split tree; h is None for leaves."""

    node_id: int
    indices: np.ndarray = field(repr=False)
    h: float | None = None
    children: tuple["SplitNode", "SplitNode"] | None = None

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def to_dict(self) -> dict:
        d = {"id": self.node_id, "size": self.size, "h": self.h}
        d["children"] = [c.to_dict() for c in self.children] if self.children else None
        return d

    def leaves(self) -> list["SplitNode"]:
        if self.children is None:
            return [self]
        return self.children[0].leaves() + self.children[1].leaves()


@dataclass
class ClusterModel:
    """Labels plus centroids and bookkeeping for one clustering run."""

    labels: np.ndarray
    k: int
    centroids: np.ndarray
    inertia: float
    method: str
    seed: int = 0
    split_tree: SplitNode | None = None
    warning: str | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")
        if np.bincount(self.labels, minlength=self.k).min() == 0:
            raise ValueError("every cluster must be nonempty")
        if self.inertia < 0 or not np.all(np.isfinite(self.centroids)):
            raise ValueError("inertia must be >= 0 and centroids finite")

    def save(self, labels_path: str | Path, sidecar_path: str | Path, row_ids) -> None:
        lines = ["track_id,label"]
        lines += [f"{rid},{lab}" for rid, lab in zip(row_ids, self.labels)]
        Path(labels_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        sidecar = {
            "schema_version": 1,
            "method": self.method,
            "k": self.k,
            "inertia": self.inertia,
            "seed": self.seed,
            "warning": self.warning,
            "split_tree": self.split_tree.to_dict() if self.split_tree else None,
        }
        Path(sidecar_path).write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)  # all points coincide with chosen centroids
        centroids[i] = x[idx]
        d2 = np.minimum(d2, ((x - centroids[i]) ** 2).sum(axis=1))
    return centroids


def _assign(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = (
        (x**2).sum(axis=1)[:, None]
        - 2.0 * x @ centroids.T
        + (centroids**2).sum(axis=1)[None, :]
    )
    np.clip(d2, 0.0, None, out=d2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(x.shape[0]), labels]


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    k = centroids.shape[0]
    labels = np.zeros(x.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        labels, d2 = _assign(x, centroids)
        new_centroids = centroids.copy()
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                new_centroids[c] = x[mask].mean(axis=0)
        # repair empty clusters with the point farthest from its centroid
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(d2))
                new_centroids[c] = x[far]
                labels[far] = c
                d2[far] = 0.0
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break
    labels, d2 = _assign(x, centroids)
    for c in range(k):  # final safety: never return an empty cluster
        if not np.any(labels == c):
            far = int(np.argmax(d2))
            labels[far] = c
            d2[far] = 0.0
            centroids[c] = x[far]
    # exact inertia: the fast expansion above carries cancellation roundoff
    inertia = float(((x - centroids[labels]) ** 2).sum())
    return labels, centroids, inertia


def kmeans(
    data,
    k: int,
    restarts: int = KMEANS_RESTARTS,
    seed: int = 0,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
) -> ClusterModel:
    """Best-of-restarts k-means with k-means++ (D^2) seeding.

    Deterministic for a fixed seed; restart r uses the r-th spawned child
    seed and ties in inertia resolve to the lowest restart index.
    """
    x = _as_array(data)
    n = x.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        centroids = _plus_plus_init(x, k, rng)
        labels, centroids, inertia = _lloyd(x, centroids, max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia)
    labels, centroids, inertia = best
    return ClusterModel(labels, k, centroids, inertia, method="kmeans", seed=seed)


def heterogeneity(points, seed: int = 0) -> float:
    """H(C) = var(C) * (1 + sil(C)) * log(|C| + 1).

    var(C) is the mean squared distance to the centroid and sil(C) the mean
    silhouette of a tentative 2-means split. Clusters smaller than 4 points
    or with zero variance score 0 (nothing to split).
    """
    x = _as_array(points)
    n = x.shape[0]
    if n < H_MIN_SIZE:
        return 0.0
    var = float(((x - x.mean(axis=0)) ** 2).sum(axis=1).mean())
    if var == 0.0:
        return 0.0
    split = kmeans(x, 2, restarts=H_SPLIT_RESTARTS, seed=seed)
    sil = metrics.silhouette(x, split.labels)
    return var * (1.0 + sil) * float(np.log(n + 1))


def divisive_cluster(
    data,
    k_target: int,
    seed: int = 0,
    h_threshold: float | None = None,
) -> ClusterModel:
    """Top-down bisection: always split the cluster with the largest H.

    Ties prefer the larger cluster, then the lower node id. Splitting stops
    at k_target clusters, or earlier when every H is 0 (the model then
    carries a warning), or when max H falls below the optional h_threshold.
    """
    x = _as_array(data)
    n = x.shape[0]
    if not 2 <= k_target <= n:
        raise ValueError(f"k_target must lie in [2, {n}], got {k_target}")

    ss = np.random.SeedSequence(seed)

    def next_seed() -> int:
        return int(ss.spawn(1)[0].generate_state(1)[0])

    root = SplitNode(0, np.arange(n))
    h_scores = {0: heterogeneity(x, seed=next_seed())}
    leaves = {0: root}
    next_id = 1
    warning = None

    while len(leaves) < k_target:
        candidates = [(nid, h_scores[nid]) for nid in sorted(leaves)]
        best_id, best_h = max(candidates, key=lambda t: (t[1], leaves[t[0]].size, -t[0]))
        if best_h <= 0:
            warning = f"all heterogeneity scores 0 at k={len(leaves)}; cannot reach k_target={k_target}"
            logger.warning(warning)
            break
        if h_threshold is not None and best_h < h_threshold:
            warning = f"max heterogeneity {best_h:.6g} below threshold at k={len(leaves)}"
            break
        node = leaves.pop(best_id)
        sub = x[node.indices]
        split = kmeans(sub, 2, restarts=SPLIT_RESTARTS, seed=next_seed())
        left = SplitNode(next_id, node.indices[split.labels == 0])
        right = SplitNode(next_id + 1, node.indices[split.labels == 1])
        next_id += 2
        node.h = best_h
        node.children = (left, right)
        for child in (left, right):
            leaves[child.node_id] = child
            h_scores[child.node_id] = heterogeneity(x[child.indices], seed=next_seed())

    labels = np.empty(n, dtype=np.int64)
    ordered = [leaves[nid] for nid in sorted(leaves)]
    centroids = np.empty((len(ordered), x.shape[1]))
    inertia = 0.0
    for c, leaf in enumerate(ordered):
        labels[leaf.indices] = c
        centroids[c] = x[leaf.indices].mean(axis=0)
        inertia += float(((x[leaf.indices] - centroids[c]) ** 2).sum())
    return ClusterModel(
        labels,
        len(ordered),
        centroids,
        inertia,
        method="divisive",
        seed=seed,
        split_tree=root,
        warning=warning,
    )


@dataclass
class KSweepResult:
    """Validity indices, normalized curves, and consensus across a k range."""

    ks: np.ndarray
    silhouette: np.ndarray
    calinski_harabasz: np.ndarray
    inertia: np.ndarray
    elbow: np.ndarray
    sil_norm: np.ndarray
    ch_norm: np.ndarray
    elbow_norm: np.ndarray
    consensus: np.ndarray
    chosen_k: int

    def write_csv(self, path: str | Path) -> None:
        header = "k,silhouette,calinski_harabasz,inertia,elbow,sil_norm,ch_norm,elbow_norm,consensus"
        lines = [header]
        for i in range(self.ks.size):
            cells = [str(int(self.ks[i]))] + [
                repr(float(a[i]))
                for a in (
                    self.silhouette,
                    self.calinski_harabasz,
                    self.inertia,
                    self.elbow,
                    self.sil_norm,
                    self.ch_norm,
                    self.elbow_norm,
                    self.consensus,
                )
            ]
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _chord_distance(ks: np.ndarray, inertia: np.ndarray) -> np.ndarray:
    """Positive distance below the chord joining the inertia curve's endpoints."""
    if ks.size < 3:
        return np.zeros(ks.size)
    kx = (ks - ks[0]) / (ks[-1] - ks[0])
    lo, hi = inertia.min(), inertia.max()
    iy = (inertia - lo) / (hi - lo) if hi > lo else np.zeros_like(inertia)
    x0, y0, x1, y1 = kx[0], iy[0], kx[-1], iy[-1]
    signed = (x1 - x0) * (iy - y0) - (y1 - y0) * (kx - x0)
    return np.clip(-signed / np.hypot(x1 - x0, y1 - y0), 0.0, None)


def _min_max(curve: np.ndarray) -> np.ndarray:
    lo, hi = curve.min(), curve.max()
    if hi <= lo:
        return np.zeros_like(curve)
    return (curve - lo) / (hi - lo)


def select_natural_k(
    data,
    k_range: tuple[int, int] = DEFAULT_K_RANGE,
    seed: int = 0,
    restarts: int = KMEANS_RESTARTS,
) -> KSweepResult:
    """Sweep k-means over [k_min, k_max] and pick k by index consensus.

    consensus = 0.5 * silhouette + 0.3 * Calinski-Harabasz + 0.2 * elbow,
    each curve min-max normalized over the range; ties pick the smaller k.
    """
    x = _as_array(data)
    n = x.shape[0]
    k_min, k_max = int(k_range[0]), int(k_range[1])
    if not (2 <= k_min <= k_max <= n):
        raise ValueError(f"k_range {k_range} must satisfy 2 <= k_min <= k_max <= {n}")

    ks = np.arange(k_min, k_max + 1)
    sil = np.empty(ks.size)
    ch = np.empty(ks.size)
    inertia = np.empty(ks.size)
    for i, k in enumerate(ks):
        model = kmeans(x, int(k), restarts=restarts, seed=seed)
        inertia[i] = model.inertia
        if k < n:
            sil[i] = metrics.silhouette(x, model.labels)
            ch[i] = metrics.calinski_harabasz(x, model.labels)
        else:
            sil[i] = 0.0  # singleton clusters
            ch[i] = 0.0
    finite = np.isfinite(ch)
    if not np.all(finite):
        cap = ch[finite].max() * 10.0 if np.any(finite) else 1.0
        ch = np.where(finite, ch, cap)

    elbow = _chord_distance(ks.astype(np.float64), inertia)
    sil_n, ch_n, elbow_n = _min_max(sil), _min_max(ch), _min_max(elbow)
    w_s, w_c, w_e = CONSENSUS_WEIGHTS
    consensus = w_s * sil_n + w_c * ch_n + w_e * elbow_n
    chosen = int(ks[int(np.argmax(consensus))])  # argmax takes the smaller k on ties
    return KSweepResult(ks, sil, ch, inertia, elbow, sil_n, ch_n, elbow_n, consensus, chosen)
