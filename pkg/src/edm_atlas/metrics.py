"""Clustering evaluation: external agreement, internal structure, and
cluster-size distribution metrics, plus six-dimension cluster profiles.

External metrics compare predicted labels to a reference labeling (NMI,
ARI, purity, raw mutual information). Internal metrics need only the data
(silhouette, Davies-Bouldin, and a bootstrap co-assignment stability
coefficient). Distribution metrics are the entropy of cluster sizes and
its normalized form. All logarithms are natural.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .table import FeatureMatrix

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BOOTSTRAP_RESAMPLES = 50
PAIR_MIN_OBSERVATIONS = 5

PROFILE_DIMENSIONS = ("energy", "danceability", "tempo", "harmonic", "rhythmic", "electronic")

# Ordered first-match-wins rules: dimension -> (name substrings, column groups).
DEFAULT_DIMENSION_RULES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "energy": (("rms", "loudness", "amplitude", "energy"), ()),
    "danceability": (("danceability", "dfa", "groove"), ()),
    "tempo": (("bpm", "tempo_"), ()),
    "harmonic": (("chroma", "tonnetz", "pitch", "harmonic"), ("harmonic",)),
    "rhythmic": (("onset", "beat", "percuss", "tg_"), ("rhythmic", "tempogram")),
    "electronic": (("spectral_", "mfcc", "timbre"), ("spectral", "timbral")),
}


def _as_array(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    return np.asarray(data, dtype=np.float64)


def _labels(a) -> np.ndarray:
    return np.asarray(a).ravel()


def _contingency(pred: np.ndarray, true: np.ndarray) -> np.ndarray:
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def _same_partition(table: np.ndarray) -> bool:
    return bool(np.all((table > 0).sum(axis=0) == 1) and np.all((table > 0).sum(axis=1) == 1))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mi_score(pred, true) -> float:
    """Unnormalized mutual information between two labelings, in nats."""
    pred, true = _labels(pred), _labels(true)
    if pred.size != true.size:
        raise ValueError("label vectors must have equal length")
    table = _contingency(pred, true)
    n = table.sum()
    pj = table / n
    pa = pj.sum(axis=1, keepdims=True)
    pb = pj.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pj > 0, pj * np.log(pj / (pa * pb)), 0.0)
    return float(max(terms.sum(), 0.0))


def nmi(pred, true) -> float:
    """Mutual information normalized by sqrt(H(pred) * H(true)).

    Identical partitions score 1; if either labeling has zero entropy and
    the partitions differ, the score is 0.
    """
    pred, true = _labels(pred), _labels(true)
    if pred.size != true.size:
        raise ValueError("label vectors must have equal length")
    table = _contingency(pred, true)
    if _same_partition(table):
        return 1.0
    h_pred = _entropy(table.sum(axis=1).astype(np.float64))
    h_true = _entropy(table.sum(axis=0).astype(np.float64))
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    return mi_score(pred, true) / float(np.sqrt(h_pred * h_true))


def ari(pred, true) -> float:
    """Adjusted Rand index via exact integer pair counting."""
    pred, true = _labels(pred), _labels(true)
    if pred.size != true.size:
        raise ValueError("label vectors must have equal length")
    if pred.size < 2:
        raise ValueError("ARI needs at least 2 samples")
    table = _contingency(pred, true)
    sum_ij = sum(comb(int(v), 2) for v in table.ravel() if v >= 2)
    sum_a = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(int(table.sum()), 2)
    expected = sum_a * sum_b / total
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0.0:
        return 1.0 if _same_partition(table) else 0.0
    return float((sum_ij - expected) / denom)


def purity(pred, true) -> float:
    """Fraction of samples matching their cluster's majority class."""
    pred, true = _labels(pred), _labels(true)
    if pred.size != true.size:
        raise ValueError("label vectors must have equal length")
    table = _contingency(pred, true)
    return float(table.max(axis=1).sum() / table.sum())


def silhouette(data, labels) -> float:
    """Mean silhouette coefficient; singleton clusters contribute 0."""
    x = _as_array(data)
    y = _labels(labels)
    classes, y_idx = np.unique(y, return_inverse=True)
    k = classes.size
    if k < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    n = x.shape[0]
    dist = squareform(pdist(x))
    counts = np.bincount(y_idx)
    # per-sample summed distance to each cluster
    sums = np.zeros((n, k))
    for c in range(k):
        sums[:, c] = dist[:, y_idx == c].sum(axis=1)
    scores = np.zeros(n)
    for i in range(n):
        c = y_idx[i]
        if counts[c] == 1:
            continue  # singleton convention
        a = sums[i, c] / (counts[c] - 1)
        b = np.inf
        for other in range(k):
            if other != c:
                b = min(b, sums[i, other] / counts[other])
        top = max(a, b)
        scores[i] = (b - a) / top if top > 0 else 0.0
    return float(scores.mean())


def davies_bouldin(data, labels) -> float:
    """Mean over clusters of the worst (s_i + s_j) / d_ij ratio.

    Pairs with coincident centroids are skipped; if every centroid
    coincides the index is undefined and an error is raised.
    """
    x = _as_array(data)
    y = _labels(labels)
    classes, y_idx = np.unique(y, return_inverse=True)
    k = classes.size
    if not 2 <= k < x.shape[0]:
        raise ValueError("davies_bouldin needs 2 <= k < n")
    centroids = np.vstack([x[y_idx == c].mean(axis=0) for c in range(k)])
    scatter = np.array(
        [np.linalg.norm(x[y_idx == c] - centroids[c], axis=1).mean() for c in range(k)]
    )
    sep = cdist(centroids, centroids)
    ratios = np.zeros(k)
    any_valid = False
    for i in range(k):
        best = 0.0
        for j in range(k):
            if j == i or sep[i, j] == 0.0:
                continue
            any_valid = True
            best = max(best, (scatter[i] + scatter[j]) / sep[i, j])
        ratios[i] = best
    if not any_valid:
        raise ValueError("all cluster centroids coincide; Davies-Bouldin undefined")
    return float(ratios.mean())


def calinski_harabasz(data, labels) -> float:
    """Between/within variance ratio scaled by (n - k) / (k - 1)."""
    x = _as_array(data)
    y = _labels(labels)
    classes, y_idx = np.unique(y, return_inverse=True)
    k = classes.size
    n = x.shape[0]
    if not 2 <= k < n:
        raise ValueError("calinski_harabasz needs 2 <= k < n")
    grand = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in range(k):
        pts = x[y_idx == c]
        centroid = pts.mean(axis=0)
        between += pts.shape[0] * float(((centroid - grand) ** 2).sum())
        within += float(((pts - centroid) ** 2).sum())
    if within == 0.0:
        return float("inf") if between > 0 else 0.0
    return float((between / (k - 1)) / (within / (n - k)))


def cophenetic_bootstrap(
    data,
    clusterer: Callable[[np.ndarray, int], np.ndarray],
    B: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
    resampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
) -> float:
    """Stability of co-assignment under bootstrap re-clustering.

    A is the full-data same-cluster matrix; each resample re-clusters a
    bootstrap draw and contributes co-assignment votes for the pairs it
    contains. The result is the Pearson correlation between A and the mean
    bootstrap co-assignment over pairs observed at least min(5, B) times.
    ``clusterer(matrix, seed) -> labels`` must be deterministic in its seed.
    """
    x = _as_array(data)
    n = x.shape[0]
    if n < 10:
        raise ValueError("bootstrap stability needs at least 10 samples")
    base = np.asarray(clusterer(x, seed), dtype=np.int64)
    a_mat = (base[:, None] == base[None, :]).astype(np.float64)

    votes = np.zeros((n, n))
    seen = np.zeros((n, n))
    root = np.random.SeedSequence(seed)
    for b, child in enumerate(root.spawn(B)):
        rng = np.random.default_rng(child)
        idx = resampler(rng, n) if resampler is not None else rng.integers(0, n, n)
        idx = np.unique(idx)
        labels = np.asarray(clusterer(x[idx], seed + b + 1), dtype=np.int64)
        same = (labels[:, None] == labels[None, :]).astype(np.float64)
        votes[np.ix_(idx, idx)] += same
        seen[np.ix_(idx, idx)] += 1.0

    iu = np.triu_indices(n, k=1)
    min_seen = min(PAIR_MIN_OBSERVATIONS, B)
    mask = seen[iu] >= min_seen
    if mask.sum() < 2:
        raise ValueError("too few pairs observed in bootstrap resamples")
    a_vals = a_mat[iu][mask]
    ahat = (votes[iu][mask]) / (seen[iu][mask])
    if a_vals.std() == 0.0:
        raise ValueError("co-assignment matrix is constant; correlation undefined")
    if ahat.std() == 0.0:
        return 0.0
    return float(np.corrcoef(a_vals, ahat)[0, 1])


def cophenetic_dendrogram(data, split_tree) -> float:
    """Classical cophenetic correlation for a divisive split tree.

    The cophenetic distance of a pair is the heterogeneity score of the
    node whose split separated it (0 for pairs sharing a final cluster);
    the result is its Pearson correlation with Euclidean distance.
    """
    x = _as_array(data)
    n = x.shape[0]
    coph = np.zeros((n, n))

    def fill(node):
        if node.children is None:
            return
        left, right = node.children
        coph[np.ix_(left.indices, right.indices)] = node.h
        coph[np.ix_(right.indices, left.indices)] = node.h
        fill(left)
        fill(right)

    fill(split_tree)
    iu = np.triu_indices(n, k=1)
    euclid = squareform(pdist(x))[iu]
    heights = coph[iu]
    if heights.std() == 0.0 or euclid.std() == 0.0:
        raise ValueError("degenerate distances; cophenetic correlation undefined")
    return float(np.corrcoef(euclid, heights)[0, 1])


def balance_metrics(labels) -> tuple[float, float]:
    """(entropy of cluster sizes in nats, entropy / ln k); k = 1 maps to 1."""
    y = _labels(labels)
    counts = np.bincount(np.unique(y, return_inverse=True)[1]).astype(np.float64)
    k = counts.size
    balance = _entropy(counts)
    normalized = 1.0 if k == 1 else balance / float(np.log(k))
    return balance, normalized


@dataclass
class EvaluationReport:
    """All metric values for one clustering, JSON-serializable."""

    external: dict[str, float]
    internal: dict[str, float]
    distribution: dict[str, float]
    context: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "context": self.context,
            "external": self.external,
            "internal": self.internal,
            "distribution": self.distribution,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        payload = json.loads(text)
        return cls(
            external=payload["external"],
            internal=payload["internal"],
            distribution=payload["distribution"],
            context=payload.get("context", {}),
            schema_version=payload.get("schema_version", SCHEMA_VERSION),
        )


def evaluate_all(
    data,
    labels,
    true_labels,
    clusterer: Callable[[np.ndarray, int], np.ndarray],
    B: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
    split_tree=None,
    context: dict | None = None,
) -> EvaluationReport:
    """Populate every external, internal, and distribution metric.

    A single-cluster labeling has no internal geometry to score; by
    convention it reports silhouette 0, Davies-Bouldin 0, and cophenetic 1
    (a constant partition is trivially stable).
    """
    x = _as_array(data)
    balance, norm_balance = balance_metrics(labels)
    if np.unique(_labels(labels)).size < 2:
        internal = {"silhouette": 0.0, "davies_bouldin": 0.0, "cophenetic": 1.0}
    else:
        internal = {
            "silhouette": silhouette(x, labels),
            "davies_bouldin": davies_bouldin(x, labels),
            "cophenetic": cophenetic_bootstrap(x, clusterer, B=B, seed=seed),
        }
    if split_tree is not None:
        internal["cophenetic_dendrogram"] = cophenetic_dendrogram(x, split_tree)
    return EvaluationReport(
        external={
            "nmi": nmi(labels, true_labels),
            "ari": ari(labels, true_labels),
            "purity": purity(labels, true_labels),
            "mi_score": mi_score(labels, true_labels),
        },
        internal=internal,
        distribution={"balance": balance, "normalized_balance": norm_balance},
        context=context or {},
    )


@dataclass
class ClusterProfile:
    """Percentile ranks (0-100) over the six interpretable dimensions."""

    cluster_id: int
    size: int
    purity: float
    majority_genre: str
    dimensions: dict[str, float | None]


def map_columns_to_dimensions(
    col_names: Sequence[str],
    col_groups: Sequence[str],
    rules: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]] | None = None,
) -> dict[str, list[int]]:
    """Assign each column to the first dimension whose rule matches it."""
    rules = rules or DEFAULT_DIMENSION_RULES
    mapping: dict[str, list[int]] = {dim: [] for dim in rules}
    for i, (name, group) in enumerate(zip(col_names, col_groups)):
        lowered = name.lower()
        for dim, (subs, groups) in rules.items():
            if any(s in lowered for s in subs) or group in groups:
                mapping[dim].append(i)
                break
    return mapping


def cluster_profiles(
    m: FeatureMatrix,
    labels,
    genres: Sequence[str],
    rules: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]] | None = None,
) -> list[ClusterProfile]:
    """Six-dimension acoustic profile per cluster as cross-cluster percentiles.

    Columns are z-scored, averaged within each dimension per cluster, and
    the cluster means are converted to percentile ranks over clusters
    (mid-rank ties; a lone cluster ranks 50). Dimensions with no matching
    columns are reported as absent.
    """
    y = _labels(labels)
    if y.size != m.shape[0] or len(genres) != m.shape[0]:
        raise ValueError("labels and genres must align with matrix rows")
    mapping = map_columns_to_dimensions(m.col_names, m.col_groups, rules)
    for dim, cols in mapping.items():
        if not cols:
            logger.warning("no columns matched profile dimension %r; reported absent", dim)

    std = m.data.std(axis=0)
    z = np.where(std > 0, (m.data - m.data.mean(axis=0)) / np.where(std > 0, std, 1.0), 0.0)

    classes = np.unique(y)
    k = classes.size
    dim_means = {}
    for dim, cols in mapping.items():
        if not cols:
            continue
        per_cluster = np.array([z[np.ix_(y == c, cols)].mean() for c in classes])
        dim_means[dim] = per_cluster

    def midrank_percentiles(values: np.ndarray) -> np.ndarray:
        if k == 1:
            return np.array([50.0])
        order = np.argsort(values, kind="stable")
        ranks = np.empty(k)
        i = 0
        sorted_vals = values[order]
        while i < k:
            j = i
            while j + 1 < k and sorted_vals[j + 1] == sorted_vals[i]:
                j += 1
            ranks[order[i : j + 1]] = (i + j) / 2.0
            i = j + 1
        return 100.0 * ranks / (k - 1)

    percentiles = {dim: midrank_percentiles(v) for dim, v in dim_means.items()}

    genres_arr = np.asarray(genres, dtype=object)
    profiles = []
    for ci, c in enumerate(classes):
        members = genres_arr[y == c]
        uniq, counts = np.unique(members, return_counts=True)
        top = counts.max()
        majority = sorted(uniq[counts == top])[0]
        dims: dict[str, float | None] = {}
        for dim in mapping:
            dims[dim] = float(percentiles[dim][ci]) if dim in percentiles else None
        profiles.append(
            ClusterProfile(
                cluster_id=int(c),
                size=int(members.size),
                purity=float(top / members.size),
                majority_genre=str(majority),
                dimensions=dims,
            )
        )
    return profiles


def profiles_to_csv(profiles: Sequence[ClusterProfile], path: str | Path) -> None:
    header = ["cluster", "size", "purity", "majority_genre", *PROFILE_DIMENSIONS]
    lines = [",".join(header), f"#schema_version:{SCHEMA_VERSION}"]
    for p in profiles:
        cells = [str(p.cluster_id), str(p.size), repr(p.purity), p.majority_genre]
        for dim in PROFILE_DIMENSIONS:
            v = p.dimensions.get(dim)
            cells.append("" if v is None else repr(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
