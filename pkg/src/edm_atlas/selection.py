"""Feature engineering, ensemble normalization, and multi-criteria selection.

The selection ensemble scores every feature with six methods (ANOVA F,
mutual information, random-forest and extra-trees Gini importance,
variance, and a per-feature cluster separation index), min-max normalizes
each method's scores to [0, 1], and combines them with weights
(0.25, 0.20, 0.20, 0.15, 0.10, 0.10). The top_k features by ensemble score
survive. Normalization blends robust, power, and standard scaling with
weights 0.5 / 0.3 / 0.2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .table import FeatureMatrix
from .trees import forest_gini_importance

logger = logging.getLogger(__name__)

METHOD_WEIGHTS = {
    "anova_f": 0.25,
    "mutual_info": 0.20,
    "rf_importance": 0.20,
    "et_importance": 0.15,
    "variance": 0.10,
    "cluster_sep": 0.10,
}

NORMALIZE_WEIGHTS = (0.5, 0.3, 0.2)  # robust, power, standard
YJ_LAMBDA_GRID = np.round(np.arange(-2.0, 2.0 + 1e-9, 0.01), 2)

ENGINEER_TOP_VARIANCE = 20
ENGINEER_TOP_SKEW = 20
INTERACTION_GROUPS = ("spectral", "timbral", "harmonic", "rhythmic", "tempogram")
MI_BINS = 16
DEFAULT_TOP_K = 100


@dataclass
class LabelVector:
    """Integer class labels aligned to matrix rows."""

    labels: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and self.labels.max() >= len(self.class_names):
            raise ValueError("label index exceeds class_names")

    @classmethod
    def from_strings(cls, genres) -> "LabelVector":
        names = sorted(set(genres))
        index = {g: i for i, g in enumerate(names)}
        return cls(np.array([index[g] for g in genres]), names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass
class SelectionReport:
    """Raw, normalized, and ensemble scores for every candidate feature."""

    feature_names: list[str]
    raw: dict[str, np.ndarray]
    normalized: dict[str, np.ndarray]
    ensemble: np.ndarray
    selected: np.ndarray
    weights: dict[str, float] = field(default_factory=lambda: dict(METHOD_WEIGHTS))

    def write_csv(self, path: str | Path) -> None:
        methods = list(self.weights)
        header = (
            ["feature"]
            + [f"{m}_raw" for m in methods]
            + [f"{m}_norm" for m in methods]
            + ["ensemble", "selected"]
        )
        lines = [",".join(header)]
        for i, name in enumerate(self.feature_names):
            cells = [name]
            cells += [repr(float(self.raw[m][i])) for m in methods]
            cells += [repr(float(self.normalized[m][i])) for m in methods]
            cells += [repr(float(self.ensemble[i])), str(int(self.selected[i]))]
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _column_variance(data: np.ndarray) -> np.ndarray:
    return data.var(axis=0)


def _column_skewness(data: np.ndarray) -> np.ndarray:
    centered = data - data.mean(axis=0)
    m2 = (centered**2).mean(axis=0)
    m3 = (centered**3).mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        skew = np.where(m2 > 0, m3 / np.where(m2 > 0, m2, 1.0) ** 1.5, np.nan)
    return skew


def _rank_columns(scores: np.ndarray, names: list[str], top: int, what: str) -> list[int]:
    usable = [i for i in range(len(names)) if np.isfinite(scores[i])]
    if len(usable) < top:
        logger.warning("only %d columns usable for %s (wanted %d)", len(usable), what, top)
    usable.sort(key=lambda i: (-scores[i], names[i]))
    return usable[:top]


def engineer_features(m: FeatureMatrix) -> FeatureMatrix:
    """Append engineered columns: squares, log transforms, interactions.

    (a) squares of the 20 highest-variance columns, (b) log(1 + x - min x)
    of the 20 columns with largest |skewness| (constant columns excluded),
    (c) products of the highest-variance column from each pair of audio
    groups. Names: ``sq_<f>``, ``log_<f>``, ``x_<f>_<g>``.
    """
    var = _column_variance(m.data)
    new_cols, new_names = [], []

    for i in _rank_columns(var, m.col_names, ENGINEER_TOP_VARIANCE, "square expansion"):
        new_cols.append(m.data[:, i] ** 2)
        new_names.append(f"sq_{m.col_names[i]}")

    skew = np.abs(_column_skewness(m.data))
    for i in _rank_columns(skew, m.col_names, ENGINEER_TOP_SKEW, "log transform"):
        col = m.data[:, i]
        new_cols.append(np.log1p(col - col.min()))
        new_names.append(f"log_{m.col_names[i]}")

    best_per_group: dict[str, int] = {}
    for g in INTERACTION_GROUPS:
        idx = [i for i, cg in enumerate(m.col_groups) if cg == g]
        if idx:
            best_per_group[g] = min(idx, key=lambda i: (-var[i], m.col_names[i]))
    missing = [g for g in INTERACTION_GROUPS if g not in best_per_group]
    if missing:
        logger.warning("no columns for groups %s; their interactions are skipped", missing)
    for ga, gb in combinations([g for g in INTERACTION_GROUPS if g in best_per_group], 2):
        ia, ib = best_per_group[ga], best_per_group[gb]
        new_cols.append(m.data[:, ia] * m.data[:, ib])
        new_names.append(f"x_{m.col_names[ia]}_{m.col_names[ib]}")

    data = np.column_stack([m.data] + new_cols) if new_cols else m.data.copy()
    return FeatureMatrix(
        m.row_ids,
        m.col_names + new_names,
        m.col_groups + ["engineered"] * len(new_names),
        data,
    )


def robust_scale(col: np.ndarray) -> np.ndarray:
    """(x - median) / IQR; falls back to std when the IQR is zero."""
    med = np.median(col)
    iqr = np.quantile(col, 0.75) - np.quantile(col, 0.25)
    scale = iqr if iqr > 0 else col.std()
    if scale <= 0:
        return np.zeros_like(col)
    return (col - med) / scale


def _yeo_johnson(col: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(col)
    pos = col >= 0
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(col[pos])
    else:
        out[pos] = (np.exp(lam * np.log1p(col[pos])) - 1.0) / lam
    neg = ~pos
    if np.any(neg):
        if abs(lam - 2.0) < 1e-12:
            out[neg] = -np.log1p(-col[neg])
        else:
            out[neg] = -(np.exp((2.0 - lam) * np.log1p(-col[neg])) - 1.0) / (2.0 - lam)
    return out


def power_scale(col: np.ndarray) -> np.ndarray:
    """Z-scored Yeo-Johnson transform, lambda picked by grid-searched
    normal log-likelihood over [-2, 2] in steps of 0.01."""
    if col.max() == col.min():
        return np.zeros_like(col)
    n = col.size
    penalty = np.sign(col) * np.log1p(np.abs(col))
    penalty_sum = penalty.sum()
    best_lam, best_ll = None, -np.inf
    for lam in YJ_LAMBDA_GRID:
        t = _yeo_johnson(col, float(lam))
        var = t.var()
        if var <= 0 or not np.isfinite(var):
            continue
        ll = -0.5 * n * np.log(var) + (lam - 1.0) * penalty_sum
        if ll > best_ll:
            best_ll, best_lam = ll, float(lam)
    if best_lam is None:
        return np.zeros_like(col)
    t = _yeo_johnson(col, best_lam)
    std = t.std()
    return (t - t.mean()) / std if std > 0 else np.zeros_like(col)


def standard_scale(col: np.ndarray) -> np.ndarray:
    std = col.std()
    if std <= 0:
        return np.zeros_like(col)
    return (col - col.mean()) / std


def ensemble_normalize(m: FeatureMatrix) -> FeatureMatrix:
    """Blend robust, power, and standard scaling per column (0.5/0.3/0.2).

    Constant columns map to all-zeros.
    """
    w_r, w_p, w_z = NORMALIZE_WEIGHTS
    out = np.empty_like(m.data)
    for j in range(m.data.shape[1]):
        col = m.data[:, j]
        if col.max() == col.min():
            out[:, j] = 0.0
            continue
        out[:, j] = w_r * robust_scale(col) + w_p * power_scale(col) + w_z * standard_scale(col)
    return FeatureMatrix(m.row_ids, list(m.col_names), list(m.col_groups), out)


def _check_labels(labels: LabelVector, n_rows: int, min_per_class: int = 1) -> None:
    if labels.labels.size != n_rows:
        raise ValueError("labels not aligned to matrix rows")
    counts = np.bincount(labels.labels, minlength=labels.n_classes)
    if (counts > 0).sum() < 2:
        raise ValueError("need at least 2 classes")
    if np.any((counts > 0) & (counts < min_per_class)):
        raise ValueError(f"every class needs at least {min_per_class} samples")


def _f_ratio(data: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column (SSB/(K-1)) / (SSW/(n-K)); returns (F, zero_within_mask)."""
    n, _ = data.shape
    classes, y_idx = np.unique(y, return_inverse=True)
    k = classes.size
    counts = np.bincount(y_idx).astype(np.float64)
    sums = np.zeros((k, data.shape[1]))
    np.add.at(sums, y_idx, data)
    group_means = sums / counts[:, None]
    grand_mean = data.mean(axis=0)
    ssb = (counts[:, None] * (group_means - grand_mean) ** 2).sum(axis=0)
    sst = ((data - grand_mean) ** 2).sum(axis=0)
    ssw = np.maximum(sst - ssb, 0.0)
    msb = ssb / (k - 1)
    msw = ssw / (n - k)
    # ssw comes from a cancellation-prone difference; anything below 1e-10
    # of the total is perfect separation, not variance
    zero_within = ssw <= 1e-10 * np.maximum(sst, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(zero_within, 0.0, msb / np.where(zero_within, 1.0, msw))
    return f, zero_within & (msb > 0)


def _with_sentinel(f: np.ndarray, infinite: np.ndarray) -> np.ndarray:
    """Replace perfectly-separating columns with 10x the largest finite score."""
    out = f.copy()
    if np.any(infinite):
        finite_max = out[~infinite].max() if np.any(~infinite) else 0.0
        out[infinite] = finite_max * 10.0 if finite_max > 0 else 10.0
    return out


def anova_f(m: FeatureMatrix, labels: LabelVector) -> np.ndarray:
    """One-way ANOVA F statistic per column."""
    _check_labels(labels, m.shape[0], min_per_class=2)
    f, infinite = _f_ratio(m.data, labels.labels)
    return _with_sentinel(f, infinite)


def mutual_info(m: FeatureMatrix, labels: LabelVector, bins: int = MI_BINS) -> np.ndarray:
    """Plug-in mutual information (nats) between equal-frequency-binned
    feature values and the class label."""
    _check_labels(labels, m.shape[0])
    n = m.shape[0]
    y = labels.labels
    scores = np.empty(m.shape[1])
    for j in range(m.shape[1]):
        col = m.data[:, j]
        edges = np.unique(np.quantile(col, np.linspace(0, 1, bins + 1)[1:-1]))
        binned = np.searchsorted(edges, col, side="right")
        scores[j] = _discrete_mi(binned, y, n)
    return scores


def _discrete_mi(a: np.ndarray, b: np.ndarray, n: int) -> float:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    pj = joint / n
    pa = pj.sum(axis=1, keepdims=True)
    pb = pj.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pj > 0, pj * np.log(pj / (pa * pb)), 0.0)
    return float(max(terms.sum(), 0.0))


def forest_importance(m: FeatureMatrix, labels: LabelVector, mode: str, seed: int = 0) -> np.ndarray:
    """Gini importance from the from-scratch tree ensemble (sums to 1)."""
    _check_labels(labels, m.shape[0])
    return forest_gini_importance(m.data, labels.labels, mode=mode, seed=seed)


def variance_score(m: FeatureMatrix) -> np.ndarray:
    """Sample variance per column."""
    if m.shape[0] < 2:
        return np.zeros(m.shape[1])
    return m.data.var(axis=0, ddof=1)


def cluster_separation_score(m: FeatureMatrix, labels: LabelVector) -> np.ndarray:
    """Per-column 1-D Calinski-Harabasz index of the genre labeling."""
    _check_labels(labels, m.shape[0])
    f, infinite = _f_ratio(m.data, labels.labels)
    return _with_sentinel(f, infinite)


def _min_max(scores: np.ndarray) -> np.ndarray:
    lo, hi = scores.min(), scores.max()
    if hi <= lo:
        return np.zeros_like(scores)
    return (scores - lo) / (hi - lo)


def ensemble_select(
    m: FeatureMatrix,
    labels: LabelVector,
    top_k: int = DEFAULT_TOP_K,
    seed: int = 0,
) -> tuple[FeatureMatrix, SelectionReport]:
    """Keep the top_k features by weighted ensemble score.

    Scoring happens in canonical (name-sorted) column order so that the
    result is invariant to the input column order; ensemble ties also break
    by column-name lexicographic order.
    """
    d = m.shape[1]
    if top_k > d:
        raise ValueError(f"top_k {top_k} exceeds {d} available features")
    canon = sorted(range(d), key=lambda i: m.col_names[i])
    m_canon = FeatureMatrix(
        m.row_ids,
        [m.col_names[i] for i in canon],
        [m.col_groups[i] for i in canon],
        m.data[:, canon],
    )
    raw_canon = {
        "anova_f": anova_f(m_canon, labels),
        "mutual_info": mutual_info(m_canon, labels),
        "rf_importance": forest_importance(m_canon, labels, "random_forest", seed=seed),
        "et_importance": forest_importance(m_canon, labels, "extra_trees", seed=seed + 1),
        "variance": variance_score(m_canon),
        "cluster_sep": cluster_separation_score(m_canon, labels),
    }
    undo = np.empty(d, dtype=int)
    undo[canon] = np.arange(d)
    raw = {k: v[undo] for k, v in raw_canon.items()}
    normalized = {k: _min_max(v) for k, v in raw.items()}
    ensemble = np.zeros(d)
    for method, weight in METHOD_WEIGHTS.items():
        ensemble += weight * normalized[method]

    order = sorted(range(d), key=lambda i: (-ensemble[i], m.col_names[i]))
    selected = np.zeros(d, dtype=bool)
    selected[order[:top_k]] = True
    report = SelectionReport(list(m.col_names), raw, normalized, ensemble, selected)
    return m.select(selected), report
