"""End-to-end orchestration: extract, select, cluster, sweep, profile, plot.

Every stage derives its randomness from the single root seed through a
stage-name hash (``stage_seed``), so a partial rerun of any stage with the
same config reproduces its outputs byte for byte. Stages communicate
through files in the output directory:

* ``features.csv``          extracted feature matrix (extract)
* ``selection_report.csv``  per-feature selection scores (cluster/sweep)
* ``selected.csv``          matrix restricted to the selected features
* ``labels_<method>.csv`` / ``model_<method>.json``   clustering outputs
* ``report_<method>.json``  evaluation metrics
* ``sweep.csv``             per-k validity indices and consensus
* ``profiles.csv`` / ``profile_cluster_<i>.svg``      cluster profiles
* ``scatter.svg``           PCA projection colored by cluster
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .audio import CANONICAL_RATE, load_wav, resample, stft
from .cluster import ClusterModel, divisive_cluster, kmeans, select_natural_k
from .features import _band_emphasis_from_spec, fundamental_feature_vector
from .fixtures import DEFAULT_FAMILIES, FixtureFamily, write_fixture_set
from .plots import pca_project, radar_svg, scatter_svg
from .selection import LabelVector, engineer_features, ensemble_normalize, ensemble_select
from .table import (
    FeatureMatrix,
    TrackRecord,
    assemble_matrix,
    import_embeddings,
    load_manifest,
    load_matrix,
    save_matrix,
)
from .tempogram import novelty_curve, tempogram_features_from_novelty
from .types import FeatureVector

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


class StageError(RuntimeError):
    """A pipeline stage failed fatally (maps to exit code 3)."""


@dataclass
class RunConfig:
    manifest: str | None = None
    out: str | None = None
    seed: int = 0
    k: int = 35
    k_min: int = 15
    k_max: int = 40
    restarts: int = 50
    top_k: int = 100
    method: str = "kmeans"  # kmeans | divisive | both
    embeddings: str | None = None
    workers: int = field(default_factory=lambda: max(1, os.cpu_count() or 1))
    labels: str | None = None  # labels CSV for profile/plot

    def validate(self, need_manifest: bool = True) -> None:
        if need_manifest and not self.manifest:
            raise ConfigError("a manifest path is required (--manifest)")
        if need_manifest and not Path(self.manifest).exists():
            raise ConfigError(f"manifest not found: {self.manifest}")
        if self.embeddings and not Path(self.embeddings).exists():
            raise ConfigError(f"embeddings file not found: {self.embeddings}")
        if not self.out:
            raise ConfigError("an output directory is required (--out)")
        if self.method not in ("kmeans", "divisive", "both"):
            raise ConfigError(f"method must be kmeans|divisive|both, got {self.method!r}")
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if not 2 <= self.k_min <= self.k_max:
            raise ConfigError(f"need 2 <= k-min <= k-max, got [{self.k_min}, {self.k_max}]")
        if self.restarts < 1 or self.top_k < 1 or self.workers < 1:
            raise ConfigError("restarts, top-k, and workers must be positive")


_INT_KEYS = {"seed", "k", "k_min", "k_max", "restarts", "top_k", "workers"}
_STR_KEYS = {"manifest", "out", "method", "embeddings", "labels"}


def load_config_file(path: str | Path) -> dict:
    """Parse a flat key=value config file (# starts a comment line)."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno} is not key=value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}: {key} must be an integer, got {value!r}") from None
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ConfigError(f"{path}: unknown config key {key!r}")
    return values


def build_config(file_path: str | None, overrides: dict) -> RunConfig:
    """Defaults < config file < explicit CLI flags."""
    cfg = RunConfig()
    if file_path:
        cfg = replace(cfg, **load_config_file(file_path))
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **cleaned)


def stage_seed(root_seed: int, stage: str) -> int:
    """Per-stage seed: hash of the stage name mixed with the root seed."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


# ---------------------------------------------------------------------------
# extraction


def extract_track(record: TrackRecord, base_dir: Path) -> FeatureVector:
    """Full 92 + 64 + 6 feature vector for one manifest record."""
    wav_path = Path(record.path)
    if not wav_path.is_absolute():
        wav_path = base_dir / wav_path
    clip = load_wav(wav_path)
    if clip.sample_rate != CANONICAL_RATE:
        clip = resample(clip, CANONICAL_RATE)

    spec = stft(clip)
    nov = novelty_curve(spec)
    fundamental = fundamental_feature_vector(clip)
    tempogram_block = tempogram_features_from_novelty(nov)
    band_block = _band_emphasis_from_spec(spec)
    return FeatureVector.concat([fundamental, tempogram_block, band_block])


def _extract_worker(args) -> tuple[str, FeatureVector | None, str | None]:
    record, base_dir = args
    try:
        return record.track_id, extract_track(record, base_dir), None
    except Exception as exc:  # per-track failures must not abort the batch
        return record.track_id, None, str(exc)


def cmd_extract(cfg: RunConfig) -> tuple[FeatureMatrix, list[str]]:
    """Extract features for every manifest track; returns (matrix, failed_ids)."""
    cfg.validate()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_manifest(cfg.manifest)
    base_dir = Path(cfg.manifest).parent

    jobs = [(rec, base_dir) for rec in records]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_extract_worker, jobs))
    else:
        results = [_extract_worker(job) for job in jobs]

    vectors: dict[str, FeatureVector] = {}
    failed: list[str] = []
    for track_id, vec, err in results:
        if vec is None:
            failed.append(track_id)
            logger.warning("extraction failed for %s: %s", track_id, err)
        else:
            vectors[track_id] = vec
    if not vectors:
        raise StageError("extraction failed for every track")

    kept = [r for r in records if r.track_id in vectors]
    matrix = assemble_matrix(kept, vectors)
    save_matrix(matrix, out_dir / "features.csv")
    logger.info("extracted %d/%d tracks -> %s", len(kept), len(records), out_dir / "features.csv")
    return matrix, failed


# ---------------------------------------------------------------------------
# selection + clustering


def _load_features(cfg: RunConfig) -> tuple[FeatureMatrix, list[str]]:
    path = Path(cfg.out) / "features.csv"
    if not path.exists():
        raise ConfigError(f"{path} not found; run the extract stage first")
    matrix = load_matrix(path)
    records = {r.track_id: r for r in load_manifest(cfg.manifest)}
    missing = [rid for rid in matrix.row_ids if rid not in records]
    if missing:
        raise StageError(f"matrix rows missing from manifest: {missing[:5]}")
    genres = [records[rid].genre for rid in matrix.row_ids]
    return matrix, genres


def prepare_selected(cfg: RunConfig) -> tuple[FeatureMatrix, LabelVector]:
    """engineer -> normalize -> select, persisting the selection artifacts."""
    matrix, genres = _load_features(cfg)
    labels = LabelVector.from_strings(genres)
    engineered = engineer_features(matrix)
    normalized = ensemble_normalize(engineered)
    top_k = min(cfg.top_k, normalized.shape[1])
    if top_k < cfg.top_k:
        logger.warning("top_k clipped to %d available features", top_k)
    selected, report = ensemble_select(
        normalized, labels, top_k=top_k, seed=stage_seed(cfg.seed, "select")
    )
    out_dir = Path(cfg.out)
    report.write_csv(out_dir / "selection_report.csv")
    save_matrix(selected, out_dir / "selected.csv")
    return selected, labels


def _clustering_input(cfg: RunConfig) -> tuple[FeatureMatrix, LabelVector, bool]:
    if cfg.embeddings:
        records = load_manifest(cfg.manifest)
        matrix = import_embeddings(cfg.embeddings, records)
        labels = LabelVector.from_strings([r.genre for r in records])
        logger.info("embeddings supplied: selection stage skipped")
        return matrix, labels, True
    selected, labels = prepare_selected(cfg)
    return selected, labels, False


def _run_method(
    matrix: FeatureMatrix, method: str, cfg: RunConfig
) -> tuple[ClusterModel, metrics.EvaluationReport]:
    seed = stage_seed(cfg.seed, f"cluster:{method}")
    if cfg.k > matrix.shape[0]:
        raise ConfigError(f"k={cfg.k} exceeds {matrix.shape[0]} tracks")
    if method == "kmeans":
        model = kmeans(matrix.data, cfg.k, restarts=cfg.restarts, seed=seed)

        def clusterer(x, s):
            return kmeans(x, min(cfg.k, x.shape[0]), restarts=10, seed=s).labels

    else:
        model = divisive_cluster(matrix.data, cfg.k, seed=seed)

        def clusterer(x, s):
            return divisive_cluster(x, min(cfg.k, x.shape[0]), seed=s).labels

    return model, clusterer


def cmd_cluster(cfg: RunConfig) -> dict[str, metrics.EvaluationReport]:
    """Cluster at the fixed k and evaluate against the genre labeling."""
    cfg.validate()
    matrix, labels, skipped_selection = _clustering_input(cfg)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    methods = ("kmeans", "divisive") if cfg.method == "both" else (cfg.method,)
    reports: dict[str, metrics.EvaluationReport] = {}
    for method in methods:
        model, clusterer = _run_method(matrix, method, cfg)
        model.save(
            out_dir / f"labels_{method}.csv", out_dir / f"model_{method}.json", matrix.row_ids
        )
        context = {
            "method": method,
            "k": model.k,
            "seed": cfg.seed,
            "selection": "skipped" if skipped_selection else "applied",
        }
        report = metrics.evaluate_all(
            matrix.data,
            model.labels,
            labels.labels,
            clusterer,
            seed=stage_seed(cfg.seed, f"bootstrap:{method}"),
            split_tree=model.split_tree,
            context=context,
        )
        report.save(out_dir / f"report_{method}.json")
        reports[method] = report
        logger.info("%s: k=%d ari=%.4f nmi=%.4f", method, model.k, report.external["ari"], report.external["nmi"])
    return reports


def cmd_sweep(cfg: RunConfig):
    """Natural-k sweep over [k_min, k_max]; returns the KSweepResult."""
    cfg.validate()
    if cfg.embeddings:
        matrix, _, _ = _clustering_input(cfg)
    else:
        matrix, _ = prepare_selected(cfg)
    n = matrix.shape[0]
    if cfg.k_max > n:
        raise ConfigError(f"k-max={cfg.k_max} exceeds {n} tracks")
    result = select_natural_k(
        matrix.data,
        (cfg.k_min, cfg.k_max),
        seed=stage_seed(cfg.seed, "sweep"),
        restarts=cfg.restarts,
    )
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.write_csv(out_dir / "sweep.csv")
    print(f"chosen_k={result.chosen_k}")
    return result


# ---------------------------------------------------------------------------
# profiling and plotting


def _load_labels_csv(path: Path, row_ids: list[str]) -> np.ndarray:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "track_id,label":
        raise ConfigError(f"{path} is not a labels CSV (expected 'track_id,label' header)")
    mapping = {}
    for line in lines[1:]:
        if not line:
            continue
        tid, _, lab = line.partition(",")
        mapping[tid] = int(lab)
    missing = [rid for rid in row_ids if rid not in mapping]
    if missing:
        raise ConfigError(f"labels file missing tracks: {missing[:5]}")
    return np.array([mapping[rid] for rid in row_ids], dtype=np.int64)


def _resolve_labels_path(cfg: RunConfig) -> Path:
    if cfg.labels:
        return Path(cfg.labels)
    for method in ("kmeans", "divisive"):
        candidate = Path(cfg.out) / f"labels_{method}.csv"
        if candidate.exists():
            return candidate
    raise ConfigError("no labels CSV found; run the cluster stage or pass --labels")


def cmd_profile(cfg: RunConfig) -> list[metrics.ClusterProfile]:
    """Six-dimension percentile profiles plus one radar SVG per cluster."""
    cfg.validate()
    matrix, genres = _load_features(cfg)
    labels = _load_labels_csv(_resolve_labels_path(cfg), matrix.row_ids)

    rules = None
    override = Path(cfg.out) / "dimension_map.json"
    if override.exists():
        raw = json.loads(override.read_text(encoding="utf-8"))
        rules = {dim: (tuple(v[0]), tuple(v[1])) for dim, v in raw.items()}
        logger.info("using dimension mapping override from %s", override)

    profiles = metrics.cluster_profiles(matrix, labels, genres, rules=rules)
    out_dir = Path(cfg.out)
    metrics.profiles_to_csv(profiles, out_dir / "profiles.csv")
    for p in profiles:
        axes = [
            (dim.capitalize(), value)
            for dim, value in p.dimensions.items()
            if value is not None
        ]
        svg = radar_svg(f"Cluster {p.cluster_id} ({p.majority_genre})", axes)
        (out_dir / f"profile_cluster_{p.cluster_id}.svg").write_text(svg, encoding="utf-8")
    return profiles


def cmd_plot(cfg: RunConfig) -> Path:
    """PCA scatter of the clustering space, colored by cluster labels."""
    cfg.validate()
    if cfg.embeddings:
        matrix, _, _ = _clustering_input(cfg)
    else:
        selected_path = Path(cfg.out) / "selected.csv"
        matrix = load_matrix(selected_path) if selected_path.exists() else prepare_selected(cfg)[0]
    labels = _load_labels_csv(_resolve_labels_path(cfg), matrix.row_ids)
    points, variances = pca_project(matrix.data)
    svg = scatter_svg(
        points,
        labels,
        title=f"PCA projection (var {variances[0]:.3g} / {variances[1]:.3g})",
    )
    out_path = Path(cfg.out) / "scatter.svg"
    out_path.write_text(svg, encoding="utf-8")
    return out_path


def cmd_fixtures(
    out_dir: str | Path,
    families=DEFAULT_FAMILIES,
    per_genre: int | None = None,
    duration: float = 12.0,
    seed: int = 0,
) -> Path:
    """Write the synthetic fixture set and its manifest."""
    if per_genre is not None:
        families = tuple(
            FixtureFamily(f.genre, f.kind, f.bpm, per_genre) for f in families
        )
    return write_fixture_set(out_dir, families=families, duration=duration, seed=seed)
