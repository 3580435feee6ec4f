"""Aligned multi-view tabular data: loading, preprocessing, partitions, splits, synthesis.

All views of a dataset share the same samples in the same order. Feature
matrices are float64 numpy arrays with NaN marking missing entries until
imputation. Subset partitions group the columns of a view into contiguous
blocks (the corruption module masks whole blocks at a time).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

MISSING_TOKENS = {"", "NA"}

DEFAULT_N_SUBSETS = 23


class DataError(ValueError):
    """Raised for malformed input files or inconsistent dataset structure."""


# ---------------------------------------------------------------------------
# core containers
# ---------------------------------------------------------------------------


@dataclass
class OmicsMatrix:
    """One view: a samples x features matrix with string identifiers."""

    view_id: str
    sample_ids: list[str]
    feature_ids: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(
                f"view {self.view_id!r}: values must be 2-dimensional, "
                f"got shape {self.values.shape}"
            )
        n, d = self.values.shape
        if n != len(self.sample_ids):
            raise DataError(
                f"view {self.view_id!r}: {len(self.sample_ids)} sample ids "
                f"but {n} rows"
            )
        if d != len(self.feature_ids):
            raise DataError(
                f"view {self.view_id!r}: {len(self.feature_ids)} feature ids "
                f"but {d} columns"
            )
        for name, ids in (("sample", self.sample_ids), ("feature", self.feature_ids)):
            if len(set(ids)) != len(ids):
                dup = _first_duplicate(ids)
                raise DataError(f"view {self.view_id!r}: duplicate {name} id {dup!r}")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class SubsetPartition:
    """Assignment of every feature of a view to one of K subsets (0..K-1)."""

    view_id: str
    assignment: np.ndarray

    def __post_init__(self) -> None:
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.ndim != 1 or self.assignment.size == 0:
            raise DataError(
                f"partition for view {self.view_id!r}: assignment must be a "
                "non-empty 1-d array"
            )
        if self.assignment.min() < 0:
            raise DataError(
                f"partition for view {self.view_id!r}: negative subset id"
            )
        k = int(self.assignment.max()) + 1
        counts = np.bincount(self.assignment, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise DataError(
                f"partition for view {self.view_id!r}: subset {int(empty[0])} "
                "has no features"
            )

    @property
    def n_subsets(self) -> int:
        return int(self.assignment.max()) + 1

    @property
    def n_features(self) -> int:
        return int(self.assignment.size)

    def features_in(self, subset_id: int) -> np.ndarray:
        """Column indices belonging to one subset."""
        if not 0 <= subset_id < self.n_subsets:
            raise DataError(
                f"partition for view {self.view_id!r}: subset id {subset_id} "
                f"out of range [0, {self.n_subsets})"
            )
        return np.flatnonzero(self.assignment == subset_id)


@dataclass
class MultiOmicsDataset:
    """Aligned views plus integer labels and optional per-view partitions."""

    views: list[OmicsMatrix]
    labels: np.ndarray
    class_names: list[str]
    partitions: dict[str, SubsetPartition] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.views:
            raise DataError("dataset needs at least one view")
        ids = [v.view_id for v in self.views]
        if len(set(ids)) != len(ids):
            raise DataError(f"duplicate view id {_first_duplicate(ids)!r}")
        ref = self.views[0].sample_ids
        for v in self.views[1:]:
            if v.sample_ids != ref:
                raise DataError(
                    f"view {v.view_id!r} sample ids do not match view "
                    f"{self.views[0].view_id!r} (same samples, same order required)"
                )
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (len(ref),):
            raise DataError(
                f"labels shape {self.labels.shape} does not match "
                f"{len(ref)} samples"
            )
        if len(self.class_names) != len(set(self.class_names)):
            raise DataError("duplicate class name")
        if self.labels.size and not (
            0 <= self.labels.min() and self.labels.max() < len(self.class_names)
        ):
            raise DataError(
                f"labels must lie in [0, {len(self.class_names)}), got range "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        for view_id, part in self.partitions.items():
            view = self.view(view_id)
            if part.n_features != view.n_features:
                raise DataError(
                    f"partition for view {view_id!r} covers {part.n_features} "
                    f"features, view has {view.n_features}"
                )

    @property
    def n_samples(self) -> int:
        return self.views[0].n_samples

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def view_ids(self) -> list[str]:
        return [v.view_id for v in self.views]

    @property
    def sample_ids(self) -> list[str]:
        return self.views[0].sample_ids

    @property
    def view_dims(self) -> tuple[int, ...]:
        return tuple(v.n_features for v in self.views)

    def view(self, view_id: str) -> OmicsMatrix:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise DataError(f"no view with id {view_id!r}")

    def view_index(self, view_id: str) -> int:
        for i, v in enumerate(self.views):
            if v.view_id == view_id:
                return i
        raise DataError(f"no view with id {view_id!r}")


@dataclass
class SplitSpec:
    """Row indices of the train/val/test partition of a dataset."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    labelled_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        self.train = np.asarray(self.train, dtype=np.int64)
        self.val = np.asarray(self.val, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)
        combined = np.concatenate([self.train, self.val, self.test])
        if combined.size != np.unique(combined).size:
            raise DataError("split indices overlap or repeat")
        if combined.size and combined.min() < 0:
            raise DataError("split contains negative index")
        if not 0.0 < self.labelled_fraction <= 1.0:
            raise DataError(
                f"labelled_fraction must be in (0, 1], got {self.labelled_fraction}"
            )


@dataclass
class ScalerState:
    """Per-feature mean and scale learned on the train rows of one view."""

    view_id: str
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("scaler mean/std must be 1-d arrays of equal length")
        if not np.all(self.std > 0):
            raise DataError("scaler std must be strictly positive")


# ---------------------------------------------------------------------------
# file loading
# ---------------------------------------------------------------------------


def _first_duplicate(items: Sequence[str]) -> str:
    seen: set[str] = set()
    for it in items:
        if it in seen:
            return it
        seen.add(it)
    return ""


def _sniff_delimiter(path: Path) -> str:
    return "\t" if path.suffix.lower() in (".tsv", ".tab") else ","


def load_omics_matrix(path: str | Path, view_id: str) -> OmicsMatrix:
    """Read one view from CSV/TSV.

    Expected layout: header ``sample_id,<feature ids...>``, one row per
    sample. Empty cells and the token ``NA`` become NaN. Malformed content
    raises :class:`DataError` naming the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"view file not found: {path}")
    delim = _sniff_delimiter(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delim)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "sample_id":
            raise DataError(
                f"{path}: line 1: first header column must be 'sample_id', "
                f"got {header[0] if header else '<nothing>'!r}"
            )
        feature_ids = header[1:]
        if not feature_ids:
            raise DataError(f"{path}: line 1: no feature columns")
        sample_ids: list[str] = []
        rows: list[np.ndarray] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            sample_ids.append(row[0])
            parsed = np.empty(len(feature_ids), dtype=np.float64)
            for j, cell in enumerate(row[1:]):
                token = cell.strip()
                if token in MISSING_TOKENS:
                    parsed[j] = np.nan
                else:
                    try:
                        parsed[j] = float(token)
                    except ValueError:
                        raise DataError(
                            f"{path}: line {lineno}: column "
                            f"{feature_ids[j]!r}: cannot parse {cell!r} as a number"
                        ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.vstack(rows)
    return OmicsMatrix(
        view_id=view_id, sample_ids=sample_ids, feature_ids=feature_ids, values=values
    )


def load_labels(
    path: str | Path, sample_ids: Sequence[str]
) -> tuple[np.ndarray, list[str]]:
    """Read ``sample_id,label`` CSV; return integer labels aligned to
    ``sample_ids`` plus the sorted class-name list defining the indices."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"label file not found: {path}")
    mapping: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=_sniff_delimiter(path))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header[:2] != ["sample_id", "label"]:
            raise DataError(
                f"{path}: line 1: expected header 'sample_id,label', got "
                f"{','.join(header[:2])!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(row)}"
                )
            if row[0] in mapping:
                raise DataError(
                    f"{path}: line {lineno}: duplicate sample id {row[0]!r}"
                )
            mapping[row[0]] = row[1]
    missing = [s for s in sample_ids if s not in mapping]
    if missing:
        raise DataError(f"{path}: no label for sample {missing[0]!r}")
    wanted = [mapping[s] for s in sample_ids]
    class_names = sorted(set(wanted))
    index = {name: i for i, name in enumerate(class_names)}
    labels = np.array([index[w] for w in wanted], dtype=np.int64)
    return labels, class_names


def load_partition(
    path: str | Path, view_id: str, feature_ids: Sequence[str]
) -> SubsetPartition:
    """Read ``feature_id,subset_id`` CSV covering every feature of the view."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"partition file not found: {path}")
    known = {f: i for i, f in enumerate(feature_ids)}
    assignment = np.full(len(feature_ids), -1, dtype=np.int64)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=_sniff_delimiter(path))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header[:2] != ["feature_id", "subset_id"]:
            raise DataError(
                f"{path}: line 1: expected header 'feature_id,subset_id', got "
                f"{','.join(header[:2])!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(row)}"
                )
            fid, sid = row
            if fid not in known:
                raise DataError(
                    f"{path}: line {lineno}: unknown feature id {fid!r} for "
                    f"view {view_id!r}"
                )
            try:
                subset = int(sid)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}: subset id {sid!r} is not an integer"
                ) from None
            if subset < 0:
                raise DataError(f"{path}: line {lineno}: negative subset id {subset}")
            if assignment[known[fid]] != -1:
                raise DataError(
                    f"{path}: line {lineno}: feature {fid!r} assigned twice"
                )
            assignment[known[fid]] = subset
    unassigned = np.flatnonzero(assignment == -1)
    if unassigned.size:
        raise DataError(
            f"{path}: feature {feature_ids[int(unassigned[0])]!r} has no "
            "subset assignment"
        )
    return SubsetPartition(view_id=view_id, assignment=assignment)


def load_dataset(manifest_path: str | Path) -> MultiOmicsDataset:
    """Load a dataset described by a JSON manifest.

    Manifest keys: ``views`` (list of ``{view_id, path, partition?}``) and
    ``labels`` (path). Relative paths resolve against the manifest directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        spec = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise DataError(f"{manifest_path}: manifest must be a JSON object")
    unknown = set(spec) - {"views", "labels"}
    if unknown:
        raise DataError(
            f"{manifest_path}: unknown manifest key {sorted(unknown)[0]!r}"
        )
    if "views" not in spec or "labels" not in spec:
        raise DataError(f"{manifest_path}: manifest needs 'views' and 'labels'")
    base = manifest_path.parent
    views: list[OmicsMatrix] = []
    partitions: dict[str, SubsetPartition] = {}
    if not isinstance(spec["views"], list) or not spec["views"]:
        raise DataError(f"{manifest_path}: 'views' must be a non-empty list")
    for entry in spec["views"]:
        if not isinstance(entry, dict):
            raise DataError(f"{manifest_path}: each view entry must be an object")
        bad = set(entry) - {"view_id", "path", "partition"}
        if bad:
            raise DataError(
                f"{manifest_path}: unknown view entry key {sorted(bad)[0]!r}"
            )
        if "view_id" not in entry or "path" not in entry:
            raise DataError(
                f"{manifest_path}: view entries need 'view_id' and 'path'"
            )
        view = load_omics_matrix(base / entry["path"], entry["view_id"])
        views.append(view)
        if "partition" in entry:
            partitions[view.view_id] = load_partition(
                base / entry["partition"], view.view_id, view.feature_ids
            )
    labels, class_names = load_labels(base / spec["labels"], views[0].sample_ids)
    return MultiOmicsDataset(
        views=views, labels=labels, class_names=class_names, partitions=partitions
    )


def write_dataset(
    dataset: MultiOmicsDataset, out_dir: str | Path, force: bool = False
) -> Path:
    """Write views, labels, partitions and a manifest; returns manifest path."""
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise DataError(
            f"output directory {out_dir} is not empty (use force to overwrite)"
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"views": [], "labels": "labels.csv"}
    for view in dataset.views:
        fname = f"{view.view_id}.csv"
        with open(out_dir / fname, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", *view.feature_ids])
            for sid, row in zip(view.sample_ids, view.values):
                writer.writerow(
                    [sid, *("NA" if math.isnan(v) else repr(float(v)) for v in row)]
                )
        entry = {"view_id": view.view_id, "path": fname}
        if view.view_id in dataset.partitions:
            pname = f"{view.view_id}_partition.csv"
            part = dataset.partitions[view.view_id]
            with open(out_dir / pname, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["feature_id", "subset_id"])
                for fid, sid in zip(view.feature_ids, part.assignment):
                    writer.writerow([fid, int(sid)])
            entry["partition"] = pname
        manifest["views"].append(entry)
    with open(out_dir / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "label"])
        for sid, lab in zip(dataset.sample_ids, dataset.labels):
            writer.writerow([sid, dataset.class_names[int(lab)]])
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------


def mean_impute(matrix: OmicsMatrix) -> OmicsMatrix:
    """Replace NaN entries by their column mean (computed over the whole
    matrix). A column with no observed value at all is an error."""
    values = matrix.values
    if not np.isnan(values).any():
        return replace(matrix, values=values.copy())
    observed = ~np.isnan(values)
    all_missing = np.flatnonzero(~observed.any(axis=0))
    if all_missing.size:
        raise DataError(
            f"view {matrix.view_id!r}: feature "
            f"{matrix.feature_ids[int(all_missing[0])]!r} has no observed values"
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        col_means = np.nanmean(values, axis=0)
    filled = np.where(observed, values, col_means)
    return replace(matrix, values=filled)


def standardize_fit(matrix: OmicsMatrix, train_indices: np.ndarray) -> ScalerState:
    """Learn per-feature mean/std on the given rows only (population std;
    zero-variance features get std 1 so they map to exactly zero)."""
    train_indices = np.asarray(train_indices, dtype=np.int64)
    if train_indices.size == 0:
        raise DataError("standardize_fit needs at least one train row")
    sub = matrix.values[train_indices]
    if np.isnan(sub).any():
        raise DataError(
            f"view {matrix.view_id!r}: NaN present; impute before standardizing"
        )
    mean = sub.mean(axis=0)
    std = np.sqrt(sub.var(axis=0))
    std[std == 0.0] = 1.0
    return ScalerState(view_id=matrix.view_id, mean=mean, std=std)


def standardize_apply(matrix: OmicsMatrix, scaler: ScalerState) -> OmicsMatrix:
    if scaler.mean.shape[0] != matrix.n_features:
        raise DataError(
            f"scaler for view {scaler.view_id!r} has {scaler.mean.shape[0]} "
            f"features, matrix has {matrix.n_features}"
        )
    return replace(matrix, values=(matrix.values - scaler.mean) / scaler.std)


def preprocess(
    dataset: MultiOmicsDataset, train_indices: np.ndarray
) -> tuple[MultiOmicsDataset, dict[str, ScalerState]]:
    """Impute then standardize every view; scalers are fit on train rows."""
    scalers: dict[str, ScalerState] = {}
    views: list[OmicsMatrix] = []
    for view in dataset.views:
        imputed = mean_impute(view)
        scaler = standardize_fit(imputed, train_indices)
        scalers[view.view_id] = scaler
        views.append(standardize_apply(imputed, scaler))
    out = MultiOmicsDataset(
        views=views,
        labels=dataset.labels.copy(),
        class_names=list(dataset.class_names),
        partitions=dict(dataset.partitions),
    )
    return out, scalers


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def partition_uniform(n_features: int, n_subsets: int, view_id: str) -> SubsetPartition:
    """Split features into ``n_subsets`` contiguous blocks of near-equal size.

    The first ``n_features % n_subsets`` blocks get one extra feature, so
    block sizes never differ by more than one.
    """
    if n_features < 1:
        raise DataError(f"n_features must be positive, got {n_features}")
    if not 1 <= n_subsets <= n_features:
        raise DataError(
            f"n_subsets must be in [1, {n_features}], got {n_subsets}"
        )
    base, extra = divmod(n_features, n_subsets)
    sizes = np.full(n_subsets, base, dtype=np.int64)
    sizes[:extra] += 1
    assignment = np.repeat(np.arange(n_subsets), sizes)
    return SubsetPartition(view_id=view_id, assignment=assignment)


# ---------------------------------------------------------------------------
# splits and label subsampling
# ---------------------------------------------------------------------------


def _largest_remainder(total: int, fractions: Sequence[float]) -> np.ndarray:
    """Integer allocation of ``total * sum(fractions)`` items proportional to
    fractions, ties broken by position."""
    quotas = np.asarray(fractions, dtype=np.float64) * total
    counts = np.floor(quotas).astype(np.int64)
    target = int(round(float(quotas.sum())))
    shortfall = target - int(counts.sum())
    if shortfall > 0:
        remainders = quotas - counts
        order = np.lexsort((np.arange(len(fractions)), -remainders))
        for i in order[:shortfall]:
            counts[i] += 1
    return counts


def split(
    dataset: MultiOmicsDataset,
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
    stratified: bool = True,
) -> SplitSpec:
    """Deterministic train/val/test split by seed, stratified by default.

    Fractions must be non-negative and sum to at most 1. With stratification,
    a class with fewer samples than the number of non-zero fractions is an
    error.
    """
    if len(fractions) != 3:
        raise DataError("fractions must be (train, val, test)")
    if any(f < 0 for f in fractions):
        raise DataError(f"fractions must be non-negative, got {fractions}")
    if sum(fractions) > 1.0 + 1e-9:
        raise DataError(f"fractions sum to {sum(fractions)}, must be <= 1")
    if fractions[0] <= 0:
        raise DataError("train fraction must be positive")
    rng = np.random.default_rng(seed)
    n = dataset.n_samples
    parts: list[list[np.ndarray]] = [[], [], []]
    if stratified:
        n_nonzero = sum(1 for f in fractions if f > 0)
        for c in range(dataset.n_classes):
            members = np.flatnonzero(dataset.labels == c)
            if members.size == 0:
                continue
            if members.size < n_nonzero:
                raise DataError(
                    f"class {dataset.class_names[c]!r} has {members.size} "
                    f"samples, fewer than the {n_nonzero} non-empty splits"
                )
            shuffled = members[rng.permutation(members.size)]
            counts = _largest_remainder(members.size, fractions)
            offset = 0
            for part_idx in range(3):
                take = int(counts[part_idx])
                parts[part_idx].append(shuffled[offset : offset + take])
                offset += take
    else:
        shuffled = rng.permutation(n)
        counts = _largest_remainder(n, fractions)
        offset = 0
        for part_idx in range(3):
            take = int(counts[part_idx])
            parts[part_idx].append(shuffled[offset : offset + take])
            offset += take
    train, val, test = (
        np.sort(np.concatenate(p)) if p else np.empty(0, dtype=np.int64)
        for p in parts
    )
    return SplitSpec(train=train, val=val, test=test, seed=seed)


def subsample_labels(
    split_spec: SplitSpec,
    labels: np.ndarray,
    fraction: float,
    seed: int,
) -> np.ndarray:
    """Pick a stratified labelled subset of the train split.

    Returns sorted train indices of size ``round(fraction * len(train))``.
    When the fraction is so small that a class would come up empty, that
    class keeps one sample and a warning is emitted.
    """
    if not 0.0 < fraction <= 1.0:
        raise DataError(f"fraction must be in (0, 1], got {fraction}")
    labels = np.asarray(labels, dtype=np.int64)
    train = split_spec.train
    if train.size == 0:
        raise DataError("train split is empty")
    if fraction == 1.0:
        return train.copy()
    rng = np.random.default_rng(seed)
    total = int(round(fraction * train.size))
    train_labels = labels[train]
    classes = np.unique(train_labels)
    class_sizes = np.array([(train_labels == c).sum() for c in classes])
    counts = _largest_remainder(total, class_sizes / class_sizes.sum())
    bumped = counts == 0
    if bumped.any():
        counts[bumped] = 1
        warnings.warn(
            f"label fraction {fraction} leaves {int(bumped.sum())} class(es) "
            "empty; keeping one sample each",
            stacklevel=2,
        )
    chosen: list[np.ndarray] = []
    for c, k in zip(classes, counts):
        members = train[train_labels == c]
        take = min(int(k), members.size)
        chosen.append(members[rng.permutation(members.size)][:take])
    return np.sort(np.concatenate(chosen))


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


@dataclass
class SynthConfig:
    """Configuration of the synthetic multi-view generator."""

    n_samples: int = 2000
    n_classes: int = 10
    view_dims: tuple[int, ...] = (50, 40, 20)
    shared_latent_dim: int = 8
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        self.view_dims = tuple(int(d) for d in self.view_dims)
        if self.n_samples < 1:
            raise DataError(f"n_samples must be positive, got {self.n_samples}")
        if self.n_classes < 1:
            raise DataError(f"n_classes must be positive, got {self.n_classes}")
        if self.n_samples < self.n_classes:
            raise DataError(
                f"need at least one sample per class: {self.n_samples} samples "
                f"for {self.n_classes} classes"
            )
        if not self.view_dims or any(d < 1 for d in self.view_dims):
            raise DataError(f"view_dims must be positive, got {self.view_dims}")
        if self.shared_latent_dim < 1:
            raise DataError(
                f"shared_latent_dim must be positive, got {self.shared_latent_dim}"
            )
        if self.noise_sigma < 0:
            raise DataError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


_CLASS_SEPARATION = 3.0


def generate_synthetic(config: SynthConfig) -> MultiOmicsDataset:
    """Class-structured views sharing one latent space.

    Each class gets a latent centre; every sample draws its latent around its
    class centre, and each view observes the latent through its own random
    linear map plus isotropic noise. With ``noise_sigma = 0`` every view is an
    exact linear function of the shared latent.
    """
    rng = np.random.default_rng(config.seed)
    n, n_cls, latent = config.n_samples, config.n_classes, config.shared_latent_dim
    labels = np.arange(n, dtype=np.int64) % n_cls
    rng.shuffle(labels)
    centres = _CLASS_SEPARATION * rng.normal(size=(n_cls, latent))
    z = centres[labels] + rng.normal(size=(n, latent))
    width = max(2, len(str(n_cls - 1)))
    class_names = [f"class_{c:0{width}d}" for c in range(n_cls)]
    id_width = max(5, len(str(n - 1)))
    sample_ids = [f"s{i:0{id_width}d}" for i in range(n)]
    views: list[OmicsMatrix] = []
    partitions: dict[str, SubsetPartition] = {}
    for v, dim in enumerate(config.view_dims):
        view_id = f"view{v}"
        weights = rng.normal(size=(latent, dim)) / math.sqrt(latent)
        values = z @ weights + config.noise_sigma * rng.normal(size=(n, dim))
        feature_ids = [f"{view_id}_f{j}" for j in range(dim)]
        views.append(
            OmicsMatrix(
                view_id=view_id,
                sample_ids=sample_ids,
                feature_ids=feature_ids,
                values=values,
            )
        )
        partitions[view_id] = partition_uniform(
            dim, min(DEFAULT_N_SUBSETS, dim), view_id
        )
    return MultiOmicsDataset(
        views=views, labels=labels, class_names=class_names, partitions=partitions
    )
