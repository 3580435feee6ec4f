"""Subset-level corruption of view batches for the denoising pretext task.

A corruption step picks a noise method and a set of feature subsets from the
view's partition, then perturbs exactly the columns belonging to the chosen
subsets. The matching :class:`MaskRecord` is the prediction target for the
masked-subset head.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DataError, SubsetPartition

METHODS = ("zero", "gaussian", "swap")

DEFAULT_COUNT_CHOICES = (6, 12, 18, 23)


@dataclass
class CorruptionConfig:
    """What to corrupt and how.

    ``target_views`` of None means "decide from the dataset" (the first view
    that has a partition); an empty tuple disables corruption entirely.
    ``count_choices`` is expressed against a 23-subset partition and is
    rescaled proportionally when a view uses a different subset count.
    """

    target_views: tuple[str, ...] | None = None
    count_choices: tuple[int, ...] = DEFAULT_COUNT_CHOICES
    methods: tuple[str, ...] = METHODS
    gaussian_sigma: float = 1.0
    plan_per_batch: bool = False

    def __post_init__(self) -> None:
        if self.target_views is not None:
            self.target_views = tuple(self.target_views)
        self.count_choices = tuple(int(c) for c in self.count_choices)
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValueError("at least one corruption method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(
                f"unknown corruption method {bad[0]!r}; choose from {METHODS}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("corruption methods repeat")
        if not self.count_choices:
            raise ValueError("at least one count choice is required")
        if any(c < 1 for c in self.count_choices):
            raise ValueError(
                f"count choices must be >= 1, got {self.count_choices}"
            )
        if self.gaussian_sigma < 0:
            raise ValueError(
                f"gaussian_sigma must be >= 0, got {self.gaussian_sigma}"
            )

    @property
    def enabled(self) -> bool:
        return self.target_views is None or len(self.target_views) > 0


@dataclass
class MaskRecord:
    """Which subsets of which view were corrupted, and with what method."""

    view_id: str
    method: str
    masked_subsets: tuple[int, ...]
    n_subsets: int
    mask_vector: np.ndarray = field(init=False)
    swap_fallback: bool = False

    def __post_init__(self) -> None:
        self.masked_subsets = tuple(sorted(int(s) for s in self.masked_subsets))
        if self.method not in METHODS:
            raise ValueError(f"unknown corruption method {self.method!r}")
        if not self.masked_subsets:
            raise ValueError("a mask record needs at least one masked subset")
        if len(set(self.masked_subsets)) != len(self.masked_subsets):
            raise ValueError("masked subsets repeat")
        if self.masked_subsets[0] < 0 or self.masked_subsets[-1] >= self.n_subsets:
            raise ValueError(
                f"masked subsets {self.masked_subsets} out of range "
                f"[0, {self.n_subsets})"
            )
        vec = np.zeros(self.n_subsets, dtype=np.float64)
        vec[list(self.masked_subsets)] = 1.0
        self.mask_vector = vec


def resolve_count_choices(
    count_choices: tuple[int, ...], n_subsets: int
) -> tuple[int, ...]:
    """Adapt the count choices to a partition with ``n_subsets`` subsets.

    The default choices are proportions of a 23-subset partition and scale
    with it; explicit custom choices are validated against the partition
    instead.
    """
    if count_choices == DEFAULT_COUNT_CHOICES and n_subsets != 23:
        scaled = sorted(
            {min(n_subsets, max(1, round(n_subsets * c / 23))) for c in count_choices}
        )
        return tuple(scaled)
    bad = [c for c in count_choices if c > n_subsets]
    if bad:
        raise ValueError(
            f"count choice {bad[0]} exceeds the partition's {n_subsets} subsets"
        )
    return tuple(sorted(set(count_choices)))


def sample_plan(
    config: CorruptionConfig,
    partition: SubsetPartition,
    rng: np.random.Generator,
) -> tuple[str, tuple[int, ...]]:
    """Draw one corruption plan: a method and the subsets to mask."""
    method = config.methods[int(rng.integers(len(config.methods)))]
    choices = resolve_count_choices(config.count_choices, partition.n_subsets)
    count = choices[int(rng.integers(len(choices)))]
    subsets = np.sort(rng.choice(partition.n_subsets, size=count, replace=False))
    return method, tuple(int(s) for s in subsets)


def corrupt(
    batch: np.ndarray,
    partition: SubsetPartition,
    method: str,
    masked_subsets: tuple[int, ...],
    gaussian_sigma: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, MaskRecord]:
    """Apply one corruption plan to a batch of one view.

    Returns a new array (the input is never modified) plus the mask record.
    ``zero`` blanks the masked columns, ``gaussian`` adds N(0, sigma) noise to
    them, and ``swap`` permutes each masked column across the batch rows
    (independently per column). A swap on a single-row batch cannot move
    anything, so it falls back to zeroing and flags the record.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise DataError(f"batch must be 2-d, got shape {batch.shape}")
    if batch.shape[1] != partition.n_features:
        raise DataError(
            f"batch has {batch.shape[1]} columns, partition for view "
            f"{partition.view_id!r} covers {partition.n_features} features"
        )
    record = MaskRecord(
        view_id=partition.view_id,
        method=method,
        masked_subsets=masked_subsets,
        n_subsets=partition.n_subsets,
    )
    if method in ("gaussian", "swap") and rng is None:
        raise ValueError(f"method {method!r} needs an rng")
    columns = np.isin(partition.assignment, record.masked_subsets)
    out = batch.copy()
    if method == "swap" and batch.shape[0] < 2:
        record.method = "zero"
        record.swap_fallback = True
        method = "zero"
    if method == "zero":
        out[:, columns] = 0.0
    elif method == "gaussian":
        out[:, columns] += rng.normal(
            0.0, gaussian_sigma, size=(batch.shape[0], int(columns.sum()))
        )
    else:
        out[:, columns] = rng.permuted(batch[:, columns], axis=0)
    return out, record


def mask_target(record: MaskRecord) -> np.ndarray:
    """Multi-label target vector (one entry per subset, 1 = masked)."""
    return record.mask_vector.copy()
