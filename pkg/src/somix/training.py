"""Training loops and evaluation-time inference paths.

``pretrain`` optimizes the combined self-supervised objective on unlabelled
rows; ``finetune`` trains the classifier head (encoders frozen by default) on
a labelled subset; ``run_semi_supervised`` sweeps label fractions and seeds
comparing pretrained against randomly initialized frozen encoders.

All randomness flows through numpy Generators derived from explicit seeds;
batches are built by manual index shuffling so runs are reproducible bit for
bit on the same machine.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import torch

from .corruption import CorruptionConfig, corrupt, mask_target, sample_plan
from .data import DataError, MultiOmicsDataset, SplitSpec, subsample_labels
from .losses import (
    NonFiniteLossError,
    PretextLossWeights,
    classification_loss,
    clip_alignment_loss,
    barlow_twins_loss,
    combine,
    distance_loss,
    mask_prediction_loss,
    nt_xent_loss,
    reconstruction_loss,
    simsiam_loss,
    weighted_reconstruction_loss,
)
from .model import ModelConfig, MultiViewNetwork, aggregate, init_model

OPTIMIZERS = ("adam", "sgd")

ARMS = ("pretrained_frozen", "random_frozen")

MISSING_POLICIES = ("impute_class_mean", "aggregate_available")

RESULT_COLUMNS = [
    "arm",
    "fraction",
    "seed",
    "accuracy",
    "f1",
    "auc",
    "precision",
    "recall",
]


class TrainingError(RuntimeError):
    """Raised when a training run cannot proceed (bad setup or diverged)."""


@dataclass
class TrainConfig:
    """Optimization settings shared by pretraining and finetuning."""

    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    freeze_encoders: bool = True
    patience: int = 10

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValueError(
                f"learning_rate must be >= 0, got {self.learning_rate}"
            )
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _build_optimizer(params: list, cfg: TrainConfig) -> torch.optim.Optimizer:
    if cfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=cfg.learning_rate)
    return torch.optim.SGD(params, lr=cfg.learning_rate)


def _batch_slices(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    """Consecutive batches over a shuffled index order.

    A trailing batch of a single row is folded into its predecessor because
    the batch-statistics losses need at least two rows.
    """
    n = order.size
    slices = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(slices) > 1 and slices[-1].size == 1:
        slices[-2] = np.concatenate([slices[-2], slices[-1]])
        slices.pop()
    return slices


def _views_float32(dataset: MultiOmicsDataset) -> list[np.ndarray]:
    return [np.ascontiguousarray(v.values, dtype=np.float32) for v in dataset.views]


def resolve_target_views(
    config: CorruptionConfig, dataset: MultiOmicsDataset
) -> tuple[str, ...]:
    """Pin down which views get corrupted.

    None means "the first view that has a partition" (corrupting the other
    views buys nothing by default); an explicit list is validated against the
    dataset. Empty means corruption is off.
    """
    if config.target_views is None:
        for view in dataset.views:
            if view.view_id in dataset.partitions:
                return (view.view_id,)
        return ()
    for vid in config.target_views:
        dataset.view_index(vid)
        if vid not in dataset.partitions:
            raise DataError(
                f"corruption target view {vid!r} has no subset partition"
            )
    return tuple(config.target_views)


def _pair_alignment(
    model: MultiViewNetwork,
    projections: Sequence[torch.Tensor],
    weights: PretextLossWeights,
) -> torch.Tensor:
    terms = []
    for i in range(len(projections)):
        for j in range(i + 1, len(projections)):
            za, zb = projections[i], projections[j]
            if weights.alignment_variant == "clip":
                terms.append(clip_alignment_loss(za, zb, weights.temperature))
            elif weights.alignment_variant == "ntxent":
                terms.append(nt_xent_loss(za, zb, weights.temperature))
            else:
                terms.append(
                    simsiam_loss(
                        model.predict_head(za), zb, model.predict_head(zb), za
                    )
                )
    return torch.stack(terms).sum()


def _noise_contrast(
    model: MultiViewNetwork,
    z_clean: torch.Tensor,
    z_noisy: torch.Tensor,
    weights: PretextLossWeights,
) -> torch.Tensor:
    if weights.noise_variant == "barlow":
        return barlow_twins_loss(z_clean, z_noisy, weights.barlow_lambda)
    if weights.noise_variant == "ntxent":
        return nt_xent_loss(z_clean, z_noisy, weights.temperature)
    return simsiam_loss(
        model.predict_head(z_clean), z_noisy, model.predict_head(z_noisy), z_clean
    )


def _pretext_step(
    model: MultiViewNetwork,
    batch_views: list[np.ndarray],
    weights: PretextLossWeights,
    corrupt_ctx: tuple | None,
) -> dict[str, torch.Tensor]:
    """Compute the enabled pretext components for one batch.

    ``corrupt_ctx`` is ``(view_index, partition, method, subsets, sigma, rng)``
    or None when corruption is disabled; corruption-dependent components
    (noise contrast, mask prediction) are only defined when it is set.
    """
    xs_clean = [torch.from_numpy(b) for b in batch_views]
    record = None
    corrupted_view: int | None = None
    step_inputs = list(xs_clean)
    if corrupt_ctx is not None:
        corrupted_view, partition, method, subsets, sigma, rng = corrupt_ctx
        corrupted_np, record = corrupt(
            batch_views[corrupted_view], partition, method, subsets, sigma, rng
        )
        step_inputs[corrupted_view] = torch.from_numpy(
            corrupted_np.astype(np.float32)
        )
    latents = [model.encode(i, x) for i, x in enumerate(step_inputs)]
    components: dict[str, torch.Tensor] = {}
    if weights.w_reconstruction > 0:
        terms = []
        for i, h in enumerate(latents):
            recs = model.decode(i, h)
            if corrupted_view is not None:
                terms.append(
                    weighted_reconstruction_loss(
                        xs_clean,
                        recs,
                        corrupted_view,
                        weights.w_corrupted,
                        weights.w_other,
                    )
                )
            else:
                terms.append(reconstruction_loss(xs_clean, recs))
        components["reconstruction"] = torch.stack(terms).mean()
    n_views = len(batch_views)
    need_projections = (weights.w_alignment > 0 and n_views >= 2) or (
        weights.w_distance > 0 and weights.distance_space == "projection"
    )
    projections: list[torch.Tensor] = []
    if need_projections:
        projections = [model.project(h, i) for i, h in enumerate(latents)]
    if weights.w_alignment > 0 and n_views >= 2:
        components["alignment"] = _pair_alignment(model, projections, weights)
    if weights.w_noise > 0 and corrupted_view is not None:
        h_clean = model.encode(corrupted_view, xs_clean[corrupted_view])
        z_clean = model.project(h_clean, corrupted_view)
        z_noisy = model.project(latents[corrupted_view], corrupted_view)
        components["noise"] = _noise_contrast(model, z_clean, z_noisy, weights)
    if weights.w_distance > 0 and n_views >= 2:
        space = latents if weights.distance_space == "latent" else projections
        components["distance"] = distance_loss(space)
    if weights.w_maskpred > 0 and record is not None:
        logits = model.predict_mask(corrupted_view, latents[corrupted_view])
        target_row = mask_target(record).astype(np.float32)
        targets = torch.from_numpy(
            np.tile(target_row, (batch_views[0].shape[0], 1))
        )
        components["maskpred"] = mask_prediction_loss(logits, targets)
    return components


def _run_pretext_epoch(
    model: MultiViewNetwork,
    views32: list[np.ndarray],
    indices: np.ndarray,
    dataset: MultiOmicsDataset,
    targets: tuple[str, ...],
    corruption_cfg: CorruptionConfig,
    weights: PretextLossWeights,
    batch_size: int,
    rng: np.random.Generator,
    optimizer: torch.optim.Optimizer | None,
    epoch: int,
) -> tuple[dict[str, float], float]:
    """One pass over ``indices``; trains when an optimizer is given."""
    plans: dict[str, tuple[str, tuple[int, ...]]] = {}
    if targets and not corruption_cfg.plan_per_batch:
        for vid in targets:
            plans[vid] = sample_plan(corruption_cfg, dataset.partitions[vid], rng)
    order = indices[rng.permutation(indices.size)]
    sums: dict[str, float] = {}
    total_sum = 0.0
    slices = _batch_slices(order, batch_size)
    for step, rows in enumerate(slices):
        batch_views = [v[rows] for v in views32]
        corrupt_ctx = None
        if targets:
            vid = targets[int(rng.integers(len(targets)))]
            partition = dataset.partitions[vid]
            if corruption_cfg.plan_per_batch:
                method, subsets = sample_plan(corruption_cfg, partition, rng)
            else:
                method, subsets = plans[vid]
            corrupt_ctx = (
                dataset.view_index(vid),
                partition,
                method,
                subsets,
                corruption_cfg.gaussian_sigma,
                rng,
            )
        try:
            components = _pretext_step(model, batch_views, weights, corrupt_ctx)
            total, breakdown = combine(components, weights)
        except NonFiniteLossError as exc:
            raise TrainingError(
                f"epoch {epoch} step {step}: {exc}"
            ) from exc
        if optimizer is not None:
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
        for name, value in breakdown.components.items():
            sums[name] = sums.get(name, 0.0) + value
        total_sum += breakdown.total
    n_steps = len(slices)
    means = {name: value / n_steps for name, value in sums.items()}
    return means, total_sum / n_steps


def pretrain(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    split: SplitSpec,
    corruption_cfg: CorruptionConfig | None = None,
    weights: PretextLossWeights | None = None,
    config: TrainConfig | None = None,
) -> list[dict]:
    """Self-supervised training on the train split (labels unused).

    The model is updated in place. Returns one history row per epoch with
    every active loss component, the weighted total, the validation total
    (same objective on the val split, fresh noise draws) and wall time.
    Early stopping watches the validation total; the best epoch's weights are
    restored at the end.
    """
    corruption_cfg = corruption_cfg or CorruptionConfig()
    weights = weights or PretextLossWeights()
    config = config or TrainConfig()
    if split.train.size == 0:
        raise TrainingError("pretrain needs a non-empty train split")
    targets = resolve_target_views(corruption_cfg, dataset)
    if not corruption_cfg.enabled:
        targets = ()
    if weights.w_maskpred > 0 and targets:
        for vid in targets:
            view_idx = dataset.view_index(vid)
            name = f"mask_head_{view_idx}"
            if name not in model.component_names():
                raise TrainingError(
                    f"mask prediction is enabled but the model has no mask "
                    f"head for view {vid!r}"
                )
    active = weights.w_reconstruction > 0 or (
        weights.w_alignment > 0 and dataset.n_views >= 2
    ) or (weights.w_distance > 0 and dataset.n_views >= 2) or (
        targets and (weights.w_noise > 0 or weights.w_maskpred > 0)
    )
    if not active:
        raise TrainingError("every pretext component is disabled")
    views32 = _views_float32(dataset)
    params = model.trainable_parameters()
    optimizer = _build_optimizer(params, config) if params else None
    rng = np.random.default_rng([config.seed, 1])
    history: list[dict] = []
    best_val = float("inf")
    best_state: dict | None = None
    bad_epochs = 0
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        means, total = _run_pretext_epoch(
            model,
            views32,
            split.train,
            dataset,
            targets,
            corruption_cfg,
            weights,
            config.batch_size,
            rng,
            optimizer,
            epoch,
        )
        val_total: float | None = None
        if split.val.size:
            val_rng = np.random.default_rng([config.seed, 7919, epoch])
            with torch.no_grad():
                _, val_total = _run_pretext_epoch(
                    model,
                    views32,
                    split.val,
                    dataset,
                    targets,
                    corruption_cfg,
                    weights,
                    config.batch_size,
                    val_rng,
                    None,
                    epoch,
                )
        row: dict = {"epoch": epoch}
        row.update(means)
        row["total"] = total
        row["val_total"] = val_total
        row["wall_ms"] = int((time.perf_counter() - started) * 1000)
        history.append(row)
        if val_total is not None:
            if val_total < best_val:
                best_val = val_total
                best_state = copy.deepcopy(model.state_dict())
                bad_epochs = 0
            else:
                bad_epochs += 1
                if config.patience > 0 and bad_epochs > config.patience:
                    break
    if best_state is not None:
        model.load_state_dict(best_state)
    return history


# ---------------------------------------------------------------------------
# inference helpers
# ---------------------------------------------------------------------------


def encode_views(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    indices: np.ndarray | None = None,
    chunk: int = 1024,
) -> list[np.ndarray]:
    """Per-view latents (float32, rows follow ``indices``) with no gradient."""
    if indices is None:
        indices = np.arange(dataset.n_samples)
    indices = np.asarray(indices, dtype=np.int64)
    views32 = _views_float32(dataset)
    out: list[list[np.ndarray]] = [[] for _ in range(dataset.n_views)]
    with torch.no_grad():
        for start in range(0, indices.size, chunk):
            rows = indices[start : start + chunk]
            for i in range(dataset.n_views):
                x = torch.from_numpy(views32[i][rows])
                out[i].append(model.encode(i, x).numpy())
    empty = np.zeros((0, model.config.latent_dim), dtype=np.float32)
    return [np.concatenate(parts) if parts else empty.copy() for parts in out]


def encode_aggregate(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    indices: np.ndarray | None = None,
    aggregation: str | None = None,
) -> np.ndarray:
    """Aggregated latent matrix under the model's (or an explicit) method."""
    method = aggregation or model.config.aggregation
    per_view = encode_views(model, dataset, indices)
    tensors = [torch.from_numpy(h) for h in per_view]
    return aggregate(tensors, method).numpy()


def predict_proba(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    indices: np.ndarray | None = None,
) -> np.ndarray:
    """Class probabilities (float64) from the frozen forward path."""
    agg = encode_aggregate(model, dataset, indices)
    with torch.no_grad():
        logits = model.classify(torch.from_numpy(agg))
        probs = torch.softmax(logits, dim=1).numpy().astype(np.float64)
    return probs


# ---------------------------------------------------------------------------
# finetuning
# ---------------------------------------------------------------------------


def finetune(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    split: SplitSpec,
    labelled_indices: np.ndarray,
    config: TrainConfig | None = None,
    aggregation: str | None = None,
) -> list[dict]:
    """Train a fresh classifier head on the labelled subset.

    With ``freeze_encoders`` (the default) every component except the
    classifier is frozen and latents are precomputed once; otherwise the
    whole network trains. Early stopping watches the validation loss and the
    best classifier weights are restored.
    """
    config = config or TrainConfig()
    labelled_indices = np.asarray(labelled_indices, dtype=np.int64)
    if labelled_indices.size == 0:
        raise TrainingError("finetune needs at least one labelled sample")
    if not np.isin(labelled_indices, split.train).all():
        raise TrainingError("labelled indices must come from the train split")
    model.reset_classifier(aggregation=aggregation, seed=config.seed)
    if config.freeze_encoders:
        model.set_frozen("all", True)
        model.set_frozen("classifier", False)
    else:
        model.set_frozen("all", False)
    optimizer = _build_optimizer(model.trainable_parameters(), config)
    labels = torch.from_numpy(dataset.labels.astype(np.int64))
    rng = np.random.default_rng([config.seed, 2])
    history: list[dict] = []
    best_val = float("inf")
    best_head: dict | None = None
    bad_epochs = 0

    frozen_path = config.freeze_encoders
    if frozen_path:
        h_lab = torch.from_numpy(encode_aggregate(model, dataset, labelled_indices))
        h_val = (
            torch.from_numpy(encode_aggregate(model, dataset, split.val))
            if split.val.size
            else None
        )
    views32 = None if frozen_path else _views_float32(dataset)

    def _batch_logits(rows: np.ndarray, positions: np.ndarray) -> torch.Tensor:
        if frozen_path:
            return model.classify(h_lab[torch.from_numpy(positions)])
        xs = [torch.from_numpy(v[rows]) for v in views32]
        latents = model.encode_all(xs)
        return model.classify(aggregate(latents, model.config.aggregation))

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        perm = rng.permutation(labelled_indices.size)
        slices = _batch_slices(perm, config.batch_size)
        loss_sum = 0.0
        for positions in slices:
            rows = labelled_indices[positions]
            logits = _batch_logits(rows, positions)
            loss = classification_loss(logits, labels[torch.from_numpy(rows)])
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"epoch {epoch}: classification loss is non-finite"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            loss_sum += float(loss.detach())
        train_loss = loss_sum / len(slices)
        val_loss: float | None = None
        if split.val.size:
            with torch.no_grad():
                if frozen_path:
                    val_logits = model.classify(h_val)
                else:
                    xs = [torch.from_numpy(v[split.val]) for v in views32]
                    val_logits = model.classify(
                        aggregate(model.encode_all(xs), model.config.aggregation)
                    )
                val_loss = float(
                    classification_loss(val_logits, labels[torch.from_numpy(split.val)])
                )
        history.append(
            {
                "epoch": epoch,
                "classification": train_loss,
                "total": train_loss,
                "val_total": val_loss,
                "wall_ms": int((time.perf_counter() - started) * 1000),
            }
        )
        if val_loss is not None:
            if val_loss < best_val:
                best_val = val_loss
                best_head = copy.deepcopy(
                    model.components()["classifier"].state_dict()
                )
                bad_epochs = 0
            else:
                bad_epochs += 1
                if config.patience > 0 and bad_epochs > config.patience:
                    break
    if best_head is not None:
        model.components()["classifier"].load_state_dict(best_head)
    return history


# ---------------------------------------------------------------------------
# missing views at inference
# ---------------------------------------------------------------------------


@dataclass
class ClassLatentTable:
    """Per-class, per-view mean latents learned from labelled samples.

    Classes that never appeared among the labelled samples fall back to the
    global mean latent and are listed in ``fallback_classes``.
    """

    view_ids: list[str]
    class_means: np.ndarray
    global_means: np.ndarray
    fallback_classes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        self.class_means = np.asarray(self.class_means, dtype=np.float32)
        self.global_means = np.asarray(self.global_means, dtype=np.float32)
        if self.class_means.ndim != 3:
            raise ValueError(
                f"class_means must be (classes, views, latent), got shape "
                f"{self.class_means.shape}"
            )
        c, v, d = self.class_means.shape
        if self.global_means.shape != (v, d):
            raise ValueError(
                f"global_means shape {self.global_means.shape} does not match "
                f"({v}, {d})"
            )
        if len(self.view_ids) != v:
            raise ValueError(
                f"{len(self.view_ids)} view ids for {v} mean slots"
            )
        bad = [c_ for c_ in self.fallback_classes if not 0 <= c_ < c]
        if bad:
            raise ValueError(f"fallback class {bad[0]} out of range [0, {c})")


def build_class_latent_table(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    labelled_indices: np.ndarray,
) -> ClassLatentTable:
    """Average the per-view latents of the labelled samples by class."""
    labelled_indices = np.asarray(labelled_indices, dtype=np.int64)
    if labelled_indices.size == 0:
        raise TrainingError("class latent table needs labelled samples")
    per_view = encode_views(model, dataset, labelled_indices)
    labels = dataset.labels[labelled_indices]
    n_classes = dataset.n_classes
    d = model.config.latent_dim
    global_means = np.stack([h.mean(axis=0) for h in per_view])
    class_means = np.empty((n_classes, dataset.n_views, d), dtype=np.float32)
    fallback: list[int] = []
    for c in range(n_classes):
        members = labels == c
        if members.any():
            for v in range(dataset.n_views):
                class_means[c, v] = per_view[v][members].mean(axis=0)
        else:
            class_means[c] = global_means
            fallback.append(c)
    return ClassLatentTable(
        view_ids=dataset.view_ids,
        class_means=class_means,
        global_means=global_means,
        fallback_classes=tuple(fallback),
    )


def infer_with_missing(
    model: MultiViewNetwork,
    xs: Sequence[np.ndarray | None],
    table: ClassLatentTable,
    policy: str = "impute_class_mean",
) -> np.ndarray:
    """Class probabilities when some views are absent.

    ``xs`` holds one matrix per model view, with None for a missing view.
    ``aggregate_available`` aggregates over the present views only (missing
    slots take the global mean latent under concatenation). The
    ``impute_class_mean`` policy first predicts a class that way, then
    substitutes that class's mean latent for each missing view and classifies
    again. With every view present both policies equal the plain forward path.
    """
    if policy not in MISSING_POLICIES:
        raise ValueError(
            f"policy must be one of {MISSING_POLICIES}, got {policy!r}"
        )
    if len(xs) != model.config.n_views:
        raise ValueError(
            f"expected {model.config.n_views} view entries, got {len(xs)}"
        )
    available = [i for i, x in enumerate(xs) if x is not None]
    if not available:
        raise ValueError("at least one view must be present")
    n_rows = {np.asarray(xs[i]).shape[0] for i in available}
    if len(n_rows) > 1:
        raise ValueError(f"present views disagree on row count: {sorted(n_rows)}")
    n = n_rows.pop()
    method = model.config.aggregation
    latents: dict[int, torch.Tensor] = {}
    with torch.no_grad():
        for i in available:
            x = torch.from_numpy(np.asarray(xs[i], dtype=np.float32))
            latents[i] = model.encode(i, x)

        def _classify(filled: dict[int, torch.Tensor]) -> np.ndarray:
            ordered = [filled[i] for i in range(model.config.n_views)]
            logits = model.classify(aggregate(ordered, method))
            return torch.softmax(logits, dim=1).numpy().astype(np.float64)

        def _available_probs() -> np.ndarray:
            if method == "concat":
                filled = dict(latents)
                for i in range(model.config.n_views):
                    if i not in filled:
                        mean = torch.from_numpy(table.global_means[i])
                        filled[i] = mean.expand(n, -1).clone()
                return _classify(filled)
            present = [latents[i] for i in available]
            logits = model.classify(aggregate(present, method))
            return torch.softmax(logits, dim=1).numpy().astype(np.float64)

        if policy == "aggregate_available" or len(available) == model.config.n_views:
            if len(available) == model.config.n_views:
                return _classify(latents)
            return _available_probs()

        first_pass = _available_probs()
        assigned = first_pass.argmax(axis=1)
        filled = dict(latents)
        for i in range(model.config.n_views):
            if i not in filled:
                filled[i] = torch.from_numpy(table.class_means[assigned, i, :])
        return _classify(filled)


# ---------------------------------------------------------------------------
# semi-supervised protocol
# ---------------------------------------------------------------------------


def run_semi_supervised(
    dataset: MultiOmicsDataset,
    split: SplitSpec,
    model_config: ModelConfig,
    corruption_cfg: CorruptionConfig | None = None,
    weights: PretextLossWeights | None = None,
    pretrain_cfg: TrainConfig | None = None,
    finetune_cfg: TrainConfig | None = None,
    fractions: Sequence[float] = (0.01, 0.05, 0.1, 0.5, 1.0),
    seeds: Sequence[int] = (0, 1, 2),
    arms: Sequence[str] = ARMS,
    pretrained_model: MultiViewNetwork | None = None,
) -> pd.DataFrame:
    """Label-fraction sweep comparing frozen pretrained vs random encoders.

    Pretraining happens once; every (arm, fraction, seed) cell then draws its
    own labelled subset, finetunes a fresh classifier and scores the test
    split. Metrics are reported in percent. Row order is the cross product
    arms x fractions x seeds in the given order.
    """
    from .evaluation import compute_metrics

    corruption_cfg = corruption_cfg or CorruptionConfig()
    weights = weights or PretextLossWeights()
    pretrain_cfg = pretrain_cfg or TrainConfig()
    finetune_cfg = finetune_cfg or TrainConfig()
    if split.test.size == 0:
        raise TrainingError("the protocol needs a non-empty test split")
    if not fractions:
        raise ValueError("at least one label fraction is required")
    if not seeds:
        raise ValueError("at least one seed is required")
    bad = [a for a in arms if a not in ARMS]
    if bad:
        raise ValueError(f"unknown arm {bad[0]!r}; choose from {ARMS}")
    base: MultiViewNetwork | None = None
    if "pretrained_frozen" in arms:
        if pretrained_model is not None:
            base = copy.deepcopy(pretrained_model)
        else:
            base = init_model(model_config, seed=pretrain_cfg.seed)
            pretrain(base, dataset, split, corruption_cfg, weights, pretrain_cfg)
    test_labels = dataset.labels[split.test]
    rows: list[dict] = []
    for arm in arms:
        for fraction in fractions:
            for seed in seeds:
                labelled = subsample_labels(split, dataset.labels, fraction, seed)
                if arm == "pretrained_frozen":
                    cell_model = copy.deepcopy(base)
                else:
                    cell_model = init_model(model_config, seed=seed)
                cell_cfg = replace(finetune_cfg, seed=seed, freeze_encoders=True)
                finetune(cell_model, dataset, split, labelled, cell_cfg)
                probs = predict_proba(cell_model, dataset, split.test)
                report = compute_metrics(probs, test_labels)
                rows.append(
                    {
                        "arm": arm,
                        "fraction": fraction,
                        "seed": seed,
                        "accuracy": 100.0 * report.accuracy,
                        "f1": 100.0 * report.macro_f1,
                        "auc": 100.0 * report.macro_auc,
                        "precision": 100.0 * report.macro_precision,
                        "recall": 100.0 * report.macro_recall,
                    }
                )
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


# ---------------------------------------------------------------------------
# history serialization
# ---------------------------------------------------------------------------


def write_history_jsonl(history: Sequence[dict], path: str | Path) -> None:
    """One JSON object per epoch, keys sorted for stable output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for row in history:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
