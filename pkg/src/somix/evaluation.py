"""Metrics and comparison studies over trained models.

Macro metrics average over the classes actually present in the evaluated
labels; undefined per-class ratios (no predicted positives) count as zero.
AUC is one-vs-rest with midrank tie handling, skipping classes that have no
positive or no negative instance. Values live in [0, 1] internally and are
reported in percent.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .corruption import CorruptionConfig
from .data import MultiOmicsDataset, SplitSpec, subsample_labels
from .losses import PretextLossWeights
from .model import AGGREGATIONS, ModelConfig, MultiViewNetwork
from .training import (
    TrainConfig,
    encode_aggregate,
    finetune,
    predict_proba,
    run_semi_supervised,
)

DROPPABLE_COMPONENTS = ("alignment", "noise", "distance", "maskpred", "masking")


@dataclass
class MetricsReport:
    """Classification metrics of one evaluation (fractions, not percent)."""

    accuracy: float
    macro_f1: float
    macro_auc: float
    macro_precision: float
    macro_recall: float
    confusion_matrix: np.ndarray
    n_samples: int

    def to_dict(self, percent: bool = True) -> dict:
        scale = 100.0 if percent else 1.0
        return {
            "accuracy": scale * self.accuracy,
            "f1": scale * self.macro_f1,
            "auc": scale * self.macro_auc,
            "precision": scale * self.macro_precision,
            "recall": scale * self.macro_recall,
            "n_samples": self.n_samples,
            "confusion_matrix": self.confusion_matrix.tolist(),
        }


def compute_metrics(probabilities: np.ndarray, labels: np.ndarray) -> MetricsReport:
    """Score predicted class probabilities against integer labels."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if probabilities.ndim != 2 or probabilities.shape[1] < 2:
        raise ValueError(
            f"probabilities must be (n, classes>=2), got shape "
            f"{probabilities.shape}"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
    n, n_classes = probabilities.shape
    if labels.shape != (n,):
        raise ValueError(
            f"labels shape {labels.shape} does not match {n} probability rows"
        )
    if n == 0:
        raise ValueError("cannot compute metrics on an empty batch")
    if np.isnan(probabilities).any():
        raise ValueError("probabilities contain NaN")
    row_sums = probabilities.sum(axis=1)
    if np.abs(row_sums - 1.0).max() > 1e-5:
        bad = int(np.abs(row_sums - 1.0).argmax())
        raise ValueError(
            f"probability row {bad} sums to {row_sums[bad]!r}, expected 1"
        )
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(
            f"labels out of range [0, {n_classes}): "
            f"[{labels.min()}, {labels.max()}]"
        )
    labels = labels.astype(np.int64)
    preds = probabilities.argmax(axis=1)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)
    accuracy = float(np.trace(confusion)) / n
    present = np.unique(labels)
    precisions, recalls, f1s = [], [], []
    for c in present:
        tp = float(confusion[c, c])
        fp = float(confusion[:, c].sum()) - tp
        fn = float(confusion[c, :].sum()) - tp
        precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
        recall = tp / (tp + fn)
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    aucs = []
    for c in range(n_classes):
        positive = labels == c
        n_pos = int(positive.sum())
        n_neg = n - n_pos
        if n_pos == 0 or n_neg == 0:
            continue
        ranks = rankdata(probabilities[:, c])
        aucs.append(
            (float(ranks[positive].sum()) - n_pos * (n_pos + 1) / 2.0)
            / (n_pos * n_neg)
        )
    return MetricsReport(
        accuracy=accuracy,
        macro_f1=float(np.mean(f1s)),
        macro_auc=float(np.mean(aucs)) if aucs else float("nan"),
        macro_precision=float(np.mean(precisions)),
        macro_recall=float(np.mean(recalls)),
        confusion_matrix=confusion,
        n_samples=n,
    )


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------


def run_ablation(
    dataset: MultiOmicsDataset,
    split: SplitSpec,
    model_config: ModelConfig,
    corruption_cfg: CorruptionConfig | None = None,
    weights: PretextLossWeights | None = None,
    pretrain_cfg: TrainConfig | None = None,
    finetune_cfg: TrainConfig | None = None,
    drop: Sequence[str] = DROPPABLE_COMPONENTS,
    fractions: Sequence[float] = (0.1,),
    seeds: Sequence[int] = (0, 1, 2),
) -> pd.DataFrame:
    """Re-run pretraining with single pretext components removed.

    Row key is (dropped, fraction, seed); the ``none`` baseline always runs
    first with the unmodified configuration and the same seeds, so rows are
    directly comparable. Dropping ``masking`` disables input corruption
    entirely (which also sidelines the corruption-dependent noise and mask
    prediction terms).
    """
    corruption_cfg = corruption_cfg or CorruptionConfig()
    weights = weights or PretextLossWeights()
    pretrain_cfg = pretrain_cfg or TrainConfig()
    finetune_cfg = finetune_cfg or TrainConfig()
    drop = list(drop)
    unknown = [d for d in drop if d not in DROPPABLE_COMPONENTS]
    if unknown:
        raise ValueError(
            f"cannot drop unknown component {unknown[0]!r}; choose from "
            f"{DROPPABLE_COMPONENTS}"
        )
    if len(set(drop)) != len(drop):
        raise ValueError("dropped components repeat")
    frames = []
    for dropped in ["none", *drop]:
        w, c = weights, corruption_cfg
        if dropped == "alignment":
            w = replace(weights, w_alignment=0.0)
        elif dropped == "noise":
            w = replace(weights, w_noise=0.0)
        elif dropped == "distance":
            w = replace(weights, w_distance=0.0)
        elif dropped == "maskpred":
            w = replace(weights, w_maskpred=0.0)
        elif dropped == "masking":
            c = replace(corruption_cfg, target_views=())
        table = run_semi_supervised(
            dataset,
            split,
            model_config,
            corruption_cfg=c,
            weights=w,
            pretrain_cfg=pretrain_cfg,
            finetune_cfg=finetune_cfg,
            fractions=fractions,
            seeds=seeds,
            arms=("pretrained_frozen",),
        )
        table = table.drop(columns=["arm"])
        table.insert(0, "dropped", dropped)
        frames.append(table)
    return pd.concat(frames, ignore_index=True)


def compare_aggregation(
    dataset: MultiOmicsDataset,
    split: SplitSpec,
    pretrained_model: MultiViewNetwork,
    finetune_cfg: TrainConfig | None = None,
    methods: Sequence[str] = ("concat", "mean", "sum"),
    fractions: Sequence[float] = (0.1,),
    seeds: Sequence[int] = (0, 1, 2),
) -> pd.DataFrame:
    """Finetune the same pretrained encoders under different latent
    aggregation methods; encoders stay frozen so only the head differs."""
    finetune_cfg = finetune_cfg or TrainConfig()
    unknown = [m for m in methods if m not in AGGREGATIONS]
    if unknown:
        raise ValueError(
            f"unknown aggregation {unknown[0]!r}; choose from {AGGREGATIONS}"
        )
    test_labels = dataset.labels[split.test]
    rows = []
    for method in methods:
        for fraction in fractions:
            for seed in seeds:
                labelled = subsample_labels(split, dataset.labels, fraction, seed)
                cell = copy.deepcopy(pretrained_model)
                cfg = replace(finetune_cfg, seed=seed, freeze_encoders=True)
                finetune(cell, dataset, split, labelled, cfg, aggregation=method)
                report = compute_metrics(
                    predict_proba(cell, dataset, split.test), test_labels
                )
                rows.append(
                    {
                        "aggregation": method,
                        "fraction": fraction,
                        "seed": seed,
                        "accuracy": 100.0 * report.accuracy,
                        "f1": 100.0 * report.macro_f1,
                        "auc": 100.0 * report.macro_auc,
                        "precision": 100.0 * report.macro_precision,
                        "recall": 100.0 * report.macro_recall,
                    }
                )
    columns = ["aggregation", "fraction", "seed", "accuracy", "f1", "auc", "precision", "recall"]
    return pd.DataFrame(rows, columns=columns)


def export_embeddings(
    model: MultiViewNetwork,
    dataset: MultiOmicsDataset,
    path: str | Path,
    indices: np.ndarray | None = None,
    aggregation: str | None = None,
) -> Path:
    """Write aggregated latents to CSV: ``sample_id,label,h_1..h_D``.

    Labels are written as class names. Row order follows ``indices`` (the
    whole dataset when omitted).
    """
    path = Path(path)
    if indices is None:
        indices = np.arange(dataset.n_samples)
    indices = np.asarray(indices, dtype=np.int64)
    latents = encode_aggregate(model, dataset, indices, aggregation)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample_id", "label", *(f"h_{j + 1}" for j in range(latents.shape[1]))]
        )
        for row_idx, latent in zip(indices, latents):
            writer.writerow(
                [
                    dataset.sample_ids[int(row_idx)],
                    dataset.class_names[int(dataset.labels[row_idx])],
                    *(repr(float(v)) for v in latent),
                ]
            )
    return path
