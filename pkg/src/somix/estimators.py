"""Scikit-learn style wrappers around the multi-view pipeline.

These estimators take a list of per-view arrays as X (one matrix per view,
same rows everywhere). They cover the common flow: preprocess, pretrain
without labels, then fit a classifier on frozen encoders with few labels.
The functional API in the other modules remains the primary surface; this is
the convenience layer.
"""

from __future__ import annotations

import copy
from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corruption import CorruptionConfig
from .data import (
    DEFAULT_N_SUBSETS,
    MultiOmicsDataset,
    OmicsMatrix,
    SplitSpec,
    partition_uniform,
)
from .losses import PretextLossWeights
from .model import ModelConfig, init_model
from .training import TrainConfig, encode_aggregate, finetune, predict_proba, pretrain
from .validation import check_labels, check_views


def _as_dataset(
    views: list[np.ndarray],
    labels: np.ndarray | None,
    n_classes: int,
    with_partitions: bool,
) -> MultiOmicsDataset:
    n = views[0].shape[0]
    sample_ids = [f"r{i}" for i in range(n)]
    matrices = []
    partitions = {}
    for v, X in enumerate(views):
        view_id = f"view{v}"
        matrices.append(
            OmicsMatrix(
                view_id=view_id,
                sample_ids=sample_ids,
                feature_ids=[f"{view_id}_f{j}" for j in range(X.shape[1])],
                values=X,
            )
        )
        if with_partitions:
            partitions[view_id] = partition_uniform(
                X.shape[1], min(DEFAULT_N_SUBSETS, X.shape[1]), view_id
            )
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
        class_names = [f"class_{c}" for c in range(max(n_classes, 1))]
    else:
        class_names = [f"class_{c}" for c in range(n_classes)]
    return MultiOmicsDataset(
        views=matrices,
        labels=labels,
        class_names=class_names,
        partitions=partitions,
    )


class OmicsPreprocessor(BaseEstimator, TransformerMixin):
    """Per-view mean imputation plus feature standardization.

    Column means and scales are learned from the rows passed to ``fit`` only.
    Zero-variance features standardize to exactly zero.
    """

    def __init__(self, with_standardize: bool = True):
        self.with_standardize = with_standardize

    def fit(self, X, y=None):
        views = check_views(X, allow_nan=True)
        self.means_ = []
        self.scales_ = []
        self.view_dims_ = tuple(v.shape[1] for v in views)
        for i, v in enumerate(views):
            observed = ~np.isnan(v)
            if not observed.any(axis=0).all():
                col = int(np.flatnonzero(~observed.any(axis=0))[0])
                raise ValueError(
                    f"view {i} column {col} has no observed values"
                )
            mean = np.nansum(v, axis=0) / observed.sum(axis=0)
            filled = np.where(observed, v, mean)
            center = filled.mean(axis=0)
            scale = np.sqrt(filled.var(axis=0))
            scale[scale == 0.0] = 1.0
            self.means_.append(mean)
            if self.with_standardize:
                self.scales_.append((center, scale))
        return self

    def transform(self, X):
        check_is_fitted(self, "means_")
        views = check_views(X, allow_nan=True, expected_dims=self.view_dims_)
        out = []
        for i, v in enumerate(views):
            filled = np.where(np.isnan(v), self.means_[i], v)
            if self.with_standardize:
                center, scale = self.scales_[i]
                filled = (filled - center) / scale
            out.append(filled)
        return out


class MultiViewPretrainer(BaseEstimator, TransformerMixin):
    """Self-supervised pretraining of per-view encoders; transform returns
    the aggregated latent embedding."""

    def __init__(
        self,
        encoder_hidden: tuple[int, ...] = (256, 128),
        latent_dim: int = 64,
        projection_dim: int = 32,
        aggregation: str = "concat",
        activation: str = "relu",
        shared_trunk: bool = False,
        epochs: int = 50,
        batch_size: int = 32,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        patience: int = 10,
        val_fraction: float = 0.1,
        weights: PretextLossWeights | None = None,
        corruption: CorruptionConfig | None = None,
        seed: int = 0,
    ):
        self.encoder_hidden = encoder_hidden
        self.latent_dim = latent_dim
        self.projection_dim = projection_dim
        self.aggregation = aggregation
        self.activation = activation
        self.shared_trunk = shared_trunk
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.patience = patience
        self.val_fraction = val_fraction
        self.weights = weights
        self.corruption = corruption
        self.seed = seed

    def fit(self, X, y=None):
        views = check_views(X)
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(
                f"val_fraction must be in [0, 1), got {self.val_fraction}"
            )
        dataset = _as_dataset(views, None, 1, with_partitions=True)
        self.view_dims_ = dataset.view_dims
        config = ModelConfig(
            view_dims=dataset.view_dims,
            encoder_hidden=tuple(self.encoder_hidden),
            latent_dim=self.latent_dim,
            projection_dim=self.projection_dim,
            shared_trunk=self.shared_trunk,
            mask_subsets=tuple(
                dataset.partitions[vid].n_subsets for vid in dataset.view_ids
            ),
            aggregation=self.aggregation,
            activation=self.activation,
        )
        rng = np.random.default_rng(self.seed)
        order = rng.permutation(dataset.n_samples)
        n_val = int(round(self.val_fraction * dataset.n_samples))
        if dataset.n_samples - n_val < 1:
            n_val = 0
        split = SplitSpec(
            train=np.sort(order[n_val:]),
            val=np.sort(order[:n_val]),
            test=np.empty(0, dtype=np.int64),
            seed=self.seed,
        )
        self.model_ = init_model(config, seed=self.seed)
        self.history_ = pretrain(
            self.model_,
            dataset,
            split,
            corruption_cfg=self.corruption or CorruptionConfig(),
            weights=self.weights or PretextLossWeights(),
            config=TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
                optimizer=self.optimizer,
                seed=self.seed,
                patience=self.patience,
            ),
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        views = check_views(X, expected_dims=self.view_dims_)
        dataset = _as_dataset(views, None, 1, with_partitions=False)
        return encode_aggregate(self.model_, dataset)


class FrozenEncoderClassifier(BaseEstimator, ClassifierMixin):
    """Classifier head on top of frozen (optionally pretrained) encoders.

    ``pretrainer`` is a fitted :class:`MultiViewPretrainer`; with None the
    encoders are freshly initialized from ``seed`` and left untrained, which
    is the random-frozen baseline.
    """

    def __init__(
        self,
        pretrainer: MultiViewPretrainer | None = None,
        classifier_hidden: tuple[int, ...] = (64,),
        aggregation: str | None = None,
        epochs: int = 100,
        batch_size: int = 32,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        patience: int = 10,
        val_fraction: float = 0.0,
        seed: int = 0,
    ):
        self.pretrainer = pretrainer
        self.classifier_hidden = classifier_hidden
        self.aggregation = aggregation
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.patience = patience
        self.val_fraction = val_fraction
        self.seed = seed

    def fit(self, X, y):
        views = check_views(X)
        y = check_labels(y, views[0].shape[0])
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least two classes")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(
                f"val_fraction must be in [0, 1), got {self.val_fraction}"
            )
        n_classes = int(self.classes_.shape[0])
        dataset = _as_dataset(views, encoded.astype(np.int64), n_classes, False)
        self.view_dims_ = dataset.view_dims
        if self.pretrainer is not None:
            check_is_fitted(self.pretrainer, "model_")
            if self.pretrainer.view_dims_ != dataset.view_dims:
                raise ValueError(
                    f"pretrainer saw view dims {self.pretrainer.view_dims_}, "
                    f"got {dataset.view_dims}"
                )
            model = copy.deepcopy(self.pretrainer.model_)
            model.config = replace(
                model.config,
                n_classes=n_classes,
                classifier_hidden=tuple(self.classifier_hidden),
            )
        else:
            model = init_model(
                ModelConfig(
                    view_dims=dataset.view_dims,
                    n_classes=n_classes,
                    classifier_hidden=tuple(self.classifier_hidden),
                ),
                seed=self.seed,
            )
        rng = np.random.default_rng(self.seed)
        order = rng.permutation(dataset.n_samples)
        n_val = int(round(self.val_fraction * dataset.n_samples))
        if dataset.n_samples - n_val < 1:
            n_val = 0
        split = SplitSpec(
            train=np.sort(order[n_val:]),
            val=np.sort(order[:n_val]),
            test=np.empty(0, dtype=np.int64),
            seed=self.seed,
        )
        finetune(
            model,
            dataset,
            split,
            labelled_indices=split.train,
            config=TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
                optimizer=self.optimizer,
                seed=self.seed,
                patience=self.patience,
                freeze_encoders=True,
            ),
            aggregation=self.aggregation,
        )
        self.model_ = model
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        views = check_views(X, expected_dims=self.view_dims_)
        dataset = _as_dataset(
            views, None, int(self.classes_.shape[0]), with_partitions=False
        )
        return predict_proba(self.model_, dataset)

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]
