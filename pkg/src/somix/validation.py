"""Input checks for the estimator facade (array-likes in, numpy out)."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_views(
    Xs: Sequence, allow_nan: bool = False, expected_dims: tuple[int, ...] | None = None
) -> list[np.ndarray]:
    """Validate a list of per-view 2-d arrays sharing the same rows.

    Returns float64 copies in view order. ``expected_dims`` pins the feature
    count per view (for transform-time checks against fit-time shapes).
    """
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    if not isinstance(Xs, (list, tuple)) or len(Xs) == 0:
        raise ValueError(
            "expected a non-empty list of per-view 2-d arrays "
            f"(got {type(Xs).__name__})"
        )
    views: list[np.ndarray] = []
    for i, X in enumerate(Xs):
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"view {i}: expected a 2-d array, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(f"view {i}: empty array of shape {arr.shape}")
        if not allow_nan and np.isnan(arr).any():
            raise ValueError(
                f"view {i} contains NaN; impute first or use the preprocessor"
            )
        if np.isinf(arr).any():
            raise ValueError(f"view {i} contains infinite values")
        views.append(arr)
    rows = {v.shape[0] for v in views}
    if len(rows) > 1:
        raise ValueError(f"views disagree on sample count: {sorted(rows)}")
    if expected_dims is not None:
        if len(views) != len(expected_dims):
            raise ValueError(
                f"expected {len(expected_dims)} views, got {len(views)}"
            )
        for i, (v, d) in enumerate(zip(views, expected_dims)):
            if v.shape[1] != d:
                raise ValueError(
                    f"view {i} has {v.shape[1]} features, expected {d}"
                )
    return views


def check_labels(y, n_samples: int) -> np.ndarray:
    """Validate a label vector aligned with ``n_samples`` rows."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-d, got shape {arr.shape}")
    if arr.shape[0] != n_samples:
        raise ValueError(
            f"{arr.shape[0]} labels for {n_samples} samples"
        )
    if arr.shape[0] == 0:
        raise ValueError("labels are empty")
    return arr
