"""Pretext and downstream loss functions.

Every function takes torch tensors and returns a scalar tensor, so each term
stays differentiable end to end. The numeric conventions follow the training
recipe exactly: mean squared errors average over all elements, contrastive
terms average over rows, and reduction order is fixed so values are
reproducible bit for bit on CPU.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import torch
import torch.nn.functional as F

ALIGNMENT_VARIANTS = ("clip", "ntxent", "simsiam")
NOISE_VARIANTS = ("barlow", "ntxent", "simsiam")
DISTANCE_SPACES = ("latent", "projection")

COMPONENT_NAMES = ("reconstruction", "alignment", "noise", "distance", "maskpred")

_PROB_EPS = 1e-7
_STD_EPS = 1e-5


class NonFiniteLossError(ValueError):
    """A loss component came out NaN or infinite."""

    def __init__(self, component: str, value: float):
        self.component = component
        super().__init__(f"loss component {component!r} is non-finite ({value})")


@dataclass
class PretextLossWeights:
    """Weights and variant switches for the combined pretext objective.

    A weight of zero removes the component entirely (it is neither computed
    nor logged). ``w_corrupted``/``w_other`` weight the per-view MSE terms of
    the reconstruction loss when one view was corrupted this step.
    """

    w_reconstruction: float = 1.0
    w_alignment: float = 1.0
    w_noise: float = 1.0
    w_distance: float = 1.0
    w_maskpred: float = 1.0
    w_corrupted: float = 0.5
    w_other: float = 0.25
    temperature: float = 0.1
    barlow_lambda: float = 5e-3
    alignment_variant: str = "clip"
    noise_variant: str = "barlow"
    distance_space: str = "latent"

    def __post_init__(self) -> None:
        for name in (
            "w_reconstruction",
            "w_alignment",
            "w_noise",
            "w_distance",
            "w_maskpred",
            "w_corrupted",
            "w_other",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.barlow_lambda < 0:
            raise ValueError(
                f"barlow_lambda must be >= 0, got {self.barlow_lambda}"
            )
        if self.alignment_variant not in ALIGNMENT_VARIANTS:
            raise ValueError(
                f"alignment_variant must be one of {ALIGNMENT_VARIANTS}, "
                f"got {self.alignment_variant!r}"
            )
        if self.noise_variant not in NOISE_VARIANTS:
            raise ValueError(
                f"noise_variant must be one of {NOISE_VARIANTS}, "
                f"got {self.noise_variant!r}"
            )
        if self.distance_space not in DISTANCE_SPACES:
            raise ValueError(
                f"distance_space must be one of {DISTANCE_SPACES}, "
                f"got {self.distance_space!r}"
            )

    def component_weights(self) -> dict[str, float]:
        return {
            "reconstruction": self.w_reconstruction,
            "alignment": self.w_alignment,
            "noise": self.w_noise,
            "distance": self.w_distance,
            "maskpred": self.w_maskpred,
        }


@dataclass
class LossBreakdown:
    """Per-component values (unweighted), their weights, and the total."""

    components: dict[str, float]
    weights: dict[str, float]
    total: float


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")


def _check_batch(z: torch.Tensor, what: str, min_rows: int = 1) -> None:
    if z.ndim != 2:
        raise ValueError(f"{what}: expected a 2-d batch, got shape {tuple(z.shape)}")
    if z.shape[0] < min_rows:
        raise ValueError(
            f"{what}: needs at least {min_rows} rows, got {z.shape[0]}"
        )


def _normalize_rows(z: torch.Tensor, what: str) -> torch.Tensor:
    norms = torch.linalg.vector_norm(z, dim=1, keepdim=True)
    if bool((norms == 0).any()):
        raise ValueError(f"{what}: zero-norm row cannot be normalized")
    return z / norms


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def reconstruction_loss(
    xs: Sequence[torch.Tensor], x_recs: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Mean over views of the per-view MSE between input and reconstruction."""
    if len(xs) != len(x_recs):
        raise ValueError(f"{len(xs)} inputs but {len(x_recs)} reconstructions")
    if not xs:
        raise ValueError("reconstruction_loss needs at least one view")
    terms = []
    for i, (x, r) in enumerate(zip(xs, x_recs)):
        _check_same_shape(x, r, f"reconstruction view {i}")
        terms.append(F.mse_loss(r, x))
    return torch.stack(terms).mean()


def weighted_reconstruction_loss(
    xs: Sequence[torch.Tensor],
    x_recs: Sequence[torch.Tensor],
    corrupted_view: int,
    w_corrupted: float = 0.5,
    w_other: float = 0.25,
) -> torch.Tensor:
    """Reconstruction loss that up-weights the corrupted view.

    The corrupted view's MSE gets ``w_corrupted`` and every other view gets
    ``w_other``; the weighted sum is divided by the number of views. With the
    defaults and three views this is (0.5 a + 0.25 b + 0.25 c) / 3.
    """
    if len(xs) != len(x_recs):
        raise ValueError(f"{len(xs)} inputs but {len(x_recs)} reconstructions")
    if not 0 <= corrupted_view < len(xs):
        raise ValueError(
            f"corrupted_view {corrupted_view} out of range [0, {len(xs)})"
        )
    terms = []
    for i, (x, r) in enumerate(zip(xs, x_recs)):
        _check_same_shape(x, r, f"reconstruction view {i}")
        w = w_corrupted if i == corrupted_view else w_other
        terms.append(w * F.mse_loss(r, x))
    return torch.stack(terms).sum() / len(xs)


# ---------------------------------------------------------------------------
# cross-view alignment
# ---------------------------------------------------------------------------


def clip_alignment_loss(
    z_a: torch.Tensor, z_b: torch.Tensor, temperature: float = 0.1
) -> torch.Tensor:
    """Symmetric cross-entropy over the cosine-similarity matrix of two
    projection batches; row i of one view must match row i of the other."""
    _check_same_shape(z_a, z_b, "clip alignment")
    _check_batch(z_a, "clip alignment")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    za = _normalize_rows(z_a, "clip alignment")
    zb = _normalize_rows(z_b, "clip alignment")
    logits = za @ zb.T / temperature
    targets = torch.arange(z_a.shape[0], device=z_a.device)
    loss_a = F.cross_entropy(logits, targets)
    loss_b = F.cross_entropy(logits.T, targets)
    return 0.5 * (loss_a + loss_b)


# ---------------------------------------------------------------------------
# noise-contrastive objectives (clean vs corrupted embedding of one view)
# ---------------------------------------------------------------------------


def barlow_twins_loss(
    z: torch.Tensor, z_noisy: torch.Tensor, barlow_lambda: float = 5e-3
) -> torch.Tensor:
    """Push the cross-correlation of the two embeddings towards identity.

    Columns are standardized to zero mean and unit (population) std before
    the correlation matrix is formed; identical non-degenerate inputs give a
    loss of exactly zero.
    """
    _check_same_shape(z, z_noisy, "barlow twins")
    _check_batch(z, "barlow twins", min_rows=2)
    n = z.shape[0]

    def _standardize(t: torch.Tensor) -> torch.Tensor:
        return (t - t.mean(dim=0)) / (t.std(dim=0, correction=0) + _STD_EPS)

    za = _standardize(z)
    zb = _standardize(z_noisy)
    c = za.T @ zb / n
    identity = torch.eye(c.shape[0], dtype=c.dtype, device=c.device)
    on_diag = ((torch.diagonal(c) - 1.0) ** 2).sum()
    off_diag = ((c * (1.0 - identity)) ** 2).sum()
    return on_diag + barlow_lambda * off_diag


def nt_xent_loss(
    z: torch.Tensor, z_noisy: torch.Tensor, temperature: float = 0.1
) -> torch.Tensor:
    """Normalized-temperature cross entropy over the 2n stacked embeddings:
    row i and row i+n are positives, every other row is a negative, and the
    diagonal (self-similarity) is excluded."""
    _check_same_shape(z, z_noisy, "nt-xent")
    _check_batch(z, "nt-xent", min_rows=2)
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    n = z.shape[0]
    reps = _normalize_rows(torch.cat([z, z_noisy], dim=0), "nt-xent")
    sim = reps @ reps.T / temperature
    self_mask = torch.eye(2 * n, dtype=torch.bool, device=z.device)
    sim = sim.masked_fill(self_mask, float("-inf"))
    targets = torch.cat([torch.arange(n, 2 * n), torch.arange(0, n)]).to(z.device)
    return F.cross_entropy(sim, targets)


def simsiam_loss(
    p_a: torch.Tensor,
    h_b: torch.Tensor,
    p_b: torch.Tensor,
    h_a: torch.Tensor,
) -> torch.Tensor:
    """Negative-cosine objective with stop-gradient targets.

    ``p_*`` are predictor outputs, ``h_*`` the target embeddings; each target
    is detached so gradients flow through the predictors only.
    """
    _check_same_shape(p_a, h_b, "simsiam")
    _check_same_shape(p_b, h_a, "simsiam")
    _check_batch(p_a, "simsiam")

    def _neg_cos(p: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        pn = _normalize_rows(p, "simsiam")
        hn = _normalize_rows(h.detach(), "simsiam")
        return -(pn * hn).sum(dim=1).mean()

    return 0.5 * (_neg_cos(p_a, h_b) + _neg_cos(p_b, h_a))


# ---------------------------------------------------------------------------
# remaining pretext terms
# ---------------------------------------------------------------------------


def distance_loss(latents: Sequence[torch.Tensor]) -> torch.Tensor:
    """Sum of MSE over every unordered pair of view embeddings."""
    if len(latents) < 2:
        raise ValueError(
            f"distance_loss needs at least two views, got {len(latents)}"
        )
    terms = []
    for i in range(len(latents)):
        for j in range(i + 1, len(latents)):
            _check_same_shape(latents[i], latents[j], f"distance pair ({i},{j})")
            terms.append(F.mse_loss(latents[i], latents[j]))
    return torch.stack(terms).sum()


def mask_prediction_loss(
    logits: torch.Tensor, targets: torch.Tensor
) -> torch.Tensor:
    """Multi-label binary cross entropy over subset-mask indicators.

    Predicted probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
    """
    _check_same_shape(logits, targets, "mask prediction")
    if bool(((targets != 0) & (targets != 1)).any()):
        raise ValueError("mask prediction targets must be 0 or 1")
    probs = torch.sigmoid(logits).clamp(_PROB_EPS, 1.0 - _PROB_EPS)
    return F.binary_cross_entropy(probs, targets.to(probs.dtype))


def classification_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross entropy over the batch."""
    if logits.ndim != 2:
        raise ValueError(f"logits must be 2-d, got shape {tuple(logits.shape)}")
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ValueError(
            f"labels shape {tuple(labels.shape)} does not match "
            f"{logits.shape[0]} logit rows"
        )
    if labels.numel() and (
        int(labels.min()) < 0 or int(labels.max()) >= logits.shape[1]
    ):
        raise ValueError(
            f"labels out of range [0, {logits.shape[1]}): "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    return F.cross_entropy(logits, labels)


# ---------------------------------------------------------------------------
# combination
# ---------------------------------------------------------------------------


def combine(
    components: Mapping[str, torch.Tensor],
    weights: PretextLossWeights,
) -> tuple[torch.Tensor, LossBreakdown]:
    """Weighted sum of the supplied components.

    Components must use the canonical names; any non-finite value raises
    :class:`NonFiniteLossError` naming the component. Zero-weight components
    contribute nothing and are kept out of the gradient graph entirely.
    """
    if not components:
        raise ValueError("combine needs at least one loss component")
    weight_map = weights.component_weights()
    unknown = set(components) - set(COMPONENT_NAMES)
    if unknown:
        raise ValueError(f"unknown loss component {sorted(unknown)[0]!r}")
    total: torch.Tensor | None = None
    values: dict[str, float] = {}
    used: dict[str, float] = {}
    for name in COMPONENT_NAMES:
        if name not in components:
            continue
        value = components[name]
        scalar = float(value.detach())
        if not torch.isfinite(value.detach()):
            raise NonFiniteLossError(name, scalar)
        w = weight_map[name]
        values[name] = scalar
        used[name] = w
        if w == 0:
            continue
        term = w * value
        total = term if total is None else total + term
    if total is None:
        total = torch.zeros((), dtype=next(iter(components.values())).dtype)
    return total, LossBreakdown(components=values, weights=used, total=float(total.detach()))
