"""Multi-view encoder/decoder network with projection, mask and classifier heads.

Architecture summary: one encoder per view maps that view to a shared-size
latent space (optionally through a shared trunk behind per-view adapters).
Each latent decodes to reconstructions of every view, projects into a
contrastive space, and (for partitioned views) predicts which feature subsets
were masked. A classifier head consumes the aggregated per-view latents.

Parameter initialization is driven entirely by an explicit seed so that the
same config and seed always produce bit-identical weights.
"""

from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import dataclass, fields as dataclass_fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

CHECKPOINT_FORMAT_VERSION = 1

AGGREGATIONS = ("concat", "mean", "sum")

ACTIVATIONS = {"relu": nn.ReLU, "gelu": nn.GELU, "tanh": nn.Tanh}


class CheckpointError(ValueError):
    """Raised for unreadable or inconsistent checkpoint files."""


@dataclass
class ModelConfig:
    """Shapes and structural switches of the multi-view network."""

    view_dims: tuple[int, ...]
    encoder_hidden: tuple[int, ...] = (256, 128)
    latent_dim: int = 64
    projection_dim: int = 32
    decoder_hidden: tuple[int, ...] | None = None
    shared_trunk: bool = False
    shared_projection: bool = True
    mask_subsets: tuple[int, ...] | None = None
    n_classes: int = 2
    classifier_hidden: tuple[int, ...] = (64,)
    aggregation: str = "concat"
    activation: str = "relu"

    def __post_init__(self) -> None:
        self.view_dims = tuple(int(d) for d in self.view_dims)
        self.encoder_hidden = tuple(int(d) for d in self.encoder_hidden)
        if self.decoder_hidden is not None:
            self.decoder_hidden = tuple(int(d) for d in self.decoder_hidden)
        self.classifier_hidden = tuple(int(d) for d in self.classifier_hidden)
        if not self.view_dims or any(d < 1 for d in self.view_dims):
            raise ValueError(f"view_dims must be positive, got {self.view_dims}")
        if any(d < 1 for d in self.encoder_hidden):
            raise ValueError(
                f"encoder_hidden must be positive, got {self.encoder_hidden}"
            )
        if self.decoder_hidden is not None and any(
            d < 1 for d in self.decoder_hidden
        ):
            raise ValueError(
                f"decoder_hidden must be positive, got {self.decoder_hidden}"
            )
        if any(d < 1 for d in self.classifier_hidden):
            raise ValueError(
                f"classifier_hidden must be positive, got {self.classifier_hidden}"
            )
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be positive, got {self.latent_dim}")
        if self.projection_dim < 1:
            raise ValueError(
                f"projection_dim must be positive, got {self.projection_dim}"
            )
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.shared_trunk and not self.encoder_hidden:
            raise ValueError("shared_trunk needs at least one encoder hidden layer")
        if self.mask_subsets is not None:
            self.mask_subsets = tuple(int(k) for k in self.mask_subsets)
            if len(self.mask_subsets) != len(self.view_dims):
                raise ValueError(
                    f"mask_subsets has {len(self.mask_subsets)} entries for "
                    f"{len(self.view_dims)} views"
                )
            if any(k < 0 for k in self.mask_subsets):
                raise ValueError(
                    f"mask_subsets must be >= 0 (0 = no head), got "
                    f"{self.mask_subsets}"
                )
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(
                f"aggregation must be one of {AGGREGATIONS}, got "
                f"{self.aggregation!r}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {tuple(ACTIVATIONS)}, got "
                f"{self.activation!r}"
            )

    @property
    def n_views(self) -> int:
        return len(self.view_dims)

    @property
    def resolved_decoder_hidden(self) -> tuple[int, ...]:
        if self.decoder_hidden is not None:
            return self.decoder_hidden
        return tuple(reversed(self.encoder_hidden))

    @property
    def aggregated_dim(self) -> int:
        if self.aggregation == "concat":
            return self.n_views * self.latent_dim
        return self.latent_dim

    def to_dict(self) -> dict:
        return {
            "view_dims": list(self.view_dims),
            "encoder_hidden": list(self.encoder_hidden),
            "latent_dim": self.latent_dim,
            "projection_dim": self.projection_dim,
            "decoder_hidden": (
                None if self.decoder_hidden is None else list(self.decoder_hidden)
            ),
            "shared_trunk": self.shared_trunk,
            "shared_projection": self.shared_projection,
            "mask_subsets": (
                None if self.mask_subsets is None else list(self.mask_subsets)
            ),
            "n_classes": self.n_classes,
            "classifier_hidden": list(self.classifier_hidden),
            "aggregation": self.aggregation,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        unknown = set(data) - {f.name for f in dataclass_fields(cls)}
        if unknown:
            raise ValueError(f"unknown model config key {sorted(unknown)[0]!r}")
        kwargs = dict(data)
        for key in ("view_dims", "encoder_hidden", "classifier_hidden"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        for key in ("decoder_hidden", "mask_subsets"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class LatentBatch:
    """Per-view latent embeddings of one batch of samples."""

    view_ids: list[str]
    latents: list[torch.Tensor]

    def __post_init__(self) -> None:
        if len(self.view_ids) != len(self.latents):
            raise ValueError(
                f"{len(self.view_ids)} view ids but {len(self.latents)} latents"
            )
        shapes = {tuple(z.shape) for z in self.latents}
        if len(shapes) > 1:
            raise ValueError(f"latent shapes differ across views: {sorted(shapes)}")

    def aggregated(self, method: str) -> torch.Tensor:
        return aggregate(self.latents, method)


def aggregate(latents: Sequence[torch.Tensor], method: str) -> torch.Tensor:
    """Combine per-view latent batches into one matrix."""
    if method not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {method!r}")
    if not latents:
        raise ValueError("aggregate needs at least one view")
    shapes = {tuple(z.shape) for z in latents}
    if len(shapes) > 1:
        raise ValueError(f"latent shapes differ across views: {sorted(shapes)}")
    if method == "concat":
        return torch.cat(list(latents), dim=1)
    stacked = torch.stack(list(latents), dim=0)
    if method == "mean":
        return stacked.mean(dim=0)
    return stacked.sum(dim=0)


class _MLP(nn.Module):
    """Linear stack with an activation after every layer except the last."""

    def __init__(self, dims: Sequence[int], activation: str):
        super().__init__()
        if len(dims) < 2:
            raise ValueError("an MLP needs at least input and output dims")
        act = ACTIVATIONS[activation]
        layers: list[nn.Module] = []
        for i in range(len(dims) - 1):
            layers.append(nn.Linear(dims[i], dims[i + 1]))
            if i < len(dims) - 2:
                layers.append(act())
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class _Adapter(nn.Module):
    """Per-view input layer in front of a shared encoder trunk."""

    def __init__(self, in_dim: int, out_dim: int, activation: str):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(in_dim, out_dim), ACTIVATIONS[activation]())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class _Decoder(nn.Module):
    """Latent -> hidden trunk -> one reconstruction head per view."""

    def __init__(
        self,
        latent_dim: int,
        hidden: Sequence[int],
        view_dims: Sequence[int],
        activation: str,
    ):
        super().__init__()
        act = ACTIVATIONS[activation]
        layers: list[nn.Module] = []
        dims = [latent_dim, *hidden]
        for i in range(len(dims) - 1):
            layers.append(nn.Linear(dims[i], dims[i + 1]))
            layers.append(act())
        self.trunk = nn.Sequential(*layers) if layers else nn.Identity()
        self.heads = nn.ModuleList(nn.Linear(dims[-1], d) for d in view_dims)

    def forward(self, h: torch.Tensor) -> list[torch.Tensor]:
        base = self.trunk(h)
        return [head(base) for head in self.heads]


class MultiViewNetwork(nn.Module):
    """All trainable components, addressable by name for freezing and
    checkpointing."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        self.config = config
        self.init_seed = int(seed)
        components: dict[str, nn.Module] = {}
        act = config.activation
        if config.shared_trunk:
            for i, dim in enumerate(config.view_dims):
                components[f"adapter_{i}"] = _Adapter(
                    dim, config.encoder_hidden[0], act
                )
            components["encoder_shared"] = _MLP(
                [config.encoder_hidden[0], *config.encoder_hidden[1:], config.latent_dim],
                act,
            )
            components["decoder_shared"] = _Decoder(
                config.latent_dim,
                config.resolved_decoder_hidden,
                config.view_dims,
                act,
            )
        else:
            for i, dim in enumerate(config.view_dims):
                components[f"encoder_{i}"] = _MLP(
                    [dim, *config.encoder_hidden, config.latent_dim], act
                )
            for i in range(config.n_views):
                components[f"decoder_{i}"] = _Decoder(
                    config.latent_dim,
                    config.resolved_decoder_hidden,
                    config.view_dims,
                    act,
                )
        if config.shared_projection:
            components["projection"] = _MLP(
                [config.latent_dim, config.latent_dim, config.projection_dim], act
            )
        else:
            for i in range(config.n_views):
                components[f"projection_{i}"] = _MLP(
                    [config.latent_dim, config.latent_dim, config.projection_dim], act
                )
        components["predictor"] = _MLP(
            [config.projection_dim, config.projection_dim, config.projection_dim], act
        )
        if config.mask_subsets is not None:
            for i, k in enumerate(config.mask_subsets):
                if k > 0:
                    components[f"mask_head_{i}"] = _MLP(
                        [config.latent_dim, config.latent_dim, k], act
                    )
        components["classifier"] = _MLP(
            [config.aggregated_dim, *config.classifier_hidden, config.n_classes], act
        )
        self._components = nn.ModuleDict(components)
        self._frozen: dict[str, bool] = {name: False for name in components}
        self._init_parameters(seed)

    # -- construction helpers -------------------------------------------

    def _init_parameters(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(int(seed))
        for name in self._components:
            _seed_module(self._components[name], gen)

    def components(self) -> dict[str, nn.Module]:
        return dict(self._components)

    def component_names(self) -> list[str]:
        return list(self._components.keys())

    # -- forward paths ----------------------------------------------------

    def encode(self, view: int, x: torch.Tensor) -> torch.Tensor:
        self._check_view(view)
        if self.config.shared_trunk:
            return self._components["encoder_shared"](
                self._components[f"adapter_{view}"](x)
            )
        return self._components[f"encoder_{view}"](x)

    def encode_all(self, xs: Sequence[torch.Tensor]) -> list[torch.Tensor]:
        if len(xs) != self.config.n_views:
            raise ValueError(
                f"expected {self.config.n_views} views, got {len(xs)}"
            )
        return [self.encode(i, x) for i, x in enumerate(xs)]

    def decode(self, view: int, h: torch.Tensor) -> list[torch.Tensor]:
        """Reconstructions of every view from one view's latent."""
        self._check_view(view)
        if self.config.shared_trunk:
            return self._components["decoder_shared"](h)
        return self._components[f"decoder_{view}"](h)

    def project(self, h: torch.Tensor, view: int | None = None) -> torch.Tensor:
        if self.config.shared_projection:
            return self._components["projection"](h)
        if view is None:
            raise ValueError("per-view projections need the view index")
        self._check_view(view)
        return self._components[f"projection_{view}"](h)

    def predict_head(self, z: torch.Tensor) -> torch.Tensor:
        return self._components["predictor"](z)

    def predict_mask(self, view: int, h: torch.Tensor) -> torch.Tensor:
        self._check_view(view)
        name = f"mask_head_{view}"
        if name not in self._components:
            raise ValueError(f"view {view} has no mask prediction head")
        return self._components[name](h)

    def classify(self, aggregated: torch.Tensor) -> torch.Tensor:
        return self._components["classifier"](aggregated)

    def _check_view(self, view: int) -> None:
        if not 0 <= view < self.config.n_views:
            raise ValueError(
                f"view index {view} out of range [0, {self.config.n_views})"
            )

    # -- freezing ----------------------------------------------------------

    def set_frozen(self, which: str | Iterable[str], frozen: bool) -> None:
        """Freeze or thaw components by name or alias.

        Aliases: ``all``, ``encoders`` (encoders plus adapters and shared
        trunk), ``decoders``, ``projections``, ``mask_heads``.
        """
        for name in self._resolve_components(which):
            self._components[name].requires_grad_(not frozen)
            self._frozen[name] = frozen

    def frozen_components(self) -> set[str]:
        return {name for name, flag in self._frozen.items() if flag}

    def _resolve_components(self, which: str | Iterable[str]) -> list[str]:
        if isinstance(which, str):
            which = [which]
        resolved: list[str] = []
        for token in which:
            if token == "all":
                resolved.extend(self._components.keys())
            elif token == "encoders":
                resolved.extend(
                    n
                    for n in self._components
                    if n.startswith(("encoder_", "adapter_"))
                )
            elif token == "decoders":
                resolved.extend(
                    n for n in self._components if n.startswith("decoder_")
                )
            elif token == "projections":
                resolved.extend(
                    n for n in self._components if n.startswith("projection")
                )
            elif token == "mask_heads":
                resolved.extend(
                    n for n in self._components if n.startswith("mask_head_")
                )
            elif token in self._components:
                resolved.append(token)
            else:
                raise ValueError(
                    f"unknown component {token!r}; known: "
                    f"{sorted(self._components)} plus aliases "
                    "('all', 'encoders', 'decoders', 'projections', 'mask_heads')"
                )
        return resolved

    def trainable_parameters(self) -> list[torch.nn.Parameter]:
        return [p for p in self.parameters() if p.requires_grad]

    # -- classifier reset ----------------------------------------------------

    def reset_classifier(self, aggregation: str | None = None, seed: int = 0) -> None:
        """Replace the classifier head with a freshly initialized one,
        optionally switching the aggregation method (which changes its input
        width under ``concat``)."""
        if aggregation is not None:
            if aggregation not in AGGREGATIONS:
                raise ValueError(
                    f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}"
                )
            self.config = replace(self.config, aggregation=aggregation)
        head = _MLP(
            [
                self.config.aggregated_dim,
                *self.config.classifier_hidden,
                self.config.n_classes,
            ],
            self.config.activation,
        )
        ref = next(self.parameters())
        head.to(dtype=ref.dtype)
        gen = torch.Generator().manual_seed(int(seed))
        _seed_module(head, gen)
        self._components["classifier"] = head
        self._frozen["classifier"] = False


def _seed_module(module: nn.Module, gen: torch.Generator) -> None:
    """Fan-in-scaled uniform init drawn from an explicit generator so module
    construction order fully determines the weights."""
    for sub in module.modules():
        if isinstance(sub, nn.Linear):
            bound = 1.0 / math.sqrt(sub.in_features)
            with torch.no_grad():
                sub.weight.uniform_(-bound, bound, generator=gen)
                sub.bias.uniform_(-bound, bound, generator=gen)


def init_model(config: ModelConfig, seed: int = 0) -> MultiViewNetwork:
    """Build a network with seed-determined parameters."""
    return MultiViewNetwork(config, seed=seed)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _write_zip_deterministic(path: Path, members: dict[str, bytes]) -> None:
    """Write a zip archive whose bytes depend only on the member contents
    (fixed timestamps and permissions, insertion order preserved)."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, payload in members.items():
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_STORED
            info.external_attr = 0o644 << 16
            zf.writestr(info, payload)


def save_checkpoint(
    path: str | Path,
    model: MultiViewNetwork,
    seed: int | None = None,
    extra: dict | None = None,
) -> None:
    """Write the model to an npz-compatible archive.

    The archive is self-describing: it holds the full model config, the init
    seed, the frozen flags and a format version next to every parameter
    tensor (row-major float arrays, one entry per parameter). Output bytes
    are a pure function of the model state.
    """
    path = Path(path)
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "seed": model.init_seed if seed is None else int(seed),
        "frozen": {name: bool(flag) for name, flag in model._frozen.items()},
        "extra": extra or {},
    }
    members: dict[str, bytes] = {}
    meta_buf = io.BytesIO()
    np.save(meta_buf, np.array(json.dumps(meta, sort_keys=True)), allow_pickle=False)
    members["__meta__.npy"] = meta_buf.getvalue()
    for comp_name, comp in model.components().items():
        for param_name, param in comp.named_parameters():
            arr = param.detach().cpu().numpy()
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
            members[f"param::{comp_name}::{param_name}.npy"] = buf.getvalue()
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_zip_deterministic(path, members)


def load_checkpoint(path: str | Path) -> tuple[MultiViewNetwork, dict]:
    """Rebuild a model from :func:`save_checkpoint` output.

    Returns the model plus the stored metadata. Missing parameters, extra
    parameters, shape mismatches and unknown format versions are errors.
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint: {exc}") from None
    with archive:
        if "__meta__" not in archive.files:
            raise CheckpointError(f"{path}: missing checkpoint metadata")
        try:
            meta = json.loads(str(archive["__meta__"][()]))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: malformed metadata: {exc}") from None
        version = meta.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint format version {version!r} "
                f"(expected {CHECKPOINT_FORMAT_VERSION})"
            )
        try:
            config = ModelConfig.from_dict(meta["config"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"{path}: bad model config: {exc}") from None
        model = MultiViewNetwork(config, seed=int(meta.get("seed", 0)))
        stored = {k for k in archive.files if k.startswith("param::")}
        expected: dict[str, torch.nn.Parameter] = {}
        for comp_name, comp in model.components().items():
            for param_name, param in comp.named_parameters():
                expected[f"param::{comp_name}::{param_name}"] = param
        missing = sorted(set(expected) - stored)
        if missing:
            raise CheckpointError(f"{path}: missing parameter {missing[0]!r}")
        unexpected = sorted(stored - set(expected))
        if unexpected:
            raise CheckpointError(f"{path}: unexpected parameter {unexpected[0]!r}")
        with torch.no_grad():
            for key, param in expected.items():
                arr = archive[key]
                if tuple(arr.shape) != tuple(param.shape):
                    raise CheckpointError(
                        f"{path}: parameter {key!r} has shape {tuple(arr.shape)}, "
                        f"model expects {tuple(param.shape)}"
                    )
                param.copy_(torch.from_numpy(np.ascontiguousarray(arr)))
        frozen = meta.get("frozen", {})
        unknown_frozen = sorted(set(frozen) - set(model.component_names()))
        if unknown_frozen:
            raise CheckpointError(
                f"{path}: frozen flag for unknown component {unknown_frozen[0]!r}"
            )
        for name, flag in frozen.items():
            if flag:
                model.set_frozen(name, True)
    return model, meta
