"""Run configuration: strict JSON parsing and default resolution.

A run config is a JSON object with one section per concern. Unknown keys are
rejected anywhere in the tree (typos must not silently change behavior).
Sections omitted entirely fall back to defaults. Every command writes the
fully resolved configuration back into its output directory, so a run can be
reproduced from its artifacts alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields as dataclass_fields
from pathlib import Path

from .corruption import CorruptionConfig
from .data import MultiOmicsDataset, SynthConfig
from .evaluation import DROPPABLE_COMPONENTS
from .losses import PretextLossWeights
from .model import AGGREGATIONS, ModelConfig
from .training import ARMS, TrainConfig


class ConfigError(ValueError):
    """Raised for structurally or semantically invalid run configs."""


TOP_LEVEL_KEYS = (
    "dataset",
    "output_dir",
    "split",
    "model",
    "corruption",
    "loss_weights",
    "pretrain",
    "finetune",
    "protocol",
    "ablation",
    "export",
    "checkpoint",
)

_PROTOCOL_DEFAULTS = {
    "fractions": [0.01, 0.05, 0.1, 0.5, 1.0],
    "seeds": [0, 1, 2],
    "arms": list(ARMS),
}

_ABLATION_DEFAULTS = {
    "drop": list(DROPPABLE_COMPONENTS),
    "fractions": [0.1],
    "seeds": [0, 1, 2],
}

_SPLIT_DEFAULTS = {"fractions": [0.7, 0.15, 0.15], "seed": 0, "stratified": True}

_EXPORT_DEFAULTS = {"rows": "all", "aggregation": None}

_EXPORT_ROWS = ("all", "train", "val", "test")


def _check_keys(section: dict, allowed, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def _build(cls, section: dict, where: str):
    """Construct a config dataclass from a JSON section, strictly."""
    names = [f.name for f in dataclass_fields(cls)]
    _check_keys(section, names, where)
    kwargs = dict(section)
    for key, value in kwargs.items():
        if isinstance(value, list):
            kwargs[key] = tuple(value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


class RunConfig:
    """Parsed run configuration with access to typed section objects."""

    def __init__(self, raw: dict, source: str = "<config>"):
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: config must be a JSON object")
        _check_keys(raw, TOP_LEVEL_KEYS, "config")
        self.source = source
        self.raw = raw
        dataset = raw.get("dataset")
        if not isinstance(dataset, dict):
            raise ConfigError("config needs a 'dataset' section")
        _check_keys(dataset, ("manifest", "synth"), "dataset")
        if ("manifest" in dataset) == ("synth" in dataset):
            raise ConfigError(
                "dataset must have exactly one of 'manifest' or 'synth'"
            )
        self.dataset_section = dataset
        if "output_dir" in raw and not isinstance(raw["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        self.output_dir: str | None = raw.get("output_dir")
        self.checkpoint: str | None = raw.get("checkpoint")
        if self.checkpoint is not None and not isinstance(self.checkpoint, str):
            raise ConfigError("checkpoint must be a string path")
        # parse every section eagerly so bad configs fail before any work
        self.synth_config = (
            _build(SynthConfig, dataset["synth"], "dataset.synth")
            if "synth" in dataset
            else None
        )
        self.split_section = dict(_SPLIT_DEFAULTS)
        _check_keys(raw.get("split", {}), _SPLIT_DEFAULTS, "split")
        self.split_section.update(raw.get("split", {}))
        self._validate_split()
        self.corruption_config = _build(
            CorruptionConfig, raw.get("corruption", {}), "corruption"
        )
        self.loss_weights = _build(
            PretextLossWeights, raw.get("loss_weights", {}), "loss_weights"
        )
        self.pretrain_config = _build(TrainConfig, raw.get("pretrain", {}), "pretrain")
        finetune_defaults = {"epochs": 100, "freeze_encoders": True}
        finetune_section = {**finetune_defaults, **raw.get("finetune", {})}
        self.finetune_config = _build(TrainConfig, finetune_section, "finetune")
        self.model_section = raw.get("model", {})
        _check_keys(
            self.model_section,
            [f.name for f in dataclass_fields(ModelConfig)],
            "model",
        )
        self.protocol_section = dict(_PROTOCOL_DEFAULTS)
        _check_keys(raw.get("protocol", {}), _PROTOCOL_DEFAULTS, "protocol")
        self.protocol_section.update(raw.get("protocol", {}))
        self._validate_protocol()
        self.ablation_section = dict(_ABLATION_DEFAULTS)
        _check_keys(raw.get("ablation", {}), _ABLATION_DEFAULTS, "ablation")
        self.ablation_section.update(raw.get("ablation", {}))
        self._validate_ablation()
        self.export_section = dict(_EXPORT_DEFAULTS)
        _check_keys(raw.get("export", {}), _EXPORT_DEFAULTS, "export")
        self.export_section.update(raw.get("export", {}))
        self._validate_export()

    # -- section validation -------------------------------------------------

    def _validate_split(self) -> None:
        fr = self.split_section["fractions"]
        if not isinstance(fr, (list, tuple)) or len(fr) != 3:
            raise ConfigError("split.fractions must be [train, val, test]")
        if not isinstance(self.split_section["stratified"], bool):
            raise ConfigError("split.stratified must be a boolean")

    def _validate_protocol(self) -> None:
        sec = self.protocol_section
        if not sec["fractions"]:
            raise ConfigError("protocol.fractions must not be empty")
        bad = [f for f in sec["fractions"] if not 0 < f <= 1]
        if bad:
            raise ConfigError(
                f"protocol fraction {bad[0]} out of range (0, 1]"
            )
        if not sec["seeds"]:
            raise ConfigError("protocol.seeds must not be empty")
        unknown = [a for a in sec["arms"] if a not in ARMS]
        if unknown:
            raise ConfigError(
                f"unknown protocol arm {unknown[0]!r}; choose from {ARMS}"
            )

    def _validate_ablation(self) -> None:
        sec = self.ablation_section
        unknown = [d for d in sec["drop"] if d not in DROPPABLE_COMPONENTS]
        if unknown:
            raise ConfigError(
                f"cannot drop unknown component {unknown[0]!r}; choose from "
                f"{DROPPABLE_COMPONENTS}"
            )
        bad = [f for f in sec["fractions"] if not 0 < f <= 1]
        if bad:
            raise ConfigError(f"ablation fraction {bad[0]} out of range (0, 1]")
        if not sec["seeds"]:
            raise ConfigError("ablation.seeds must not be empty")

    def _validate_export(self) -> None:
        rows = self.export_section["rows"]
        if rows not in _EXPORT_ROWS:
            raise ConfigError(
                f"export.rows must be one of {_EXPORT_ROWS}, got {rows!r}"
            )
        agg = self.export_section["aggregation"]
        if agg is not None and agg not in AGGREGATIONS:
            raise ConfigError(
                f"export.aggregation must be one of {AGGREGATIONS}, got {agg!r}"
            )

    # -- resolution ----------------------------------------------------------

    def model_config(self, dataset: MultiOmicsDataset) -> ModelConfig:
        """Fill dataset-derived model fields, cross-checking explicit ones."""
        section = dict(self.model_section)
        derived = {
            "view_dims": list(dataset.view_dims),
            "n_classes": dataset.n_classes,
            "mask_subsets": [
                dataset.partitions[vid].n_subsets if vid in dataset.partitions else 0
                for vid in dataset.view_ids
            ],
        }
        for key, value in derived.items():
            if key in section:
                given = section[key]
                normal = list(given) if isinstance(given, (list, tuple)) else given
                if normal != value:
                    raise ConfigError(
                        f"model.{key} is {normal} but the dataset implies {value}"
                    )
            section[key] = value
        try:
            return ModelConfig.from_dict(section)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"model: {exc}") from None

    def resolved(self, dataset: MultiOmicsDataset) -> dict:
        """Every section with all defaults and derived values materialized."""
        model = self.model_config(dataset)

        def _plain(obj) -> dict:
            out = {}
            for key, value in asdict(obj).items():
                out[key] = list(value) if isinstance(value, tuple) else value
            return out

        resolved: dict = {
            "dataset": self.dataset_section,
            "output_dir": self.output_dir,
            "split": self.split_section,
            "model": model.to_dict(),
            "corruption": _plain(self.corruption_config),
            "loss_weights": _plain(self.loss_weights),
            "pretrain": _plain(self.pretrain_config),
            "finetune": _plain(self.finetune_config),
            "protocol": self.protocol_section,
            "ablation": self.ablation_section,
            "export": self.export_section,
        }
        if "synth" in self.dataset_section and self.synth_config is not None:
            resolved["dataset"] = {"synth": _plain(self.synth_config)}
        if self.checkpoint is not None:
            resolved["checkpoint"] = self.checkpoint
        return resolved


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig(raw, source=str(path))


def write_resolved_config(resolved: dict, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.json"
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    return path
