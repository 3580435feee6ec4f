"""Command line interface.

Subcommands: ``synth`` (write a synthetic dataset), ``pretrain``,
``finetune``, ``protocol`` (label-fraction sweep), ``ablate`` and ``export``
(embedding CSV). Every command takes a JSON run config; a handful of flags
override single values. Each run writes the fully resolved config next to
its outputs.

Exit codes: 0 on success, 1 on runtime failures (bad file contents, invalid
config values, training errors), 2 on usage errors (bad flags, missing
files/paths).

The environment variable ``SELF_OMICS_THREADS`` caps the number of torch CPU
threads for the process.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from .config import ConfigError, RunConfig, load_run_config, write_resolved_config
from .data import (
    DataError,
    MultiOmicsDataset,
    SplitSpec,
    generate_synthetic,
    load_dataset,
    preprocess,
    split as split_dataset,
    subsample_labels,
    write_dataset,
)
from .evaluation import compute_metrics, export_embeddings, run_ablation
from .model import CheckpointError, init_model, load_checkpoint, save_checkpoint
from .training import (
    TrainingError,
    finetune,
    predict_proba,
    pretrain,
    run_semi_supervised,
    write_history_jsonl,
)

THREADS_ENV_VAR = "SELF_OMICS_THREADS"


class UsageError(Exception):
    """Command line misuse that is not caught by argparse itself."""


def _apply_thread_limit() -> None:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return
    try:
        threads = int(raw)
    except ValueError:
        raise UsageError(
            f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
        ) from None
    if threads < 1:
        raise UsageError(f"{THREADS_ENV_VAR} must be >= 1, got {threads}")
    torch.set_num_threads(threads)


def _load_config(args) -> RunConfig:
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return load_run_config(path)


def _prepare_dataset(cfg: RunConfig) -> tuple[MultiOmicsDataset, SplitSpec]:
    """Load or generate the dataset, split it, and preprocess with
    train-split statistics."""
    if cfg.synth_config is not None:
        raw = generate_synthetic(cfg.synth_config)
    else:
        manifest = Path(cfg.dataset_section["manifest"])
        if not manifest.is_absolute():
            manifest = Path(cfg.source).parent / manifest
        raw = load_dataset(manifest)
    sec = cfg.split_section
    spec = split_dataset(
        raw,
        fractions=tuple(sec["fractions"]),
        seed=sec["seed"],
        stratified=sec["stratified"],
    )
    dataset, _ = preprocess(raw, spec.train)
    return dataset, spec


def _out_dir(args, cfg: RunConfig) -> Path:
    out = getattr(args, "out", None) or cfg.output_dir
    if out is None:
        raise UsageError(
            "no output directory: set 'output_dir' in the config or pass --out"
        )
    path = Path(out)
    if path.exists() and any(path.iterdir()) and not args.force:
        raise DataError(
            f"output directory {path} is not empty (pass --force to overwrite)"
        )
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_model_checkpoint(args, cfg: RunConfig):
    path = getattr(args, "checkpoint", None) or cfg.checkpoint
    if path is None:
        raise UsageError(
            "this command needs a checkpoint: pass --checkpoint or set "
            "'checkpoint' in the config"
        )
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"checkpoint not found: {path}")
    model, meta = load_checkpoint(path)
    return model, meta


def _config_digest(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _split_rows(spec: SplitSpec, which: str, n_samples: int) -> np.ndarray | None:
    if which == "all":
        return np.arange(n_samples)
    return getattr(spec, which)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    if cfg.synth_config is None:
        raise UsageError("synth needs a 'dataset.synth' section in the config")
    if args.seed is not None:
        cfg.synth_config = replace(cfg.synth_config, seed=args.seed)
    out = _out_dir(args, cfg)
    dataset = generate_synthetic(cfg.synth_config)
    write_dataset(dataset, out, force=True)
    write_resolved_config(cfg.resolved(dataset), out)
    print(f"wrote {dataset.n_samples} samples x {dataset.n_views} views to {out}")
    return 0


def cmd_pretrain(args) -> int:
    cfg = _load_config(args)
    if args.epochs is not None:
        cfg.pretrain_config = replace(cfg.pretrain_config, epochs=args.epochs)
    if args.seed is not None:
        cfg.pretrain_config = replace(cfg.pretrain_config, seed=args.seed)
    out = _out_dir(args, cfg)
    dataset, spec = _prepare_dataset(cfg)
    model_config = cfg.model_config(dataset)
    model = init_model(model_config, seed=cfg.pretrain_config.seed)
    history = pretrain(
        model,
        dataset,
        spec,
        corruption_cfg=cfg.corruption_config,
        weights=cfg.loss_weights,
        config=cfg.pretrain_config,
    )
    save_checkpoint(out / "checkpoint.npz", model)
    write_history_jsonl(history, out / "pretrain_log.jsonl")
    write_resolved_config(cfg.resolved(dataset), out)
    final = history[-1]["total"] if history else float("nan")
    print(f"pretrained {len(history)} epochs, final total {final:.6f}")
    return 0


def cmd_finetune(args) -> int:
    cfg = _load_config(args)
    if args.epochs is not None:
        cfg.finetune_config = replace(cfg.finetune_config, epochs=args.epochs)
    if args.seed is not None:
        cfg.finetune_config = replace(cfg.finetune_config, seed=args.seed)
    out = _out_dir(args, cfg)
    model, _ = _load_model_checkpoint(args, cfg)
    dataset, spec = _prepare_dataset(cfg)
    if tuple(model.config.view_dims) != dataset.view_dims:
        raise DataError(
            f"checkpoint expects view dims {model.config.view_dims}, dataset "
            f"has {dataset.view_dims}"
        )
    if model.config.n_classes != dataset.n_classes:
        raise DataError(
            f"checkpoint expects {model.config.n_classes} classes, dataset "
            f"has {dataset.n_classes}"
        )
    labelled = subsample_labels(
        spec, dataset.labels, args.label_fraction, cfg.finetune_config.seed
    )
    history = finetune(
        model, dataset, spec, labelled, cfg.finetune_config
    )
    save_checkpoint(out / "checkpoint.npz", model)
    write_history_jsonl(history, out / "finetune_log.jsonl")
    resolved = cfg.resolved(dataset)
    resolved["model"] = model.config.to_dict()
    write_resolved_config(resolved, out)
    metrics = None
    if spec.test.size:
        report = compute_metrics(
            predict_proba(model, dataset, spec.test), dataset.labels[spec.test]
        )
        metrics = report.to_dict(percent=True)
    payload = {
        "metrics": metrics,
        "label_fraction": args.label_fraction,
        "labelled_samples": int(labelled.size),
        "seed": cfg.finetune_config.seed,
        "config_digest": _config_digest(resolved),
    }
    (out / "metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    if metrics is not None:
        print(
            f"finetuned on {labelled.size} labelled samples, "
            f"test accuracy {metrics['accuracy']:.2f}"
        )
    else:
        print(f"finetuned on {labelled.size} labelled samples (no test split)")
    return 0


def cmd_protocol(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    dataset, spec = _prepare_dataset(cfg)
    model_config = cfg.model_config(dataset)
    pretrained = None
    if getattr(args, "checkpoint", None) or cfg.checkpoint:
        pretrained, _ = _load_model_checkpoint(args, cfg)
    table = run_semi_supervised(
        dataset,
        spec,
        model_config,
        corruption_cfg=cfg.corruption_config,
        weights=cfg.loss_weights,
        pretrain_cfg=cfg.pretrain_config,
        finetune_cfg=cfg.finetune_config,
        fractions=tuple(cfg.protocol_section["fractions"]),
        seeds=tuple(cfg.protocol_section["seeds"]),
        arms=tuple(cfg.protocol_section["arms"]),
        pretrained_model=pretrained,
    )
    table.to_csv(out / "results.csv", index=False)
    write_resolved_config(cfg.resolved(dataset), out)
    print(f"wrote {len(table)} result rows to {out / 'results.csv'}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    dataset, spec = _prepare_dataset(cfg)
    model_config = cfg.model_config(dataset)
    table = run_ablation(
        dataset,
        spec,
        model_config,
        corruption_cfg=cfg.corruption_config,
        weights=cfg.loss_weights,
        pretrain_cfg=cfg.pretrain_config,
        finetune_cfg=cfg.finetune_config,
        drop=tuple(cfg.ablation_section["drop"]),
        fractions=tuple(cfg.ablation_section["fractions"]),
        seeds=tuple(cfg.ablation_section["seeds"]),
    )
    table.to_csv(out / "ablation.csv", index=False)
    write_resolved_config(cfg.resolved(dataset), out)
    print(f"wrote {len(table)} ablation rows to {out / 'ablation.csv'}")
    return 0


def cmd_export(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model, _ = _load_model_checkpoint(args, cfg)
    dataset, spec = _prepare_dataset(cfg)
    if tuple(model.config.view_dims) != dataset.view_dims:
        raise DataError(
            f"checkpoint expects view dims {model.config.view_dims}, dataset "
            f"has {dataset.view_dims}"
        )
    rows = _split_rows(spec, cfg.export_section["rows"], dataset.n_samples)
    path = export_embeddings(
        model,
        dataset,
        out / "embeddings.csv",
        indices=rows,
        aggregation=cfg.export_section["aggregation"],
    )
    resolved = cfg.resolved(dataset)
    resolved["model"] = model.config.to_dict()
    write_resolved_config(resolved, out)
    print(f"wrote {len(rows)} embeddings to {path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somix",
        description=(
            "Self-supervised pre-training and semi-supervised classification "
            "for multi-view omics tables."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument(
            "--force",
            action="store_true",
            help="allow writing into a non-empty output directory",
        )

    p = sub.add_parser("synth", help="generate and write a synthetic dataset")
    _common(p)
    p.add_argument("--seed", type=int, help="override the generator seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="self-supervised pretraining")
    _common(p)
    p.add_argument("--epochs", type=int, help="override pretrain epochs")
    p.add_argument("--seed", type=int, help="override the pretrain seed")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="train the classifier head")
    _common(p)
    p.add_argument("--checkpoint", help="pretrained checkpoint to start from")
    p.add_argument("--epochs", type=int, help="override finetune epochs")
    p.add_argument("--seed", type=int, help="override the finetune seed")
    p.add_argument(
        "--label-fraction",
        type=float,
        default=1.0,
        help="fraction of train labels to use (default 1.0)",
    )
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser(
        "protocol", help="semi-supervised label-fraction sweep"
    )
    _common(p)
    p.add_argument(
        "--checkpoint", help="reuse this pretrained checkpoint instead of pretraining"
    )
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("ablate", help="drop pretext components one at a time")
    _common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export", help="write aggregated embeddings to CSV")
    _common(p)
    p.add_argument("--checkpoint", help="model checkpoint to export from")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_limit()
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DataError, TrainingError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
