import json
import zipfile

import numpy as np
import pytest
import torch

from somix import (
    CheckpointError,
    LatentBatch,
    ModelConfig,
    MultiViewNetwork,
    aggregate,
    init_model,
    load_checkpoint,
    save_checkpoint,
)

CONFIG = ModelConfig(
    view_dims=(10, 8, 6),
    encoder_hidden=(12,),
    latent_dim=5,
    projection_dim=4,
    mask_subsets=(4, 3, 2),
    n_classes=3,
    classifier_hidden=(8,),
)


def _xs(batch=4, dims=CONFIG.view_dims, seed=0):
    rng = np.random.default_rng(seed)
    return [torch.from_numpy(rng.normal(size=(batch, d)).astype(np.float32)) for d in dims]


def _state_bytes(model):
    return {k: v.numpy().tobytes() for k, v in model.state_dict().items()}


class TestModelConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="view_dims"):
            ModelConfig(view_dims=())
        with pytest.raises(ValueError, match="n_classes"):
            ModelConfig(view_dims=(4,), n_classes=1)
        with pytest.raises(ValueError, match="mask_subsets"):
            ModelConfig(view_dims=(4, 5), mask_subsets=(3,))
        with pytest.raises(ValueError, match="aggregation"):
            ModelConfig(view_dims=(4,), aggregation="median")
        with pytest.raises(ValueError, match="activation"):
            ModelConfig(view_dims=(4,), activation="swish")

    def test_dict_round_trip(self):
        again = ModelConfig.from_dict(CONFIG.to_dict())
        assert again == CONFIG
        assert json.dumps(CONFIG.to_dict(), sort_keys=True)  # JSON-serializable

    def test_from_dict_unknown_key(self):
        data = CONFIG.to_dict()
        data["dropout"] = 0.5
        with pytest.raises(ValueError, match="dropout"):
            ModelConfig.from_dict(data)

    def test_decoder_hidden_defaults_to_reversed_encoder(self):
        cfg = ModelConfig(view_dims=(4,), encoder_hidden=(32, 16))
        assert cfg.resolved_decoder_hidden == (16, 32)
        explicit = ModelConfig(view_dims=(4,), decoder_hidden=(7,))
        assert explicit.resolved_decoder_hidden == (7,)

    def test_aggregated_dim(self):
        assert CONFIG.aggregated_dim == 3 * 5
        mean_cfg = ModelConfig(view_dims=(4, 4), latent_dim=5, aggregation="mean")
        assert mean_cfg.aggregated_dim == 5


class TestAggregate:
    def test_hand_values(self):
        a = torch.tensor([[1.0, 2.0]])
        b = torch.tensor([[3.0, 4.0]])
        assert aggregate([a, b], "concat").tolist() == [[1.0, 2.0, 3.0, 4.0]]
        assert aggregate([a, b], "mean").tolist() == [[2.0, 3.0]]
        assert aggregate([a, b], "sum").tolist() == [[4.0, 6.0]]

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="aggregation"):
            aggregate([torch.zeros((1, 2))], "max")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            aggregate([torch.zeros((1, 2)), torch.zeros((1, 3))], "mean")

    def test_latent_batch(self):
        a = torch.zeros((2, 3))
        batch = LatentBatch(view_ids=["v0", "v1"], latents=[a, a + 1])
        assert batch.aggregated("sum").tolist() == [[1.0, 1.0, 1.0]] * 2
        with pytest.raises(ValueError, match="view ids"):
            LatentBatch(view_ids=["v0"], latents=[a, a])


class TestInit:
    def test_same_seed_same_weights(self):
        a = init_model(CONFIG, seed=3)
        b = init_model(CONFIG, seed=3)
        assert _state_bytes(a) == _state_bytes(b)

    def test_different_seed_differs(self):
        a = init_model(CONFIG, seed=3)
        b = init_model(CONFIG, seed=4)
        assert _state_bytes(a) != _state_bytes(b)

    def test_component_inventory(self):
        model = init_model(CONFIG, seed=0)
        names = set(model.component_names())
        assert {"encoder_0", "encoder_1", "encoder_2"} <= names
        assert {"decoder_0", "decoder_1", "decoder_2"} <= names
        assert "projection" in names and "predictor" in names
        assert {"mask_head_0", "mask_head_1", "mask_head_2"} <= names
        assert "classifier" in names

    def test_shared_trunk_inventory(self):
        cfg = ModelConfig(
            view_dims=(6, 4), encoder_hidden=(8,), latent_dim=3, shared_trunk=True
        )
        model = init_model(cfg, seed=0)
        names = set(model.component_names())
        assert {"adapter_0", "adapter_1", "encoder_shared", "decoder_shared"} <= names
        assert not any(n.startswith("encoder_0") for n in names)

    def test_per_view_projections(self):
        cfg = ModelConfig(view_dims=(6, 4), shared_projection=False)
        names = set(init_model(cfg, seed=0).component_names())
        assert {"projection_0", "projection_1"} <= names
        assert "projection" not in names


class TestForward:
    def test_shapes(self):
        model = init_model(CONFIG, seed=1)
        xs = _xs()
        hs = model.encode_all(xs)
        assert [tuple(h.shape) for h in hs] == [(4, 5)] * 3
        recs = model.decode(1, hs[1])
        assert [tuple(r.shape) for r in recs] == [(4, 10), (4, 8), (4, 6)]
        z = model.project(hs[0])
        assert tuple(z.shape) == (4, 4)
        assert tuple(model.predict_head(z).shape) == (4, 4)
        assert tuple(model.predict_mask(0, hs[0]).shape) == (4, 4)
        assert tuple(model.predict_mask(2, hs[2]).shape) == (4, 2)
        agg = aggregate(hs, "concat")
        assert tuple(model.classify(agg).shape) == (4, 3)

    def test_shared_trunk_forward(self):
        cfg = ModelConfig(
            view_dims=(6, 4), encoder_hidden=(8,), latent_dim=3, shared_trunk=True
        )
        model = init_model(cfg, seed=1)
        xs = _xs(dims=(6, 4))
        hs = model.encode_all(xs)
        assert [tuple(h.shape) for h in hs] == [(4, 3)] * 2
        recs = model.decode(0, hs[0])
        assert [tuple(r.shape) for r in recs] == [(4, 6), (4, 4)]

    def test_predict_mask_without_head(self):
        cfg = ModelConfig(view_dims=(6, 4))
        model = init_model(cfg, seed=0)
        h = model.encode(0, _xs(dims=(6, 4))[0])
        with pytest.raises(ValueError, match="no mask prediction head"):
            model.predict_mask(0, h)

    def test_bad_view_index(self):
        model = init_model(CONFIG, seed=0)
        with pytest.raises(ValueError, match="view"):
            model.encode(3, torch.zeros((2, 10)))

    def test_encode_wrong_width(self):
        model = init_model(CONFIG, seed=0)
        with pytest.raises((ValueError, RuntimeError)):
            model.encode(0, torch.zeros((2, 7)))


class TestFreezing:
    def test_freeze_encoders(self):
        model = init_model(CONFIG, seed=0)
        model.set_frozen("encoders", True)
        for name, comp in model.components().items():
            expect_trainable = not name.startswith("encoder_")
            for p in comp.parameters():
                assert p.requires_grad == expect_trainable, name
        assert model.frozen_components() == {"encoder_0", "encoder_1", "encoder_2"}

    def test_trainable_parameters_shrink(self):
        model = init_model(CONFIG, seed=0)
        full = len(model.trainable_parameters())
        model.set_frozen("all", True)
        assert model.trainable_parameters() == []
        model.set_frozen("all", False)
        assert len(model.trainable_parameters()) == full
        assert model.frozen_components() == set()

    def test_single_component_and_aliases(self):
        model = init_model(CONFIG, seed=0)
        model.set_frozen("classifier", True)
        assert model.frozen_components() == {"classifier"}
        model.set_frozen(["decoders", "mask_heads"], True)
        assert {"decoder_0", "mask_head_1"} <= model.frozen_components()

    def test_unknown_component(self):
        model = init_model(CONFIG, seed=0)
        with pytest.raises(ValueError, match="unknown component"):
            model.set_frozen("encoder_9", True)

    def test_frozen_alias_on_shared_trunk(self):
        cfg = ModelConfig(
            view_dims=(6, 4), encoder_hidden=(8,), latent_dim=3, shared_trunk=True
        )
        model = init_model(cfg, seed=0)
        model.set_frozen("encoders", True)
        assert {"adapter_0", "adapter_1"} <= model.frozen_components()


class TestResetClassifier:
    def test_new_weights(self):
        model = init_model(CONFIG, seed=0)
        before = model.components()["classifier"].state_dict()
        model.reset_classifier(seed=99)
        after = model.components()["classifier"].state_dict()
        assert any(
            not torch.equal(before[k], after[k]) for k in before
        )

    def test_same_seed_reproducible(self):
        a = init_model(CONFIG, seed=0)
        b = init_model(CONFIG, seed=1)
        a.reset_classifier(seed=5)
        b.reset_classifier(seed=5)
        sa = a.components()["classifier"].state_dict()
        sb = b.components()["classifier"].state_dict()
        assert all(torch.equal(sa[k], sb[k]) for k in sa)

    def test_aggregation_switch_changes_width(self):
        model = init_model(CONFIG, seed=0)
        model.reset_classifier(aggregation="mean", seed=0)
        assert model.config.aggregation == "mean"
        hs = model.encode_all(_xs())
        out = model.classify(aggregate(hs, "mean"))
        assert tuple(out.shape) == (4, 3)

    def test_keeps_dtype(self):
        model = init_model(CONFIG, seed=0).double()
        model.reset_classifier(seed=1)
        head = model.components()["classifier"]
        assert next(head.parameters()).dtype == torch.float64

    def test_unfreezes_head(self):
        model = init_model(CONFIG, seed=0)
        model.set_frozen("all", True)
        model.reset_classifier(seed=0)
        assert "classifier" not in model.frozen_components()


def _rezip(src, dst, drop=None, add=None, rename=None):
    """Copy a checkpoint archive, optionally dropping, adding or renaming
    members, preserving everything else byte for byte."""
    with zipfile.ZipFile(src) as zf:
        members = {name: zf.read(name) for name in zf.namelist()}
    if drop:
        members.pop(drop)
    if rename:
        members[rename[1]] = members.pop(rename[0])
    if add:
        members.update(add)
    with zipfile.ZipFile(dst, "w", zipfile.ZIP_STORED) as zf:
        for name, payload in members.items():
            zf.writestr(name, payload)


def _npy_bytes(arr):
    import io

    buf = io.BytesIO()
    np.save(buf, arr, allow_pickle=False)
    return buf.getvalue()


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = init_model(CONFIG, seed=7)
        model.set_frozen("encoders", True)
        path = tmp_path / "model.npz"
        save_checkpoint(path, model, extra={"note": "test"})
        loaded, meta = load_checkpoint(path)
        assert _state_bytes(loaded) == _state_bytes(model)
        assert loaded.config == CONFIG
        assert loaded.frozen_components() == model.frozen_components()
        assert meta["extra"] == {"note": "test"}
        assert meta["seed"] == 7

    def test_round_trip_preserves_outputs(self, tmp_path):
        model = init_model(CONFIG, seed=2)
        path = tmp_path / "model.npz"
        save_checkpoint(path, model)
        loaded, _ = load_checkpoint(path)
        xs = _xs(seed=5)
        with torch.no_grad():
            got = aggregate(loaded.encode_all(xs), "concat")
            want = aggregate(model.encode_all(xs), "concat")
        assert torch.equal(got, want)

    def test_saves_are_byte_identical(self, tmp_path):
        model = init_model(CONFIG, seed=7)
        p1, p2 = tmp_path / "a.npz", tmp_path / "b.npz"
        save_checkpoint(p1, model)
        save_checkpoint(p2, model)
        assert p1.read_bytes() == p2.read_bytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "nope.npz")

    def test_missing_parameter(self, tmp_path):
        model = init_model(CONFIG, seed=0)
        src = tmp_path / "ok.npz"
        save_checkpoint(src, model)
        bad = tmp_path / "bad.npz"
        _rezip(src, bad, drop="param::classifier::net.0.bias.npy")
        with pytest.raises(CheckpointError, match="missing parameter"):
            load_checkpoint(bad)

    def test_unexpected_parameter(self, tmp_path):
        model = init_model(CONFIG, seed=0)
        src = tmp_path / "ok.npz"
        save_checkpoint(src, model)
        bad = tmp_path / "bad.npz"
        _rezip(
            src,
            bad,
            add={"param::mystery::weight.npy": _npy_bytes(np.zeros((2, 2)))},
        )
        with pytest.raises(CheckpointError, match="unexpected parameter"):
            load_checkpoint(bad)

    def test_shape_mismatch(self, tmp_path):
        model = init_model(CONFIG, seed=0)
        src = tmp_path / "ok.npz"
        save_checkpoint(src, model)
        bad = tmp_path / "bad.npz"
        _rezip(src, bad)
        _rezip(
            src,
            bad,
            drop="param::classifier::net.0.bias.npy",
            add={
                "param::classifier::net.0.bias.npy": _npy_bytes(
                    np.zeros(99, dtype=np.float32)
                )
            },
        )
        with pytest.raises(CheckpointError, match="shape"):
            load_checkpoint(bad)

    def test_version_mismatch(self, tmp_path):
        model = init_model(CONFIG, seed=0)
        src = tmp_path / "ok.npz"
        save_checkpoint(src, model)
        with zipfile.ZipFile(src) as zf:
            members = {name: zf.read(name) for name in zf.namelist()}
        meta = json.loads(
            str(np.load(__import__("io").BytesIO(members["__meta__.npy"]))[()])
        )
        meta["format_version"] = 999
        members["__meta__.npy"] = _npy_bytes(np.array(json.dumps(meta)))
        bad = tmp_path / "bad.npz"
        with zipfile.ZipFile(bad, "w", zipfile.ZIP_STORED) as zf:
            for name, payload in members.items():
                zf.writestr(name, payload)
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(bad)

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_bytes(b"this is not a zip archive")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
