import numpy as np
import pytest

from somix import (
    CorruptionConfig,
    ModelConfig,
    PretextLossWeights,
    SynthConfig,
    TrainConfig,
    generate_synthetic,
    init_model,
    preprocess,
    split,
)


@pytest.fixture(scope="session")
def small_raw_dataset():
    cfg = SynthConfig(
        n_samples=240,
        n_classes=4,
        view_dims=(20, 15, 10),
        shared_latent_dim=5,
        noise_sigma=0.5,
        seed=7,
    )
    return generate_synthetic(cfg)


@pytest.fixture(scope="session")
def small_setup(small_raw_dataset):
    """Preprocessed small dataset plus its split; treat as read-only."""
    spec = split(small_raw_dataset, (0.7, 0.15, 0.15), seed=0)
    dataset, _ = preprocess(small_raw_dataset, spec.train)
    return dataset, spec


def small_model_config(dataset) -> ModelConfig:
    return ModelConfig(
        view_dims=dataset.view_dims,
        encoder_hidden=(16, 8),
        latent_dim=6,
        projection_dim=6,
        mask_subsets=tuple(
            dataset.partitions[v].n_subsets if v in dataset.partitions else 0
            for v in dataset.view_ids
        ),
        n_classes=dataset.n_classes,
        classifier_hidden=(16,),
    )


@pytest.fixture()
def small_model(small_setup):
    dataset, _ = small_setup
    return init_model(small_model_config(dataset), seed=0)


@pytest.fixture()
def quick_train_config():
    return TrainConfig(epochs=3, batch_size=32, seed=0, patience=0)


@pytest.fixture()
def default_weights():
    return PretextLossWeights()


@pytest.fixture()
def default_corruption():
    return CorruptionConfig()


def rng(seed=0) -> np.random.Generator:
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat acceptance-criterion verdict lines after the run summary, so
    they are visible even though passing tests capture stdout."""
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
