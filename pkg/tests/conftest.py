"""Shared fixtures.

MNIST is used whenever the IDX files are present (directory from
$IPCNN_DATA_DIR or ./data); otherwise the deterministic synthetic dataset
stands in and MNIST-only gates are skipped.  The trained model is cached
on disk keyed by its configuration so repeated test runs do not retrain.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ipcnn.mnist import find_mnist_dir, load_mnist
from ipcnn.network import Hyperparams, NetworkModel, load_checkpoint, save_checkpoint, train
from ipcnn.synth import make_synthetic_dataset

CACHE_DIR = Path(__file__).parent / ".cache"

SYNTH_TRAIN = 4000
SYNTH_TEST = 1000
# 8 epochs: shorter schedules leave the surrogate model too close to the
# 1.5 pp noise-tolerance margin at -10 dBc
SYNTH_EPOCHS = 8
TRAIN_SEED = 0


@pytest.fixture(scope="session")
def mnist_dataset():
    """Real MNIST, or None when the files are not available."""
    directory = find_mnist_dir()
    if directory is None:
        return None
    return load_mnist(directory)


@pytest.fixture(scope="session")
def synth_dataset():
    return make_synthetic_dataset(n_train=SYNTH_TRAIN, n_test=SYNTH_TEST)


@pytest.fixture(scope="session")
def dataset(mnist_dataset, synth_dataset):
    """Preferred dataset: MNIST when present, synthetic otherwise."""
    return mnist_dataset if mnist_dataset is not None else synth_dataset


@pytest.fixture(scope="session")
def dataset_name(mnist_dataset):
    return "mnist" if mnist_dataset is not None else "synthetic"


def _train_cached(tag: str, dataset, epochs: int) -> NetworkModel:
    CACHE_DIR.mkdir(exist_ok=True)
    ckpt = CACHE_DIR / f"model_{tag}_e{epochs}_s{TRAIN_SEED}.npz"
    if ckpt.exists():
        return load_checkpoint(ckpt)
    model = NetworkModel(seed=TRAIN_SEED)
    train(model, dataset.train_images[:, None, :, :], dataset.train_labels,
          Hyperparams(epochs=epochs, seed=TRAIN_SEED))
    save_checkpoint(model, ckpt)
    return model


@pytest.fixture(scope="session")
def trained_model(dataset, dataset_name):
    """Reference CNN trained on the preferred dataset (cached)."""
    epochs = 5 if dataset_name == "mnist" else SYNTH_EPOCHS
    return _train_cached(dataset_name, dataset, epochs)


@pytest.fixture(scope="session")
def eval_subset(dataset):
    """Fault-sweep evaluation subset: first 1000 test samples."""
    n = min(1000, len(dataset.test_labels))
    return dataset.test_images[:n], dataset.test_labels[:n]


@pytest.fixture(scope="session")
def clean_accuracy(trained_model, eval_subset):
    images, labels = eval_subset
    return trained_model.accuracy(images[:, None, :, :], labels)
