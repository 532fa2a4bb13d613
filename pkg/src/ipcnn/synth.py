"""Deterministic synthetic 10-class image dataset.

A stand-in for environments without the MNIST files: ten fixed
low-frequency intensity templates, each sample a randomly shifted copy
with pixel noise, clipped to [0, 1].  The classes are easily separable,
so the reference CNN trains to high accuracy in seconds, which is all the
fault-injection experiments need.
"""

from __future__ import annotations

import numpy as np

from .mnist import Dataset

N_CLASSES = 10
IMAGE_WIDTH = 28


def _templates(rng: np.random.Generator) -> np.ndarray:
    """Ten smooth, distinct 28x28 templates from random 2-D cosines."""
    y, x = np.meshgrid(np.arange(IMAGE_WIDTH), np.arange(IMAGE_WIDTH),
                       indexing="ij")
    templates = np.zeros((N_CLASSES, IMAGE_WIDTH, IMAGE_WIDTH))
    for c in range(N_CLASSES):
        img = np.zeros((IMAGE_WIDTH, IMAGE_WIDTH))
        for _ in range(4):
            fx, fy = rng.uniform(0.5, 3.0, size=2) / IMAGE_WIDTH
            phase = rng.uniform(0, 2 * np.pi)
            img += rng.uniform(0.3, 1.0) * np.cos(
                2 * np.pi * (fx * x + fy * y) + phase
            )
        img -= img.min()
        templates[c] = img / img.max()
    return templates


def make_synthetic_dataset(
    n_train: int = 4000,
    n_test: int = 1000,
    seed: int = 1234,
    max_shift: int = 3,
    noise: float = 0.05,
) -> Dataset:
    rng = np.random.default_rng(seed)
    templates = _templates(rng)

    def sample(n: int) -> tuple[np.ndarray, np.ndarray]:
        labels = rng.integers(0, N_CLASSES, size=n)
        images = templates[labels].copy()
        shifts = rng.integers(-max_shift, max_shift + 1, size=(n, 2))
        for i, (dy, dx) in enumerate(shifts):
            images[i] = np.roll(images[i], (dy, dx), axis=(0, 1))
        images += rng.normal(0.0, noise, size=images.shape)
        return np.clip(images, 0.0, 1.0), labels

    train_x, train_y = sample(n_train)
    test_x, test_y = sample(n_test)
    return Dataset(train_x, train_y, test_x, test_y)
