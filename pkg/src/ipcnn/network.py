"""The four-layer CNN (2 conv + 2 FC), its trainer, and checkpoint I/O.

Architecture: Conv3x3(1->32, pad 1) - ReLU - MaxPool2 - Conv3x3(32->32,
pad 1) - ReLU - MaxPool2 - Flatten - FC(1568->512) - ReLU - FC(512->10).
ReLU keeps activations non-negative, which the intensity-encoded photonic
execution of the conv layers requires.  Training is plain minibatch SGD
with momentum, fully digital and deterministic given the seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, TrainingError
from .layers import Conv2D, Dense, Flatten, Layer, MaxPool2, ReLU, cross_entropy_loss

ARCH_VERSION = 1


@dataclass
class Hyperparams:
    epochs: int = 5
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    seed: int = 0

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


class NetworkModel:
    """Fixed-topology CNN; owns its layers and training metadata."""

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.layers: list[Layer] = [
            Conv2D(1, 32, kernel=3, pad=1, rng=rng),
            ReLU(),
            MaxPool2(),
            Conv2D(32, 32, kernel=3, pad=1, rng=rng),
            ReLU(),
            MaxPool2(),
            Flatten(),
            Dense(32 * 7 * 7, 512, rng=rng),
            ReLU(),
            Dense(512, 10, rng=rng),
        ]
        self.metadata: dict = {"seed": seed, "trained": False}

    # conv layers are at fixed positions in the stack
    @property
    def conv_layers(self) -> list[Conv2D]:
        return [self.layers[0], self.layers[3]]

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def loss_and_backward(self, x: np.ndarray, labels: np.ndarray) -> float:
        logits = self.forward(x, train=True)
        loss, grad = cross_entropy_loss(logits, labels)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        preds = []
        for i in range(0, len(x), batch_size):
            logits = self.forward(x[i:i + batch_size])
            preds.append(logits.argmax(axis=1))
        return np.concatenate(preds)

    def accuracy(self, x: np.ndarray, labels: np.ndarray,
                 batch_size: int = 256) -> float:
        return float(np.mean(self.predict(x, batch_size) == labels))

    def model_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"arch-v{ARCH_VERSION}".encode())
        for p in self.parameters():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()


def train(
    model: NetworkModel,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    hyper: Hyperparams,
    log=None,
) -> NetworkModel:
    """Minibatch SGD with momentum; raises TrainingError on divergence."""
    hyper.validate()
    rng = np.random.default_rng(hyper.seed)
    params = model.parameters()
    grads = model.gradients()
    velocity = [np.zeros_like(p) for p in params]
    n = len(train_images)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for batch_idx, start in enumerate(range(0, n, hyper.batch_size)):
            sel = order[start:start + hyper.batch_size]
            loss = model.loss_and_backward(train_images[sel], train_labels[sel])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"loss diverged at epoch {epoch}, batch {batch_idx}"
                )
            for p, g, v in zip(params, grads, velocity):
                v *= hyper.momentum
                v -= hyper.learning_rate * g
                p += v
        if log is not None:
            log(f"epoch {epoch + 1}/{hyper.epochs}: last batch loss {loss:.4f}")
    model.metadata.update(
        trained=True,
        epochs=hyper.epochs,
        learning_rate=hyper.learning_rate,
        momentum=hyper.momentum,
        batch_size=hyper.batch_size,
        train_seed=hyper.seed,
    )
    return model


def save_checkpoint(model: NetworkModel, path) -> None:
    """Lossless versioned checkpoint: parameter arrays + JSON metadata."""
    arrays = {f"param_{i}": p for i, p in enumerate(model.parameters())}
    meta = {"arch_version": ARCH_VERSION, "metadata": model.metadata}
    np.savez_compressed(path, __meta__=np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path, seed: int = 0) -> NetworkModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("arch_version") != ARCH_VERSION:
            raise DimensionError(
                f"checkpoint arch version {meta.get('arch_version')} "
                f"!= {ARCH_VERSION}"
            )
        model = NetworkModel(seed=seed)
        params = model.parameters()
        for i, p in enumerate(params):
            stored = data[f"param_{i}"]
            if stored.shape != p.shape:
                raise DimensionError(
                    f"checkpoint param_{i} shape {stored.shape} != {p.shape}"
                )
            p[...] = stored
        model.metadata = meta["metadata"]
    return model
