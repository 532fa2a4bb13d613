"""Minimal digital NN layers with manual gradients (numpy only).

Only what the four-layer MNIST network needs: stride-1 conv with optional
zero padding, ReLU, 2x2 max pooling, flatten, dense, and softmax
cross-entropy.  Every backward pass is validated against central finite
differences in the test suite.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError


class Layer:
    """Base: stateless unless it owns parameters."""

    params: list[np.ndarray]
    grads: list[np.ndarray]

    def __init__(self):
        self.params = []
        self.grads = []

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2D(Layer):
    """Stride-1 2-D convolution (cross-correlation) with zero padding."""

    def __init__(self, c_in: int, c_out: int, kernel: int = 3, pad: int = 1,
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.c_in, self.c_out, self.kernel, self.pad = c_in, c_out, kernel, pad
        rng = rng or np.random.default_rng()
        fan_in = c_in * kernel * kernel
        self.w = rng.normal(0.0, np.sqrt(2.0 / fan_in),
                            size=(c_out, c_in, kernel, kernel))
        self.b = np.zeros(c_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._windows = None

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise DimensionError(
                f"conv input shape {x.shape} incompatible with c_in={self.c_in}"
            )
        p = self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        windows = sliding_window_view(xp, (self.kernel, self.kernel),
                                      axis=(2, 3))
        b, _, h, w, _, _ = windows.shape
        # im2col + GEMM: (B*H*W, C_in*k*k) @ (C_in*k*k, C_out)
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, -1)
        if train:
            self._windows = cols, (b, h, w)
        out = cols @ self.w.reshape(self.c_out, -1).T
        return out.reshape(b, h, w, self.c_out).transpose(0, 3, 1, 2) \
            + self.b[None, :, None, None]

    def backward(self, grad):
        k, p = self.kernel, self.pad
        cols, (b, h, w) = self._windows
        grad_cols = grad.transpose(0, 2, 3, 1).reshape(b * h * w, self.c_out)
        self.grads[0][...] = (grad_cols.T @ cols).reshape(self.w.shape)
        self.grads[1][...] = grad.sum(axis=(0, 2, 3))
        # Full correlation of grad with the flipped kernel gives dx in
        # padded coordinates.
        gp = np.pad(grad, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        gw = sliding_window_view(gp, (k, k), axis=(2, 3))
        bh, bw = gw.shape[2], gw.shape[3]
        gcols = gw.transpose(0, 2, 3, 1, 4, 5).reshape(b * bh * bw, -1)
        w_flip = self.w[:, :, ::-1, ::-1]
        # matrix with rows indexed (o, i, j) to match gcols' column order
        w_mat = w_flip.transpose(0, 2, 3, 1).reshape(-1, self.c_in)
        dxp = (gcols @ w_mat).reshape(b, bh, bw, self.c_in).transpose(0, 3, 1, 2)
        if p:
            dxp = dxp[:, :, p:-p, p:-p]
        self._windows = None
        return dxp


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train=False):
        if train:
            self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, grad):
        out = grad * self._mask
        self._mask = None
        return out


class MaxPool2(Layer):
    """2x2 max pooling with stride 2; input height/width must be even."""

    def __init__(self):
        super().__init__()
        self._argmax = None
        self._shape = None

    def forward(self, x, train=False):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise DimensionError(f"pooling needs even height/width, got {x.shape}")
        tiles = x.reshape(b, c, h // 2, 2, w // 2, 2)
        tiles = tiles.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        if train:
            self._argmax = tiles.argmax(axis=-1)
            self._shape = x.shape
        return tiles.max(axis=-1)

    def backward(self, grad):
        b, c, h, w = self._shape
        out = np.zeros((b, c, h // 2, w // 2, 4))
        np.put_along_axis(out, self._argmax[..., None], grad[..., None], axis=-1)
        out = out.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        self._argmax = self._shape = None
        return out.reshape(b, c, h, w)


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train=False):
        if train:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        out = grad.reshape(self._shape)
        self._shape = None
        return out


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int,
                 rng: np.random.Generator | None = None):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        self.b = np.zeros(n_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._x = None

    def forward(self, x, train=False):
        if x.shape[1] != self.w.shape[0]:
            raise DimensionError(
                f"dense input width {x.shape[1]} != {self.w.shape[0]}"
            )
        if train:
            self._x = x
        return x @ self.w + self.b

    def backward(self, grad):
        self.grads[0][...] = self._x.T @ grad
        self.grads[1][...] = grad.sum(axis=0)
        out = grad @ self.w.T
        self._x = None
        return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy; returns (loss, dlogits)."""
    n = logits.shape[0]
    probs = softmax(logits)
    loss = -np.mean(np.log(probs[np.arange(n), labels] + 1e-300))
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n
