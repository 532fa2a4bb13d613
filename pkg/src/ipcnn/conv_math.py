"""Index algebra for delay-buffered convolution.

A stride-1, zero-padding-free 2-D convolution over square images can be
lowered to a matrix product in two ways: the conventional im2col patching,
or by serializing each image row-major and presenting Q = sigma^2 delayed
copies of the serialized stream.  The valid columns of the delayed matrix
coincide with the im2col matrix, so a single weight-matrix multiply
computes the layer either way.  This module holds exact reference
implementations of both routes so the equivalence can be checked
mechanically.

All functions are pure and operate on immutable inputs; they are safe to
call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidSpecError


@dataclass(frozen=True)
class ConvLayerSpec:
    """Shapes of one convolutional layer: stride fixed at 1, no padding."""

    c_in: int
    c_out: int
    sigma: int
    image_width: int

    def __post_init__(self):
        if self.c_in < 1:
            raise InvalidSpecError(f"c_in must be >= 1, got {self.c_in}")
        if self.c_out < 1:
            raise InvalidSpecError(f"c_out must be >= 1, got {self.c_out}")
        if self.sigma < 1:
            raise InvalidSpecError(f"sigma must be >= 1, got {self.sigma}")
        if self.image_width < self.sigma:
            raise InvalidSpecError(
                f"image_width {self.image_width} < sigma {self.sigma}: "
                "no valid outputs"
            )

    @property
    def q(self) -> int:
        """Taps per input channel: Q = sigma^2."""
        return self.sigma * self.sigma

    @property
    def valid_width(self) -> int:
        """Output image width for stride 1, no padding: L - sigma + 1."""
        return self.image_width - self.sigma + 1

    @property
    def d_max(self) -> int:
        """Largest delay offset: (sigma - 1) * (L + 1)."""
        return (self.sigma - 1) * (self.image_width + 1)


@dataclass(frozen=True)
class DelayedMatrix:
    """Serialized-and-delayed input matrix X' with its valid-column mask.

    ``data`` has shape (C_I * Q, L^2 + D_max).  Row u*Q + q holds the
    serialized channel u shifted right by D_max - D_q, zero-padded
    elsewhere: kernel element q looks *ahead* in the stream, so the tap
    carrying it must be delayed *least*.  The physical delay set is still
    exactly {D_q}; only the tap-to-kernel-element assignment is reversed.
    ``valid_mask`` has the same width; column s + D_max is valid for
    s = m*L + n with m, n in [0, L - sigma], and there the matrix column
    is precisely the flattened patch at (m, n) - the im2col column.
    """

    data: np.ndarray
    valid_mask: np.ndarray
    spec: ConvLayerSpec


def _check_image_shape(images: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    images = np.asarray(images, dtype=float)
    expected = (spec.c_in, spec.image_width, spec.image_width)
    if images.shape != expected:
        axis = next(
            (name for name, got, want in zip(
                ("channel", "row", "column"), images.shape, expected)
             if got != want),
            "rank",
        )
        raise DimensionError(
            f"image tensor shape {images.shape} != {expected} (axis: {axis})"
        )
    return images


def _check_kernel_shape(kernels: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    kernels = np.asarray(kernels, dtype=float)
    expected = (spec.c_in, spec.c_out, spec.sigma, spec.sigma)
    if kernels.shape != expected:
        axis = next(
            (name for name, got, want in zip(
                ("in-channel", "out-channel", "kernel-row", "kernel-column"),
                kernels.shape, expected)
             if got != want),
            "rank",
        )
        raise DimensionError(
            f"kernel tensor shape {kernels.shape} != {expected} (axis: {axis})"
        )
    return kernels


def conv2d_reference(images, kernels, spec: ConvLayerSpec) -> np.ndarray:
    """Exact triple-sum convolution y[v,m,n] = sum_{u,i,j} w[u,v,i,j] x[u,m+i,n+j].

    Vectorized over (m, n) but otherwise a direct transcription of the
    defining sum.  Output shape (C_O, L-sigma+1, L-sigma+1).
    """
    x = _check_image_shape(images, spec)
    w = _check_kernel_shape(kernels, spec)
    v_w = spec.valid_width
    out = np.zeros((spec.c_out, v_w, v_w))
    for i in range(spec.sigma):
        for j in range(spec.sigma):
            # x window for this (i, j): shape (C_I, V, V)
            window = x[:, i:i + v_w, j:j + v_w]
            # w[:, :, i, j]: (C_I, C_O)
            out += np.einsum("uv,umn->vmn", w[:, :, i, j], window)
    return out


def serialize(image: np.ndarray) -> np.ndarray:
    """Row-major serialization of a square image: x_bar[s] = x[s // L, s % L]."""
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DimensionError(f"expected square 2-D image, got shape {image.shape}")
    return image.reshape(-1)


def deserialize(sequence: np.ndarray, image_width: int) -> np.ndarray:
    """Inverse of :func:`serialize`."""
    sequence = np.asarray(sequence)
    if sequence.size != image_width * image_width:
        raise DimensionError(
            f"sequence length {sequence.size} != L^2 = {image_width ** 2}"
        )
    return sequence.reshape(image_width, image_width)


def delay_offsets(sigma: int, image_width: int) -> np.ndarray:
    """Per-tap delay amounts D_q = floor(q / sigma) * L + (q mod sigma)."""
    if sigma < 1:
        raise InvalidSpecError(f"sigma must be >= 1, got {sigma}")
    if image_width < sigma:
        raise InvalidSpecError(
            f"image_width {image_width} < sigma {sigma}"
        )
    q = np.arange(sigma * sigma)
    return (q // sigma) * image_width + (q % sigma)


def build_delayed_matrix(images, spec: ConvLayerSpec) -> DelayedMatrix:
    """Assemble X': Q delayed copies of each serialized channel, zero padded."""
    x = _check_image_shape(images, spec)
    n_samples = spec.image_width ** 2
    width = n_samples + spec.d_max
    offsets = delay_offsets(spec.sigma, spec.image_width)

    data = np.zeros((spec.c_in * spec.q, width))
    for u in range(spec.c_in):
        stream = serialize(x[u])
        for q, d_q in enumerate(offsets):
            d = spec.d_max - d_q
            data[u * spec.q + q, d:d + n_samples] = stream

    valid = np.zeros(width, dtype=bool)
    m = np.arange(spec.image_width - spec.sigma + 1)
    cols = (m[:, None] * spec.image_width + m[None, :]).reshape(-1)
    valid[cols + spec.d_max] = True
    return DelayedMatrix(data=data, valid_mask=valid, spec=spec)


def im2col_oracle(images, spec: ConvLayerSpec) -> np.ndarray:
    """Conventional patch-and-flatten matrix X, shape (C_I*Q, (L-sigma+1)^2).

    Column p is the flattened sigma x sigma patch at output position
    p = m * (L-sigma+1) + n, channel blocks stacked vertically.  Built by
    explicit patch extraction so it stays independent of the delay route.
    """
    x = _check_image_shape(images, spec)
    v_w = spec.valid_width
    cols = np.zeros((spec.c_in * spec.q, v_w * v_w))
    for u in range(spec.c_in):
        for m in range(v_w):
            for n in range(v_w):
                patch = x[u, m:m + spec.sigma, n:n + spec.sigma]
                cols[u * spec.q:(u + 1) * spec.q, m * v_w + n] = patch.reshape(-1)
    return cols


def kernels_to_weight_matrix(kernels, spec: ConvLayerSpec) -> np.ndarray:
    """Flatten kernels to W of shape (C_O, C_I*Q), row order matching X'.

    Column u*Q + q of row v holds w[u, v, q // sigma, q % sigma].
    """
    w = _check_kernel_shape(kernels, spec)
    # (C_I, C_O, sigma, sigma) -> (C_O, C_I, Q)
    flat = w.reshape(spec.c_in, spec.c_out, spec.q).transpose(1, 0, 2)
    return flat.reshape(spec.c_out, spec.c_in * spec.q)


def gemm_conv(weight_matrix: np.ndarray, delayed: DelayedMatrix) -> np.ndarray:
    """Y' = W X'.  Valid columns of Y' carry the convolution outputs."""
    w = np.asarray(weight_matrix, dtype=float)
    spec = delayed.spec
    if w.shape != (spec.c_out, spec.c_in * spec.q):
        raise DimensionError(
            f"weight matrix shape {w.shape} != "
            f"({spec.c_out}, {spec.c_in * spec.q})"
        )
    return w @ delayed.data


def valid_output(y_full: np.ndarray, delayed: DelayedMatrix) -> np.ndarray:
    """Extract and reshape the valid columns of Y' to (C_O, V, V)."""
    spec = delayed.spec
    v_w = spec.valid_width
    return y_full[:, delayed.valid_mask].reshape(spec.c_out, v_w, v_w)


def physical_delay(d_q: int, f_m: float, group_velocity: float) -> tuple[float, float]:
    """Convert a clock-cycle delay to (seconds, meters) at modulation rate f_m."""
    if f_m <= 0:
        raise InvalidSpecError(f"modulation rate must be positive, got {f_m}")
    time = d_q / f_m
    return time, time * group_velocity
