"""Randomized delay-GeMM equivalence suite.

Draws random layer shapes and data, runs both convolution routes, and
compares them.  A deliberate-corruption mode shifts one delay tap so the
suite's failure reporting can itself be tested.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .conv_math import (
    ConvLayerSpec,
    build_delayed_matrix,
    conv2d_reference,
    gemm_conv,
    im2col_oracle,
    kernels_to_weight_matrix,
    valid_output,
)

REL_TOL = 1e-12


@dataclass(frozen=True)
class EquivalenceResult:
    passed: bool
    instances: int
    first_failure: dict | None
    digest: str


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1.0)
    return float(np.max(np.abs(a - b))) / scale


def run_equivalence_suite(
    instances: int = 200,
    seed: int = 0,
    max_channels: int = 8,
    sigmas=(1, 2, 3, 5),
    max_width: int = 16,
    corrupt_delay_offsets: bool = False,
) -> EquivalenceResult:
    rng = np.random.default_rng(seed)
    digest = hashlib.sha256()
    first_failure = None
    for instance in range(instances):
        sigma = int(rng.choice(sigmas))
        spec = ConvLayerSpec(
            c_in=int(rng.integers(1, max_channels + 1)),
            c_out=int(rng.integers(1, max_channels + 1)),
            sigma=sigma,
            image_width=int(rng.integers(sigma, max_width + 1)),
        )
        images = rng.random((spec.c_in, spec.image_width, spec.image_width))
        kernels = rng.standard_normal(
            (spec.c_in, spec.c_out, spec.sigma, spec.sigma))

        delayed = build_delayed_matrix(images, spec)
        if corrupt_delay_offsets and spec.q > 1:
            # shift the last tap's stream one clock late
            bad = delayed.data.copy()
            bad[spec.q - 1::spec.q] = np.roll(bad[spec.q - 1::spec.q], 1,
                                              axis=1)
            delayed = type(delayed)(data=bad, valid_mask=delayed.valid_mask,
                                    spec=spec)

        x_cols = im2col_oracle(images, spec)
        x_valid = delayed.data[:, delayed.valid_mask]
        reference = conv2d_reference(images, kernels, spec)
        y_full = gemm_conv(kernels_to_weight_matrix(kernels, spec), delayed)
        y_valid = valid_output(y_full, delayed)

        digest.update(y_valid.tobytes())
        matrix_ok = np.array_equal(x_cols, x_valid)
        err = _relative_error(y_valid, reference)
        if (not matrix_ok or err > REL_TOL) and first_failure is None:
            if not matrix_ok:
                mism = np.argwhere(x_cols != x_valid)
                row, col = int(mism[0][0]), int(mism[0][1])
            else:
                flat = np.argmax(np.abs(y_valid - reference))
                v, m, n = np.unravel_index(flat, y_valid.shape)
                row, col = int(v), int(m * reference.shape[2] + n)
            first_failure = {
                "instance": instance,
                "spec": {
                    "c_in": spec.c_in, "c_out": spec.c_out,
                    "sigma": spec.sigma, "image_width": spec.image_width,
                },
                "row": row,
                "column": col,
                "relative_error": err,
            }
    return EquivalenceResult(
        passed=first_failure is None,
        instances=instances,
        first_failure=first_failure,
        digest=digest.hexdigest(),
    )
