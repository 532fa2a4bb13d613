"""Analog forward model of one photonic convolutional layer.

The layer is modeled at intensity level: serialized input channels ride on
separate wavelengths, the delay bank presents Q shifted copies, micro-ring
weights scale each (input-channel, tap) pair per output channel, balanced
detection sums wavelengths into per-tap branch voltages, and a voltage
adder sums the Q branches.  Two fault mechanisms are injectable: additive
Gaussian detection noise (a single lumped NEOP level in dBc relative to
the all-ones full-scale branch value) and one multiplicative gain per
(u, q, v) signal path.  A digital calibration estimates the path gains
from one-hot probes and pre-compensates the programmed weights.

Simulator state is immutable; forward passes are pure given (input, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .conv_math import ConvLayerSpec, delay_offsets, kernels_to_weight_matrix
from .errors import (
    DegenerateHardwareError,
    DimensionError,
    EncodingError,
    InfeasibleDesignError,
    InvalidSpecError,
)

# Guards division by zero for the all-zero kernel tensor; far below any
# representable real kernel magnitude.
_ZERO_KERNEL_EPS = 1e-30


@dataclass(frozen=True)
class WeightProgramming:
    """MRR settings in [-1, 1] per (u, q, v) path plus the digital rescale."""

    settings: np.ndarray  # shape (C_I, Q, C_O)
    rescale: float

    def as_kernels(self, spec: ConvLayerSpec) -> np.ndarray:
        """De-program back to a kernel tensor [u][v][i][j]."""
        w_bar = self.settings * self.rescale  # (C_I, Q, C_O)
        return w_bar.transpose(0, 2, 1).reshape(
            spec.c_in, spec.c_out, spec.sigma, spec.sigma
        )


@dataclass(frozen=True)
class AnalogFaultModel:
    """Lumped noise level, per-path gains, and the RNG seed discipline."""

    neop_dbc: float = -np.inf
    path_gains: np.ndarray | None = None  # (C_I, Q, C_O); None = all unity
    seed: int = 0

    @property
    def noiseless(self) -> bool:
        return np.isneginf(self.neop_dbc)

    def gains(self, spec: ConvLayerSpec) -> np.ndarray:
        shape = (spec.c_in, spec.q, spec.c_out)
        if self.path_gains is None:
            return np.ones(shape)
        g = np.asarray(self.path_gains, dtype=float)
        if g.shape != shape:
            raise DimensionError(f"path_gains shape {g.shape} != {shape}")
        return g

    def noise_sigma(self, spec: ConvLayerSpec) -> float:
        """Std of additive branch noise as a power ratio of full scale.

        Full scale is the single-wavelength signal intensity, normalized
        to 1 (unit image value through a unit weight).
        """
        if self.noiseless:
            return 0.0
        return 10 ** (self.neop_dbc / 10)


IDEAL = AnalogFaultModel()


@dataclass(frozen=True)
class CalibrationTable:
    estimated_gains: np.ndarray  # (C_I, Q, C_O)
    probe_count: int
    residual: float  # max relative deviation of a calibrated all-ones probe


def program_weights(kernels, spec: ConvLayerSpec) -> WeightProgramming:
    """Normalize kernels into MRR settings: settings = w / max|w|."""
    w = kernels_to_weight_matrix(kernels, spec)  # (C_O, C_I*Q)
    if not np.all(np.isfinite(w)):
        raise InvalidSpecError("kernel values must be finite")
    r = max(float(np.max(np.abs(w))), _ZERO_KERNEL_EPS)
    if r <= _ZERO_KERNEL_EPS:
        return WeightProgramming(
            settings=np.zeros((spec.c_in, spec.q, spec.c_out)), rescale=1.0
        )
    settings = (w / r).reshape(spec.c_out, spec.c_in, spec.q).transpose(1, 2, 0)
    return WeightProgramming(settings=settings, rescale=r)


def _delayed_batch(images: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    """Batched delayed tensor, shape (B, C_I, Q, L^2 + D_max)."""
    b = images.shape[0]
    n = spec.image_width ** 2
    width = n + spec.d_max
    streams = images.reshape(b, spec.c_in, n)
    out = np.zeros((b, spec.c_in, spec.q, width))
    for q, d_q in enumerate(delay_offsets(spec.sigma, spec.image_width)):
        d = spec.d_max - d_q
        out[:, :, q, d:d + n] = streams
    return out


def _valid_mask(spec: ConvLayerSpec) -> np.ndarray:
    width = spec.image_width ** 2 + spec.d_max
    valid = np.zeros(width, dtype=bool)
    m = np.arange(spec.valid_width)
    cols = (m[:, None] * spec.image_width + m[None, :]).reshape(-1)
    valid[cols + spec.d_max] = True
    return valid


def forward_batch(
    images: np.ndarray,
    programming: WeightProgramming,
    spec: ConvLayerSpec,
    faults: AnalogFaultModel = IDEAL,
    rng: np.random.Generator | None = None,
    return_branches: bool = False,
):
    """Analog forward pass over a batch of images.

    Returns outputs of shape (B, C_O, V, V); optionally also the detected
    per-branch traces (B, C_O, Q, T).  ``rng`` defaults to a generator
    seeded from ``faults.seed``.
    """
    images = np.asarray(images, dtype=float)
    if images.ndim != 4 or images.shape[1:] != (
        spec.c_in, spec.image_width, spec.image_width
    ):
        raise DimensionError(
            f"batch shape {images.shape} != "
            f"(B, {spec.c_in}, {spec.image_width}, {spec.image_width})"
        )
    if np.min(images, initial=0.0) < 0:
        raise EncodingError(
            "negative image values cannot be intensity-encoded"
        )
    if rng is None:
        rng = np.random.default_rng(faults.seed)

    delayed = _delayed_batch(images, spec)              # (B, C_I, Q, T)
    eff = faults.gains(spec) * programming.settings     # (C_I, Q, C_O)
    branches = np.einsum("uqv,buqt->bvqt", eff, delayed)
    sigma_n = faults.noise_sigma(spec)
    if sigma_n > 0:
        branches = branches + rng.normal(0.0, sigma_n, size=branches.shape)

    summed = programming.rescale * branches.sum(axis=2)  # (B, C_O, T)
    v_w = spec.valid_width
    outputs = summed[:, :, _valid_mask(spec)].reshape(-1, spec.c_out, v_w, v_w)
    if return_branches:
        return outputs, branches
    return outputs


def photonic_conv_forward(
    images,
    programming: WeightProgramming,
    spec: ConvLayerSpec,
    faults: AnalogFaultModel = IDEAL,
):
    """Single-image forward pass; returns (output (C_O,V,V), branch traces)."""
    out, branches = forward_batch(
        np.asarray(images, dtype=float)[None], programming, spec, faults,
        return_branches=True,
    )
    return out[0], branches[0]


def sample_imbalance(
    spec: ConvLayerSpec, level_db: float, seed: int
) -> np.ndarray:
    """Draw per-path gains whose max/min ratio is exactly ``level_db``.

    Gains are drawn log-uniform, then affinely stretched in the log domain
    to hit the requested spread exactly, centered on 0 dB.
    """
    if level_db < 0:
        raise InvalidSpecError(f"imbalance level must be >= 0 dB, got {level_db}")
    shape = (spec.c_in, spec.q, spec.c_out)
    if level_db == 0:
        return np.ones(shape)
    n_paths = spec.c_in * spec.q * spec.c_out
    if n_paths < 2:
        raise InvalidSpecError(
            "a nonzero imbalance level needs at least two signal paths"
        )
    rng = np.random.default_rng(seed)
    raw_db = rng.uniform(-level_db / 2, level_db / 2, size=shape)
    lo, hi = raw_db.min(), raw_db.max()
    stretched = (raw_db - lo) / (hi - lo) * level_db - level_db / 2
    return 10 ** (stretched / 10)


def probe_path_responses(
    spec: ConvLayerSpec,
    faults: AnalogFaultModel,
    rng: np.random.Generator | None = None,
    repeats: int = 1,
) -> np.ndarray:
    """Measured one-hot probe response per path.

    Probing sets a single MRR to 1 and drives an all-ones image, so the
    noiseless branch response at every valid time step is exactly the path
    gain.  With noise, each probe is the mean over ``repeats`` runs times
    the V^2 valid samples of one run; the mean of that many independent
    Gaussian draws is sampled directly.
    """
    if repeats < 1:
        raise InvalidSpecError(f"repeats must be >= 1, got {repeats}")
    gains = faults.gains(spec)
    sigma_n = faults.noise_sigma(spec)
    if sigma_n == 0:
        return gains.copy()
    if rng is None:
        rng = np.random.default_rng(faults.seed)
    n_avg = repeats * spec.valid_width ** 2
    return gains + rng.normal(0.0, sigma_n / np.sqrt(n_avg), size=gains.shape)


def measure_imbalance(spec: ConvLayerSpec, faults: AnalogFaultModel) -> float:
    """Realized imbalance level: 10 log10(max/min) over noiseless probes."""
    responses = probe_path_responses(spec, replace(faults, neop_dbc=-np.inf))
    if np.min(responses) <= 0:
        raise DegenerateHardwareError(
            "non-positive probe response; cannot define an imbalance level"
        )
    return float(10 * np.log10(responses.max() / responses.min()))


def calibrate(
    spec: ConvLayerSpec,
    faults: AnalogFaultModel,
    repeats: int = 1,
    rng: np.random.Generator | None = None,
) -> CalibrationTable:
    """Estimate per-path gains from one-hot probes (ideal response is 1)."""
    measured = probe_path_responses(spec, faults, rng=rng, repeats=repeats)
    if np.min(measured) <= 0:
        raise DegenerateHardwareError("zero or negative probe response")
    true_gains = faults.gains(spec)
    residual = float(np.max(np.abs(true_gains / measured - 1.0)))
    return CalibrationTable(
        estimated_gains=measured,
        probe_count=measured.size * repeats,
        residual=residual,
    )


def apply_calibration(
    programming: WeightProgramming, table: CalibrationTable
) -> WeightProgramming:
    """Pre-compensate settings by the estimated gains, keeping |s| <= 1.

    The renormalization enlarges the digital rescale factor, which also
    amplifies detected noise proportionally.
    """
    if np.min(table.estimated_gains) <= 0:
        raise InfeasibleDesignError(
            "cannot compensate a non-positive gain estimate"
        )
    compensated = programming.settings / table.estimated_gains
    peak = float(np.max(np.abs(compensated)))
    if peak > 1.0:
        return WeightProgramming(
            settings=compensated / peak, rescale=programming.rescale * peak
        )
    return WeightProgramming(settings=compensated, rescale=programming.rescale)
