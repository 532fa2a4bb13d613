"""Hybrid inference: conv layers on the analog simulator, the rest digital.

Each convolutional layer of the trained network is mapped to its own
analog hardware instance (own path gains, own probes); the zero padding
the digital layer uses is applied to the input image before intensity
encoding, so the optical layer itself stays stride-1/pad-free.  Noise and
per-trial imbalance draws are derived from a single base seed, making any
report exactly reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analog import (
    AnalogFaultModel,
    WeightProgramming,
    apply_calibration,
    calibrate,
    forward_batch,
    program_weights,
    sample_imbalance,
)
from .conv_math import ConvLayerSpec
from .layers import Conv2D
from .network import NetworkModel


@dataclass(frozen=True)
class InferenceReport:
    accuracy: float
    confusion: np.ndarray          # (10, 10): rows true class, cols predicted
    n_samples: int
    seed: int
    fault_config: dict


@dataclass(frozen=True)
class PhotonicLayerSetup:
    spec: ConvLayerSpec
    programming: WeightProgramming
    faults: AnalogFaultModel
    bias: np.ndarray
    pad: int


def _conv_spec(layer: Conv2D, input_width: int) -> ConvLayerSpec:
    return ConvLayerSpec(
        c_in=layer.c_in,
        c_out=layer.c_out,
        sigma=layer.kernel,
        image_width=input_width + 2 * layer.pad,
    )


def _conv_input_widths(model: NetworkModel, image_width: int = 28) -> list[int]:
    """Input width seen by each conv layer (pooling halves in between)."""
    widths, w = [], image_width
    for layer in model.layers:
        if isinstance(layer, Conv2D):
            widths.append(w)
        elif type(layer).__name__ == "MaxPool2":
            w //= 2
    return widths


def build_photonic_setups(
    model: NetworkModel,
    neop_dbc: float = -np.inf,
    imbalance_db: float = 0.0,
    calibration: bool = False,
    seed: int = 0,
    probe_repeats: int = 1,
    image_width: int = 28,
) -> list[PhotonicLayerSetup]:
    """Program each conv layer onto faulted analog hardware."""
    widths = _conv_input_widths(model, image_width)
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(2 * len(widths))
    setups = []
    for idx, (layer, width) in enumerate(zip(model.conv_layers, widths)):
        spec = _conv_spec(layer, width)
        gains = (
            sample_imbalance(spec, imbalance_db, children[2 * idx])
            if imbalance_db > 0 else None
        )
        faults = AnalogFaultModel(
            neop_dbc=neop_dbc, path_gains=gains, seed=seed
        )
        # kernel tensor wants [u][v][i][j]; digital conv stores [v][u][i][j]
        programming = program_weights(layer.w.transpose(1, 0, 2, 3), spec)
        if calibration:
            probe_rng = np.random.default_rng(children[2 * idx + 1])
            table = calibrate(spec, faults, repeats=probe_repeats,
                              rng=probe_rng)
            programming = apply_calibration(programming, table)
        setups.append(PhotonicLayerSetup(
            spec=spec, programming=programming, faults=faults,
            bias=layer.b, pad=layer.pad,
        ))
    return setups


def hybrid_forward(
    model: NetworkModel,
    images: np.ndarray,
    setups: list[PhotonicLayerSetup],
    noise_rng: np.random.Generator,
    batch_size: int = 128,
) -> np.ndarray:
    """Logits of the hybrid network over a batch of (N, 28, 28) images."""
    logits = []
    for start in range(0, len(images), batch_size):
        x = images[start:start + batch_size][:, None, :, :]
        conv_idx = 0
        for layer in model.layers:
            if isinstance(layer, Conv2D):
                setup = setups[conv_idx]
                p = setup.pad
                xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
                x = forward_batch(
                    xp, setup.programming, setup.spec, setup.faults,
                    rng=noise_rng,
                )
                x = x + setup.bias[None, :, None, None]
                conv_idx += 1
            else:
                x = layer.forward(x)
        logits.append(x)
    return np.concatenate(logits)


def _confusion(labels: np.ndarray, preds: np.ndarray) -> np.ndarray:
    conf = np.zeros((10, 10), dtype=np.int64)
    np.add.at(conf, (labels, preds), 1)
    return conf


def infer_hybrid(
    model: NetworkModel,
    images: np.ndarray,
    labels: np.ndarray,
    neop_dbc: float = -np.inf,
    imbalance_db: float = 0.0,
    calibration: bool = False,
    seed: int = 0,
    probe_repeats: int = 1,
    batch_size: int = 128,
) -> InferenceReport:
    """Run the hybrid network over a sample set and report accuracy."""
    setups = build_photonic_setups(
        model, neop_dbc=neop_dbc, imbalance_db=imbalance_db,
        calibration=calibration, seed=seed, probe_repeats=probe_repeats,
    )
    noise_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA0]))
    logits = hybrid_forward(model, images, setups, noise_rng,
                            batch_size=batch_size)
    preds = logits.argmax(axis=1)
    return InferenceReport(
        accuracy=float(np.mean(preds == labels)),
        confusion=_confusion(labels, preds),
        n_samples=len(labels),
        seed=seed,
        fault_config={
            "neop_dbc": neop_dbc,
            "imbalance_db": imbalance_db,
            "calibration": calibration,
            "probe_repeats": probe_repeats,
        },
    )


def sweep_noise(
    model: NetworkModel,
    images: np.ndarray,
    labels: np.ndarray,
    levels_dbc: list[float],
    seeds: list[int],
    batch_size: int = 128,
    threads: int = 1,
) -> list[dict]:
    """Accuracy per (noise level, seed); one InferenceReport each."""
    jobs = [(level, seed) for level in levels_dbc for seed in seeds]

    def run(job):
        level, seed = job
        report = infer_hybrid(model, images, labels, neop_dbc=level,
                              seed=seed, batch_size=batch_size)
        return {"neop_dbc": level, "seed": seed, "accuracy": report.accuracy}

    return _run_jobs(jobs, run, threads)


def sweep_imbalance(
    model: NetworkModel,
    images: np.ndarray,
    labels: np.ndarray,
    levels_db: list[float],
    trials: int = 100,
    calibration: bool = False,
    neop_dbc: float = -np.inf,
    base_seed: int = 0,
    probe_repeats: int = 1,
    batch_size: int = 128,
    threads: int = 1,
) -> list[dict]:
    """Box-plot statistics of accuracy over fresh imbalance draws per level."""
    jobs = [(li, t) for li in range(len(levels_db)) for t in range(trials)]

    def run(job):
        li, trial = job
        trial_seed = int(np.random.SeedSequence(
            [base_seed, li, trial]).generate_state(1)[0])
        report = infer_hybrid(
            model, images, labels, neop_dbc=neop_dbc,
            imbalance_db=levels_db[li], calibration=calibration,
            seed=trial_seed, probe_repeats=probe_repeats,
            batch_size=batch_size,
        )
        return li, report.accuracy

    results = _run_jobs(jobs, run, threads)
    out = []
    for li, level in enumerate(levels_db):
        acc = np.array(sorted(a for i, a in results if i == li))
        q1, med, q3 = np.percentile(acc, [25, 50, 75])
        out.append({
            "imbalance_db": level,
            "trials": trials,
            "min": float(acc.min()),
            "q1": float(q1),
            "median": float(med),
            "q3": float(q3),
            "max": float(acc.max()),
            "accuracies": acc.tolist(),
        })
    return out


def _run_jobs(jobs, fn, threads: int):
    if threads <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))
