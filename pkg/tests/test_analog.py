import numpy as np
import pytest

from ipcnn.analog import (
    IDEAL,
    AnalogFaultModel,
    apply_calibration,
    calibrate,
    forward_batch,
    measure_imbalance,
    photonic_conv_forward,
    probe_path_responses,
    program_weights,
    sample_imbalance,
)
from ipcnn.conv_math import ConvLayerSpec, conv2d_reference
from ipcnn.errors import DimensionError, EncodingError, InvalidSpecError


SPEC = ConvLayerSpec(c_in=2, c_out=3, sigma=3, image_width=8)


def random_instance(seed, spec=SPEC):
    rng = np.random.default_rng(seed)
    x = rng.random((spec.c_in, spec.image_width, spec.image_width))
    w = rng.standard_normal((spec.c_in, spec.c_out, spec.sigma, spec.sigma))
    return x, w


class TestProgramming:
    def test_round_trip(self):
        _, w = random_instance(0)
        prog = program_weights(w, SPEC)
        np.testing.assert_allclose(prog.as_kernels(SPEC), w,
                                   rtol=1e-14, atol=1e-14)

    def test_settings_bounded(self):
        _, w = random_instance(1)
        prog = program_weights(w * 1e6, SPEC)
        assert np.max(np.abs(prog.settings)) == 1.0
        assert prog.rescale == pytest.approx(1e6 * np.max(np.abs(w)))

    def test_all_zero_kernels(self):
        prog = program_weights(np.zeros((2, 3, 3, 3)), SPEC)
        assert prog.rescale == 1.0
        assert np.all(prog.settings == 0)

    def test_non_finite_rejected(self):
        w = np.zeros((2, 3, 3, 3))
        w[0, 0, 0, 0] = np.inf
        with pytest.raises(InvalidSpecError):
            program_weights(w, SPEC)


class TestIdealForward:
    def test_matches_reference(self):
        x, w = random_instance(2)
        out, _ = photonic_conv_forward(x, program_weights(w, SPEC), SPEC)
        ref = conv2d_reference(x, w, SPEC)
        scale = max(np.max(np.abs(ref)), 1.0)
        assert np.max(np.abs(out - ref)) / scale < 1e-12

    def test_batched_matches_per_image(self):
        rng = np.random.default_rng(3)
        xs = rng.random((4, SPEC.c_in, 8, 8))
        _, w = random_instance(4)
        prog = program_weights(w, SPEC)
        batch = forward_batch(xs, prog, SPEC)
        for i in range(4):
            single, _ = photonic_conv_forward(xs[i], prog, SPEC)
            np.testing.assert_allclose(batch[i], single, rtol=1e-12,
                                       atol=1e-14)

    def test_negative_input_rejected(self):
        _, w = random_instance(5)
        x = -np.ones((1, SPEC.c_in, 8, 8))
        with pytest.raises(EncodingError):
            forward_batch(x, program_weights(w, SPEC), SPEC)

    def test_shape_rejected(self):
        _, w = random_instance(6)
        with pytest.raises(DimensionError):
            forward_batch(np.ones((1, SPEC.c_in, 7, 8)),
                          program_weights(w, SPEC), SPEC)

    def test_branch_shape(self):
        x, w = random_instance(7)
        _, branches = photonic_conv_forward(x, program_weights(w, SPEC), SPEC)
        assert branches.shape == (SPEC.c_out, SPEC.q,
                                  SPEC.image_width ** 2 + SPEC.d_max)


class TestNoise:
    def test_sigma_from_dbc(self):
        faults = AnalogFaultModel(neop_dbc=-10.0)
        assert faults.noise_sigma(SPEC) == pytest.approx(0.1, rel=1e-12)
        assert AnalogFaultModel().noise_sigma(SPEC) == 0.0

    def test_branch_noise_rms(self):
        # noise-only RMS of the branch traces at -10 dBc over >1e4 samples
        prog = program_weights(np.zeros((2, 3, 3, 3)), SPEC)
        faults = AnalogFaultModel(neop_dbc=-10.0, seed=11)
        x = np.zeros((20, SPEC.c_in, 8, 8))
        _, branches = forward_batch(x, prog, SPEC, faults,
                                    return_branches=True)
        assert branches.size > 1e4
        assert np.std(branches) == pytest.approx(0.1, rel=0.05)
        assert abs(np.mean(branches)) < 0.01

    def test_deterministic_given_seed(self):
        x, w = random_instance(8)
        prog = program_weights(w, SPEC)
        faults = AnalogFaultModel(neop_dbc=-15.0, seed=42)
        a, _ = photonic_conv_forward(x, prog, SPEC, faults)
        b, _ = photonic_conv_forward(x, prog, SPEC, faults)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        x, w = random_instance(9)
        prog = program_weights(w, SPEC)
        a, _ = photonic_conv_forward(
            x, prog, SPEC, AnalogFaultModel(neop_dbc=-15.0, seed=1))
        b, _ = photonic_conv_forward(
            x, prog, SPEC, AnalogFaultModel(neop_dbc=-15.0, seed=2))
        assert not np.array_equal(a, b)

    def test_output_noise_scales_with_rescale(self):
        # the digital rescale multiplies branch noise into the output
        x = np.zeros((1, SPEC.c_in, 8, 8))
        rng = np.random.default_rng(0)
        w = rng.standard_normal((2, 3, 3, 3))
        small = program_weights(w, SPEC)
        big = program_weights(10 * w, SPEC)
        faults = AnalogFaultModel(neop_dbc=-10.0, seed=5)
        out_small = forward_batch(x, small, SPEC, faults)
        out_big = forward_batch(x, big, SPEC, faults)
        np.testing.assert_allclose(out_big, 10 * out_small, rtol=1e-12)


class TestImbalance:
    def test_exact_level(self):
        gains = sample_imbalance(SPEC, 6.0, seed=3)
        ratio_db = 10 * np.log10(gains.max() / gains.min())
        assert ratio_db == pytest.approx(6.0, abs=1e-12)

    def test_zero_level_is_unity(self):
        np.testing.assert_array_equal(sample_imbalance(SPEC, 0.0, seed=0),
                                      np.ones((2, 9, 3)))

    def test_measure_loop(self):
        gains = sample_imbalance(SPEC, 10.0, seed=4)
        faults = AnalogFaultModel(path_gains=gains)
        assert measure_imbalance(SPEC, faults) == pytest.approx(10.0,
                                                                abs=1e-9)

    def test_negative_level_rejected(self):
        with pytest.raises(InvalidSpecError):
            sample_imbalance(SPEC, -1.0, seed=0)

    def test_single_path_rejected(self):
        spec = ConvLayerSpec(1, 1, 1, 4)
        with pytest.raises(InvalidSpecError):
            sample_imbalance(spec, 3.0, seed=0)

    def test_gain_shape_checked(self):
        faults = AnalogFaultModel(path_gains=np.ones((1, 9, 3)))
        with pytest.raises(DimensionError):
            faults.gains(SPEC)


class TestCalibration:
    def test_noiseless_probe_returns_gains(self):
        gains = sample_imbalance(SPEC, 8.0, seed=6)
        faults = AnalogFaultModel(path_gains=gains)
        np.testing.assert_array_equal(probe_path_responses(SPEC, faults),
                                      gains)

    def test_noiseless_calibration_exact(self):
        x, w = random_instance(10)
        gains = sample_imbalance(SPEC, 10.0, seed=7)
        faults = AnalogFaultModel(path_gains=gains)
        prog = program_weights(w, SPEC)
        table = calibrate(SPEC, faults)
        assert table.residual < 1e-12
        fixed = apply_calibration(prog, table)
        out, _ = photonic_conv_forward(x, fixed, SPEC, faults)
        ref = conv2d_reference(x, w, SPEC)
        scale = max(np.max(np.abs(ref)), 1.0)
        assert np.max(np.abs(out - ref)) / scale < 1e-9

    def test_calibration_keeps_settings_bounded(self):
        _, w = random_instance(11)
        gains = sample_imbalance(SPEC, 10.0, seed=8)
        table = calibrate(SPEC, AnalogFaultModel(path_gains=gains))
        fixed = apply_calibration(program_weights(w, SPEC), table)
        assert np.max(np.abs(fixed.settings)) <= 1.0 + 1e-12
        assert fixed.rescale >= program_weights(w, SPEC).rescale

    def test_probe_averaging(self):
        # probe error shrinks like 1/sqrt(N averages)
        faults = AnalogFaultModel(neop_dbc=-10.0, seed=9)
        rms = {}
        for repeats in (1, 16, 256):
            rng = np.random.default_rng(1234)
            errs = []
            for _ in range(40):
                measured = probe_path_responses(SPEC, faults, rng=rng,
                                                repeats=repeats)
                errs.append(measured - 1.0)
            rms[repeats] = float(np.sqrt(np.mean(np.square(errs))))
        assert rms[16] == pytest.approx(rms[1] / 4, rel=0.25)
        assert rms[256] == pytest.approx(rms[1] / 16, rel=0.25)

    def test_noisy_calibration_accuracy(self):
        # 64 repeats over V^2 = 36 valid samples: gain error well under 1%
        gains = sample_imbalance(SPEC, 6.0, seed=12)
        faults = AnalogFaultModel(neop_dbc=-10.0, path_gains=gains, seed=13)
        table = calibrate(SPEC, faults, repeats=64,
                          rng=np.random.default_rng(77))
        rel = np.abs(table.estimated_gains / gains - 1.0)
        assert np.max(rel) < 0.01

    def test_probe_unbiased(self):
        # bias of the probe estimator stays well under the per-probe RMS
        faults = AnalogFaultModel(neop_dbc=-10.0)
        rng = np.random.default_rng(99)
        samples = [probe_path_responses(SPEC, faults, rng=rng)
                   for _ in range(300)]
        err = np.mean(samples) - 1.0
        per_probe_rms = 0.1 / np.sqrt(SPEC.valid_width ** 2)
        # mean of 300 probes: CLT bound is ~12 sigma, far below per-probe RMS
        assert abs(err) < 0.1 * per_probe_rms

    def test_invalid_repeats(self):
        with pytest.raises(InvalidSpecError):
            probe_path_responses(SPEC, IDEAL, repeats=0)
