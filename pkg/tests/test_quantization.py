import numpy as np
import pytest

from rsjrc.quantization import (QuantizationModel, apply_linear_model,
                                apply_uniform_quantizer, dac_power,
                                default_quantizer_step,
                                precoder_power_budget,
                                quantization_noise_variance, resolution_delta)

RES_COEF = np.pi * np.sqrt(3.0) / 2.0


class TestResolutionDelta:
    def test_b1_value(self):
        # direct evaluation: delta^2 = 1 - 2.7206990 * 0.25 = 0.3198252
        assert resolution_delta(1) == pytest.approx(0.565531, abs=1e-5)
        assert resolution_delta(1) ** 2 == pytest.approx(1.0 - RES_COEF / 4.0,
                                                         abs=1e-15)

    def test_b3_value(self):
        assert resolution_delta(3) == pytest.approx(0.978514, abs=1e-5)

    def test_large_b_limit(self):
        assert abs(resolution_delta(30) - 1.0) < 1e-9

    def test_b0_rejected(self):
        with pytest.raises(ValueError):
            resolution_delta(0)

    def test_strictly_increasing(self):
        deltas = [resolution_delta(b) for b in range(1, 21)]
        assert np.all(np.diff(deltas) > 0)


class TestNoiseVariance:
    def test_b1_value(self):
        d = resolution_delta(1)
        val = quantization_noise_variance(d)
        assert val == pytest.approx(d ** 2 * (1 - d ** 2) ** 2, rel=1e-12)
        assert val == pytest.approx(0.147973, abs=2e-5)

    def test_b3_value(self):
        val = quantization_noise_variance(resolution_delta(3))
        assert val == pytest.approx(0.00173, abs=1e-5)

    def test_perfect_resolution_limit(self):
        assert quantization_noise_variance(1.0 - 1e-12) < 1e-11

    def test_invalid_delta(self):
        for bad in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                quantization_noise_variance(bad)

    def test_aqnm_alternative(self):
        d = resolution_delta(2)
        assert quantization_noise_variance(d, "aqnm") == pytest.approx(
            d ** 2 * (1 - d ** 2), rel=1e-12)

    def test_strictly_decreasing_in_b(self):
        vals = [quantization_noise_variance(resolution_delta(b))
                for b in range(1, 21)]
        assert np.all(np.diff(vals) < 0)


class TestDacPower:
    def test_identity_with_power_of_two(self):
        for b in range(1, 21):
            exact = 2.0 ** b * 1e-4
            assert abs(dac_power(b, 1e-4) - exact) / exact < 1e-12

    def test_b10_example(self):
        assert dac_power(10, 1e-4) == pytest.approx(0.1024, rel=1e-12)

    def test_b4_example(self):
        assert dac_power(4, 1e-4) == pytest.approx(1.6e-3, rel=1e-12)

    def test_zero_coefficient(self):
        assert dac_power(1, 0.0) == 0.0


class TestPrecoderPowerBudget:
    def test_paper_point_b10(self):
        total, per_ant = precoder_power_budget(1.0, 4, 10, 1e-4)
        assert total == pytest.approx(0.5904, abs=1e-12)
        assert per_ant == pytest.approx(0.1476, abs=1e-12)

    def test_b12_infeasible(self):
        with pytest.raises(ValueError, match="infeasible bit count"):
            precoder_power_budget(1.0, 4, 12, 1e-4)

    def test_free_dacs(self):
        total, per_ant = precoder_power_budget(1.0, 4, 1, 0.0)
        assert total == pytest.approx(1.0)
        assert per_ant == pytest.approx(0.25)


class TestLinearModel:
    def test_identity_quantizer(self):
        model = QuantizationModel(b=0, delta=1.0, noise_var=0.0, dac_power=0.0)
        x = np.array([1 + 2j, -0.5j, 3.0])
        out = apply_linear_model(x, model, np.random.default_rng(0))
        assert np.allclose(out, x)

    def test_noise_variance_monte_carlo(self):
        model = QuantizationModel.from_bits(2, 1e-4)
        x = np.zeros(10 ** 5, dtype=complex)
        out = apply_linear_model(x, model, np.random.default_rng(3))
        emp = np.mean(np.abs(out) ** 2)
        assert emp == pytest.approx(model.noise_var, rel=0.05)

    def test_reproducible(self):
        model = QuantizationModel.from_bits(3, 1e-4)
        x = np.ones(16, dtype=complex)
        a = apply_linear_model(x, model, np.random.default_rng(11))
        b = apply_linear_model(x, model, np.random.default_rng(11))
        assert np.array_equal(a, b)


class TestUniformQuantizer:
    def test_fine_quantization_limit(self):
        rng = np.random.default_rng(5)
        x = (rng.standard_normal(20000) + 1j * rng.standard_normal(20000)) \
            / np.sqrt(2)
        q = apply_uniform_quantizer(x, 14, default_quantizer_step(14))
        assert np.mean(np.abs(q - x) ** 2) < 1e-3

    def test_on_grid_input_unchanged(self):
        step = 0.25
        levels = (np.arange(-4, 4) + 0.5) * step
        x = levels + 1j * levels[::-1]
        assert np.allclose(apply_uniform_quantizer(x, 3, step), x)

    def test_one_bit_structure(self):
        rng = np.random.default_rng(6)
        step = default_quantizer_step(1)
        q = apply_uniform_quantizer(rng.standard_normal(1000) * 0.7, 1, step)
        assert set(np.unique(q)) == {-step / 2, step / 2}

    def test_clipping_range(self):
        q = apply_uniform_quantizer(np.array([1e9, -1e9]), 3, 0.1)
        assert q[0] == pytest.approx((2 ** 2 - 0.5) * 0.1)
        assert q[1] == pytest.approx(-(2 ** 2 - 0.5) * 0.1)

    def test_invalid_bits(self):
        with pytest.raises(ValueError):
            apply_uniform_quantizer(np.zeros(4), 0, 0.1)


class TestBussgangProperty:
    @pytest.mark.parametrize("b", [1, 3, 6])
    def test_least_squares_residual_uncorrelated(self, b):
        rng = np.random.default_rng(100 + b)
        n = 10 ** 6
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        q = apply_uniform_quantizer(x, b, default_quantizer_step(b))
        xx = np.real(np.vdot(x, x))
        gain = np.vdot(x, q) / xx
        resid = q - gain * x
        corr = abs(np.vdot(x, resid)) / np.sqrt(
            xx * np.real(np.vdot(resid, resid)))
        assert corr < 0.01
