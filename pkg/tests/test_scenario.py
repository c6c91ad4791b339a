import numpy as np
import pytest

from rsjrc.scenario import (AngleGrid, SystemConfig, desired_beampattern,
                            generate_rayleigh_channels, load_config,
                            make_angle_grid, steering_vector)


class TestSystemConfig:
    def test_defaults_valid(self):
        SystemConfig().validate()

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            SystemConfig(K=0).validate()

    def test_infeasible_bits_rejected(self):
        with pytest.raises(ValueError, match="infeasible"):
            SystemConfig(bits=12).validate()

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            SystemConfig(mode="noma").validate()


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text(
            "# paper scenario\n"
            "K = 2\n"
            "n_t = 4\n"
            "bits = 6        # DAC resolution\n"
            "lambda = 10.0\n"
            "mode = sdma\n"
            "warm_start_from_sdma = false\n")
        cfg = load_config(path)
        assert cfg.K == 2 and cfg.bits == 6 and cfg.lam == 10.0
        assert cfg.mode == "sdma" and cfg.warm_start_from_sdma is False

    def test_cli_overrides_win(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text("bits = 6\n")
        cfg = load_config(path, {"bits": 8})
        assert cfg.bits == 8

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text("antennas = 4\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config(path)

    def test_infeasible_file_rejected(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text("bits = 12\n")
        with pytest.raises(ValueError, match="infeasible"):
            load_config(path)


class TestChannels:
    def test_deterministic_for_seed(self):
        cfg = SystemConfig(seed=7)
        a = generate_rayleigh_channels(cfg)
        b = generate_rayleigh_channels(cfg)
        assert np.array_equal(a.H, b.H)
        assert a.H.shape == (2, 4)

    def test_different_seeds_differ(self):
        a = generate_rayleigh_channels(SystemConfig(seed=1))
        b = generate_rayleigh_channels(SystemConfig(seed=2))
        assert not np.allclose(a.H, b.H)

    def test_unit_variance_monte_carlo(self):
        # 10^5 entries in one draw; standard error of the mean is ~0.3%
        cfg = SystemConfig(K=500, n_t=200, seed=3)
        ch = generate_rayleigh_channels(cfg)
        assert np.mean(np.abs(ch.H) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            generate_rayleigh_channels(SystemConfig(K=0))


class TestSteeringVector:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(0.0, 4, 0.5), np.ones(4))

    def test_endfire_alternating(self):
        assert np.allclose(steering_vector(90.0, 4, 0.5),
                           [1, -1, 1, -1], atol=1e-12)

    def test_thirty_degrees(self):
        # phase 2*pi*sin(30deg)*0.5 = pi/2 so the second element is j
        assert np.allclose(steering_vector(30.0, 2, 0.5), [1, 1j], atol=1e-12)

    def test_unit_modulus_and_norm(self):
        for theta in np.linspace(-90, 90, 37):
            a = steering_vector(theta, 6, 0.5)
            assert np.max(np.abs(np.abs(a) - 1.0)) < 1e-12
            assert np.vdot(a, a).real == pytest.approx(6.0, abs=1e-10)


class TestDesiredPattern:
    def test_rect_count(self):
        thetas = np.arange(-90.0, 91.0)
        pd = desired_beampattern(thetas, 0.0, 10.0)
        assert pd.sum() == 11
        assert np.all(pd[(np.abs(thetas) <= 5)] == 1.0)

    def test_degenerate_width(self):
        thetas = np.arange(-90.0, 91.0)
        pd = desired_beampattern(thetas, 0.0, 0.0)
        assert pd.sum() == 1 and pd[90] == 1.0

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            desired_beampattern(np.arange(-90.0, 91.0), 100.0, 10.0)


class TestAngleGrid:
    def test_default_grid_size(self):
        grid = make_angle_grid(SystemConfig())
        assert grid.M == 181
        assert grid.steering.shape == (181, 4)
        assert np.all(np.diff(grid.thetas) > 0)

    def test_non_increasing_thetas_rejected(self):
        with pytest.raises(ValueError):
            AngleGrid(thetas=np.array([0.0, 0.0]),
                      steering=np.ones((2, 1), dtype=complex),
                      desired=np.zeros(2))
