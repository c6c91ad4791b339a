import numpy as np
import pytest

from rsjrc.radar import (ALPHA_FLOOR, achieved_pattern, beampattern_error,
                         nmse, optimal_alpha, transmit_covariance)
from rsjrc.scenario import AngleGrid, SystemConfig, make_angle_grid

GRID = make_angle_grid(SystemConfig())


def random_precoders(seed, n_t=4, ns=3, scale=0.3):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((n_t, ns))
            + 1j * rng.standard_normal((n_t, ns))) * scale


class TestTransmitCovariance:
    def test_noise_only(self):
        R = transmit_covariance(np.zeros((3, 2)), 0.9, 0.05)
        assert np.allclose(R, 0.05 * np.eye(3))

    def test_rank_one(self):
        P = np.array([[1.0], [0.0]], dtype=complex)
        R = transmit_covariance(P, 1.0, 0.0)
        assert np.allclose(R, [[1, 0], [0, 0]])

    def test_hermitian_psd_and_trace(self):
        P = random_precoders(0)
        delta, sig = 0.95, 1e-3
        R = transmit_covariance(P, delta, sig)
        assert np.max(np.abs(R - R.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(R).min() >= -1e-10
        expected_tr = delta ** 2 * np.sum(np.abs(P) ** 2) + 4 * sig
        assert np.trace(R).real == pytest.approx(expected_tr, rel=1e-12)


class TestAchievedPattern:
    def test_two_evaluation_paths_agree(self):
        P = random_precoders(1)
        delta, sig = 0.9, 2e-3
        R = transmit_covariance(P, delta, sig)
        via_R = np.array([np.real(a.conj() @ R @ a) for a in GRID.steering])
        direct = achieved_pattern(P, delta, sig, GRID)
        assert np.max(np.abs(via_R - direct)) < 1e-10

    def test_noise_offset_angle_independent(self):
        P = random_precoders(2)
        with_noise = achieved_pattern(P, 0.9, 1e-3, GRID)
        without = achieved_pattern(P, 0.9, 0.0, GRID)
        assert np.allclose(with_noise - without, 1e-3 * 4, atol=1e-12)


class TestBeampatternError:
    def test_perfect_match_zero(self):
        # scale the desired pattern to exactly the achieved one
        P = random_precoders(3)
        achieved = achieved_pattern(P, 0.9, 1e-3, GRID)
        grid = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                         desired=achieved / 2.0)
        assert beampattern_error(2.0, P, 0.9, 1e-3, grid) < 1e-18

    def test_zero_precoder_rect_value(self):
        # 11 grid points in the beam, each contributing 1^2
        val = beampattern_error(1.0, np.zeros((4, 3)), 1.0, 0.0, GRID)
        assert val == pytest.approx(11.0, abs=1e-12)

    def test_convex_in_lifted_covariance(self):
        # evaluate the error as a function of the Gram matrix directly
        delta, sig, alpha = 0.93, 1e-3, 2.0
        steer = GRID.steering

        def error_of_gram(G):
            achieved = delta ** 2 * np.real(
                np.einsum("mi,ij,mj->m", steer.conj(), G, steer)) + sig * 4
            return np.sum((alpha * GRID.desired - achieved) ** 2)

        rng = np.random.default_rng(9)
        for _ in range(10):
            P1, P2 = random_precoders(rng.integers(1e6)), \
                random_precoders(rng.integers(1e6))
            G1, G2 = P1 @ P1.conj().T, P2 @ P2.conj().T
            mid = error_of_gram((G1 + G2) / 2)
            assert mid <= (error_of_gram(G1) + error_of_gram(G2)) / 2 + 1e-9


class TestOptimalAlpha:
    def test_exact_proportionality(self):
        P = random_precoders(5)
        achieved = achieved_pattern(P, 0.9, 1e-3, GRID)
        grid = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                         desired=achieved / 3.0)
        assert optimal_alpha(P, 0.9, 1e-3, grid) == pytest.approx(3.0, rel=1e-9)

    def test_orthogonal_clamps_to_floor(self):
        # achieved pattern strictly positive requires a sign trick: use a
        # desired pattern supported where the achieved one vanishes
        P = np.zeros((4, 3), dtype=complex)
        grid = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                         desired=GRID.desired)
        assert optimal_alpha(P, 1.0, 0.0, grid) == ALPHA_FLOOR

    def test_all_zero_desired_rejected(self):
        grid = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                         desired=np.zeros(GRID.M))
        with pytest.raises(ValueError):
            optimal_alpha(random_precoders(6), 0.9, 1e-3, grid)

    def test_least_squares_optimality(self):
        P = random_precoders(7)
        best = optimal_alpha(P, 0.9, 1e-3, GRID)
        base = beampattern_error(best, P, 0.9, 1e-3, GRID)
        rng = np.random.default_rng(17)
        for alpha in rng.uniform(0.01, 10.0, size=100):
            assert base <= beampattern_error(float(alpha), P, 0.9, 1e-3, GRID) \
                + 1e-12


class TestNmse:
    def test_perfect_match(self):
        P = random_precoders(8)
        achieved = achieved_pattern(P, 0.9, 1e-3, GRID)
        grid = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                         desired=achieved)
        assert nmse(1.0, P, 0.9, 1e-3, grid) < 1e-18

    def test_zero_precoder_unity(self):
        assert nmse(1.0, np.zeros((4, 3)), 1.0, 0.0, GRID) \
            == pytest.approx(1.0, rel=1e-12)

    def test_scale_invariance(self):
        # scaling alpha and the achieved pattern jointly leaves NMSE unchanged
        P = random_precoders(9)
        grid2 = AngleGrid(thetas=GRID.thetas, steering=GRID.steering,
                          desired=2.0 * GRID.desired)
        assert nmse(1.0, P, 0.9, 1e-3, grid2) == pytest.approx(
            nmse(2.0, P, 0.9, 1e-3, GRID), rel=1e-12)
