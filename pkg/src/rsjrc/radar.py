"""Transmit covariance, beampattern evaluation, matching error, and NMSE."""

import numpy as np

from .scenario import AngleGrid

ALPHA_FLOOR = 1e-9


def transmit_covariance(P: np.ndarray, delta: float, noise_var: float) -> np.ndarray:
    """Covariance of the quantized transmit signal, delta^2 P P^H + sigma_e^2 I."""
    P = np.asarray(P, dtype=complex)
    n_t = P.shape[0]
    return delta ** 2 * (P @ P.conj().T) + noise_var * np.eye(n_t)


def achieved_pattern(P: np.ndarray, delta: float, noise_var: float,
                     grid: AngleGrid) -> np.ndarray:
    """Transmit power toward each grid angle, a^H R a = delta^2 ||P^H a||^2 + sigma_e^2 n_t."""
    n_t = P.shape[0]
    # steering rows are a(theta)^T, so conjugate once to form a^H P
    proj = grid.steering.conj() @ P
    return delta ** 2 * np.sum(np.abs(proj) ** 2, axis=1) + noise_var * n_t


def beampattern_error(alpha: float, P: np.ndarray, delta: float,
                      noise_var: float, grid: AngleGrid) -> float:
    """Squared matching error sum_m |alpha P_d(theta_m) - achieved(theta_m)|^2."""
    diff = alpha * grid.desired - achieved_pattern(P, delta, noise_var, grid)
    return float(np.sum(diff ** 2))


def optimal_alpha(P: np.ndarray, delta: float, noise_var: float,
                  grid: AngleGrid, floor: float = ALPHA_FLOOR) -> float:
    """Least-squares scaling of the desired pattern, clamped to a positive floor."""
    denom = float(np.sum(grid.desired ** 2))
    if denom == 0.0:
        raise ValueError("desired pattern is identically zero")
    achieved = achieved_pattern(P, delta, noise_var, grid)
    alpha = float(np.dot(grid.desired, achieved) / denom)
    return max(alpha, floor)


def nmse(alpha: float, P: np.ndarray, delta: float, noise_var: float,
         grid: AngleGrid) -> float:
    """Beampattern error normalized by the energy of the scaled desired pattern."""
    norm = float(np.sum((alpha * grid.desired) ** 2))
    return beampattern_error(alpha, P, delta, noise_var, grid) / norm
