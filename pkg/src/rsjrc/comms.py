"""SINR and achievable-rate evaluation for the common and private streams."""

from dataclasses import dataclass

import numpy as np

from .quantization import QuantizationModel


def validate_precoders(P: np.ndarray, K: int, n_t: int, mode: str = "rsma") -> np.ndarray:
    """Check shape n_t x (K+1), finiteness, and the zero common column in SDMA."""
    P = np.asarray(P, dtype=complex)
    if P.shape != (n_t, K + 1):
        raise ValueError(f"precoder matrix must be {n_t}x{K + 1}, got {P.shape}")
    if not np.all(np.isfinite(P.view(float))):
        raise ValueError("precoder matrix contains non-finite entries")
    if mode == "sdma" and np.any(P[:, 0] != 0):
        raise ValueError("SDMA mode requires a zero common-stream precoder")
    return P


def effective_noise_variance(h: np.ndarray, noise_var: float,
                             noise_power: float) -> float:
    """Per-user effective noise sigma_eta^2 = sigma_e^2 * h^H h + sigma_n^2."""
    if noise_var < 0:
        raise ValueError("quantization noise variance must be non-negative")
    if noise_power <= 0:
        raise ValueError("receiver noise power must be positive")
    h = np.asarray(h)
    return float(noise_var * np.real(np.vdot(h, h)) + noise_power)


def _stream_gains(P: np.ndarray, h_row: np.ndarray) -> np.ndarray:
    """|h^H p_s|^2 for every column of P, given the conjugated row h^H."""
    return np.abs(h_row @ P) ** 2


def common_sinr(P: np.ndarray, h_row: np.ndarray, delta: float,
                sigma_eta2: float, form: str = "reduced") -> float:
    """SINR of the common stream at one user; all private streams interfere.

    h_row is the conjugated channel row h_k^H. The two forms differ only in
    whether delta^2 is folded into the noise term.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    gains = _stream_gains(P, h_row)
    if form == "reduced":
        return float(gains[0] / (sigma_eta2 / delta ** 2 + gains[1:].sum()))
    if form == "direct":
        d2 = delta ** 2
        return float(d2 * gains[0] / (sigma_eta2 + d2 * gains[1:].sum()))
    raise ValueError(f"unknown SINR form {form!r}")


def private_sinr(P: np.ndarray, h_row: np.ndarray, k: int, delta: float,
                 sigma_eta2: float, form: str = "reduced") -> float:
    """SINR of private stream k at user k; the common stream is already removed."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    gains = _stream_gains(P, h_row)
    own = gains[1 + k]
    interference = gains[1:].sum() - own
    if form == "reduced":
        return float(own / (sigma_eta2 / delta ** 2 + interference))
    if form == "direct":
        d2 = delta ** 2
        return float(d2 * own / (sigma_eta2 + d2 * interference))
    raise ValueError(f"unknown SINR form {form!r}")


def stream_rates(P: np.ndarray, H: np.ndarray, model: QuantizationModel,
                 noise_power: float) -> tuple[np.ndarray, np.ndarray]:
    """Shannon rates (common-stream rates R_c, private rates R_p), one per user."""
    K = H.shape[0]
    R_c = np.empty(K)
    R_p = np.empty(K)
    for k in range(K):
        s_eta2 = effective_noise_variance(H[k].conj(), model.noise_var, noise_power)
        R_c[k] = np.log2(1.0 + common_sinr(P, H[k], model.delta, s_eta2))
        R_p[k] = np.log2(1.0 + private_sinr(P, H[k], k, model.delta, s_eta2))
    return R_c, R_p


@dataclass(frozen=True)
class RateAllocation:
    """Common-rate shares plus the per-user stream rates they must respect."""

    c: np.ndarray
    private_rates: np.ndarray
    common_stream_rates: np.ndarray

    def feasible(self, tol: float = 1e-9) -> bool:
        return (np.all(self.c >= -tol)
                and self.c.sum() <= self.common_stream_rates.min() + tol)


def objective_sum_rate(P: np.ndarray, c: np.ndarray, H: np.ndarray,
                       model: QuantizationModel, noise_power: float,
                       tol: float = 1e-9) -> float:
    """Total rate sum_k (C_k + R_k); raises if (P, c) violates the rate constraints."""
    c = np.asarray(c, dtype=float)
    R_c, R_p = stream_rates(P, H, model, noise_power)
    if np.any(c < -tol):
        raise ValueError(f"common-rate shares must be non-negative, got {c}")
    excess = c.sum() - R_c.min()
    if excess > tol:
        k = int(np.argmin(R_c))
        raise ValueError(
            f"common rate sum {c.sum():.9g} exceeds R_c,{k} = {R_c[k]:.9g} "
            f"by {excess:.3g}")
    return float(c.sum() + R_p.sum())


def max_feasible_common_rate(P: np.ndarray, H: np.ndarray,
                             model: QuantizationModel, noise_power: float) -> float:
    """Largest deliverable total common rate, min_k R_c,k (never negative)."""
    R_c, _ = stream_rates(P, H, model, noise_power)
    return float(max(0.0, R_c.min()))
