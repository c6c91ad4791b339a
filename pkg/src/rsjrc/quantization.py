"""Linear DAC quantization model: resolution factor, noise variance, power draw."""

from dataclasses import dataclass

import numpy as np

# Coefficient pi*sqrt(3)/2 of the resolution formula.
_RES_COEF = np.pi * np.sqrt(3.0) / 2.0


def resolution_delta(b: int) -> float:
    """Resolution factor delta of a b-bit DAC, delta = sqrt(1 - (pi*sqrt(3)/2) * 2^-2b)."""
    if b < 1:
        raise ValueError(f"bit count must be >= 1, got {b} (radicand non-positive)")
    return float(np.sqrt(1.0 - _RES_COEF * 2.0 ** (-2 * b)))


def quantization_noise_variance(delta: float, formula: str = "paper") -> float:
    """Quantization noise variance for a given resolution factor.

    formula "paper" uses delta^2*(1-delta^2)^2, formula "aqnm" the standard
    additive-noise-model form delta^2*(1-delta^2).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    d2 = delta * delta
    if formula == "paper":
        return d2 * (1.0 - d2) ** 2
    if formula == "aqnm":
        return d2 * (1.0 - d2)
    raise ValueError(f"unknown noise variance formula {formula!r}")


def dac_power(b: int, p_dac_watts: float) -> float:
    """Per-RF-chain DAC power draw, P_DAC * sqrt(pi*sqrt(3) / (2*(1-delta^2))).

    Algebraically equal to 2^b * P_DAC. The complement 1-delta^2 is taken
    straight from the resolution formula rather than recomputed from delta,
    which would cancel catastrophically for b beyond ~15.
    """
    if b < 1:
        raise ValueError(f"bit count must be >= 1, got {b}")
    one_minus_delta2 = _RES_COEF * 2.0 ** (-2 * b)
    return float(p_dac_watts * np.sqrt(_RES_COEF / one_minus_delta2))


def precoder_power_budget(p_total: float, n_t: int, b: int,
                          p_dac_watts: float) -> tuple[float, float]:
    """Power left for the precoders after the DACs take their share.

    Returns (total trace budget, per-antenna share). Raises if the bit count
    makes the budget non-positive.
    """
    per_chain = dac_power(b, p_dac_watts)
    total = p_total - n_t * per_chain
    if total <= 0.0:
        raise ValueError(
            f"infeasible bit count: {n_t} DACs at b={b} draw "
            f"{n_t * per_chain:.6g} W >= total budget {p_total:.6g} W")
    return float(total), float(p_total / n_t - per_chain)


@dataclass(frozen=True)
class QuantizationModel:
    """One DAC configuration: bits, resolution factor, noise variance, power draw."""

    b: int
    delta: float
    noise_var: float
    dac_power: float

    @classmethod
    def from_bits(cls, b: int, p_dac_watts: float,
                  formula: str = "paper") -> "QuantizationModel":
        delta = resolution_delta(b)
        return cls(b=b, delta=delta,
                   noise_var=quantization_noise_variance(delta, formula),
                   dac_power=dac_power(b, p_dac_watts))

    @classmethod
    def ideal(cls) -> "QuantizationModel":
        """Infinite-resolution stand-in: delta = 1, no noise, no power draw."""
        return cls(b=0, delta=1.0, noise_var=0.0, dac_power=0.0)


def apply_linear_model(x: np.ndarray, model: QuantizationModel,
                       rng: np.random.Generator) -> np.ndarray:
    """Linear quantizer model: delta * x + eps, eps ~ CN(0, noise_var) i.i.d."""
    x = np.asarray(x, dtype=complex)
    scale = np.sqrt(model.noise_var / 2.0)
    eps = scale * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    return model.delta * x + eps


def default_quantizer_step(b: int, per_dim_std: float = 1.0 / np.sqrt(2.0)) -> float:
    """Step size with full scale at ~3 std devs per real dimension (2.6 for b=1),
    keeping the clipping probability of a Gaussian input below 1%."""
    loading = 2.6 if b == 1 else 3.0
    return loading * per_dim_std / 2.0 ** (b - 1)


def apply_uniform_quantizer(x: np.ndarray, b: int, step: float) -> np.ndarray:
    """Midrise uniform quantizer with 2^b levels per real dimension.

    Real and imaginary parts are quantized independently; inputs are clipped
    at +/- 2^(b-1) * step.
    """
    if b < 1:
        raise ValueError(f"bit count must be >= 1, got {b}")
    half_levels = 2 ** (b - 1)

    def _q(u):
        idx = np.floor(u / step)
        idx = np.clip(idx, -half_levels, half_levels - 1)
        return (idx + 0.5) * step

    x = np.asarray(x)
    if np.iscomplexobj(x):
        return _q(x.real) + 1j * _q(x.imag)
    return _q(x)
