"""System configuration, Rayleigh channels, steering vectors, desired beampattern."""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quantization import dac_power

MODES = ("rsma", "sdma")

# Config-file key -> dataclass field, where the two differ.
_KEY_ALIASES = {"lambda": "lam"}


@dataclass
class SystemConfig:
    """Scenario, power, quantization and solver parameters for one design run."""

    K: int = 2                      # communication users
    n_t: int = 4                    # transmit antennas
    d: float = 0.5                  # element spacing in wavelengths
    p_total: float = 1.0            # total transmit power budget [W]
    p_dac_watts: float = 1e-4       # DAC power consumption coefficient [W]
    noise_power: float = 1e-5       # receiver noise variance [W]
    bits: int = 4                   # DAC quantization bits per RF chain
    lam: float = 1.0                # beampattern error weight (config key "lambda")
    rho: float = 20.0               # ADMM penalty
    admm_tol: float = 1e-4          # residual tolerance
    admm_max_iter: int = 500
    wmmse_tol: float = 1e-6
    wmmse_max_iter: int = 100
    seed: int = 7
    target_angle_deg: float = 0.0
    beamwidth_deg: float = 10.0
    grid_resolution_deg: float = 1.0
    mode: str = "rsma"
    noise_var_formula: str = "paper"
    warm_start_from_sdma: bool = True
    textbook_dual_residual: bool = False
    sdr_randomization: bool = False

    def validate(self) -> "SystemConfig":
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")
        if self.p_total <= 0:
            raise ValueError("p_total must be positive")
        if self.p_dac_watts < 0:
            raise ValueError("p_dac_watts must be non-negative")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if self.n_t * dac_power(self.bits, self.p_dac_watts) >= self.p_total:
            raise ValueError(
                f"infeasible bit count: {self.n_t} DACs at b={self.bits} exhaust "
                f"the {self.p_total} W budget")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.noise_var_formula not in ("paper", "aqnm"):
            raise ValueError(f"unknown noise_var_formula {self.noise_var_formula!r}")
        if self.grid_resolution_deg <= 0:
            raise ValueError("grid_resolution_deg must be positive")
        if self.beamwidth_deg < 0:
            raise ValueError("beamwidth_deg must be non-negative")
        if not -90.0 <= self.target_angle_deg <= 90.0:
            raise ValueError("target_angle_deg must lie in [-90, 90]")
        return self


def _coerce(raw: str, target_type):
    if target_type is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean from {raw!r}")
    return target_type(raw)


def load_config(path, overrides: dict | None = None) -> SystemConfig:
    """Read a flat `key = value` config file, apply overrides, validate."""
    fields = {f.name: f.type for f in dataclasses.fields(SystemConfig)}
    types = {"K": int, "n_t": int, "bits": int, "admm_max_iter": int,
             "wmmse_max_iter": int, "seed": int, "mode": str,
             "noise_var_formula": str, "warm_start_from_sdma": bool,
             "textbook_dual_residual": bool, "sdr_randomization": bool}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        if key not in fields:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(raw, types.get(key, float))
    if overrides:
        values.update(overrides)
    return SystemConfig(**values).validate()


def config_items(cfg: SystemConfig) -> list[tuple[str, object]]:
    """(file key, value) pairs for every config field, for echoing into outputs."""
    reverse = {v: k for k, v in _KEY_ALIASES.items()}
    return [(reverse.get(f.name, f.name), getattr(cfg, f.name))
            for f in dataclasses.fields(SystemConfig)]


@dataclass(frozen=True)
class ChannelSet:
    """User channels; row k holds h_k^H so that H[k] @ p equals h_k^H p."""

    H: np.ndarray
    seed: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.H.view(float))):
            raise ValueError("channel matrix contains non-finite entries")

    @property
    def K(self) -> int:
        return self.H.shape[0]

    def h(self, k: int) -> np.ndarray:
        """Channel vector h_k (column convention)."""
        return self.H[k].conj()


def generate_rayleigh_channels(cfg: SystemConfig) -> ChannelSet:
    """Draw i.i.d. CN(0, 1) channel entries, reproducible for a fixed seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    H = (rng.standard_normal((cfg.K, cfg.n_t))
         + 1j * rng.standard_normal((cfg.K, cfg.n_t))) / np.sqrt(2.0)
    return ChannelSet(H=H, seed=cfg.seed)


def steering_vector(theta_deg: float, n_t: int, d: float) -> np.ndarray:
    """ULA response [1, e^{j 2 pi sin(theta) d}, ..., e^{j 2 pi (n_t-1) sin(theta) d}]."""
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    phase = 2.0 * np.pi * np.sin(np.deg2rad(theta_deg)) * d
    return np.exp(1j * phase * np.arange(n_t))


def desired_beampattern(thetas_deg: np.ndarray, target_deg: float,
                        beamwidth_deg: float) -> np.ndarray:
    """Rectangular desired pattern: 1 within beamwidth/2 of the target, else 0."""
    thetas_deg = np.asarray(thetas_deg, dtype=float)
    if not thetas_deg[0] <= target_deg <= thetas_deg[-1]:
        raise ValueError(
            f"target angle {target_deg} deg lies outside the grid "
            f"[{thetas_deg[0]}, {thetas_deg[-1]}]")
    # small cushion so grid points sitting exactly on the edge are kept
    return (np.abs(thetas_deg - target_deg) <= beamwidth_deg / 2.0 + 1e-9).astype(float)


@dataclass(frozen=True)
class AngleGrid:
    """Azimuth grid with per-angle steering vectors and desired amplitudes."""

    thetas: np.ndarray        # [M] degrees, strictly increasing
    steering: np.ndarray      # [M, n_t] complex, unit-modulus entries
    desired: np.ndarray       # [M] non-negative desired amplitudes

    def __post_init__(self):
        if np.any(np.diff(self.thetas) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if np.any(self.desired < 0):
            raise ValueError("desired pattern must be non-negative")

    @property
    def M(self) -> int:
        return self.thetas.size


def make_angle_grid(cfg: SystemConfig) -> AngleGrid:
    """Grid over [-90, 90] degrees at the configured resolution."""
    step = cfg.grid_resolution_deg
    thetas = np.arange(-90.0, 90.0 + step / 2.0, step)
    steering = np.stack([steering_vector(t, cfg.n_t, cfg.d) for t in thetas])
    desired = desired_beampattern(thetas, cfg.target_angle_deg, cfg.beamwidth_deg)
    return AngleGrid(thetas=thetas, steering=steering, desired=desired)
