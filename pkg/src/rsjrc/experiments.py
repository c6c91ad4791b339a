"""Experiment harness: convergence traces, bit sweeps, trade-off sweeps, quantizer checks."""

import csv
import dataclasses
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import admm
from .comms import stream_rates
from .quantization import (QuantizationModel, apply_uniform_quantizer,
                           dac_power, default_quantizer_step,
                           precoder_power_budget, resolution_delta)
from .scenario import (SystemConfig, config_items, generate_rayleigh_channels,
                       make_angle_grid)

DEFAULT_CONVERGENCE_BITS = (4, 6, 8, 10)
DEFAULT_SWEEP_BITS = tuple(range(4, 12))
DEFAULT_LAMBDAS = tuple(float(v) for v in np.logspace(-2, 2, 9))


@dataclass
class ExperimentSpec:
    """One experiment request: base scenario plus the axes to sweep.

    Sweep axes left at None fall back to the experiment's default grid; an
    explicitly empty list is rejected.
    """

    cfg: SystemConfig = field(default_factory=SystemConfig)
    bits: "tuple | None" = None
    lambdas: "tuple | None" = None
    modes: tuple = ("rsma", "sdma")
    out_dir: Path = Path("results")
    seeds: tuple = ()            # replicate seeds beyond cfg.seed
    workers: int = 1

    def all_seeds(self) -> tuple:
        return (self.cfg.seed,) + tuple(s for s in self.seeds
                                        if s != self.cfg.seed)


def _sweep_axis(values, default, name: str) -> tuple:
    if values is None:
        return tuple(default)
    values = tuple(values)
    if not values:
        raise ValueError(f"empty {name} sweep")
    return values


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_trace_csv(path: Path, trace: np.ndarray):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(admm.TRACE_COLUMNS)
    for row in trace:
        writer.writerow([int(row[0])] + [_fmt(float(v)) for v in row[1:]])
    _atomic_write(path, buf.getvalue())


def write_rows_csv(path: Path, header: list, rows: list):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def save_solution(path: Path, solution: admm.Solution, cfg: SystemConfig):
    """Persist precoders with a config echo so the run can be re-evaluated."""
    lines = ["# rsjrc solution"]
    for key, value in config_items(cfg):
        lines.append(f"# {key} = {_fmt(value)}")
    lines.append(f"# alpha = {_fmt(solution.alpha)}")
    lines.append("# c = " + " ".join(_fmt(float(v)) for v in solution.c))
    lines.append(f"# sum_rate = {_fmt(solution.sum_rate)}")
    lines.append(f"# nmse = {_fmt(solution.nmse)}")
    lines.append("# stream_index antenna_index real imag")
    P = solution.precoders
    for s in range(P.shape[1]):
        for i in range(P.shape[0]):
            lines.append(f"{s} {i} {_fmt(P[i, s].real)} {_fmt(P[i, s].imag)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def load_solution(path: Path):
    """Inverse of save_solution: (precoders, alpha, c, cfg)."""
    meta = {}
    entries = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = (part.strip() for part in body.split("=", 1))
                meta[key] = value
            continue
        if line.strip():
            s, i, re, im = line.split()
            entries.append((int(s), int(i), float(re), float(im)))
    cfg_keys = {k for k, _ in config_items(SystemConfig())}
    from .scenario import _KEY_ALIASES  # field spellings used in the echo
    overrides = {}
    types = {f.name: f.type for f in dataclasses.fields(SystemConfig)}
    for key, value in meta.items():
        if key in cfg_keys:
            fname = _KEY_ALIASES.get(key, key)
            ftype = type(getattr(SystemConfig(), fname))
            overrides[fname] = (value == "True") if ftype is bool else ftype(value)
    cfg = SystemConfig(**overrides)
    n_s = max(e[0] for e in entries) + 1
    n_t = max(e[1] for e in entries) + 1
    P = np.zeros((n_t, n_s), dtype=complex)
    for s, i, re, im in entries:
        P[i, s] = re + 1j * im
    alpha = float(meta["alpha"])
    c = np.array([float(v) for v in meta["c"].split()])
    return P, alpha, c, cfg


def _run_point(cfg: SystemConfig) -> dict:
    """Worker body for one sweep point: SDMA first, RSMA warm-started from it."""
    channels = generate_rayleigh_channels(cfg)
    sdma = admm.run(replace(cfg, mode="sdma"), channels)
    out = {"sdma": sdma}
    if cfg.mode != "sdma":
        warm = sdma if cfg.warm_start_from_sdma else None
        out["rsma"] = admm.run(replace(cfg, mode="rsma"), channels,
                               warm_start=warm)
    return out


def _map_points(fn, configs, workers):
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, configs))
    return [fn(cfg) for cfg in configs]


def _feasible_bits(spec: ExperimentSpec, bits) -> list:
    usable = []
    for b in bits:
        try:
            precoder_power_budget(spec.cfg.p_total, spec.cfg.n_t, int(b),
                                  spec.cfg.p_dac_watts)
            usable.append(int(b))
        except ValueError as exc:
            print(f"warning: skipping b={b}: {exc}", file=sys.stderr)
    return usable


def run_convergence(spec: ExperimentSpec) -> list:
    """One residual trace per bit value at lam = 1; returns the written paths."""
    bits = _feasible_bits(spec, _sweep_axis(spec.bits, DEFAULT_CONVERGENCE_BITS,
                                            "bit"))
    if not bits:
        raise ValueError("no feasible bit value in the sweep")
    modes = tuple(m for m in spec.modes if m in ("rsma", "sdma")) or ("rsma",)
    configs = [replace(spec.cfg, bits=b, lam=1.0, mode=mode)
               for b in bits for mode in modes]
    results = _map_points(_run_point, configs, spec.workers)
    paths = []
    for cfg, res in zip(configs, results):
        sol = res.get(cfg.mode, res["sdma"])
        path = Path(spec.out_dir) / f"convergence_{cfg.mode}_b{cfg.bits}.csv"
        write_trace_csv(path, sol.trace)
        save_solution(path.with_suffix(".precoders.txt"), sol, cfg)
        paths.append(path)
    return paths


_SWEEP_HEADER = ["mode", "b", "sum_rate", "nmse", "nmse_db", "precoder_power",
                 "dac_power"]


def _sweep_row(mode: str, cfg: SystemConfig, sol: admm.Solution) -> list:
    total, _ = precoder_power_budget(cfg.p_total, cfg.n_t, cfg.bits,
                                     cfg.p_dac_watts)
    return [mode, cfg.bits, sol.sum_rate, sol.nmse,
            10.0 * np.log10(sol.nmse) if sol.nmse > 0 else -np.inf,
            total, cfg.n_t * dac_power(cfg.bits, cfg.p_dac_watts)]


def run_bit_sweep(spec: ExperimentSpec, lam: float = 10.0) -> Path:
    """Sum-rate and NMSE of both modes over the bit sweep at fixed lam."""
    bits = _feasible_bits(spec, _sweep_axis(spec.bits, DEFAULT_SWEEP_BITS,
                                            "bit"))
    if not bits:
        raise ValueError("no feasible bit value in the sweep")
    configs = [replace(spec.cfg, bits=b, lam=lam, mode="rsma") for b in bits]
    results = _map_points(_run_point, configs, spec.workers)
    rows = []
    out_dir = Path(spec.out_dir)
    for cfg, res in zip(configs, results):
        for mode in spec.modes:
            sol = res[mode]
            rows.append(_sweep_row(mode, cfg, sol))
            save_solution(out_dir / f"bitsweep_{mode}_b{cfg.bits}.precoders.txt",
                          sol, replace(cfg, mode=mode))
    path = out_dir / "bitsweep.csv"
    write_rows_csv(path, _SWEEP_HEADER, rows)
    return path


def run_tradeoff_sweep(spec: ExperimentSpec) -> list:
    """(nmse, sum_rate) frontier over the lam grid, one file per bit value."""
    lambdas = _sweep_axis(spec.lambdas, DEFAULT_LAMBDAS, "lambda")
    bits = _feasible_bits(spec, _sweep_axis(spec.bits, DEFAULT_CONVERGENCE_BITS,
                                            "bit"))
    if not bits:
        raise ValueError("no feasible bit value in the sweep")
    configs = [replace(spec.cfg, bits=b, lam=lam, mode="rsma")
               for b in bits for lam in lambdas]
    results = _map_points(_run_point, configs, spec.workers)
    paths = []
    out_dir = Path(spec.out_dir)
    header = ["mode", "b", "lambda", "sum_rate", "nmse", "nmse_db"]
    for b in bits:
        rows = []
        for cfg, res in zip(configs, results):
            if cfg.bits != b:
                continue
            for mode in spec.modes:
                sol = res[mode]
                rows.append([mode, b, cfg.lam, sol.sum_rate, sol.nmse,
                             10.0 * np.log10(sol.nmse) if sol.nmse > 0
                             else -np.inf])
                save_solution(
                    out_dir / f"tradeoff_{mode}_b{b}_lam{cfg.lam:g}.precoders.txt",
                    sol, replace(cfg, mode=mode))
        path = out_dir / f"tradeoff_b{b}.csv"
        write_rows_csv(path, header, rows)
        paths.append(path)
    return paths


def run_quantizer_validation(spec: ExperimentSpec, bits=None,
                             samples: int = 10 ** 6) -> list:
    """Monte-Carlo check of the linear model against the true uniform quantizer.

    Returns one row per bit value: empirical least-squares gain, residual
    variance and residual-input correlation, next to the modeled delta and
    noise variance.
    """
    if bits is None:
        bits = spec.bits
    bits = _sweep_axis(bits, range(1, 9), "bit")
    rng = np.random.default_rng(spec.cfg.seed)
    rows = []
    for b in bits:
        x = (rng.standard_normal(samples)
             + 1j * rng.standard_normal(samples)) / np.sqrt(2.0)
        step = default_quantizer_step(b)
        q = apply_uniform_quantizer(x, b, step)
        xx = np.real(np.vdot(x, x))
        gain = np.vdot(x, q) / xx
        resid = q - gain * x
        resid_var = float(np.real(np.vdot(resid, resid)) / samples)
        corr = abs(np.vdot(x, resid)) / np.sqrt(
            xx * max(np.real(np.vdot(resid, resid)), 1e-300))
        model = QuantizationModel.from_bits(b, spec.cfg.p_dac_watts,
                                            spec.cfg.noise_var_formula)
        rows.append([b, float(np.real(gain)), float(np.imag(gain)),
                     model.delta, resid_var, model.noise_var, float(corr)])
    header = ["b", "gain_re", "gain_im", "delta_model", "residual_var",
              "noise_var_model", "residual_input_corr"]
    path = Path(spec.out_dir) / "quantizer_validation.csv"
    write_rows_csv(path, header, rows)
    return rows


def run_single(spec: ExperimentSpec) -> admm.Solution:
    """One design run with the spec's base config; writes trace and precoders."""
    cfg = spec.cfg
    channels = generate_rayleigh_channels(cfg)
    sol = admm.run(cfg, channels)
    out_dir = Path(spec.out_dir)
    write_trace_csv(out_dir / f"single_{cfg.mode}_b{cfg.bits}.csv", sol.trace)
    save_solution(out_dir / f"single_{cfg.mode}_b{cfg.bits}.precoders.txt",
                  sol, cfg)
    return sol


def summarize(solution: admm.Solution, cfg: SystemConfig) -> str:
    """Plain-text summary table of one run."""
    channels = generate_rayleigh_channels(cfg)
    model = QuantizationModel.from_bits(cfg.bits, cfg.p_dac_watts,
                                        cfg.noise_var_formula)
    R_c, R_p = stream_rates(solution.precoders, channels.H, model,
                            cfg.noise_power)
    lines = [
        f"mode={solution.mode} b={solution.bits} lambda={cfg.lam:g} "
        f"seed={cfg.seed}",
        f"converged={solution.converged} iterations={solution.iterations}",
        f"sum_rate={solution.sum_rate:.6f} bit/s/Hz  nmse={solution.nmse:.6g} "
        f"({10 * np.log10(solution.nmse):.2f} dB)  alpha={solution.alpha:.6g}",
        f"common rate shares: {np.array2string(solution.c, precision=4)}",
        f"private rates:      {np.array2string(R_p, precision=4)}",
        f"common stream rates:{np.array2string(R_c, precision=4)}",
        f"delta={resolution_delta(cfg.bits):.6f} "
        f"per-DAC power={dac_power(cfg.bits, cfg.p_dac_watts):.6g} W",
    ]
    return "\n".join(lines)
