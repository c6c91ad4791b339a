"""Outer ADMM loop: alternating WMMSE and SDR updates with dual ascent."""

from dataclasses import dataclass, replace

import numpy as np

from .comms import max_feasible_common_rate, objective_sum_rate, stream_rates
from .quantization import QuantizationModel, precoder_power_budget
from .radar import beampattern_error, nmse, optimal_alpha
from .scenario import (AngleGrid, ChannelSet, SystemConfig,
                       generate_rayleigh_channels, make_angle_grid)
from .sdr import solve_u_update
from .splitting import (SplitOperators, build_split_operators, dual_update,
                        precoder_block_real, project_per_antenna, residuals,
                        stack_variable, to_real, unstack_variable)
from .wmmse import solve_v_update

__all__ = [
    "SplitOperators", "build_split_operators", "residuals", "dual_update",
    "Solution", "run", "evaluate", "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("iter", "primal_residual", "dual_residual", "lagrangian",
                 "sum_rate", "nmse")


@dataclass
class Solution:
    """Final design point of one ADMM run plus its iteration trace."""

    precoders: np.ndarray      # n_t x (K+1), satisfies the power equality
    c: np.ndarray              # common-rate shares
    alpha: float
    sum_rate: float
    nmse: float
    objective: float           # sum-rate minus lam * beampattern error
    converged: bool
    iterations: int
    trace: np.ndarray          # one row per iteration, TRACE_COLUMNS order
    mode: str
    bits: int
    fell_back: bool = False    # warm-start point restored at the end


def _initial_precoders(cfg: SystemConfig, channels: ChannelSet,
                       beta_ant: float, warm: "Solution | None") -> np.ndarray:
    """Matched-filter start (or a warm-started one) projected onto the power level."""
    K, n_t = cfg.K, cfg.n_t
    total = beta_ant * n_t
    common_frac = 0.1 if cfg.mode == "rsma" else 0.0
    common_dir = channels.H.conj().sum(axis=0)
    if np.linalg.norm(common_dir) < 1e-12:
        common_dir = np.ones(n_t, dtype=complex)
    common_dir = common_dir / np.linalg.norm(common_dir)

    if warm is not None:
        P = warm.precoders.astype(complex).copy()
        if cfg.mode == "rsma" and np.linalg.norm(P[:, 0]) < 1e-9:
            # give the common stream a foothold, else WMMSE keeps it at zero
            P[:, 1:] *= np.sqrt(1.0 - common_frac)
            P[:, 0] = np.sqrt(common_frac * total) * common_dir
    else:
        P = np.zeros((n_t, K + 1), dtype=complex)
        P[:, 0] = np.sqrt(common_frac * total) * common_dir
        for k in range(K):
            h = channels.H[k].conj()
            scale = np.linalg.norm(h)
            direction = h / scale if scale > 1e-12 else np.ones(n_t) / np.sqrt(n_t)
            P[:, 1 + k] = np.sqrt((1.0 - common_frac) * total / K) * direction
    return project_per_antenna(P, beta_ant, cfg.mode)


def _final_common_rates(P: np.ndarray, H: np.ndarray,
                        model: QuantizationModel, noise_power: float,
                        K: int) -> np.ndarray:
    """Largest feasible common-rate allocation for fixed precoders, split evenly."""
    s = max_feasible_common_rate(P, H, model, noise_power)
    return np.full(K, s / K)


def _lagrangian(v, u, y, cfg, H, model, grid):
    alpha_u, _, P_u = unstack_variable(u, cfg.K, cfg.n_t)
    _, c_v, P_v = unstack_variable(v, cfg.K, cfg.n_t)
    _, R_p = stream_rates(P_v, H, model, cfg.noise_power)
    f_c = -(c_v.sum() + R_p.sum())
    f_r = cfg.lam * beampattern_error(P=P_u, alpha=alpha_u, delta=model.delta,
                                      noise_var=model.noise_var, grid=grid)
    r = precoder_block_real(to_real(v) - to_real(u), cfg.K, cfg.n_t)
    return float(f_c + f_r + y @ r + 0.5 * cfg.rho * (r @ r))


def run(cfg: SystemConfig, channels: ChannelSet | None = None,
        warm_start: "Solution | None" = None) -> Solution:
    """Alternate the WMMSE and SDR updates until both residuals pass the tolerance.

    In RSMA mode with warm_start_from_sdma set, an SDMA run is converged first
    and its solution seeds the RSMA iteration (unless a warm start is given).
    """
    cfg.validate()
    if channels is None:
        channels = generate_rayleigh_channels(cfg)
    H = channels.H
    model = QuantizationModel.from_bits(cfg.bits, cfg.p_dac_watts,
                                        cfg.noise_var_formula)
    grid = make_angle_grid(cfg)
    _, beta_ant = precoder_power_budget(cfg.p_total, cfg.n_t, cfg.bits,
                                        cfg.p_dac_watts)
    ops = build_split_operators(cfg.K, cfg.n_t)

    if cfg.mode == "rsma" and cfg.warm_start_from_sdma and warm_start is None:
        warm_start = run(replace(cfg, mode="sdma"), channels)

    P0 = _initial_precoders(cfg, channels, beta_ant, warm_start)
    alpha0 = optimal_alpha(P0, model.delta, model.noise_var, grid)
    u = stack_variable(alpha0, np.zeros(cfg.K), P0)
    y = np.zeros(2 * (cfg.K + 1) * cfg.n_t)

    wstate = None
    lifted = None
    trace = []
    converged = False
    iterations = 0
    for it in range(cfg.admm_max_iter):
        v, wstate = solve_v_update(u, y, cfg.rho, H, model, cfg, state=wstate)
        u_new, lifted, _ = solve_u_update(v, y, cfg.rho, model, grid, cfg,
                                          reuse=lifted)
        v_r, u_r, u_prev_r = to_real(v), to_real(u_new), to_real(u)
        r, q = residuals(v_r, u_r, u_prev_r, ops, rho=cfg.rho,
                         textbook_dual=cfg.textbook_dual_residual)
        rn, qn = float(np.linalg.norm(r)), float(np.linalg.norm(q))

        alpha_u, _, P_u = unstack_variable(u_new, cfg.K, cfg.n_t)
        c_fin = _final_common_rates(P_u, H, model, cfg.noise_power, cfg.K)
        sr = objective_sum_rate(P_u, c_fin, H, model, cfg.noise_power)
        nm = nmse(alpha_u, P_u, model.delta, model.noise_var, grid)
        L = _lagrangian(v, u_new, y, cfg, H, model, grid)
        trace.append((it, rn, qn, L, sr, nm))

        y = dual_update(y, cfg.rho, v_r, u_r, ops)
        u = u_new
        iterations = it + 1
        if rn <= cfg.admm_tol and qn <= cfg.admm_tol:
            converged = True
            break

    alpha_u, _, P_u = unstack_variable(u, cfg.K, cfg.n_t)
    c_fin = _final_common_rates(P_u, H, model, cfg.noise_power, cfg.K)
    sr = objective_sum_rate(P_u, c_fin, H, model, cfg.noise_power)
    nm = nmse(alpha_u, P_u, model.delta, model.noise_var, grid)
    err = beampattern_error(alpha_u, P_u, model.delta, model.noise_var, grid)
    objective = sr - cfg.lam * err

    fell_back = False
    if warm_start is not None:
        wobj = warm_start.sum_rate - cfg.lam * beampattern_error(
            warm_start.alpha, warm_start.precoders, model.delta,
            model.noise_var, grid)
        if wobj > objective + 1e-12:
            # the warm-start point is feasible here and strictly better, so
            # restore it as the final consensus state (v = u, primal gap 0)
            fell_back = True
            P_prev = P_u
            P_u = warm_start.precoders.astype(complex).copy()
            alpha_u = warm_start.alpha
            c_fin = _final_common_rates(P_u, H, model, cfg.noise_power, cfg.K)
            sr = objective_sum_rate(P_u, c_fin, H, model, cfg.noise_power)
            nm = nmse(alpha_u, P_u, model.delta, model.noise_var, grid)
            err = beampattern_error(alpha_u, P_u, model.delta,
                                    model.noise_var, grid)
            objective = sr - cfg.lam * err
            _, R_p = stream_rates(P_u, H, model, cfg.noise_power)
            L = float(-(c_fin.sum() + R_p.sum()) + cfg.lam * err)
            jump = to_real(stack_variable(alpha_u, c_fin, P_u)) \
                - to_real(stack_variable(alpha_u, c_fin, P_prev))
            qn = float(np.linalg.norm(
                precoder_block_real(jump, cfg.K, cfg.n_t)))
            trace.append((iterations, 0.0, qn, L, sr, nm))
            converged = converged and qn <= cfg.admm_tol

    return Solution(precoders=P_u, c=c_fin, alpha=alpha_u, sum_rate=sr,
                    nmse=nm, objective=objective, converged=converged,
                    iterations=iterations, trace=np.array(trace),
                    mode=cfg.mode, bits=cfg.bits, fell_back=fell_back)


def evaluate(solution: Solution, channels: ChannelSet,
             model: QuantizationModel, grid: AngleGrid, noise_power: float,
             tol: float = 1e-9) -> dict:
    """Recompute the reported metrics from scratch and check them against the trace."""
    sr = objective_sum_rate(solution.precoders, solution.c, channels.H, model,
                            noise_power)
    nm = nmse(solution.alpha, solution.precoders, model.delta, model.noise_var,
              grid)
    if abs(sr - solution.sum_rate) > tol or abs(nm - solution.nmse) > tol:
        raise RuntimeError(
            f"stored metrics diverge from recomputation: "
            f"sum-rate {solution.sum_rate!r} vs {sr!r}, "
            f"NMSE {solution.nmse!r} vs {nm!r}")
    if solution.trace.size:
        last = solution.trace[-1]
        if abs(last[4] - sr) > tol or abs(last[5] - nm) > tol:
            raise RuntimeError("trace finals diverge from recomputed metrics")
    return {"sum_rate": sr, "nmse": nm}
