"""Rate-WMMSE alternating optimization for the sum-rate block of the ADMM split.

The convexified precoder subproblem (fixed equalizers and weights) is solved
through its Lagrangian dual over the common-rate multipliers: for fixed
multipliers the precoder minimizer is a pair of small Hermitian linear solves,
and the dual is a smooth concave problem of dimension K.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .comms import (effective_noise_variance, max_feasible_common_rate,
                    stream_rates)
from .quantization import QuantizationModel
from .scenario import SystemConfig
from .splitting import stack_variable, to_complex, unstack_variable

LN2 = np.log(2.0)


def effective_noise_over_delta2(H: np.ndarray, model: QuantizationModel,
                                noise_power: float) -> np.ndarray:
    """Per-user sigma_eta^2 / delta^2, the noise floor of the reduced SINR form."""
    return np.array([
        effective_noise_variance(H[k].conj(), model.noise_var, noise_power)
        for k in range(H.shape[0])
    ]) / model.delta ** 2


def update_equalizers(P: np.ndarray, H: np.ndarray, model: QuantizationModel,
                      noise_power: float) -> tuple[np.ndarray, np.ndarray]:
    """Scalar MMSE equalizers (common, private) per user."""
    K = H.shape[0]
    nu = effective_noise_over_delta2(H, model, noise_power)
    g_c = np.zeros(K, dtype=complex)
    g_p = np.zeros(K, dtype=complex)
    for k in range(K):
        gains = H[k] @ P
        power = np.abs(gains) ** 2
        T_c = power.sum() + nu[k]
        T_p = power[1:].sum() + nu[k]
        g_c[k] = np.conj(gains[0]) / T_c
        g_p[k] = np.conj(gains[1 + k]) / T_p
    return g_c, g_p


def mse_values(P: np.ndarray, H: np.ndarray, g_c: np.ndarray, g_p: np.ndarray,
               model: QuantizationModel, noise_power: float
               ) -> tuple[np.ndarray, np.ndarray]:
    """Per-stream MSEs at arbitrary equalizers (common, private)."""
    K = H.shape[0]
    nu = effective_noise_over_delta2(H, model, noise_power)
    mse_c = np.empty(K)
    mse_p = np.empty(K)
    for k in range(K):
        gains = H[k] @ P
        power = np.abs(gains) ** 2
        T_c = power.sum() + nu[k]
        T_p = power[1:].sum() + nu[k]
        mse_c[k] = np.abs(g_c[k]) ** 2 * T_c - 2.0 * np.real(g_c[k] * gains[0]) + 1.0
        mse_p[k] = np.abs(g_p[k]) ** 2 * T_p - 2.0 * np.real(g_p[k] * gains[1 + k]) + 1.0
    return mse_c, mse_p


def update_weights(mse: np.ndarray) -> np.ndarray:
    """Rate-WMMSE weights w = 1/MSE."""
    mse = np.asarray(mse, dtype=float)
    if np.any(mse <= 0):
        raise ValueError(f"MSE values must be positive, got {mse}")
    return 1.0 / mse


@dataclass
class WmmseState:
    """Equalizers, weights, and warm-start data carried across AO iterations."""

    equalizers: tuple = None          # (g_c, g_p)
    weights: tuple = None             # (w_c, w_p)
    last_objective: float = np.inf
    mu: np.ndarray = None             # warm start for the dual multipliers
    objective_trace: list = None      # augmented objective after each AO cycle


def _v_objective(P, c, H, model, noise_power, y_c, vec_Pu, rho):
    """Augmented sum-rate objective of the v block (to be minimized)."""
    _, R_p = stream_rates(P, H, model, noise_power)
    diff = P.reshape(-1, order="F") - vec_Pu
    penalty = np.real(np.vdot(y_c, diff)) + 0.5 * rho * np.real(np.vdot(diff, diff))
    return float(-(np.sum(c) + R_p.sum()) + penalty)


def _solve_columns(mu, ctx):
    """Precoder minimizer for fixed dual multipliers: per-column linear solves."""
    K, n_t = ctx["K"], ctx["n_t"]
    rho = ctx["rho"]
    a = mu * ctx["wc_gc2"]                       # weights on common-MSE quadratics
    A_mu = np.tensordot(a, ctx["outers"], axes=(0, 0))
    ridge = 0.5 * rho * np.eye(n_t)
    A_c = A_mu + ridge
    A_p = A_mu + ctx["A_priv"] + ridge
    b_c = ctx["hc_mat"].T @ (mu * ctx["wc_over_ln2"]) + ctx["b_pen"][:, 0]
    B_p = ctx["b_priv"] + ctx["b_pen"][:, 1:]

    P = np.zeros((n_t, K + 1), dtype=complex)
    if ctx["mode"] == "rsma":
        P[:, 0] = _solve_psd(A_c, b_c, rho)
    P[:, 1:] = _solve_psd(A_p, B_p, rho)
    return P


def _solve_psd(A, b, rho):
    if rho > 0:
        return np.linalg.solve(A, b)
    # rank-deficient when unregularized: take the minimum-norm solution
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def _subproblem_context(g_c, g_p, w_c, w_p, H, nu, y_c, P_u, rho, mode):
    K, n_t = H.shape
    h_cols = H.conj()                            # row k is h_k^T
    outers = np.einsum("ki,kj->kij", h_cols, H)  # h_k h_k^H per user
    d = w_p * np.abs(g_p) ** 2 / LN2
    vec_Pu = P_u.reshape(-1, order="F")
    y_cols = y_c.reshape(n_t, K + 1, order="F")
    return {
        "K": K, "n_t": n_t, "rho": rho, "mode": mode,
        "outers": outers,
        "wc_gc2": w_c * np.abs(g_c) ** 2 / LN2,
        "wc_over_ln2": w_c / LN2,
        "hc_mat": h_cols * np.conj(g_c)[:, None],
        "A_priv": np.tensordot(d, outers, axes=(0, 0)),
        "b_priv": (h_cols * (w_p * np.conj(g_p) / LN2)[:, None]).T,
        "b_pen": 0.5 * (rho * P_u.reshape(n_t, K + 1, order="F") - y_cols),
        "vec_Pu": vec_Pu, "y_c": y_c,
        "nu": nu, "g_c": g_c, "g_p": g_p, "w_c": w_c, "w_p": w_p,
        "beta": np.log2(w_c) + 1.0 / LN2,
    }


def solve_precoder_subproblem(state: WmmseState, u: np.ndarray, y: np.ndarray,
                              rho: float, H: np.ndarray,
                              model: QuantizationModel, noise_power: float,
                              mode: str = "rsma", kkt_tol: float = 1e-7,
                              max_iter: int = 300):
    """Minimize the weighted-MSE surrogate plus penalty over (P, c).

    Returns (P, c, info) where info carries the dual multipliers and the KKT
    residual. Raises RuntimeError when neither the dual solve nor the convex
    reference solver reaches the requested stationarity.
    """
    g_c, g_p = state.equalizers
    w_c, w_p = state.weights
    K, n_t = H.shape
    alpha_u, c_u, P_u = unstack_variable(u, K, n_t)
    y_c = to_complex(y)
    nu = effective_noise_over_delta2(H, model, noise_power)
    ctx = _subproblem_context(g_c, g_p, w_c, w_p, H, nu, y_c, P_u, rho, mode)

    if mode == "sdma":
        P = _solve_columns(np.zeros(K), ctx)
        info = {"mu": np.zeros(K), "kkt_residual": 0.0, "s": 0.0, "nit": 0}
        return P, np.zeros(K), info

    def eps_common(P):
        vals = np.empty(K)
        for k in range(K):
            gains = H[k] @ P
            T_c = np.sum(np.abs(gains) ** 2) + nu[k]
            vals[k] = (np.abs(g_c[k]) ** 2 * T_c
                       - 2.0 * np.real(g_c[k] * gains[0]) + 1.0)
        return vals

    def eps_private(P):
        vals = np.empty(K)
        for k in range(K):
            gains = H[k] @ P
            T_p = np.sum(np.abs(gains[1:]) ** 2) + nu[k]
            vals[k] = (np.abs(g_p[k]) ** 2 * T_p
                       - 2.0 * np.real(g_p[k] * gains[1 + k]) + 1.0)
        return vals

    def F_value(P):
        diff = P.reshape(-1, order="F") - ctx["vec_Pu"]
        pen = np.real(np.vdot(y_c, diff)) + 0.5 * rho * np.real(np.vdot(diff, diff))
        return np.dot(w_p, eps_private(P)) / LN2 + pen

    beta = ctx["beta"]

    def neg_dual(mu):
        P = _solve_columns(mu, ctx)
        ec = eps_common(P)
        val = F_value(P) + np.dot(mu, w_c * ec / LN2) - np.dot(mu, beta)
        grad = w_c * ec / LN2 - beta
        return -val, -grad

    scale = max(1.0, np.max(np.abs(beta)))
    starts = []
    if state.mu is not None:
        starts.append(np.asarray(state.mu, dtype=float))
    starts.append(np.full(K, 1.0 / K))
    best = None
    for x0 in starts:
        res = optimize.minimize(
            neg_dual, x0, jac=True, method="SLSQP",
            bounds=[(0.0, None)] * K,
            constraints=[{"type": "ineq", "fun": lambda m: m.sum() - 1.0,
                          "jac": lambda m: np.ones(K)}],
            options={"ftol": 1e-14, "maxiter": max_iter})
        cand = _finish_primal(res.x, ctx, eps_common, scale)
        if best is None or cand[2]["kkt_residual"] < best[2]["kkt_residual"]:
            best = cand
        if best[2]["kkt_residual"] <= kkt_tol:
            break

    if best[2]["kkt_residual"] > kkt_tol:
        ref = _reference_subproblem(ctx, H, nu, g_c, g_p, w_c, w_p, y_c, P_u,
                                    rho, mode)
        if ref is not None:
            mu_ref = ref
            cand = _finish_primal(mu_ref, ctx, eps_common, scale)
            if cand[2]["kkt_residual"] < best[2]["kkt_residual"]:
                best = cand
    if best[2]["kkt_residual"] > 1e-4:
        raise RuntimeError(
            f"precoder subproblem did not reach stationarity "
            f"(KKT residual {best[2]['kkt_residual']:.3g}); last iterate attached",
            best)
    return best


def _finish_primal(mu, ctx, eps_common, scale):
    """Recover (P, c) from dual multipliers and measure KKT residuals."""
    mu = np.clip(mu, 0.0, None)
    K = ctx["K"]
    P = _solve_columns(mu, ctx)
    B = ctx["beta"] - ctx["w_c"] * eps_common(P) / LN2
    s = max(0.0, float(B.min()))
    comp = float(np.abs(mu * (B - s)).sum() + abs((mu.sum() - 1.0) * s))
    info = {"mu": mu, "kkt_residual": comp / scale, "s": s,
            "B": B, "nit": None}
    c = np.full(K, s / K)
    return P, c, info


def _reference_subproblem(ctx, H, nu, g_c, g_p, w_c, w_p, y_c, P_u, rho, mode):
    """Solve the same subproblem with cvxpy and return dual multipliers."""
    import cvxpy as cp

    K, n_t = H.shape
    P = cp.Variable((n_t, K + 1), complex=True)
    s = cp.Variable(nonneg=True)
    obj = -s
    cons = []
    for k in range(K):
        gains = H[k] @ P
        T_p = cp.sum_squares(gains[1:]) + nu[k]
        eps_p = (np.abs(g_p[k]) ** 2 * T_p
                 - 2.0 * cp.real(g_p[k] * gains[1 + k]) + 1.0)
        obj = obj + w_p[k] * eps_p / LN2
        T_c = cp.sum_squares(gains) + nu[k]
        eps_c = (np.abs(g_c[k]) ** 2 * T_c
                 - 2.0 * cp.real(g_c[k] * gains[0]) + 1.0)
        cons.append(s + w_c[k] * eps_c / LN2 <= ctx["beta"][k])
    diff = cp.vec(P, order="F") - P_u.reshape(-1, order="F")
    obj = obj + cp.real(y_c.conj() @ diff) + 0.5 * rho * cp.sum_squares(diff)
    if mode == "sdma":
        cons.append(P[:, 0] == 0)
    prob = cp.Problem(cp.Minimize(obj), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        return None
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    return np.array([max(0.0, float(con.dual_value)) for con in cons[:K]])


def solve_v_update(u: np.ndarray, y: np.ndarray, rho: float, H: np.ndarray,
                   model: QuantizationModel, cfg: SystemConfig,
                   state: WmmseState | None = None):
    """Run equalizer/weight/precoder cycles until the objective stalls.

    Returns (v, state) with v the stacked [alpha, c, vec(P)]; alpha passes
    through from u untouched since neither the objective nor the penalty
    depends on it.
    """
    K, n_t = H.shape
    alpha_u, c_u, P_u = unstack_variable(u, K, n_t)
    y_c = to_complex(y)
    vec_Pu = P_u.reshape(-1, order="F")
    if state is None:
        state = WmmseState()

    P = P_u.copy()
    if cfg.mode == "sdma":
        P[:, 0] = 0.0
        c = np.zeros(K)
    else:
        s0 = min(float(c_u.sum()),
                 max_feasible_common_rate(P, H, model, cfg.noise_power))
        c = np.full(K, max(0.0, s0) / K)
    L_prev = _v_objective(P, c, H, model, cfg.noise_power, y_c, vec_Pu, rho)
    state.objective_trace = [L_prev]

    for _ in range(cfg.wmmse_max_iter):
        g_c, g_p = update_equalizers(P, H, model, cfg.noise_power)
        mse_c, mse_p = mse_values(P, H, g_c, g_p, model, cfg.noise_power)
        state.equalizers = (g_c, g_p)
        state.weights = (update_weights(mse_c), update_weights(mse_p))
        P_new, c_new, info = solve_precoder_subproblem(
            state, u, y, rho, H, model, cfg.noise_power, mode=cfg.mode)
        state.mu = info["mu"]
        L_new = _v_objective(P_new, c_new, H, model, cfg.noise_power, y_c,
                             vec_Pu, rho)
        if L_new > L_prev + 1e-10:
            # solver noise pushed uphill; keep the previous iterate
            break
        state.objective_trace.append(L_new)
        P, c = P_new, c_new
        if L_prev - L_new < cfg.wmmse_tol * (1.0 + abs(L_new)):
            L_prev = L_new
            break
        L_prev = L_new

    state.last_objective = L_prev
    return stack_variable(alpha_u, c, P), state
