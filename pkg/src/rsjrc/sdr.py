"""Semidefinite relaxation for the beampattern block of the ADMM split.

The lifted variable is the homogenized real stacking [U u; u^T 1] of the full
[alpha, c, vec(P)] vector. The beampattern quadratic only sees the sum of the
per-stream diagonal blocks of U, so the relaxation is solved through an
equivalent reduced program over that 2*n_t x 2*n_t block plus the stream
matrix, and the full lifted matrix is reassembled exactly afterwards.
"""

from dataclasses import dataclass, field

import numpy as np
import cvxpy as cp

from .quantization import QuantizationModel, precoder_power_budget
from .radar import ALPHA_FLOOR, optimal_alpha
from .scenario import AngleGrid, SystemConfig
from .splitting import (precoder_block_real, project_per_antenna,
                        stack_variable, stacked_length, to_complex, to_real,
                        unstack_variable)


def _pattern_quadratics(steering: np.ndarray) -> np.ndarray:
    """Row m holds vec(M_m) with w^T M_m w = |a(theta_m)^H p|^2 for w = [Re p; Im p]."""
    re, im = steering.real, steering.imag
    m1 = np.hstack([re, im])
    m2 = np.hstack([-im, re])
    blocks = np.einsum("mi,mj->mij", m1, m1) + np.einsum("mi,mj->mij", m2, m2)
    return blocks.reshape(steering.shape[0], -1)


@dataclass
class LiftedProblem:
    """Homogenized relaxation of the beampattern-plus-penalty subproblem."""

    K: int
    n_t: int
    n: int                       # real stacked dimension (lifted PSD is (n+1)^2)
    lam: float
    rho: float
    delta2: float
    sige2: float
    beta_ant: float              # per-antenna precoder power level
    budget_total: float
    mode: str
    desired: np.ndarray          # [M]
    Amat: np.ndarray             # [M, (2 n_t)^2] pattern quadratics
    c_pin: np.ndarray            # c block of v, pinned through the update
    t: np.ndarray                # penalty anchor D_pr(v_r)
    ell: np.ndarray              # linear penalty coefficient y + rho * t
    const: float                 # constant completing the penalty value
    _compiled: dict = field(default_factory=dict, repr=False)

    # -- index layout ------------------------------------------------------
    @property
    def L(self) -> int:
        return stacked_length(self.K, self.n_t)

    def stream_slots(self, s: int) -> np.ndarray:
        """Real slots [Re p_s; Im p_s] of stream s inside the stacked vector."""
        off = self.K + 1 + s * self.n_t
        re = np.arange(off, off + self.n_t)
        return np.concatenate([re, self.L + re])

    @property
    def precoder_slots(self) -> np.ndarray:
        """Precoder slots in D_pr order (all real parts, then all imaginary)."""
        off = self.K + 1
        re = np.arange(off, off + (self.K + 1) * self.n_t)
        return np.concatenate([re, self.L + re])

    def dpr_to_stream_order(self) -> np.ndarray:
        """Permutation from D_pr ordering to per-stream [Re;Im] column stacking."""
        pn = (self.K + 1) * self.n_t
        perm = []
        for s in range(self.K + 1):
            perm.extend(range(s * self.n_t, (s + 1) * self.n_t))
            perm.extend(range(pn + s * self.n_t, pn + (s + 1) * self.n_t))
        return np.asarray(perm)

    # -- evaluation --------------------------------------------------------
    def block_sum(self, Z: np.ndarray) -> np.ndarray:
        """Sum of per-stream diagonal blocks of the lifted matrix."""
        out = np.zeros((2 * self.n_t, 2 * self.n_t))
        for s in range(self.K + 1):
            sl = self.stream_slots(s)
            out += Z[np.ix_(sl, sl)]
        return out

    def achieved_from_lifted(self, Z: np.ndarray) -> np.ndarray:
        return self.delta2 * (self.Amat @ self.block_sum(Z).ravel()) \
            + self.sige2 * self.n_t

    def objective_value(self, Z: np.ndarray) -> float:
        """Full relaxation objective at a lifted point with unit corner."""
        alpha = Z[self.n, 0]
        res = alpha * self.desired - self.achieved_from_lifted(Z)
        w = Z[self.n, :self.n][self.precoder_slots]
        diff = self.t - w
        y = self.ell - self.rho * self.t
        return float(self.lam * np.sum(res ** 2) + y @ diff
                     + 0.5 * self.rho * diff @ diff)

    def lift_point(self, u: np.ndarray) -> np.ndarray:
        """Rank-one lifted matrix of a stacked complex vector."""
        z = np.concatenate([to_real(u), [1.0]])
        return np.outer(z, z)

    # -- solver plumbing ----------------------------------------------------
    def matches(self, K, n_t, lam, rho, delta2, sige2, beta_ant, mode) -> bool:
        return (self.K == K and self.n_t == n_t and self.lam == lam
                and self.rho == rho and self.delta2 == delta2
                and self.sige2 == sige2 and self.beta_ant == beta_ant
                and self.mode == mode)

    def compile(self):
        """Build the reduced cvxpy program once; only `ell` changes per solve."""
        dd = 2 * self.n_t
        ns = self.K + 1
        Rp = cp.Variable((dd, dd), symmetric=True)
        W = cp.Variable((dd, ns))
        alpha = cp.Variable()
        ell_w = cp.Parameter(dd * ns)

        G = cp.bmat([[Rp, W], [W.T, np.eye(ns)]])
        achieved = self.delta2 * (self.Amat @ cp.vec(Rp, order="F")) \
            + self.sige2 * self.n_t
        res = self.desired * alpha - achieved
        w = cp.vec(W, order="F")
        cons = [G >> 0, alpha >= ALPHA_FLOOR]
        for i in range(self.n_t):
            cons.append(Rp[i, i] + Rp[self.n_t + i, self.n_t + i]
                        == self.beta_ant)
        if self.mode == "sdma":
            cons.append(W[:, 0] == 0)
        objective = cp.Minimize(self.lam * cp.sum_squares(res) - ell_w @ w
                                + 0.5 * self.rho * cp.sum_squares(w))
        self._compiled = {"prob": cp.Problem(objective, cons), "Rp": Rp,
                          "W": W, "alpha": alpha, "ell_w": ell_w,
                          "perm": self.dpr_to_stream_order()}


def build_lifted_problem(v: np.ndarray, y: np.ndarray, rho: float,
                         delta: float, noise_var: float, grid: AngleGrid,
                         budget: tuple[float, float], lam: float,
                         mode: str = "rsma",
                         reuse: LiftedProblem | None = None) -> LiftedProblem:
    """Assemble the relaxation around the current (v, y) pair.

    budget is the (total, per-antenna) precoder power pair; a compiled problem
    from a previous iteration can be passed through `reuse` so only the
    penalty data is refreshed.
    """
    budget_total, beta_ant = budget
    if budget_total <= 0 or beta_ant <= 0:
        raise ValueError("precoder power budget must be positive")
    n_t = grid.steering.shape[1]
    K = (v.size - n_t - 1) // (n_t + 1)
    v_r = to_real(v)
    t = precoder_block_real(v_r, K, n_t)
    ell = y + rho * t
    const = float(y @ t + 0.5 * rho * t @ t)
    _, c_v, _ = unstack_variable(v, K, n_t)

    if reuse is not None and reuse.matches(K, n_t, lam, rho, delta ** 2,
                                           noise_var, beta_ant, mode):
        reuse.c_pin = c_v
        reuse.t = t
        reuse.ell = ell
        reuse.const = const
        return reuse

    prob = LiftedProblem(
        K=K, n_t=n_t, n=2 * stacked_length(K, n_t), lam=lam, rho=rho,
        delta2=delta ** 2, sige2=noise_var, beta_ant=beta_ant,
        budget_total=budget_total, mode=mode, desired=grid.desired.copy(),
        Amat=_pattern_quadratics(grid.steering), c_pin=c_v, t=t, ell=ell,
        const=const)
    prob.compile()
    return prob


@dataclass
class SdrResult:
    Z: np.ndarray            # lifted (n+1) x (n+1) matrix, corner equals 1
    alpha: float
    c_block: np.ndarray
    objective: float         # relaxation value including the penalty constants
    status: str


def solve_lifted(problem: LiftedProblem, tol: float = 1e-6) -> SdrResult:
    """Solve the relaxation to the requested accuracy and assemble the lifted matrix."""
    comp = problem._compiled
    comp["ell_w"].value = problem.ell[comp["perm"]]
    prob = comp["prob"]
    try:
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=min(tol, 1e-8),
                   tol_gap_rel=min(tol, 1e-8),
                   tol_feas=min(tol * 1e-1, 1e-9))
    except cp.error.SolverError:
        prob.solve(solver=cp.SCS, eps_abs=tol * 1e-2, eps_rel=tol * 1e-2,
                   max_iters=200_000)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(
            f"relaxation solve failed with status {prob.status!r}; "
            f"residual diagnostics: {prob.solver_stats}")

    Rp = np.asarray(comp["Rp"].value)
    W = np.asarray(comp["W"].value)
    alpha = float(comp["alpha"].value)
    Z = _assemble_lifted(problem, Rp, W, alpha)
    return SdrResult(Z=Z, alpha=alpha, c_block=problem.c_pin.copy(),
                     objective=float(prob.value) + problem.const,
                     status=prob.status)


def _assemble_lifted(problem: LiftedProblem, Rp: np.ndarray, W: np.ndarray,
                     alpha: float) -> np.ndarray:
    """Exact completion of the reduced solution into the homogenized matrix.

    Z = [u u^T + D, u; u^T, 1] where the slack D = Rp - W W^T >= 0 is placed
    in one stream's diagonal block, preserving both the block sums and
    positive semidefiniteness.
    """
    n = problem.n
    u_r = np.zeros(n)
    u_r[0] = alpha
    u_r[1:problem.K + 1] = problem.c_pin
    perm = problem.dpr_to_stream_order()
    w_dpr = np.empty(perm.size)
    w_dpr[perm] = W.reshape(-1, order="F")
    u_r[problem.precoder_slots] = w_dpr

    slack = Rp - W @ W.T
    slack = 0.5 * (slack + slack.T)
    vals, vecs = np.linalg.eigh(slack)
    slack = (vecs * np.clip(vals, 0.0, None)) @ vecs.T

    z = np.concatenate([u_r, [1.0]])
    Z = np.outer(z, z)
    embed_stream = 1 if problem.mode == "sdma" else 0
    sl = problem.stream_slots(embed_stream)
    Z[np.ix_(sl, sl)] += slack
    return Z


def recover_rank_one(Z: np.ndarray, problem: LiftedProblem,
                     randomization: int = 0):
    """Extract a feasible stacked vector from the lifted matrix.

    Candidates are the homogenized linear block and the dominant eigenvector
    of the bordered precoder minor (plus optional Gaussian randomization);
    each is projected onto the exact per-antenna power level and the best
    objective wins. Returns (u, info) with the rank-one gap in info.
    """
    n = problem.n
    pp = problem.precoder_slots
    minor_idx = np.concatenate([pp, [n]])
    minor = Z[np.ix_(minor_idx, minor_idx)]
    vals, vecs = np.linalg.eigh(minor)
    lead = vals[-1]
    gap = float(vals[-2] / lead) if lead > 1e-14 else 0.0

    corner = Z[n, n]
    alpha = max(float(Z[n, 0] / corner) if corner > 1e-12 else ALPHA_FLOOR,
                ALPHA_FLOOR)
    candidates = []
    if corner > 1e-12:
        candidates.append(Z[n, :n][pp] / corner)
    top = vecs[:, -1]
    if abs(top[-1]) > 1e-8:
        candidates.append(top[:-1] / top[-1])
    else:
        w_eig = top[:-1] * np.sqrt(max(lead, 0.0))
        pivot = np.argmax(np.abs(w_eig))
        if w_eig[pivot] < 0:
            w_eig = -w_eig
        candidates.append(w_eig)
    if randomization > 0:
        rng = np.random.default_rng(12345)
        factor = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
        for _ in range(randomization):
            sample = factor @ rng.standard_normal(minor_idx.size)
            candidates.append(sample[:-1] / sample[-1]
                              if abs(sample[-1]) > 1e-8 else sample[:-1])

    best_u, best_val = None, np.inf
    for w in candidates:
        P = _precoders_from_block(w, problem)
        P = project_per_antenna(P, problem.beta_ant, problem.mode)
        u = stack_variable(alpha, problem.c_pin, P)
        val = problem.objective_value(problem.lift_point(u))
        if val < best_val - 1e-12:
            best_u, best_val = u, val
    info = {"rank_one_gap": gap, "objective": best_val,
            "candidates": len(candidates)}
    return best_u, info


def _precoders_from_block(w_dpr: np.ndarray, problem: LiftedProblem) -> np.ndarray:
    pn = (problem.K + 1) * problem.n_t
    vec = w_dpr[:pn] + 1j * w_dpr[pn:]
    return vec.reshape(problem.n_t, problem.K + 1, order="F")


def solve_u_update(v: np.ndarray, y: np.ndarray, rho: float,
                   model: QuantizationModel, grid: AngleGrid,
                   cfg: SystemConfig, reuse: LiftedProblem | None = None,
                   tol: float = 1e-6):
    """Refresh alpha, build and solve the relaxation, recover a rank-one point.

    Returns (u, problem, info); u satisfies the per-antenna power equality
    exactly and carries the closed-form optimal alpha for its precoders.
    """
    K, n_t = cfg.K, cfg.n_t
    budget = precoder_power_budget(cfg.p_total, n_t, cfg.bits, cfg.p_dac_watts)
    _, c_v, P_v = unstack_variable(v, K, n_t)
    alpha_in = optimal_alpha(P_v, model.delta, model.noise_var, grid)
    v_refreshed = stack_variable(alpha_in, c_v, P_v)

    problem = build_lifted_problem(v_refreshed, y, rho, model.delta,
                                   model.noise_var, grid, budget, cfg.lam,
                                   mode=cfg.mode, reuse=reuse)
    result = solve_lifted(problem, tol=tol)
    u, info = recover_rank_one(result.Z, problem,
                               randomization=50 if cfg.sdr_randomization else 0)
    _, c_u, P_u = unstack_variable(u, K, n_t)
    alpha_u = optimal_alpha(P_u, model.delta, model.noise_var, grid)
    u = stack_variable(alpha_u, c_v, P_u)
    info.update({"relaxation_objective": result.objective,
                 "status": result.status, "alpha_refresh": alpha_in})
    return u, problem, info
