"""Stacked-variable layout and the selector operators of the ADMM splitting.

The complex stacked variable is x = [alpha, c_1..c_K, vec(P)] with vec(P)
column-major: [p_c; p_1; ...; p_K]. Its real counterpart is [Re(x); Im(x)].
"""

from dataclasses import dataclass

import numpy as np


def stacked_length(K: int, n_t: int) -> int:
    return (K + 1) * n_t + K + 1


def stack_variable(alpha: float, c: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Pack (alpha, c, P) into the complex stacked vector."""
    n_t, ns = P.shape
    v = np.empty(ns * n_t + ns, dtype=complex)
    v[0] = alpha
    v[1:ns] = np.asarray(c, dtype=float)
    v[ns:] = P.reshape(-1, order="F")
    return v


def unstack_variable(v: np.ndarray, K: int, n_t: int):
    """Inverse of stack_variable: (alpha, c, P)."""
    alpha = float(v[0].real)
    c = v[1:K + 1].real.astype(float)
    P = v[K + 1:].reshape(n_t, K + 1, order="F")
    return alpha, c, P


def to_real(z: np.ndarray) -> np.ndarray:
    """[Re(z); Im(z)] stacking."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag])


def to_complex(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    return x[:half] + 1j * x[half:]


@dataclass(frozen=True)
class SplitOperators:
    """Selector matrices that split the stacked variable into its blocks."""

    K: int
    n_t: int
    D_p: np.ndarray           # precoder block from the complex stacking
    D_c: np.ndarray           # common precoder
    D_k: tuple                # private precoders, one selector per user
    D_pr: np.ndarray          # Diag(D_p, D_p) acting on the real stacking
    basis: np.ndarray         # identity whose rows are the e_k vectors

    def e(self, k: int) -> np.ndarray:
        """k-th standard basis vector, 1-based as written (e_2 selects C_1)."""
        return self.basis[k - 1]


def build_split_operators(K: int, n_t: int) -> SplitOperators:
    """Selectors with the block shapes of the splitting definition."""
    if K < 1 or n_t < 1:
        raise ValueError("K and n_t must be >= 1")
    L = stacked_length(K, n_t)
    pn = (K + 1) * n_t
    D_p = np.hstack([np.zeros((pn, K + 1)), np.eye(pn)])
    D_c = np.hstack([np.zeros((n_t, K + 1)), np.eye(n_t), np.zeros((n_t, K * n_t))])
    D_k = tuple(
        np.hstack([np.zeros((n_t, K + 1 + k * n_t)), np.eye(n_t),
                   np.zeros((n_t, (K - k) * n_t))])
        for k in range(1, K + 1))
    D_pr = np.block([[D_p, np.zeros_like(D_p)], [np.zeros_like(D_p), D_p]])
    return SplitOperators(K=K, n_t=n_t, D_p=D_p, D_c=D_c, D_k=D_k, D_pr=D_pr,
                          basis=np.eye(L))


def precoder_block_real(x_r: np.ndarray, K: int, n_t: int) -> np.ndarray:
    """D_pr applied to a real stacked vector, without forming the matrix."""
    L = stacked_length(K, n_t)
    off = K + 1
    return np.concatenate([x_r[off:L], x_r[L + off:]])


def residuals(v_r: np.ndarray, u_r: np.ndarray, u_r_prev: np.ndarray,
              ops: SplitOperators, rho: float = 1.0,
              textbook_dual: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Primal residual D_pr(v - u) and dual residual D_pr(u - u_prev).

    The dual residual carries no rho factor unless textbook_dual is set.
    """
    r = precoder_block_real(v_r - u_r, ops.K, ops.n_t)
    q = precoder_block_real(u_r - u_r_prev, ops.K, ops.n_t)
    if textbook_dual:
        q = rho * q
    return r, q


def dual_update(y: np.ndarray, rho: float, v_r: np.ndarray, u_r: np.ndarray,
                ops: SplitOperators) -> np.ndarray:
    """Ascent step y + rho * D_pr(v - u)."""
    return y + rho * precoder_block_real(v_r - u_r, ops.K, ops.n_t)


def project_per_antenna(P: np.ndarray, per_antenna: float,
                        mode: str = "rsma") -> np.ndarray:
    """Rescale each antenna row of P so its power equals the per-antenna budget.

    Rows with no power to rescale get the budget spread evenly over the
    allowed streams (the common column stays zero in SDMA mode).
    """
    P = np.array(P, dtype=complex)
    n_t, ns = P.shape
    allowed = np.arange(ns) if mode == "rsma" else np.arange(1, ns)
    if mode == "sdma":
        P[:, 0] = 0.0
    row_power = np.sum(np.abs(P) ** 2, axis=1)
    for i in range(n_t):
        if row_power[i] > 1e-30:
            P[i] *= np.sqrt(per_antenna / row_power[i])
        else:
            P[i, allowed] = np.sqrt(per_antenna / allowed.size)
    return P
