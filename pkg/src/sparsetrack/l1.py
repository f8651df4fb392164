"""Partial-support l1 minimization and restricted least squares.

The core program is::

    minimize    ||beta[T^c]||_1
    subject to  ||y - A beta||_2 <= eps

which is basis pursuit denoising when ``T`` is empty. It is solved with
ADMM on the splitting ``z = x``, ``v = A x``: the x-update is a fixed
linear solve (factored once per matrix), the z-update is a weighted
soft-threshold with zero weight on ``T`` and the v-update is the closed
form projection onto the ball of radius ``eps`` around ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InfeasibleProblemError

__all__ = [
    "SolverConfig",
    "SolveResult",
    "LSEstimate",
    "KKTDiagnostics",
    "PartialL1Solver",
    "solve_partial_l1",
    "restricted_least_squares",
    "kkt_residual",
    "as_index_array",
]


def as_index_array(T, m=None) -> np.ndarray:
    """Return ``T`` as a sorted, unique int array (validated against ``m``)."""
    if T is None:
        return np.zeros(0, dtype=np.intp)
    idx = np.unique(np.asarray(list(T) if isinstance(T, (set, frozenset)) else T,
                               dtype=np.intp).ravel())
    if m is not None and idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise ValueError(f"index set out of range [0, {m})")
    return idx


@dataclass(frozen=True)
class SolverConfig:
    """ADMM settings.

    ``primal_tol`` is the relative stopping tolerance on the primal and dual
    residuals, ``feas_tol`` the accepted violation of the ball constraint
    after the final feasibility correction.
    """

    max_iters: int = 5000
    primal_tol: float = 1e-6
    feas_tol: float = 1e-8
    penalty: float = 1.0
    over_relaxation: float = 1.6
    adaptive_penalty: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not (self.primal_tol > 0 and self.feas_tol > 0):
            raise ConfigurationError("tolerances must be > 0")
        if not self.penalty > 0:
            raise ConfigurationError("penalty must be > 0")
        if not 1.0 <= self.over_relaxation < 2.0:
            raise ConfigurationError("over_relaxation must lie in [1, 2)")


@dataclass
class SolveResult:
    beta: np.ndarray
    iterations: int
    feas_violation: float
    objective: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


@dataclass
class LSEstimate:
    """Least-squares estimate supported on ``support``."""

    x: np.ndarray
    support: np.ndarray
    rank_deficient: bool = False


@dataclass
class KKTDiagnostics:
    feasibility_gap: float
    stationarity: float
    multiplier: float


def _project_ball(v, center, radius):
    d = v - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return v
    if radius == 0.0:
        return center.copy()
    return center + d * (radius / nd)


class PartialL1Solver:
    """Solver bound to one measurement matrix.

    Factorizations are computed once in the constructor so that a tracker
    can reuse them across time steps. With ``K = [I; A]`` the x-update
    followed by ``K x`` is a single product with the projector
    ``K (K'K)^{-1} K'``.
    """

    check_every = 5
    # residual balancing can cycle; after this many changes rho stays fixed
    max_penalty_updates = 20

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise ValueError("A must be a 2-D array")
        self.A = A
        self.n, self.m = A.shape
        n, m = self.n, self.m
        # (I + A'A)^{-1} = I - A' (I + AA')^{-1} A
        inv_rows = np.linalg.inv(np.eye(n) + A @ A.T)
        H = np.eye(m) - A.T @ inv_rows @ A
        K = np.vstack([np.eye(m), A])
        self._proj = K @ H @ K.T
        self._pinv = np.linalg.pinv(A)

    def min_residual(self, y):
        """Smallest achievable ``||y - A beta||``."""
        return float(np.linalg.norm(y - self.A @ (self._pinv @ y)))

    def solve(self, y, T=None, eps=0.0, cfg: SolverConfig | None = None,
              x0=None, record_history=False) -> SolveResult:
        cfg = cfg or SolverConfig()
        A, m, n = self.A, self.m, self.n
        y = np.asarray(y, dtype=float)
        if y.shape != (n,):
            raise ValueError(f"y must have shape ({n},), got {y.shape}")
        if eps < 0:
            raise ValueError("eps must be >= 0")
        T = as_index_array(T, m)
        weights = np.ones(m)
        weights[T] = 0.0

        scale = max(float(np.linalg.norm(y)), 1.0)
        min_res = self.min_residual(y)
        if min_res > eps + cfg.feas_tol * scale:
            raise InfeasibleProblemError(
                f"minimum residual {min_res:.3e} exceeds eps={eps:.3e}")

        rho = cfg.penalty
        alpha = cfg.over_relaxation
        P = self._proj
        # stacked splitting variable s = (z, v) and scaled dual u
        s = np.empty(m + n)
        s[:m] = 0.0 if x0 is None else np.asarray(x0, dtype=float)
        s[m:] = _project_ball(A @ s[:m], y, eps)
        u = np.zeros(m + n)
        tol = cfg.primal_tol
        abs_floor = 1e-2 * np.sqrt(m + n) * scale
        history = []
        converged = False
        updates = 0
        it = 0
        every = 1 if record_history else self.check_every
        for it in range(1, cfg.max_iters + 1):
            q = P @ (s - u)
            h = alpha * q + (1.0 - alpha) * s if alpha != 1.0 else q
            wv = h + u
            s_new = np.empty_like(s)
            z = wv[:m]
            s_new[:m] = np.sign(z) * np.maximum(np.abs(z) - weights / rho, 0.0)
            s_new[m:] = _project_ball(wv[m:], y, eps)
            u_new = wv - s_new
            if it % every == 0 or it == cfg.max_iters:
                ds = s_new - s
                r_vec = q - s_new
                r_norm = math.sqrt(r_vec @ r_vec)
                dual = ds[:m] + A.T @ ds[m:]
                s_norm = rho * math.sqrt(dual @ dual)
                if record_history:
                    dw = ds + (u_new - u)
                    history.append({
                        "iteration": it,
                        "primal_residual": r_norm,
                        "dual_residual": s_norm,
                        "rho": rho,
                        # s + u is the Douglas-Rachford variable; its steps never grow
                        "fixed_point_residual": float(dw @ dw),
                    })
                eps_pri = tol * (abs_floor + max(math.sqrt(q @ q), math.sqrt(s_new @ s_new)))
                ku = u_new[:m] + A.T @ u_new[m:]
                eps_dual = tol * (abs_floor + rho * math.sqrt(ku @ ku))
                s, u = s_new, u_new
                if r_norm <= eps_pri and s_norm <= eps_dual:
                    converged = True
                    break
                if cfg.adaptive_penalty and updates < self.max_penalty_updates:
                    if r_norm > 10.0 * s_norm:
                        rho *= 2.0
                        u /= 2.0
                        updates += 1
                    elif s_norm > 10.0 * r_norm:
                        rho /= 2.0
                        u *= 2.0
                        updates += 1
            else:
                s, u = s_new, u_new

        beta = self._feasibility_correction(s[:m], y, eps)
        viol = max(0.0, float(np.linalg.norm(y - A @ beta)) - eps)
        objective = float(np.sum(np.abs(beta) * weights))
        if eps == 0.0 and converged:
            beta, viol, objective = self._polish(beta, y, T, weights, viol, objective, cfg, scale)
        if viol > cfg.feas_tol * scale:
            converged = False
        return SolveResult(beta=beta, iterations=it, feas_violation=viol,
                           objective=objective, converged=converged,
                           history=history)

    def _polish(self, beta, y, T, weights, viol, objective, cfg, scale):
        """Refit the equality-constrained problem on the detected support.

        Only accepted when the refit is exactly feasible and its objective
        is no worse than the ADMM iterate's, so it can only sharpen a
        solution, never move to a different one.
        """
        big = np.abs(beta) > 1e-4 * max(float(np.max(np.abs(beta))), 1e-300)
        big[T] = True
        S = np.flatnonzero(big)
        if S.size == 0 or S.size > self.n:
            return beta, viol, objective
        z, *_ = np.linalg.lstsq(self.A[:, S], y, rcond=None)
        cand = np.zeros(self.m)
        cand[S] = z
        cviol = float(np.linalg.norm(y - self.A @ cand))
        cobj = float(np.sum(np.abs(cand) * weights))
        if cviol <= cfg.feas_tol * scale and cobj <= objective + cfg.primal_tol * (1.0 + objective):
            return cand, cviol, cobj
        return beta, viol, objective

    def _feasibility_correction(self, beta, y, eps):
        # minimum-norm shift moving A beta onto the nearest point of the ball
        r = y - self.A @ beta
        nr = np.linalg.norm(r)
        if nr <= eps:
            return beta
        target = r * (1.0 - eps / nr)
        return beta + self._pinv @ target


def solve_partial_l1(A, y, T=None, eps=0.0, cfg: SolverConfig | None = None,
                     **kwargs) -> SolveResult:
    """Minimize ``||beta[T^c]||_1`` subject to ``||y - A beta|| <= eps``.

    Parameters
    ----------
    A : (n, m) array
    y : (n,) array
    T : iterable of int, optional
        Indices whose entries are not penalized. Empty gives plain
        basis pursuit denoising.
    eps : float
        Radius of the data-fidelity ball.
    cfg : SolverConfig, optional

    Returns
    -------
    SolveResult

    Raises
    ------
    InfeasibleProblemError
        If even the least-squares fit leaves a residual above ``eps``.
    """
    return PartialL1Solver(A).solve(y, T, eps, cfg, **kwargs)


def restricted_least_squares(A, y, T) -> LSEstimate:
    """LS estimate on ``T``: ``x[T] = pinv(A[:, T]) y`` and zero elsewhere."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = A.shape
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    T = as_index_array(T, m)
    x = np.zeros(m)
    if T.size == 0:
        return LSEstimate(x=x, support=T)
    AT = A[:, T]
    sol, _, rank, _ = np.linalg.lstsq(AT, y, rcond=None)
    x[T] = sol
    return LSEstimate(x=x, support=T, rank_deficient=bool(rank < T.size))


def kkt_residual(A, y, T, eps, beta, zero_tol=1e-6) -> KKTDiagnostics:
    """Optimality diagnostics for a candidate minimizer.

    ``feasibility_gap`` is ``max(0, ||y - A beta|| - eps)``. ``stationarity``
    is the norm of the smallest violation of ``mu * A'(y - A beta) in
    d||beta[T^c]||_1`` over multipliers ``mu >= 0`` (for ``eps = 0`` the
    multiplier is a free vector in ``R^n``). Entries with
    ``|beta_i| <= zero_tol`` count as zero.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, m = A.shape
    T = as_index_array(T, m)
    inT = np.zeros(m, dtype=bool)
    inT[T] = True
    r = y - A @ beta
    rn = float(np.linalg.norm(r))
    gap = max(0.0, rn - eps)

    active = (~inT) & (np.abs(beta) > zero_tol)
    zeros = (~inT) & ~active
    target = np.where(active, np.sign(beta), 0.0)
    fit = inT | active

    if eps == 0.0:
        # free multiplier: least-squares fit of A' nu to the subgradient pattern
        nu = np.linalg.lstsq(A[:, fit].T, target[fit], rcond=None)[0] if fit.any() else np.zeros(n)
        g = A.T @ nu
        mu = float(np.linalg.norm(nu))
    else:
        g = A.T @ r
        if rn < eps * (1 - 1e-6) or not fit.any():
            mu = 0.0
        else:
            denom = float(np.dot(g[fit], g[fit]))
            mu = max(0.0, float(np.dot(target[fit], g[fit])) / denom) if denom > 0 else 0.0
        g = mu * g
    viol = np.zeros(m)
    viol[fit] = g[fit] - target[fit]
    viol[zeros] = np.maximum(np.abs(g[zeros]) - 1.0, 0.0)
    return KKTDiagnostics(feasibility_gap=gap, stationarity=float(np.linalg.norm(viol)),
                          multiplier=mu)
