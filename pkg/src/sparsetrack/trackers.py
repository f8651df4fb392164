"""Recursive reconstruction of sparse signal sequences.

Each step consumes one measurement vector and the support estimate fed back
from the previous step:

* ``modcs_step``: partial-support l1 with ``T = N_hat[t-1]`` then a single
  threshold.
* ``modcs_aldl_step``: the same l1 solve followed by add / least squares /
  delete support refinement.
* ``lscs_step``: least squares on ``T``, l1 on the residual, add the two,
  then add / least squares / delete.
* ``simple_cs_step``: memoryless basis pursuit denoising baseline.

At ``t = 0`` the recursive algorithms use ``T = {}`` (plain CS); callers pass
the larger initial matrix ``A0`` there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .l1 import PartialL1Solver, SolverConfig, as_index_array, restricted_least_squares

__all__ = [
    "ALGORITHMS",
    "Thresholds",
    "TrackerState",
    "StepTrace",
    "support_threshold",
    "modcs_step",
    "modcs_aldl_step",
    "lscs_step",
    "simple_cs_step",
    "Tracker",
]

ALGORITHMS = ("cs", "modcs", "modcs-aldl", "lscs")


@dataclass(frozen=True)
class Thresholds:
    alpha: float = 0.0
    alpha_add: float = 0.0
    alpha_del: float = 0.0

    def __post_init__(self):
        if min(self.alpha, self.alpha_add, self.alpha_del) < 0:
            raise ValueError("thresholds must be >= 0")

    @classmethod
    def recipe(cls, c: float, r: float) -> "Thresholds":
        """Addition at half the noise amplitude, deletion at ``r/2``, and the
        single threshold half way between."""
        add, dele = c / 2, r / 2
        return cls(alpha=(add + dele) / 2, alpha_add=add, alpha_del=dele)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "alpha_add": self.alpha_add, "alpha_del": self.alpha_del}


@dataclass
class TrackerState:
    n_hat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    t: int = 0


@dataclass
class StepTrace:
    t: int
    T: np.ndarray
    x_cs: np.ndarray
    x_final: np.ndarray
    n_hat_next: np.ndarray
    T_det: np.ndarray | None = None
    x_det: np.ndarray | None = None
    x_init: np.ndarray | None = None
    ls_error_vec: np.ndarray | None = None
    converged: bool = True
    iterations: int = 0
    rank_deficient: bool = False


def support_threshold(xhat, tau, base=None, mode="single") -> np.ndarray:
    """Threshold-based support update.

    ``single``: ``{i : |x_i| > tau}``; ``add``: ``base`` plus every
    ``i`` outside ``base`` with ``|x_i| > tau``; ``del``: ``base`` minus every
    ``i`` in ``base`` with ``|x_i| <= tau``.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    mag = np.abs(np.asarray(xhat, dtype=float))
    m = mag.size
    if mode == "single":
        return np.flatnonzero(mag > tau)
    base = as_index_array(base, m)
    if mode == "add":
        return np.union1d(base, np.flatnonzero(mag > tau))
    if mode == "del":
        return base[mag[base] > tau]
    raise ValueError(f"unknown mode {mode!r}")


def _solver(A) -> PartialL1Solver:
    return A if isinstance(A, PartialL1Solver) else PartialL1Solver(A)


def _prior(state: TrackerState):
    return np.zeros(0, dtype=np.intp) if state.t == 0 else as_index_array(state.n_hat)


def _add_ls_del(A, y, x_cs, T, thr: Thresholds, truth):
    n = A.shape[0]
    T_det = support_threshold(x_cs, thr.alpha_add, base=T, mode="add")
    det = restricted_least_squares(A, y, T_det)
    T_final = support_threshold(det.x, thr.alpha_del, base=T_det, mode="del")
    final = restricted_least_squares(A, y, T_final)
    err = None
    if truth is not None:
        err = (np.asarray(truth) - det.x)[T_det]
    flagged = det.rank_deficient or final.rank_deficient or T_det.size > n
    return T_det, det.x, T_final, final.x, err, flagged


def modcs_step(state: TrackerState, A, y, eps, thr: Thresholds,
               cfg: SolverConfig | None = None, truth=None, x0=None):
    """One step of modified-CS with a single support threshold ``alpha``."""
    solver = _solver(A)
    T = _prior(state)
    res = solver.solve(y, T, eps, cfg, x0=x0)
    n_hat = support_threshold(res.beta, thr.alpha, mode="single")
    trace = StepTrace(t=state.t, T=T, x_cs=res.beta, x_final=res.beta, n_hat_next=n_hat,
                      converged=res.converged, iterations=res.iterations)
    return trace, TrackerState(n_hat=n_hat, t=state.t + 1)


def modcs_aldl_step(state: TrackerState, A, y, eps, thr: Thresholds,
                    cfg: SolverConfig | None = None, truth=None, x0=None):
    """One step of modified-CS followed by add-LS-del."""
    solver = _solver(A)
    T = _prior(state)
    res = solver.solve(y, T, eps, cfg, x0=x0)
    T_det, x_det, T_final, x_final, err, flagged = _add_ls_del(
        solver.A, y, res.beta, T, thr, truth)
    trace = StepTrace(t=state.t, T=T, x_cs=res.beta, x_final=x_final, n_hat_next=T_final,
                      T_det=T_det, x_det=x_det, ls_error_vec=err,
                      converged=res.converged, iterations=res.iterations,
                      rank_deficient=flagged)
    return trace, TrackerState(n_hat=T_final, t=state.t + 1)


def lscs_step(state: TrackerState, A, y, eps, thr: Thresholds,
              cfg: SolverConfig | None = None, truth=None, x0=None):
    """One step of LS-CS (CS on the LS residual) followed by add-LS-del."""
    if state.t == 0:
        return modcs_aldl_step(state, A, y, eps, thr, cfg, truth, x0)
    solver = _solver(A)
    T = _prior(state)
    init = restricted_least_squares(solver.A, y, T)
    y_res = np.asarray(y, dtype=float) - solver.A @ init.x
    res = solver.solve(y_res, None, eps, cfg, x0=x0)
    x_csres = res.beta + init.x
    T_det, x_det, T_final, x_final, err, flagged = _add_ls_del(
        solver.A, y, x_csres, T, thr, truth)
    trace = StepTrace(t=state.t, T=T, x_cs=x_csres, x_final=x_final, n_hat_next=T_final,
                      T_det=T_det, x_det=x_det, x_init=init.x, ls_error_vec=err,
                      converged=res.converged, iterations=res.iterations,
                      rank_deficient=flagged or init.rank_deficient)
    return trace, TrackerState(n_hat=T_final, t=state.t + 1)


def simple_cs_step(A, y, eps, thr: Thresholds, cfg: SolverConfig | None = None, t: int = 0):
    """Basis pursuit denoising with no prior support (baseline)."""
    solver = _solver(A)
    res = solver.solve(y, None, eps, cfg)
    n_hat = support_threshold(res.beta, thr.alpha, mode="single")
    empty = np.zeros(0, dtype=np.intp)
    trace = StepTrace(t=t, T=empty, x_cs=res.beta, x_final=res.beta, n_hat_next=n_hat,
                      converged=res.converged, iterations=res.iterations)
    return trace, TrackerState(n_hat=n_hat, t=t + 1)


_STEPS = {
    "modcs": modcs_step,
    "modcs-aldl": modcs_aldl_step,
    "lscs": lscs_step,
}


class Tracker:
    """Stateful wrapper running one algorithm over a measurement stream.

    ``A0``/``eps0`` are used at ``t = 0`` and ``A``/``eps`` afterwards.
    """

    def __init__(self, algorithm, A, eps, thresholds: Thresholds, cfg: SolverConfig | None = None,
                 A0=None, eps0=None, warm_start=True):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
        self.algorithm = algorithm
        self.solver = _solver(A)
        self.solver0 = self.solver if A0 is None else _solver(A0)
        self.eps = float(eps)
        self.eps0 = self.eps if eps0 is None else float(eps0)
        self.thresholds = thresholds
        self.cfg = cfg or SolverConfig()
        self.warm_start = warm_start
        self.state = TrackerState()
        self._last = None

    def step(self, y, truth=None) -> StepTrace:
        t = self.state.t
        solver = self.solver0 if t == 0 else self.solver
        eps = self.eps0 if t == 0 else self.eps
        if self.algorithm == "cs":
            trace, self.state = simple_cs_step(solver, y, eps, self.thresholds, self.cfg, t=t)
            return trace
        # the l1 program of LS-CS acts on a residual, so its previous output is no guess
        x0 = self._last if (self.warm_start and t > 0 and self.algorithm != "lscs") else None
        trace, self.state = _STEPS[self.algorithm](self.state, solver, y, eps, self.thresholds,
                                                   self.cfg, truth, x0)
        self._last = trace.x_cs
        return trace
