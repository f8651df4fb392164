"""Sparse signal sequences with slowly changing support.

Every support element follows a ramp: it enters at magnitude ``r``, grows by
``r`` per step up to ``M = d r``, stays there until it is picked to decay, and
then falls by ``r`` per step until it leaves the support. Each step adds
``Sa`` new elements and starts ``Sa`` decays, so the support size and the
magnitude histogram never change.

Index sets are stored as sorted ``int`` arrays (0-based).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ModelInfeasibleError

__all__ = [
    "ModelParams",
    "SignalState",
    "TransitionSets",
    "AuditReport",
    "init_signal",
    "step_signal",
    "small_set",
    "audit_transition",
    "generate_trajectory",
    "signal_power",
]


@dataclass(frozen=True)
class ModelParams:
    m: int
    s0: int
    sa: int
    d: int
    r: float

    def __post_init__(self):
        problems = []
        if self.m < 1:
            problems.append("m >= 1")
        if self.d < 1:
            problems.append("d >= 1")
        if not self.r > 0:
            problems.append("r > 0")
        if self.sa < 1:
            problems.append("Sa >= 1")
        if self.s0 < (2 * self.d - 2) * self.sa:
            problems.append("S0 >= (2d-2)*Sa")
        if not self.m > self.s0 + self.sa:
            problems.append("m > S0 + Sa")
        if self.s0 - (2 * self.d - 2) * self.sa < self.sa:
            # new decays are drawn from the constant set each step
            problems.append("S0 - (2d-2)*Sa >= Sa")
        if problems:
            raise ConfigurationError("model parameters violate: " + ", ".join(problems))

    @property
    def M(self) -> float:
        return self.d * self.r

    @property
    def n_constant(self) -> int:
        return self.s0 - (2 * self.d - 2) * self.sa

    @property
    def power(self) -> float:
        """Signal energy, identical at every time step."""
        ramp = sum(j * j for j in range(1, self.d)) * self.r ** 2
        return self.n_constant * self.M ** 2 + 2 * self.sa * ramp

    @classmethod
    def from_dict(cls, cfg: dict) -> "ModelParams":
        try:
            return cls(m=int(cfg["m"]), s0=int(cfg["s0"]), sa=int(cfg["sa"]),
                       d=int(cfg["d"]), r=float(cfg["r"]))
        except KeyError as exc:
            raise ConfigurationError(f"model config missing key {exc}") from None

    def to_dict(self) -> dict:
        return {"m": self.m, "s0": self.s0, "sa": self.sa, "d": self.d, "r": self.r}


def _idx(a) -> np.ndarray:
    return np.unique(np.asarray(a, dtype=np.intp))


@dataclass
class SignalState:
    t: int
    x: np.ndarray
    inc: np.ndarray
    dec: np.ndarray
    con: np.ndarray
    params: ModelParams = field(repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.union1d(np.union1d(self.inc, self.dec), self.con)

    @property
    def signs(self) -> dict:
        s = self.support
        return dict(zip(s.tolist(), np.sign(self.x[s]).astype(int).tolist()))

    def levels(self) -> np.ndarray:
        """Magnitudes in units of ``r`` (integers, 0 off the support)."""
        return np.rint(np.abs(self.x) / self.params.r).astype(int)


@dataclass
class TransitionSets:
    added: np.ndarray
    removed: np.ndarray
    increased: dict
    decreased: dict


@dataclass
class AuditReport:
    t: int
    j: int
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def signal_power(params: ModelParams) -> float:
    return params.power


def init_signal(params: ModelParams, seed=None) -> SignalState:
    """Draw the t = 0 signal.

    For each ``j = 1 .. d-1`` there are ``2 Sa`` elements at magnitude
    ``j r``, half increasing and half decreasing; the remaining
    ``S0 - (2d-2) Sa`` elements sit at ``M`` in the constant set.
    """
    rng = np.random.default_rng(seed)
    p = params
    support = rng.choice(p.m, size=p.s0, replace=False)
    signs = rng.choice(np.array([-1.0, 1.0]), size=p.s0)
    x = np.zeros(p.m)
    inc, dec = [], []
    pos = 0
    for j in range(1, p.d):
        block = support[pos:pos + 2 * p.sa]
        x[block] = j * p.r
        inc.extend(block[:p.sa])
        dec.extend(block[p.sa:])
        pos += 2 * p.sa
    con = support[pos:]
    x[con] = p.M
    x[support] *= signs
    return SignalState(t=0, x=x, inc=_idx(inc), dec=_idx(dec), con=_idx(con), params=p)


def step_signal(state: SignalState, rng) -> tuple[SignalState, TransitionSets]:
    """Advance one time step of the generative model.

    ``rng`` is a ``numpy.random.Generator`` (or a seed); all randomness of
    the step comes from it.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    p = state.params
    r, d = p.r, p.d
    prev = state.x
    prev_lvl = state.levels()
    inc0, dec0, con0 = state.inc, state.dec, state.con

    # 1. ramp the existing increasing / decreasing elements
    x = prev.copy()
    x[inc0] = (np.abs(prev[inc0]) + r) * np.sign(prev[inc0])
    x[dec0] = (np.abs(prev[dec0]) - r) * np.sign(prev[dec0])

    # 2. new additions from the complement, new decays from the constant set
    outside = np.setdiff1d(np.arange(p.m), state.support, assume_unique=True)
    if con0.size < p.sa:
        raise ModelInfeasibleError(
            f"constant set has {con0.size} elements, need {p.sa} to start decays")
    added = _idx(rng.choice(outside, size=p.sa, replace=False))
    new_dec = _idx(rng.choice(con0, size=p.sa, replace=False))
    x[added] = r * rng.choice(np.array([-1.0, 1.0]), size=p.sa)
    x[new_dec] = (d - 1) * r * np.sign(prev[new_dec])

    # 3. bookkeeping
    top = _idx(inc0[prev_lvl[inc0] == d - 1])      # I_t(d)
    removed = _idx(dec0[prev_lvl[dec0] == 1])      # D_t(0)
    inc = np.setdiff1d(np.union1d(inc0, added), top)
    dec = np.setdiff1d(np.union1d(dec0, new_dec), removed)
    con = np.setdiff1d(np.union1d(con0, top), new_dec)
    if d == 1:
        # ramps have length zero: additions land at M, decays vanish at once
        x[added] = np.sign(x[added]) * p.M
        x[new_dec] = 0.0
        inc = np.zeros(0, dtype=np.intp)
        dec = np.zeros(0, dtype=np.intp)
        removed = new_dec
        con = np.union1d(np.setdiff1d(con0, new_dec), added)
    # elements removed this step are exactly zero
    x[removed] = 0.0

    nxt = SignalState(t=state.t + 1, x=x, inc=inc, dec=dec, con=con, params=p)
    ts = _transition_sets(prev_lvl, nxt.levels(), d, added, removed)
    return nxt, ts


def _transition_sets(prev_lvl, next_lvl, d, added, removed) -> TransitionSets:
    increased = {}
    decreased = {}
    for j in range(1, d + 1):
        increased[j] = _idx(np.flatnonzero((next_lvl == j) & (prev_lvl == j - 1)))
    for j in range(0, d):
        decreased[j] = _idx(np.flatnonzero((next_lvl == j) & (prev_lvl == j + 1)))
    return TransitionSets(added=added, removed=removed,
                          increased=increased, decreased=decreased)


def small_set(state: SignalState, j: int) -> np.ndarray:
    """Indices with ``0 < |x_i| < j r``."""
    d = state.params.d
    if not 1 <= j <= d:
        raise ValueError(f"j must satisfy 1 <= j <= d={d}, got {j}")
    lvl = state.levels()
    return np.flatnonzero((lvl > 0) & (lvl < j))


def audit_transition(prev: SignalState, nxt: SignalState, ts: TransitionSets,
                     j: int) -> AuditReport:
    """Check the small-set evolution identities between two states.

    The identities are::

        S_t(j) = S_{t-1}(j) + (A_t + D_t(j-1)) - (R_t + I_t(j))
        (S_{t-1}(j) + A_t) - R_t = (S_t(j) + I_t(j)) - D_t(j-1)

    with ``+``/``-`` set union/difference. Nothing is raised; failures are
    listed in the report.
    """
    failures = []
    lv = np.abs(nxt.x) / nxt.params.r
    if not np.allclose(lv, np.rint(lv), atol=1e-9):
        failures.append("magnitude off the r-grid")
    s_prev = set(small_set(prev, j).tolist())
    s_next = set(small_set(nxt, j).tolist())
    A_t = set(ts.added.tolist())
    R_t = set(ts.removed.tolist())
    I_j = set(ts.increased.get(j, np.zeros(0, int)).tolist())
    D_jm1 = set(ts.decreased.get(j - 1, np.zeros(0, int)).tolist())

    lhs = (s_prev | A_t | D_jm1) - (R_t | I_j)
    if lhs != s_next:
        failures.append("small-set evolution")
    if (s_prev | A_t) - R_t != (s_next | I_j) - D_jm1:
        failures.append("rearranged small-set identity")
    # at j = 1 the additions are I_t(1) and the removals D_t(0) by definition
    if j >= 2 and ((A_t & R_t) or (A_t & D_jm1) or (A_t & I_j) or (R_t & D_jm1)
                   or (R_t & I_j) or (D_jm1 & I_j)):
        failures.append("transition sets not disjoint")
    return AuditReport(t=nxt.t, j=j, failures=failures)


def generate_trajectory(params: ModelParams, horizon: int, seed=None):
    """Return ``(states, transitions)`` for ``t = 0 .. horizon-1``.

    ``transitions[k]`` maps ``states[k]`` to ``states[k+1]``.
    """
    rng = np.random.default_rng(seed)
    state = init_signal(params, rng)
    states = [state]
    transitions = []
    for _ in range(horizon - 1):
        state, ts = step_signal(state, rng)
        states.append(state)
        transitions.append(ts)
    return states, transitions
