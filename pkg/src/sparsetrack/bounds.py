"""Closed-form error bounds, stability-condition certification and
trace-based verification of the stability conclusions.

All bound evaluators take a ``MatrixConstants`` holding exact restricted
isometry / orthogonality constants and raise ``MissingConstantError`` when an
order they need is absent, or ``BoundDomainError`` when a constant lies
outside the range where the bound holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import MatrixConstants
from .errors import BoundDomainError, ConfigurationError, MissingConstantError

__all__ = [
    "HALF_RIP",
    "MODCS_FACTOR",
    "VARIANTS",
    "c1",
    "c2",
    "cprime",
    "cdprime",
    "modcs_error_bound",
    "ls_step_error_bound",
    "csres_error_bound",
    "csres_error_bound_max",
    "TheoremParams",
    "ConditionEntry",
    "ConditionReport",
    "required_orders",
    "certify",
    "support_error_metrics",
    "verify_conclusions",
]

SQRT2 = math.sqrt(2.0)
HALF_RIP = (SQRT2 - 1.0) / 2.0
# c1(HALF_RIP) = 8.7895..., rounded up
MODCS_FACTOR = 8.79

VARIANTS = ("T1-modcs", "T2-aldl", "C3-aldl-relaxed", "GEN-aldl", "T3-lscs")
_ALIASES = {"T1": "T1-modcs", "T2": "T2-aldl", "C3": "C3-aldl-relaxed",
            "GEN": "GEN-aldl", "T3": "T3-lscs"}


# ---------------------------------------------------------------------------
# closed-form constants

def _denominator(delta):
    if delta < 0:
        raise BoundDomainError(f"delta must be >= 0, got {delta}")
    den = 1.0 - (SQRT2 + 1.0) * delta
    if den <= 0:
        raise BoundDomainError(f"delta={delta} must be below sqrt(2) - 1")
    return den


def c1(delta: float) -> float:
    """``4 sqrt(1 + delta) / (1 - (sqrt2 + 1) delta)``."""
    return 4.0 * math.sqrt(1.0 + delta) / _denominator(delta)


def c2(delta: float) -> float:
    """``2 (1 + (sqrt2 - 1) delta) / (1 - (sqrt2 + 1) delta)``."""
    return 2.0 * (1.0 + (SQRT2 - 1.0) * delta) / _denominator(delta)


def cprime(T_size: int, Delta_size: int, delta2D: float) -> float:
    """``C1 + sqrt2 C2 sqrt(|T| / |Delta|)`` at ``delta_{2|Delta|}``."""
    if Delta_size < 1:
        raise BoundDomainError("C' needs |Delta| >= 1")
    if T_size < 0:
        raise BoundDomainError("|T| must be >= 0")
    return c1(delta2D) + SQRT2 * c2(delta2D) * math.sqrt(T_size / Delta_size)


def cdprime(T_size: int, Delta_size: int, delta2D: float) -> float:
    """``2 C2 sqrt(|T|)`` at ``delta_{2|Delta|}``."""
    if T_size < 0:
        raise BoundDomainError("|T| must be >= 0")
    return 2.0 * c2(delta2D) * math.sqrt(T_size)


# ---------------------------------------------------------------------------
# error bounds

def modcs_error_bound(N_size, Delta_size, DeltaE_size, eps, constants: MatrixConstants) -> float:
    """Error bound of modified-CS: ``C1(delta_{|N|+|Delta|+|Delta_e|}) eps``.

    Raises
    ------
    BoundDomainError
        If that constant is not below ``sqrt2 - 1``.
    """
    k = int(N_size) + int(Delta_size) + int(DeltaE_size)
    delta = constants.get_delta(k)
    if delta >= SQRT2 - 1.0:
        raise BoundDomainError(f"delta_{k}={delta:.4g} >= sqrt(2) - 1")
    return c1(delta) * eps


def _ls_theta(T_size, Delta_size, constants):
    delta = constants.get_delta(T_size)
    if delta >= 0.5:
        raise BoundDomainError(f"delta_{T_size}={delta:.4g} >= 1/2")
    return constants.get_theta(T_size, Delta_size)


def ls_step_error_bound(T_size, Delta_size, x_delta_norm, eps, constants: MatrixConstants
                        ) -> float:
    """Bound ``sqrt2 eps + 2 theta_{|T|,|Delta|} ||x_Delta||`` on the error of
    least squares over ``T``, restricted to ``T``. Needs ``delta_{|T|} < 1/2``."""
    theta = _ls_theta(T_size, Delta_size, constants)
    return SQRT2 * eps + 2.0 * theta * x_delta_norm


def csres_error_bound(T_size, Delta_size, x_delta_norm, eps, constants: MatrixConstants
                      ) -> float:
    """Bound ``C' eps + theta C'' ||x_Delta||`` on the CS-residual error.

    Needs ``delta_{2|Delta|} < (sqrt2 - 1)/2``, ``delta_{|T|} < 1/2`` and
    ``|Delta| >= 1``.
    """
    if Delta_size < 1:
        raise BoundDomainError("the CS-residual bound needs |Delta| >= 1")
    theta = _ls_theta(T_size, Delta_size, constants)
    d2 = constants.get_delta(2 * Delta_size)
    if d2 >= HALF_RIP:
        raise BoundDomainError(f"delta_{2 * Delta_size}={d2:.4g} >= (sqrt(2) - 1)/2")
    return (cprime(T_size, Delta_size, d2) * eps
            + theta * cdprime(T_size, Delta_size, d2) * x_delta_norm)


def csres_error_bound_max(T_size, max_Delta, x_delta_norm, eps, constants: MatrixConstants
                          ) -> float:
    """Maximum of ``csres_error_bound`` over ``1 <= |Delta| <= max_Delta``.

    ``C'`` decreases in ``|Delta|`` while the constants grow, so no single
    size is the worst case.
    """
    return max(csres_error_bound(T_size, k, x_delta_norm, eps, constants)
               for k in range(1, int(max_Delta) + 1))


# ---------------------------------------------------------------------------
# certification

@dataclass(frozen=True)
class TheoremParams:
    """Hypothesis parameters of one stability result.

    ``alpha_del=None`` means "use the value the result prescribes" (reported
    in ``ConditionReport.implied``). ``f`` is the false-addition budget
    (default ``sa``) and ``d0`` the miss-level parameter of the general
    variant (2 elsewhere). ``gamma``, ``kappa``, ``s_delta1`` and
    ``b_factor`` instantiate the LS-CS detection lemma; ``None`` selects
    ``kappa = sqrt(sa/2)`` and ``s_delta1 = sa``.
    """

    variant: str
    s0: int
    sa: int
    r: float
    eps: float
    d: int | None = None
    alpha: float | None = None
    alpha_add: float | None = None
    alpha_del: float | None = None
    f: int | None = None
    d0: int = 2
    gamma: float = 1.0
    kappa: float | None = None
    s_delta1: int | None = None
    b_factor: float = 2.0

    def __post_init__(self):
        v = _ALIASES.get(self.variant, self.variant)
        if v not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        object.__setattr__(self, "variant", v)
        if self.s0 < 1 or self.sa < 1:
            raise ConfigurationError("need s0 >= 1 and sa >= 1")
        if self.r <= 0 or self.eps < 0:
            raise ConfigurationError("need r > 0 and eps >= 0")
        if self.d0 < 1:
            raise ConfigurationError("d0 must be >= 1")
        if v != "GEN-aldl" and self.d0 != 2:
            raise ConfigurationError(f"d0 is fixed to 2 for {v}")
        if self.f is not None and self.f < 0:
            raise ConfigurationError("f must be >= 0")
        if v != "T1-modcs" and self.alpha_add is None:
            raise ConfigurationError(f"{v} needs alpha_add")
        if not 0 < self.gamma <= 1:
            raise ConfigurationError("gamma must lie in (0, 1]")

    @property
    def f_eff(self) -> int:
        return self.sa if self.f is None else int(self.f)

    @property
    def k1(self) -> int:
        return max(1, 2 * self.d0 - 2)

    @property
    def k2(self) -> int:
        return max(0, 2 * self.d0 - 3)

    @property
    def k3(self) -> float:
        return math.sqrt(sum(j * j for j in range(1, self.d0))
                         + sum(j * j for j in range(1, self.d0 - 1)))

    @property
    def kappa_eff(self) -> float:
        return math.sqrt(self.sa) / SQRT2 if self.kappa is None else float(self.kappa)

    @property
    def s_delta1_eff(self) -> int:
        return self.sa if self.s_delta1 is None else int(self.s_delta1)

    def to_dict(self) -> dict:
        keys = ("variant", "s0", "sa", "r", "eps", "d", "alpha", "alpha_add", "alpha_del",
                "f", "d0", "gamma", "kappa", "s_delta1", "b_factor")
        return {k: getattr(self, k) for k in keys}

    @classmethod
    def from_dict(cls, d: dict, variant: str | None = None) -> "TheoremParams":
        d = dict(d)
        if variant is not None:
            d["variant"] = variant
        known = {"variant", "s0", "sa", "r", "eps", "d", "alpha", "alpha_add", "alpha_del",
                 "f", "d0", "gamma", "kappa", "s_delta1", "b_factor"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown theorem parameter(s): {sorted(extra)}")
        if "variant" not in d:
            raise ConfigurationError("theorem parameters need a variant")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


_OPS = {
    "<": (lambda a, b: a < b, lambda a, b: b - a),
    "<=": (lambda a, b: a <= b, lambda a, b: b - a),
    ">": (lambda a, b: a > b, lambda a, b: a - b),
    ">=": (lambda a, b: a >= b, lambda a, b: a - b),
}


@dataclass
class ConditionEntry:
    name: str
    inequality: str
    lhs: float
    rhs: float
    op: str
    passed: bool
    margin: float
    t: int | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "inequality": self.inequality, "lhs": _jsonable(self.lhs),
               "rhs": _jsonable(self.rhs), "op": self.op, "pass": bool(self.passed),
               "margin": _jsonable(self.margin)}
        if self.t is not None:
            out["first_violation_t"] = self.t
        return out


def _jsonable(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _entry(name, inequality, lhs, op, rhs) -> ConditionEntry:
    check, margin = _OPS[op]
    lhs, rhs = float(lhs), float(rhs)
    return ConditionEntry(name=name, inequality=inequality, lhs=lhs, rhs=rhs, op=op,
                          passed=bool(check(lhs, rhs)), margin=float(margin(lhs, rhs)))


@dataclass
class ConditionReport:
    """Per-condition verdicts; ``passed`` holds iff every entry passes.

    ``implied`` carries derived quantities (thresholds, rate floors) and
    ``notes`` free-form remarks, e.g. about hypotheses that can only be
    checked on traces.
    """

    variant: str
    entries: list = field(default_factory=list)
    implied: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    tallies: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {"variant": self.variant, "pass": self.passed,
                "entries": [e.to_dict() for e in self.entries],
                "implied": {k: _jsonable(v) for k, v in self.implied.items()},
                "tallies": self.tallies, "notes": list(self.notes)}


def _lscs_orders(p: TheoremParams):
    deltas = {4 * p.sa, p.s0 + 2 * p.sa}
    thetas = {(p.s0, 2 * p.sa), (p.s0 + 2 * p.sa, p.sa)}
    for k in range(1, 2 * p.sa + 1):
        deltas.add(2 * k)
        thetas.add((p.s0, k))
    return deltas, thetas


def required_orders(params: TheoremParams, conclusions: bool = False):
    """Return ``(delta_orders, theta_pairs)`` needed by ``certify``.

    With ``conclusions=True`` also include what ``verify_conclusions``
    needs for its error caps.
    """
    p = params
    v = p.variant
    if v == "T1-modcs":
        deltas, thetas = {p.s0 + 3 * p.sa}, set()
    elif v in ("T2-aldl", "C3-aldl-relaxed"):
        deltas, thetas = {p.s0 + 3 * p.sa}, {(p.s0 + 2 * p.sa, p.sa)}
    elif v == "GEN-aldl":
        deltas = {p.s0 + p.sa * (1 + p.k1), p.s0 + p.sa + p.f_eff}
        thetas = {(p.s0 + p.sa + p.f_eff, p.k2 * p.sa)}
    else:
        deltas, thetas = _lscs_orders(p)
    if conclusions and v != "T1-modcs":
        thetas.add((p.s0, (2 * p.d0 - 2) * p.sa))
    deltas = {k for k in deltas if k > 0}
    thetas = {(a, b) for a, b in thetas if a > 0 and b > 0}
    return sorted(deltas), sorted(thetas)


def _check_available(params, constants, conclusions=False):
    deltas, thetas = required_orders(params, conclusions)
    missing = [f"delta_{k}" for k in deltas if not constants.has_delta(k)]
    missing += [f"theta_{a},{b}" for a, b in thetas if not constants.has_theta(a, b)]
    if missing:
        raise MissingConstantError(missing)


def _safe_div(num, den):
    return num / den if den > 0 else math.inf


def certify(params: TheoremParams, constants: MatrixConstants) -> ConditionReport:
    """Evaluate every analytic hypothesis of the selected stability result.

    The false-addition budget (at most ``f`` wrong additions per step) and,
    for the relaxed variants, the spread-out premise are outcomes of the
    tracker rather than properties of ``A``; they are tallied by
    ``verify_conclusions`` instead.

    Raises
    ------
    MissingConstantError
        Listing every constant order that ``constants`` lacks.
    """
    _check_available(params, constants)
    return {
        "T1-modcs": _certify_t1,
        "T2-aldl": _certify_t2,
        "C3-aldl-relaxed": _certify_c3,
        "GEN-aldl": _certify_gen,
        "T3-lscs": _certify_t3,
    }[params.variant](params, constants)


def _certify_t1(p, K):
    eps, r = p.eps, p.r
    alpha = MODCS_FACTOR * eps if p.alpha is None else p.alpha
    G = (alpha + MODCS_FACTOR * eps) / 2.0
    rep = ConditionReport(variant=p.variant, implied={"alpha": MODCS_FACTOR * eps, "G": G})
    rep.entries = [
        _entry("rip_main", f"delta_{p.s0 + 3 * p.sa} < (sqrt2-1)/2",
               K.get_delta(p.s0 + 3 * p.sa), "<", HALF_RIP),
        _entry("alpha_floor", "alpha >= 8.79 eps", alpha, ">=", MODCS_FACTOR * eps),
        _entry("rate_G", "r >= G = (alpha + 8.79 eps)/2", r, ">=", G),
    ]
    rep.notes.append("initial condition (exact support at t=0) is checked on traces")
    return rep


def _deletion_entries(rep, p, floor, b):
    alpha_del = floor if p.alpha_del is None else p.alpha_del
    rep.implied["alpha_del"] = floor
    rep.entries.append(_entry("deletion", "alpha_del >= bound on LS error entries",
                              alpha_del, ">=", floor))
    rep.entries.append(_entry("no_false_deletion", "b >= alpha_del + bound on LS error entries",
                              b, ">=", alpha_del + floor))


def _spread_note(rep):
    rep.notes.append("premise ||e||_inf <= ||e||/sqrt(Sa) is tallied on traces")


def _budget_note(rep, p):
    rep.notes.append(f"at most f={p.f_eff} false additions per step is tallied on traces")


def _certify_t2(p, K):
    eps, r, sa = p.eps, p.r, p.sa
    theta = K.get_theta(p.s0 + 2 * sa, sa)
    floor = SQRT2 * eps + 2.0 * math.sqrt(sa) * theta * r
    G1 = (p.alpha_add + MODCS_FACTOR * eps) / 2.0
    G2 = _safe_div(SQRT2 * eps, 1.0 - 2.0 * math.sqrt(sa) * theta)
    rep = ConditionReport(variant=p.variant, implied={"G1": G1, "G2": G2})
    rep.entries = [
        _entry("rip_main", f"delta_{p.s0 + 3 * sa} < (sqrt2-1)/2",
               K.get_delta(p.s0 + 3 * sa), "<", HALF_RIP),
        _entry("theta_bound", f"theta_{p.s0 + 2 * sa},{sa} < (1/2)(1/(2 sqrt(Sa)))",
               theta, "<", 0.5 * (1.0 / (2.0 * math.sqrt(sa)))),
    ]
    _deletion_entries(rep, p, floor, 2.0 * r)
    rep.entries += [
        _entry("rate_G1", "r >= G1 = (alpha_add + 8.79 eps)/2", r, ">=", G1),
        _entry("rate_G2", "r >= G2 = sqrt2 eps/(1 - 2 sqrt(Sa) theta)", r, ">=", G2),
    ]
    _budget_note(rep, p)
    return rep


def _certify_c3(p, K):
    eps, r, sa = p.eps, p.r, p.sa
    theta = K.get_theta(p.s0 + 2 * sa, sa)
    floor = math.sqrt(2.0 / sa) * eps + 2.0 * theta * r
    G1 = (p.alpha_add + MODCS_FACTOR * eps) / 2.0
    G2 = _safe_div(SQRT2 * eps, math.sqrt(sa) * (1.0 - 2.0 * theta))
    rep = ConditionReport(variant=p.variant, implied={"G1": G1, "G2": G2})
    rep.entries = [
        _entry("rip_main", f"delta_{p.s0 + 3 * sa} <= (sqrt2-1)/2",
               K.get_delta(p.s0 + 3 * sa), "<=", HALF_RIP),
        _entry("theta_bound", f"theta_{p.s0 + 2 * sa},{sa} <= 1/4", theta, "<=", 0.25),
    ]
    _deletion_entries(rep, p, floor, 2.0 * r)
    rep.entries += [
        _entry("rate_G1", "r >= G1 = (alpha_add + 8.79 eps)/2", r, ">=", G1),
        _entry("rate_G2", "r >= G2 = sqrt2 eps/(sqrt(Sa)(1 - 2 theta))", r, ">=", G2),
    ]
    _budget_note(rep, p)
    _spread_note(rep)
    return rep


def _certify_gen(p, K):
    eps, r, sa, d0 = p.eps, p.r, p.sa, p.d0
    k1, k2, k3 = p.k1, p.k2, p.k3
    f = p.f_eff
    theta = K.get_theta(p.s0 + sa + f, k2 * sa)
    floor = math.sqrt(2.0 / sa) * eps + 2.0 * k3 * theta * r
    G1 = (p.alpha_add + MODCS_FACTOR * eps) / d0
    G2 = _safe_div(2.0 * SQRT2 * eps, math.sqrt(sa) * (d0 - 4.0 * k3 * theta))
    theta_cap = d0 / (8.0 * k3) if k3 > 0 else math.inf
    rep = ConditionReport(variant=p.variant,
                          implied={"G1": G1, "G2": G2, "k1": k1, "k2": k2, "k3": k3})
    rep.entries = [
        _entry("rip_main", f"delta_{p.s0 + sa * (1 + k1)} < (sqrt2-1)/2",
               K.get_delta(p.s0 + sa * (1 + k1)), "<", HALF_RIP),
        _entry("rip_ls", f"delta_{p.s0 + sa + f} < 1/2", K.get_delta(p.s0 + sa + f), "<", 0.5),
        _entry("theta_bound", f"theta_{p.s0 + sa + f},{k2 * sa} < d0/(8 k3)",
               theta, "<", theta_cap),
    ]
    _deletion_entries(rep, p, floor, d0 * r)
    rep.entries += [
        _entry("rate_G1", "r >= G1 = (alpha_add + 8.79 eps)/d0", r, ">=", G1),
        _entry("rate_G2", "r >= G2 = 2 sqrt2 eps/(sqrt(Sa)(d0 - 4 k3 theta))", r, ">=", G2),
    ]
    _budget_note(rep, p)
    _spread_note(rep)
    return rep


def _lscs_detection_floor(p, K):
    """Largest admissible rate floor of the LS-CS detection lemma, maximized
    over ``1 <= |Delta| <= 2 Sa``."""
    reach = math.sqrt(p.s_delta1_eff) + p.kappa_eff
    worst = 0.0
    for k in range(1, 2 * p.sa + 1):
        d2 = K.get_delta(2 * k)
        try:
            cp = cprime(p.s0, k, d2)
            cdp = cdprime(p.s0, k, d2)
        except BoundDomainError:
            return math.inf
        den = p.b_factor * (p.gamma - K.get_theta(p.s0, k) * cdp * reach)
        worst = max(worst, _safe_div(p.alpha_add + cp * p.eps, den))
    return worst


def _certify_t3(p, K):
    eps, r, sa, s0 = p.eps, p.r, p.sa, p.s0
    theta_del = K.get_theta(s0 + 2 * sa, sa)
    floor = SQRT2 * eps + 2.0 * math.sqrt(sa) * theta_del * r
    d4 = K.get_delta(4 * sa)
    try:
        cdp = cdprime(s0, 2 * sa, d4)
    except BoundDomainError:
        cdp = math.inf
    reach = math.sqrt(p.s_delta1_eff) + p.kappa_eff
    G1 = _lscs_detection_floor(p, K)
    G2 = _safe_div(SQRT2 * eps, 1.0 - theta_del * math.sqrt(4.0 * sa))
    rep = ConditionReport(variant=p.variant, implied={"G1": G1, "G2": G2,
                                                      "gamma": p.gamma, "kappa": p.kappa_eff,
                                                      "s_delta1": p.s_delta1_eff})
    rep.entries = [
        _entry("rip_csres", f"delta_{4 * sa} < (sqrt2-1)/2", d4, "<", HALF_RIP),
        _entry("rip_ls", f"delta_{s0 + 2 * sa} < 1/2", K.get_delta(s0 + 2 * sa), "<", 0.5),
        _entry("detection_theta",
               f"theta_{s0},{2 * sa} C''({s0},{2 * sa}) < gamma/(2(sqrt(S_Delta1) + kappa))",
               K.get_theta(s0, 2 * sa) * cdp, "<", p.gamma / (2.0 * reach)),
        _entry("theta_bound", f"theta_{s0 + 2 * sa},{sa} < (1/2) sqrt(1/(4 Sa))",
               theta_del, "<", 0.5 * math.sqrt(1.0 / (4.0 * sa))),
    ]
    _deletion_entries(rep, p, floor, 2.0 * r)
    rep.entries += [
        _entry("rate_G1", "r >= max_|Delta| (alpha_add + C' eps)/(b/r)(gamma - theta C''(...))",
               r, ">=", G1),
        _entry("rate_G2", "r >= G2 = sqrt2 eps/(1 - theta sqrt(4 Sa))", r, ">=", G2),
    ]
    _budget_note(rep, p)
    return rep


# ---------------------------------------------------------------------------
# trace verification

def support_error_metrics(true_support, estimated_support):
    """Return ``(misses, extras) = (|N \\ N_hat|, |N_hat \\ N|)``."""
    N = np.unique(np.asarray(true_support, dtype=np.intp))
    Nh = np.unique(np.asarray(estimated_support, dtype=np.intp))
    return (int(np.setdiff1d(N, Nh, assume_unique=True).size),
            int(np.setdiff1d(Nh, N, assume_unique=True).size))


class _Tally:
    def __init__(self, name, inequality, op):
        self.name, self.inequality, self.op = name, inequality, op
        self.worst_margin = math.inf
        self.worst = None
        self.first_bad = None
        self.count = 0
        self.checked = 0

    def add(self, t, lhs, rhs):
        check, margin = _OPS[self.op]
        self.checked += 1
        m = margin(lhs, rhs)
        if m < self.worst_margin:
            self.worst_margin, self.worst = m, (lhs, rhs)
        if not check(lhs, rhs):
            self.count += 1
            if self.first_bad is None:
                self.first_bad = t

    def entry(self) -> ConditionEntry:
        lhs, rhs = self.worst if self.worst is not None else (0.0, 0.0)
        return ConditionEntry(name=self.name, inequality=self.inequality, lhs=float(lhs),
                              rhs=float(rhs), op=self.op, passed=self.count == 0,
                              margin=float(self.worst_margin if self.checked else 0.0),
                              t=self.first_bad)


def verify_conclusions(traces, truth, params: TheoremParams, constants: MatrixConstants,
                       include_initial: bool = True) -> ConditionReport:
    """Check every conclusion of the selected result along a simulated run.

    Parameters
    ----------
    traces : list of StepTrace
        Output of one tracker, one entry per time step (``t = 0`` first).
    truth : list of SignalState
        True signal at each time step.
    params, constants
        As for ``certify``.
    include_initial : bool
        Also check the support conclusions at ``t = 0``. Error caps are only
        checked for ``t >= 1``, since ``t = 0`` uses the initial matrix.

    Returns
    -------
    ConditionReport
        One entry per conclusion, holding the worst observed case and the
        first violation time. The false-addition budget and spread premise
        are in ``tallies``; they are hypotheses, not conclusions.
    """
    if len(traces) != len(truth):
        raise ValueError("traces and truth must have equal length")
    _check_available(params, constants, conclusions=True)
    p = params
    sa, s0, d0, eps, r = p.sa, p.s0, p.d0, p.eps, p.r
    f = p.f_eff
    modcs_only = p.variant == "T1-modcs"
    lscs = p.variant == "T3-lscs"

    caps = {
        "final_size": ("|N_hat| <= S0", "<=", s0),
        "final_extras": ("|N_hat \\ N| = 0", "<=", 0),
        "final_misses": (f"|N \\ N_hat| <= {2 * d0 - 2} Sa", "<=", (2 * d0 - 2) * sa),
        "prior_size": ("|T| <= S0", "<=", s0),
        "prior_extras": ("|T \\ N| <= Sa", "<=", sa),
        "prior_misses": (f"|N \\ T| <= {p.k1} Sa", "<=", p.k1 * sa),
    }
    if not modcs_only:
        caps.update({
            "det_size": ("|T_det| <= S0 + Sa + f", "<=", s0 + sa + f),
            "det_extras": ("|T_det \\ N| <= Sa + f", "<=", sa + f),
            "det_misses": (f"|N \\ T_det| <= {p.k2} Sa", "<=", p.k2 * sa),
        })
    tallies = {k: _Tally(k, ineq, op) for k, (ineq, op, _) in caps.items()}

    levels_sq = sum(j * j for j in range(1, d0))
    if modcs_only:
        cs_cap = MODCS_FACTOR * eps
        cs_name = "||x - x_modcs|| <= 8.79 eps"
        final_cap = cs_cap
        final_name = cs_name
    else:
        theta_fin = constants.get_theta(s0, (2 * d0 - 2) * sa)
        final_cap = SQRT2 * eps + (2.0 * theta_fin + 1.0) * math.sqrt(2.0 * sa * levels_sq) * r
        final_name = "||x - x_hat|| <= sqrt2 eps + (2 theta + 1) sqrt(2 Sa sum j^2) r"
        if lscs:
            cs_cap = max(cprime(s0, k, constants.get_delta(2 * k)) * eps
                         + (constants.get_theta(s0, k) * cdprime(s0, k, constants.get_delta(2 * k))
                            + 1.0) * math.sqrt(2.0 * sa) * r
                         for k in range(1, 2 * sa + 1))
            cs_name = "||x - x_csres|| <= max_|Delta| [C' eps + (theta C'' + 1) sqrt(2 Sa) r]"
        else:
            cs_cap = MODCS_FACTOR * eps
            cs_name = "||x - x_modcs|| <= 8.79 eps"
    tallies["error_final"] = _Tally("error_final", final_name, "<=")
    if not modcs_only:
        tallies["error_cs"] = _Tally("error_cs", cs_name, "<=")

    false_adds = _Tally("false_additions", f"false additions <= f = {f}", "<=")
    spread_ok = 0
    spread_n = 0
    for tr, st in zip(traces, truth):
        t = tr.t
        N = st.support
        x = st.x
        Nh = tr.n_hat_next
        if t > 0 or include_initial:
            miss, extra = support_error_metrics(N, Nh)
            tallies["final_size"].add(t, len(Nh), s0)
            tallies["final_extras"].add(t, extra, 0)
            tallies["final_misses"].add(t, miss, caps["final_misses"][2])
        if t > 0:
            miss, extra = support_error_metrics(N, tr.T)
            tallies["prior_size"].add(t, len(tr.T), s0)
            tallies["prior_extras"].add(t, extra, sa)
            tallies["prior_misses"].add(t, miss, caps["prior_misses"][2])
            tallies["error_final"].add(t, float(np.linalg.norm(x - tr.x_final)), final_cap)
            if not modcs_only:
                tallies["error_cs"].add(t, float(np.linalg.norm(x - tr.x_cs)), cs_cap)
        if not modcs_only and tr.T_det is not None and t > 0:
            miss, extra = support_error_metrics(N, tr.T_det)
            tallies["det_size"].add(t, len(tr.T_det), s0 + sa + f)
            tallies["det_extras"].add(t, extra, sa + f)
            tallies["det_misses"].add(t, miss, caps["det_misses"][2])
            new = np.setdiff1d(tr.T_det, tr.T)
            false_adds.add(t, np.setdiff1d(new, N).size, f)
            if tr.ls_error_vec is not None and tr.ls_error_vec.size:
                e = tr.ls_error_vec
                linf = float(np.max(np.abs(e)))
                if linf > 1e-12:
                    spread_n += 1
                    spread_ok += int(linf <= np.linalg.norm(e) / math.sqrt(sa))

    rep = ConditionReport(variant=p.variant, entries=[tl.entry() for tl in tallies.values()])
    rep.implied = {"final_error_cap": final_cap}
    if not modcs_only:
        rep.implied["cs_error_cap"] = cs_cap
    rep.tallies = {
        "steps": len(traces),
        "false_additions": {"violations": false_adds.count,
                            "first_violation_t": false_adds.first_bad,
                            "checked": false_adds.checked},
        "spread": {"satisfied": spread_ok, "checked": spread_n,
                   "fraction": spread_ok / spread_n if spread_n else None},
    }
    return rep
