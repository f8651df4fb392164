"""Monte-Carlo harness for the tracking algorithms.

A trial draws one measurement matrix pair, one signal trajectory and one
noise sequence from its seed, and runs every requested algorithm on that
same data. Trials are averaged per time step.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .l1 import SolverConfig
from .measurement import MeasurementModel, default_n0, measure
from .signal_model import ModelParams, init_signal, step_signal
from .trackers import ALGORITHMS, Thresholds, Tracker

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "AggregateRecord",
    "FIG1_REGIMES",
    "fig1_config",
    "trial_seed",
    "run_trial",
    "run_monte_carlo",
    "spread_statistic",
    "miss_trend",
]

log = logging.getLogger(__name__)

# (r, d) for the four stability regimes; M = d r
FIG1_REGIMES = {
    "r1d3": (1.0, 3),
    "r075d4": (0.75, 4),
    "r05d4": (0.5, 4),
    "r04d5": (0.4, 5),
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    n: int
    c: float
    n0: int | None = None
    seed: int = 0
    horizon: int = 200
    trials: int = 50
    algorithms: tuple = ("cs", "modcs", "modcs-aldl", "lscs")
    thresholds: Thresholds | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    keep_traces: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if not 0 < self.n < self.model.m:
            raise ConfigurationError(f"need 0 < n < m, got n={self.n}, m={self.model.m}")
        if self.c < 0:
            raise ConfigurationError("c must be >= 0")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigurationError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.n0 is not None and not self.n <= self.n0 <= self.model.m:
            raise ConfigurationError(f"need n <= n0 <= m, got n0={self.n0}")

    @property
    def n0_effective(self) -> int:
        if self.n0 is not None:
            return self.n0
        return max(self.n, default_n0(self.model.m, self.model.s0))

    @property
    def thresholds_effective(self) -> Thresholds:
        if self.thresholds is not None:
            return self.thresholds
        return Thresholds.recipe(self.c, self.model.r)

    def to_dict(self) -> dict:
        s = self.solver
        return {
            "model": self.model.to_dict(),
            "n": self.n,
            "n0": self.n0,
            "c": self.c,
            "seed": self.seed,
            "horizon": self.horizon,
            "trials": self.trials,
            "algorithms": list(self.algorithms),
            "thresholds": None if self.thresholds is None else self.thresholds.to_dict(),
            "solver": {"max_iters": s.max_iters, "primal_tol": s.primal_tol,
                       "feas_tol": s.feas_tol, "penalty": s.penalty,
                       "over_relaxation": s.over_relaxation,
                       "adaptive_penalty": s.adaptive_penalty},
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        """Build from the JSON config layout.

        Model keys may sit at top level (``m, s0, sa, d, r``) or under
        ``"model"``. ``"thresholds"`` is either an object with ``alpha``,
        ``alpha_add``, ``alpha_del`` or the string ``"recipe"``.
        """
        try:
            model_cfg = cfg.get("model", cfg)
            model = ModelParams.from_dict(model_cfg)
            thr = cfg.get("thresholds", "recipe")
            if thr in (None, "recipe"):
                thresholds = None
            elif isinstance(thr, dict):
                thresholds = Thresholds(**{k: float(v) for k, v in thr.items()})
            else:
                raise ConfigurationError(f"bad thresholds entry {thr!r}")
            solver = SolverConfig(**cfg.get("solver", {}))
            n0 = cfg.get("n0")
            return cls(
                model=model,
                n=int(cfg["n"]),
                c=float(cfg["c"]),
                n0=None if n0 is None else int(n0),
                seed=int(cfg.get("seed", 0)),
                horizon=int(cfg.get("horizon", 200)),
                trials=int(cfg.get("trials", 50)),
                algorithms=tuple(cfg.get("algorithms", ALGORITHMS)),
                thresholds=thresholds,
                solver=solver,
            )
        except KeyError as exc:
            raise ConfigurationError(f"config missing key {exc}") from None
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


def fig1_config(regime: str, trials: int = 50, horizon: int = 200, seed: int = 0,
                **overrides) -> ExperimentConfig:
    """Configuration of one of the four reference stability regimes."""
    if regime not in FIG1_REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}; expected one of {list(FIG1_REGIMES)}")
    r, d = FIG1_REGIMES[regime]
    kwargs = dict(model=ModelParams(m=200, s0=20, sa=2, d=d, r=r), n=59, c=0.1266,
                  seed=seed, horizon=horizon, trials=trials)
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def trial_seed(master_seed: int, index: int) -> int:
    """Per-trial seed, independent of how trials are scheduled."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


@dataclass
class TrialRecord:
    """Per-time metrics of one trial.

    ``sq_err``, ``misses``, ``extras`` map algorithm -> array over t;
    ``e_norms`` maps algorithm -> (horizon, 2) array of ``(||e_t||_2,
    ||e_t||_inf)`` for the add-LS-del algorithms.
    """

    seed: int
    power: np.ndarray
    sq_err: dict
    misses: dict
    extras: dict
    e_norms: dict = field(default_factory=dict)
    unconverged: dict = field(default_factory=dict)
    flagged: dict = field(default_factory=dict)
    traces: dict | None = None
    truth: list | None = None

    @property
    def nmse(self) -> dict:
        return {a: v / self.power for a, v in self.sq_err.items()}


def run_trial(config: ExperimentConfig, seed: int, keep_traces: bool | None = None,
              measurement: MeasurementModel | None = None) -> TrialRecord:
    """Simulate one trajectory and run every selected algorithm on it.

    ``measurement`` replaces the random Gaussian model drawn from ``seed``
    (its ``A`` must be ``n x m`` for the configured ``n`` and ``m``).
    """
    keep = config.keep_traces if keep_traces is None else keep_traces
    rng = np.random.default_rng(seed)
    p = config.model
    if measurement is None:
        mm = MeasurementModel.gaussian(config.n, p.m, config.c, n0=config.n0_effective, seed=rng)
    else:
        mm = measurement
        if mm.A.shape != (config.n, p.m):
            raise ConfigurationError(f"measurement matrix is {mm.A.shape}, config needs "
                                     f"{(config.n, p.m)}")
    sig_rng, noise_rng = rng.spawn(2)
    thr = config.thresholds_effective
    # the memoryless baseline always sees n rows; A0 extends A, so y0[:n] is A x + w
    trackers = {a: Tracker(a, mm.A, mm.eps, thr, config.solver,
                           A0=None if a == "cs" else mm.A0,
                           eps0=None if a == "cs" else mm.eps0)
                for a in config.algorithms}
    H = config.horizon
    power = np.empty(H)
    sq_err = {a: np.empty(H) for a in config.algorithms}
    misses = {a: np.empty(H, dtype=int) for a in config.algorithms}
    extras = {a: np.empty(H, dtype=int) for a in config.algorithms}
    e_norms = {a: np.full((H, 2), np.nan) for a in config.algorithms if a in ("modcs-aldl", "lscs")}
    unconverged = {a: 0 for a in config.algorithms}
    flagged = {a: 0 for a in config.algorithms}
    traces = {a: [] for a in config.algorithms} if keep else None
    truth = [] if keep else None

    state = init_signal(p, sig_rng)
    for t in range(H):
        if t > 0:
            state, _ = step_signal(state, sig_rng)
        x = state.x
        support = state.support
        A = mm.A0 if t == 0 else mm.A
        y = measure(A, x, mm.noise(noise_rng, initial=(t == 0)))
        power[t] = float(x @ x)
        for a, trk in trackers.items():
            tr = trk.step(y[:mm.n] if a == "cs" else y, truth=x)
            diff = x - tr.x_final
            sq_err[a][t] = float(diff @ diff)
            misses[a][t] = np.setdiff1d(support, tr.n_hat_next, assume_unique=True).size
            extras[a][t] = np.setdiff1d(tr.n_hat_next, support, assume_unique=True).size
            if a in e_norms and tr.ls_error_vec is not None and tr.ls_error_vec.size:
                e = tr.ls_error_vec
                e_norms[a][t] = (np.linalg.norm(e), np.max(np.abs(e)))
            unconverged[a] += int(not tr.converged)
            flagged[a] += int(tr.rank_deficient)
            if keep:
                traces[a].append(tr)
        if keep:
            truth.append(state)
    return TrialRecord(seed=seed, power=power, sq_err=sq_err, misses=misses, extras=extras,
                       e_norms=e_norms, unconverged=unconverged, flagged=flagged,
                       traces=traces, truth=truth)


@dataclass
class AggregateRecord:
    """Per-time averages over trials, keyed by algorithm."""

    config: dict
    algorithms: list
    horizon: int
    trials: int
    nmse: dict
    misses: dict
    extras: dict
    nmse_min: dict
    nmse_max: dict
    spread_fraction: dict = field(default_factory=dict)
    spread_max_ratio: dict = field(default_factory=dict)
    unconverged: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def arr(d):
            return {k: [float(v) for v in vals] for k, vals in d.items()}
        return {
            "config": self.config,
            "algorithms": list(self.algorithms),
            "horizon": self.horizon,
            "trials": self.trials,
            "nmse": arr(self.nmse),
            "misses": arr(self.misses),
            "extras": arr(self.extras),
            "nmse_min": arr(self.nmse_min),
            "nmse_max": arr(self.nmse_max),
            "spread_fraction": {k: _num(v) for k, v in self.spread_fraction.items()},
            "spread_max_ratio": {k: _num(v) for k, v in self.spread_max_ratio.items()},
            "unconverged": {k: int(v) for k, v in self.unconverged.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateRecord":
        def arr(x):
            return {k: np.asarray(v, dtype=float) for k, v in x.items()}
        return cls(
            config=d["config"],
            algorithms=list(d["algorithms"]),
            horizon=int(d["horizon"]),
            trials=int(d["trials"]),
            nmse=arr(d["nmse"]),
            misses=arr(d["misses"]),
            extras=arr(d["extras"]),
            nmse_min=arr(d["nmse_min"]),
            nmse_max=arr(d["nmse_max"]),
            spread_fraction={k: (math.nan if v is None else float(v))
                             for k, v in d.get("spread_fraction", {}).items()},
            spread_max_ratio={k: (math.nan if v is None else float(v))
                              for k, v in d.get("spread_max_ratio", {}).items()},
            unconverged={k: int(v) for k, v in d.get("unconverged", {}).items()},
        )


def _num(v):
    v = float(v)
    return None if math.isnan(v) else v


def _trial_job(args):
    config, index = args
    return index, run_trial(config, trial_seed(config.seed, index), keep_traces=False)


def aggregate(config: ExperimentConfig, records: list) -> AggregateRecord:
    """Ordered reduction of trial records (sorted by seed order of input)."""
    algs = list(config.algorithms)
    power = np.mean([r.power for r in records], axis=0)
    nmse, misses, extras, lo, hi = {}, {}, {}, {}, {}
    frac, ratio, unconv = {}, {}, {}
    for a in algs:
        se = np.array([r.sq_err[a] for r in records])
        nmse[a] = se.mean(axis=0) / power
        per_trial = se / np.array([r.power for r in records])
        lo[a] = per_trial.min(axis=0)
        hi[a] = per_trial.max(axis=0)
        misses[a] = np.mean([r.misses[a] for r in records], axis=0)
        extras[a] = np.mean([r.extras[a] for r in records], axis=0)
        unconv[a] = sum(r.unconverged[a] for r in records)
        if a in records[0].e_norms:
            try:
                frac[a], ratio[a] = spread_statistic(records, config.model.sa, a)
            except ValueError:
                frac[a], ratio[a] = math.nan, math.nan
    return AggregateRecord(config=config.to_dict(), algorithms=algs, horizon=config.horizon,
                           trials=len(records), nmse=nmse, misses=misses, extras=extras,
                           nmse_min=lo, nmse_max=hi, spread_fraction=frac,
                           spread_max_ratio=ratio, unconverged=unconv)


def run_monte_carlo(config: ExperimentConfig, threads: int = 1, progress=None) -> AggregateRecord:
    """Run ``config.trials`` trials and average per time step.

    Deterministic for a given ``config.seed`` whatever ``threads`` is.
    ``progress`` is called with the number of finished trials.
    """
    jobs = [(config, i) for i in range(config.trials)]
    results = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for idx, rec in pool.map(_trial_job, jobs):
                results[idx] = rec
                if progress:
                    progress(len(results))
    else:
        for job in jobs:
            idx, rec = _trial_job(job)
            results[idx] = rec
            log.debug("trial %d done", idx)
            if progress:
                progress(len(results))
    records = [results[i] for i in range(config.trials)]
    return aggregate(config, records)


def spread_statistic(records, sa: int, algorithm: str = "modcs-aldl"):
    """Fraction of steps with ``||e||_inf <= ||e|| / sqrt(Sa)`` and the
    largest ``(||e|| / sqrt(Sa)) / ||e||_inf``.

    ``e`` is the error of the least-squares estimate after the addition
    step, restricted to the enlarged support. Steps where ``e`` is
    (numerically) zero are left out of both numbers.
    """
    rows = []
    for rec in records:
        e = rec.e_norms.get(algorithm) if hasattr(rec, "e_norms") else rec
        if e is None:
            continue
        rows.append(np.asarray(e, dtype=float).reshape(-1, 2))
    if not rows:
        raise ValueError(f"no e_t data recorded for {algorithm!r}")
    e = np.concatenate(rows)
    e = e[~np.isnan(e).any(axis=1)]
    e = e[e[:, 1] > 1e-12]
    if e.size == 0:
        raise ValueError(f"no nonzero e_t data recorded for {algorithm!r}")
    l2, linf = e[:, 0], e[:, 1]
    scaled = l2 / math.sqrt(sa)
    fraction = float(np.mean(linf <= scaled))
    max_ratio = float(np.max(scaled / linf))
    return fraction, max_ratio


def miss_trend(series, start_fraction: float = 0.5) -> float:
    """Least-squares slope (per step) of ``series`` over its final part."""
    s = np.asarray(series, dtype=float)
    k = int(len(s) * start_fraction)
    tail = s[k:]
    if tail.size < 2:
        return 0.0
    t = np.arange(tail.size)
    return float(np.polyfit(t, tail, 1)[0])
