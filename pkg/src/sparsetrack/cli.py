"""Command line interface.

Exit codes: 0 on success, 2 for invalid configuration or parameters, 3 for
file I/O failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bounds import VARIANTS, TheoremParams, certify
from .constants import DEFAULT_BUDGET, MatrixConstants, compute_constants
from .errors import SparseTrackError
from .experiment import FIG1_REGIMES, ExperimentConfig, fig1_config, miss_trend, run_monte_carlo
from .export import export_results
from .measurement import load_matrix_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

log = logging.getLogger("sparsetrack")


class _ConfigError(Exception):
    pass


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _ConfigError(f"{path}: invalid JSON ({exc})") from None


def _write_outputs(record, out: Path, stem: str):
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    paths = [export_results(record, fmt, out / f"{stem}.{fmt}") for fmt in ("csv", "json", "svg")]
    for p in paths:
        print(f"wrote {p}")


def _summary(record, sa):
    lines = []
    for a in record.algorithms:
        half = record.horizon // 2
        lines.append(
            f"{a:>11}: final-half mean misses {record.misses[a][half:].mean():.3f} "
            f"(slope {miss_trend(record.misses[a]):+.4f}/step), "
            f"extras {record.extras[a][half:].mean():.3f}, "
            f"NMSE min {record.nmse[a].min():.4g} max {record.nmse[a].max():.4g}")
        if a in record.spread_fraction:
            lines.append(f"{'':>11}  spread fraction {record.spread_fraction[a]:.4f}, "
                         f"max ratio {record.spread_max_ratio[a]:.3f}")
    return "\n".join(lines)


def _progress(done):
    log.info("%d trial(s) done", done)


def cmd_simulate(args):
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict):
        raise _ConfigError("config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = ExperimentConfig.from_dict(cfg)
    record = run_monte_carlo(config, threads=args.threads, progress=_progress)
    _write_outputs(record, Path(args.out), "results")
    print(_summary(record, config.model.sa))


def cmd_fig1(args):
    kwargs = {"trials": args.trials, "horizon": args.horizon}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    config = fig1_config(args.regime, **kwargs)
    record = run_monte_carlo(config, threads=args.threads, progress=_progress)
    _write_outputs(record, Path(args.out), f"fig1_{args.regime}")
    print(_summary(record, config.model.sa))


def _parse_orders(text):
    if not text:
        return []
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise _ConfigError(f"bad --delta-orders {text!r}; expected e.g. 2,3,4") from None


def _parse_pairs(text):
    pairs = []
    for chunk in (text or "").replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            a, b = chunk.split(":")
            pairs.append((int(a), int(b)))
        except ValueError:
            raise _ConfigError(f"bad theta pair {chunk!r}; expected S:S'") from None
    return pairs


def cmd_analyze(args):
    A = load_matrix_csv(args.matrix)
    K = compute_constants(A, _parse_orders(args.delta_orders), _parse_pairs(args.theta_pairs),
                          budget=args.budget)
    text = K.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def cmd_check(args):
    params = _read_json(args.params)
    if not isinstance(params, dict):
        raise _ConfigError("params must be a JSON object")
    p = TheoremParams.from_dict(params, variant=args.variant)
    K = MatrixConstants.from_dict(_read_json(args.constants))
    report = certify(p, K)
    print(json.dumps(report.to_dict(), indent=2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsetrack",
                                 description="Recursive sparse reconstruction and its "
                                             "stability analysis.")
    ap.add_argument("--seed", type=int, default=None, help="master seed override")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte-Carlo run from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reproduce-fig1", help="one of the four stability regimes")
    s.add_argument("--regime", required=True, choices=sorted(FIG1_REGIMES))
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--horizon", type=int, default=200)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("analyze-matrix", help="exact RIP/ROC constants of a CSV matrix")
    s.add_argument("--matrix", required=True)
    s.add_argument("--delta-orders", default="")
    s.add_argument("--theta-pairs", default="")
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("check-conditions", help="certify a stability result's hypotheses")
    s.add_argument("--variant", required=True,
                   choices=list(VARIANTS) + ["T1", "T2", "C3", "GEN", "T3"])
    s.add_argument("--params", required=True)
    s.add_argument("--constants", required=True)
    s.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (_ConfigError, SparseTrackError, ValueError, KeyError) as exc:
        plain_key = isinstance(exc, KeyError) and not isinstance(exc, SparseTrackError)
        msg = exc.args[0] if plain_key and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
