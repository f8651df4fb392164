"""Follow one trajectory of the r = 1, d = 3 regime with every algorithm.

Prints misses / extras / NMSE every few steps and writes an SVG of the run
next to this script. Takes about 10 seconds.

    python demos/track_one_trial.py [horizon]
"""

import sys
from pathlib import Path

import numpy as np

from sparsetrack.experiment import aggregate, fig1_config, run_trial, trial_seed
from sparsetrack.export import export_results

horizon = int(sys.argv[1]) if len(sys.argv) > 1 else 60
cfg = fig1_config("r1d3", trials=1, horizon=horizon)
rec = run_trial(cfg, trial_seed(cfg.seed, 0))

print(f"m={cfg.model.m} S0={cfg.model.s0} Sa={cfg.model.sa} n={cfg.n} c={cfg.c}")
print("   t " + " ".join(f"{a:>22}" for a in cfg.algorithms))
print("     " + " ".join(f"{'miss/extra/nmse':>22}" for _ in cfg.algorithms))
for t in range(0, horizon, max(1, horizon // 12)):
    cells = [f"{rec.misses[a][t]:>5d} {rec.extras[a][t]:>5d} {rec.nmse[a][t]:>10.2e}"
             for a in cfg.algorithms]
    print(f"{t:>4} " + " ".join(f"{c:>22}" for c in cells))

# simple CS keeps missing about a quarter of the support; the trackers do not
for a in cfg.algorithms:
    print(f"{a:>11}: mean NMSE {np.mean(rec.nmse[a]):.3e}, solver did not converge "
          f"{rec.unconverged[a]} time(s)")

out = Path(__file__).with_name("track_one_trial.svg")
export_results(aggregate(cfg, [rec]), "svg", out)
print(f"wrote {out}")
