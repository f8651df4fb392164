"""Run the four reference stability regimes and write CSV/JSON/SVG for each.

    python demos/fig1_regimes.py [trials] [outdir]

Ten trials take about a minute per regime on one core.
"""

import sys
from pathlib import Path

from sparsetrack.experiment import FIG1_REGIMES, fig1_config, miss_trend, run_monte_carlo
from sparsetrack.export import export_results

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
out = Path(sys.argv[2] if len(sys.argv) > 2 else "fig1_out")
out.mkdir(parents=True, exist_ok=True)

for name in FIG1_REGIMES:
    rec = run_monte_carlo(fig1_config(name, trials=trials))
    for fmt in ("csv", "json", "svg"):
        export_results(rec, fmt, out / f"{name}.{fmt}")
    print(name)
    for a in rec.algorithms:
        half = rec.horizon // 2
        print(f"  {a:>11}: final-half misses {rec.misses[a][half:].mean():6.2f} "
              f"extras {rec.extras[a][half:].mean():6.2f} "
              f"slope {miss_trend(rec.misses[a]):+.4f}/step")
