"""Certify the stability hypotheses on a small matrix, then check the
conclusions along a simulated run.

The matrix has m - 1 orthonormal rows orthogonal to the all-ones vector,
so every pair of columns has the same inner product -1/(m-1) and the exact
constants are small enough for the sufficient conditions to hold at m = 30.
"""

import numpy as np

from sparsetrack.bounds import (
    MODCS_FACTOR,
    TheoremParams,
    certify,
    required_orders,
    verify_conclusions,
)
from sparsetrack.constants import compute_constants
from sparsetrack.experiment import ExperimentConfig, run_trial
from sparsetrack.measurement import MeasurementModel, flat_deficient_matrix, noise_bound
from sparsetrack.signal_model import ModelParams
from sparsetrack.trackers import Thresholds

m, n, c, r = 30, 29, 0.001, 1.0
A = flat_deficient_matrix(m, seed=0)
eps = noise_bound(c, n)
mm = MeasurementModel(A=A, A0=np.eye(m), c=c, eps=eps, eps0=noise_bound(c, m))
alpha_add = MODCS_FACTOR * eps

for variant, alg in [("T1", "modcs"), ("T2", "modcs-aldl"), ("C3", "modcs-aldl"),
                     ("T3", "lscs")]:
    p = TheoremParams(variant, s0=3, sa=1, r=r, eps=eps, d=2, alpha_add=alpha_add)
    deltas, thetas = required_orders(p, conclusions=True)
    K = compute_constants(A, deltas, thetas)
    cert = certify(p, K)
    print(f"{p.variant}: hypotheses {'hold' if cert.passed else 'FAIL'}")
    for e in cert.entries:
        print(f"    {e.inequality:<62} {e.lhs:10.4g} {e.op:>2} {e.rhs:<10.4g} "
              f"margin {e.margin:+.3g}")
    if not cert.passed:
        continue

    thr = Thresholds(alpha=cert.implied.get("alpha", 0.0), alpha_add=alpha_add,
                     alpha_del=cert.implied.get("alpha_del", 0.0))
    cfg = ExperimentConfig(model=ModelParams(m=m, s0=3, sa=1, d=2, r=r), n=n, c=c, n0=m,
                           horizon=100, trials=1, algorithms=(alg,), thresholds=thr)
    rec = run_trial(cfg, 7, keep_traces=True, measurement=mm)
    rep = verify_conclusions(rec.traces[alg], rec.truth, p, K)
    bad = [e.name for e in rep.failures]
    print(f"    100 steps of {alg}: conclusions {'all hold' if not bad else bad}")
    worst = rep.entry("error_final")
    print(f"    worst final error {worst.lhs:.3g} (cap {worst.rhs:.3g})")
