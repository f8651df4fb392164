"""Regenerate ``l1_corpus.json``: tiny partial-support l1 problems with
objectives from an independent conic solver (cvxpy + Clarabel).

Run from the repository root::

    python tests/fixtures/make_l1_corpus.py
"""

import json
from pathlib import Path

import cvxpy as cp
import numpy as np


def reference_objective(A, y, T, eps):
    m = A.shape[1]
    w = np.ones(m)
    w[list(T)] = 0.0
    b = cp.Variable(m)
    # a zero-radius cone is degenerate for interior-point methods
    cons = [A @ b == y] if eps == 0 else [cp.norm(y - A @ b, 2) <= eps]
    prob = cp.Problem(cp.Minimize(cp.norm1(cp.multiply(w, b))), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status != "optimal":
        raise RuntimeError(f"reference solve ended with status {prob.status}")
    return float(prob.value), b.value


def main():
    rng = np.random.default_rng(20240601)
    cases = []
    while len(cases) < 50:
        k = len(cases)
        m = int(rng.integers(6, 13))
        n = int(rng.integers(3, min(m - 1, 10) + 1))
        A = rng.standard_normal((n, m))
        A /= np.linalg.norm(A, axis=0)
        s = int(rng.integers(1, 4))
        support = rng.choice(m, size=s, replace=False)
        x = np.zeros(m)
        x[support] = rng.choice([-1, 1], size=s) * rng.uniform(0.5, 2.0, size=s)
        exact = k % 5 == 0
        if exact:
            w = np.zeros(n)
            eps = 0.0
        else:
            w = rng.uniform(-0.05, 0.05, size=n)
            eps = float(np.linalg.norm(w) * rng.uniform(1.0, 1.5))
        y = A @ x + w
        tsize = int(rng.integers(0, 4))
        T = sorted(rng.choice(m, size=tsize, replace=False).tolist())
        obj, beta = reference_objective(A, y, T, eps)
        case = {"A": A.tolist(), "y": y.tolist(), "T": T, "eps": eps,
                "objective": obj, "x": x.tolist(), "exact": False}
        if exact:
            # keep it as an exact-recovery case only if the reference recovers x
            case["exact"] = bool(np.max(np.abs(beta - x)) < 1e-7)
        cases.append(case)
    out = Path(__file__).with_name("l1_corpus.json")
    out.write_text(json.dumps({"solver": "cvxpy-CLARABEL", "cases": cases}, indent=0))
    print(f"wrote {len(cases)} cases, {sum(c['exact'] for c in cases)} exact-recovery")


if __name__ == "__main__":
    main()
