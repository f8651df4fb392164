"""Exact restricted isometry and restricted orthogonality constants.

Both are computed by exhaustive subset enumeration over the Gram matrix
``G = A'A``:

* ``delta_S`` is the largest deviation from 1 of an eigenvalue of a
  principal ``S x S`` block of ``G``;
* ``theta_{S,S'}`` is the largest spectral norm of an off-diagonal block
  ``G[T, T']`` with ``T``, ``T'`` disjoint of sizes ``S``, ``S'``.

Subsets are visited in lexicographic order. There is no sampling fallback:
if the number of subsets exceeds the budget an ``EnumerationLimitError`` is
raised.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import EnumerationLimitError, MissingConstantError

__all__ = [
    "DEFAULT_BUDGET",
    "MatrixConstants",
    "rip_delta",
    "roc_theta",
    "compute_constants",
    "matrix_fingerprint",
]

DEFAULT_BUDGET = 10_000_000
_CHUNK = 20_000


def matrix_fingerprint(A) -> str:
    A = np.ascontiguousarray(np.asarray(A, dtype=np.float64))
    h = hashlib.sha256()
    h.update(np.asarray(A.shape, dtype=np.int64).tobytes())
    h.update(A.tobytes())
    return h.hexdigest()[:16]


def _combination_chunks(m, k, chunk=_CHUNK):
    it = itertools.combinations(range(m), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def rip_delta(A, S: int, budget: int = DEFAULT_BUDGET) -> float:
    """Order-``S`` restricted isometry constant of ``A`` (exact)."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    if not 1 <= S <= min(n, m):
        raise ValueError(f"need 1 <= S <= min(n, m) = {min(n, m)}, got {S}")
    count = comb(m, S)
    if count > budget:
        raise EnumerationLimitError(
            f"delta_{S} needs {count} subsets of {m} columns, budget is {budget}")
    G = A.T @ A
    worst = 0.0
    for idx in _combination_chunks(m, S):
        blocks = G[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(blocks)
        worst = max(worst, float(np.max(ev[:, -1] - 1.0)), float(np.max(1.0 - ev[:, 0])))
    return worst


def roc_theta(A, S: int, Sp: int, budget: int = DEFAULT_BUDGET) -> float:
    """Restricted orthogonality constant ``theta_{S,S'}`` of ``A`` (exact)."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    if S < 0 or Sp < 0:
        raise ValueError("orders must be non-negative")
    if S == 0 or Sp == 0:
        return 0.0
    if S + Sp > m:
        raise ValueError(f"need S + S' <= m = {m}, got {S} + {Sp}")
    if Sp > S:
        S, Sp = Sp, S
    count = comb(m, S) * comb(m - S, Sp)
    if count > budget:
        raise EnumerationLimitError(
            f"theta_{S},{Sp} needs {count} subset pairs of {m} columns, budget is {budget}")
    G = A.T @ A
    # complement positions as offsets into the sorted complement of T
    inner = np.array(list(itertools.combinations(range(m - S), Sp)), dtype=np.intp)
    per_T = max(1, _CHUNK * 10 // (inner.shape[0] * S * Sp))
    cols_all = np.arange(m)
    worst = 0.0
    for Ts in _combination_chunks(m, S, per_T):
        mask = np.ones((Ts.shape[0], m), dtype=bool)
        mask[np.arange(Ts.shape[0])[:, None], Ts] = False
        rest = np.broadcast_to(cols_all, mask.shape)[mask].reshape(Ts.shape[0], m - S)
        cols = rest[:, inner]                               # (k1, k2, Sp)
        block = G[Ts[:, None, :, None], cols[:, :, None, :]]  # (k1, k2, S, Sp)
        if Sp == 1:
            val = np.max(np.linalg.norm(block[..., 0], axis=-1))
        else:
            val = np.max(np.linalg.svd(block, compute_uv=False)[..., 0])
        worst = max(worst, float(val))
    return worst


def _theta_key(S, Sp) -> str:
    return f"{S}:{Sp}"


@dataclass
class MatrixConstants:
    """Exact constants of one matrix, keyed by order."""

    delta: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)
    fingerprint: str = ""
    shape: tuple = ()

    def get_delta(self, S: int) -> float:
        if S == 0:
            return 0.0
        try:
            return self.delta[int(S)]
        except KeyError:
            raise MissingConstantError([f"delta_{S}"]) from None

    def get_theta(self, S: int, Sp: int) -> float:
        if S == 0 or Sp == 0:
            return 0.0
        for key in ((int(S), int(Sp)), (int(Sp), int(S))):
            if key in self.theta:
                return self.theta[key]
        raise MissingConstantError([f"theta_{S},{Sp}"])

    def has_delta(self, S) -> bool:
        return S == 0 or int(S) in self.delta

    def has_theta(self, S, Sp) -> bool:
        return S == 0 or Sp == 0 or (S, Sp) in self.theta or (Sp, S) in self.theta

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "shape": list(self.shape),
            "delta": {str(k): v for k, v in sorted(self.delta.items())},
            "theta": {_theta_key(*k): v for k, v in sorted(self.theta.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixConstants":
        theta = {}
        for k, v in d.get("theta", {}).items():
            a, b = k.split(":")
            theta[(int(a), int(b))] = float(v)
        return cls(delta={int(k): float(v) for k, v in d.get("delta", {}).items()},
                   theta=theta, fingerprint=d.get("fingerprint", ""),
                   shape=tuple(d.get("shape", ())))

    def check_monotone(self, tol: float = 1e-12) -> list:
        """Return a list of monotonicity violations (empty when consistent)."""
        bad = []
        ds = sorted(self.delta)
        for a, b in zip(ds, ds[1:]):
            if self.delta[b] < self.delta[a] - tol:
                bad.append(f"delta_{b} < delta_{a}")
        for (s, sp), v in self.theta.items():
            for (s2, sp2), v2 in self.theta.items():
                if s2 >= s and sp2 >= sp and v2 < v - tol:
                    bad.append(f"theta_{s2},{sp2} < theta_{s},{sp}")
        for (s, sp), v in self.theta.items():
            if (s + sp) in self.delta and v > self.delta[s + sp] + tol:
                bad.append(f"theta_{s},{sp} > delta_{s + sp}")
        return bad


def compute_constants(A, delta_orders=(), theta_pairs=(), budget: int = DEFAULT_BUDGET
                      ) -> MatrixConstants:
    """Compute the requested ``delta_S`` and ``theta_{S,S'}`` exactly."""
    A = np.asarray(A, dtype=float)
    out = MatrixConstants(fingerprint=matrix_fingerprint(A), shape=tuple(A.shape))
    for S in sorted({int(s) for s in delta_orders}):
        out.delta[S] = rip_delta(A, S, budget)
    for S, Sp in sorted({(int(a), int(b)) for a, b in theta_pairs}):
        out.theta[(S, Sp)] = roc_theta(A, S, Sp, budget)
    return out
