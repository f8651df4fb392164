"""Measurement matrices, bounded noise and the observation model ``y = A x + w``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "MeasurementModel",
    "gaussian_matrix",
    "partial_orthogonal_matrix",
    "flat_deficient_matrix",
    "uniform_noise",
    "noise_bound",
    "measure",
    "default_n0",
    "save_matrix_csv",
    "load_matrix_csv",
]


def gaussian_matrix(n: int, m: int, seed=None, normalize: bool = True) -> np.ndarray:
    """i.i.d. N(0, 1) matrix, optionally with unit-norm columns."""
    if n <= 0 or m <= 0:
        raise ValueError(f"matrix dimensions must be positive, got ({n}, {m})")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    if normalize:
        A /= np.linalg.norm(A, axis=0)
    return A


def partial_orthogonal_matrix(n: int, m: int, seed=None, normalize: bool = True) -> np.ndarray:
    """First ``n`` rows of a Haar-random ``m x m`` orthogonal matrix.

    With ``n`` close to ``m`` the restricted isometry constants are small,
    which makes exact certification possible on small problems. ``n = m``
    gives orthonormal columns.
    """
    if not 0 < n <= m:
        raise ValueError(f"need 0 < n <= m, got ({n}, {m})")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    Q *= np.sign(np.diag(R))
    A = Q[:n].copy()
    if normalize:
        A /= np.linalg.norm(A, axis=0)
    return A


def uniform_noise(n: int, c: float, seed=None) -> np.ndarray:
    """i.i.d. uniform noise on ``[-c, c]``."""
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0:
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    return rng.uniform(-c, c, size=n)


def noise_bound(c: float, n: int) -> float:
    """Worst-case l2 norm ``c sqrt(n)`` of a vector with entries in [-c, c]."""
    if c < 0 or n < 1:
        raise ValueError("need c >= 0 and n >= 1")
    return c * math.sqrt(n)


def measure(A, x, w=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or x.shape != (A.shape[1],):
        raise ValueError(f"shape mismatch: A {A.shape}, x {x.shape}")
    y = A @ x
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != (A.shape[0],):
            raise ValueError(f"shape mismatch: A {A.shape}, w {w.shape}")
        y = y + w
    return y


def default_n0(m: int, s0: int) -> int:
    """Rows of the initial matrix: ``min(m, 4 S0 + 10)``.

    Chosen so that the first (plain CS) step recovers the support almost
    always; with ``3 S0 + 10`` rows it fails in about 40% of trials at
    ``m = 200``, ``S0 = 20``.
    """
    return min(m, 4 * s0 + 10)


@dataclass(frozen=True)
class MeasurementModel:
    A: np.ndarray
    A0: np.ndarray
    c: float
    eps: float
    eps0: float

    def __post_init__(self):
        n, m = self.A.shape
        n0, m0 = self.A0.shape
        if m0 != m:
            raise ConfigurationError("A and A0 must have the same number of columns")
        if n0 < n:
            raise ConfigurationError(f"n0={n0} must be >= n={n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n0(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @classmethod
    def gaussian(cls, n: int, m: int, c: float, n0: int | None = None, s0: int | None = None,
                 seed=None, normalize: bool = True) -> "MeasurementModel":
        """Random Gaussian model.

        ``A0`` is ``A`` with ``n0 - n`` further i.i.d. rows appended (scaled by
        the same column factors), so the first ``n`` entries of an initial
        measurement are an ordinary measurement with ``A``.
        """
        if not n < m:
            raise ConfigurationError(f"need n < m, got n={n}, m={m}")
        if n0 is None:
            n0 = max(default_n0(m, s0 if s0 is not None else n // 3), n)
        if not n <= n0:
            raise ConfigurationError(f"need n0 >= n, got n0={n0}, n={n}")
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((n0, m))
        if normalize:
            G /= np.linalg.norm(G[:n], axis=0)
        return cls(A=G[:n].copy(), A0=G, c=c, eps=noise_bound(c, n), eps0=noise_bound(c, n0))

    def noise(self, rng, initial: bool = False) -> np.ndarray:
        return uniform_noise(self.n0 if initial else self.n, self.c, rng)


def save_matrix_csv(A, path) -> None:
    """Write ``A`` row-major with a first line ``n,m``."""
    A = np.asarray(A, dtype=float)
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        np.savetxt(fh, A, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        n, m = int(header[0]), int(header[1])
        A = np.loadtxt(fh, delimiter=",", ndmin=2)
    if A.shape != (n, m):
        raise ValueError(f"{path}: header says {n}x{m}, body is {A.shape[0]}x{A.shape[1]}")
    return A


def flat_deficient_matrix(m: int, seed=None, normalize: bool = True) -> np.ndarray:
    """``(m - 1) x m`` matrix with orthonormal rows spanning the complement of
    the flat vector ``(1, ..., 1) / sqrt(m)``.

    After column normalization its constants are known in closed form,
    ``delta_S = (S - 1)/(m - 1)`` for ``S >= 2`` and ``theta_{S,S'} =
    sqrt(S S')/(m - 1)``, whatever the seed.
    """
    if m < 3:
        raise ValueError("need m >= 3")
    rng = np.random.default_rng(seed)
    q = np.ones(m) / math.sqrt(m)
    G = rng.standard_normal((m, m - 1))
    G -= np.outer(q, q @ G)
    Q, _ = np.linalg.qr(G)
    A = Q.T.copy()
    if normalize:
        A /= np.linalg.norm(A, axis=0)
    return A
