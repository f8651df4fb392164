import itertools
import json
import math

import numpy as np
import pytest

from sparsetrack.constants import (
    MatrixConstants,
    compute_constants,
    matrix_fingerprint,
    rip_delta,
    roc_theta,
)
from sparsetrack.errors import EnumerationLimitError, MissingConstantError
from sparsetrack.measurement import flat_deficient_matrix, gaussian_matrix


def _coherence(A):
    G = A.T @ A
    return float(np.max(np.abs(G - np.diag(np.diag(G)))))


def _delta_loop(A, S):
    """Plain loop over supports, one eigendecomposition each."""
    worst = 0.0
    for T in itertools.combinations(range(A.shape[1]), S):
        ev = np.linalg.eigvalsh(A[:, T].T @ A[:, T])
        worst = max(worst, abs(ev[0] - 1), abs(ev[-1] - 1))
    return worst


def _theta_loop(A, S, Sp):
    m = A.shape[1]
    worst = 0.0
    for T in itertools.combinations(range(m), S):
        rest = [i for i in range(m) if i not in T]
        for U in itertools.combinations(rest, Sp):
            worst = max(worst, np.linalg.norm(A[:, T].T @ A[:, U], 2))
    return worst


@pytest.mark.parametrize("shape,seed", [((6, 10), 0), ((6, 10), 1), ((8, 12), 2), ((8, 12), 3)])
def test_pairwise_orders_match_coherence(shape, seed):
    A = gaussian_matrix(*shape, seed=seed)
    mu = _coherence(A)
    assert rip_delta(A, 2) == pytest.approx(mu, abs=1e-10)
    assert roc_theta(A, 1, 1) == pytest.approx(mu, abs=1e-10)
    assert rip_delta(A, 1) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("S", [2, 3])
def test_delta_matches_loop(S):
    A = gaussian_matrix(5, 8, seed=4)
    assert rip_delta(A, S) == pytest.approx(_delta_loop(A, S), abs=1e-12)


@pytest.mark.parametrize("S,Sp", [(1, 2), (2, 1), (2, 2), (3, 1)])
def test_theta_matches_loop(S, Sp):
    A = gaussian_matrix(5, 8, seed=5)
    assert roc_theta(A, S, Sp) == pytest.approx(_theta_loop(A, S, Sp), abs=1e-12)


def test_flat_matrix_closed_forms():
    m = 10
    A = flat_deficient_matrix(m, seed=1)
    for S in range(1, 5):
        assert rip_delta(A, S) == pytest.approx((S - 1) / (m - 1), abs=1e-12)
    for S, Sp in [(1, 1), (2, 1), (3, 2)]:
        assert roc_theta(A, S, Sp) == pytest.approx(math.sqrt(S * Sp) / (m - 1), abs=1e-12)


def test_unnormalized_delta_sees_column_energy():
    A = np.diag([1.0, 2.0, 0.5])
    assert rip_delta(A, 1) == pytest.approx(3.0)


def test_zero_order_theta_is_zero():
    A = gaussian_matrix(4, 6, seed=0)
    assert roc_theta(A, 0, 2) == 0.0


def test_budget_exceeded():
    A = gaussian_matrix(10, 30, seed=0)
    with pytest.raises(EnumerationLimitError):
        rip_delta(A, 5, budget=1000)
    with pytest.raises(EnumerationLimitError):
        roc_theta(A, 3, 3, budget=1000)


def test_invalid_order():
    A = gaussian_matrix(4, 6, seed=0)
    with pytest.raises(ValueError):
        rip_delta(A, 7)


def test_monotone_invariants():
    A = gaussian_matrix(8, 12, seed=6)
    K = compute_constants(A, [1, 2, 3, 4, 5], [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)])
    assert K.check_monotone() == []
    d = [K.get_delta(s) for s in range(1, 6)]
    assert all(a <= b + 1e-12 for a, b in zip(d, d[1:]))
    assert K.get_theta(2, 3) <= K.get_delta(5) + 1e-12


def test_monotone_check_reports_violations():
    K = MatrixConstants(delta={2: 0.5, 3: 0.2}, theta={(1, 1): 0.6})
    bad = K.check_monotone()
    assert len(bad) >= 2


def test_lookup_is_symmetric_and_reports_missing():
    A = gaussian_matrix(6, 9, seed=7)
    K = compute_constants(A, [2], [(2, 1)])
    assert K.get_theta(1, 2) == K.get_theta(2, 1)
    assert K.get_delta(0) == 0.0
    with pytest.raises(MissingConstantError) as err:
        K.get_delta(4)
    assert "delta_4" in str(err.value)


def test_json_round_trip():
    A = gaussian_matrix(6, 9, seed=8)
    K = compute_constants(A, [2, 3], [(1, 2), (2, 2)])
    K2 = MatrixConstants.from_dict(json.loads(K.to_json()))
    assert K2.delta == K.delta and K2.theta == K.theta
    assert K2.fingerprint == K.fingerprint == matrix_fingerprint(A)
