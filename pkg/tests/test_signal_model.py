import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsetrack.errors import ConfigurationError
from sparsetrack.signal_model import (
    ModelParams,
    audit_transition,
    generate_trajectory,
    init_signal,
    small_set,
    step_signal,
)


def test_fig1_initial_composition():
    p = ModelParams(m=200, s0=20, sa=2, d=3, r=1.0)
    s = init_signal(p, seed=0)
    mags = np.abs(s.x[s.support])
    assert s.support.size == 20
    assert np.sum(np.isclose(mags, 1)) == 4
    assert np.sum(np.isclose(mags, 2)) == 4
    assert np.sum(np.isclose(mags, 3)) == 12
    assert s.x @ s.x == pytest.approx(128.0)
    assert p.power == pytest.approx(12 * 9 + 4 * (1 + 4))


def test_d1_composition_is_all_constant():
    p = ModelParams(m=10, s0=2, sa=1, d=1, r=1.0)
    s = init_signal(p, seed=1)
    assert s.inc.size == 0 and s.dec.size == 0
    assert np.allclose(np.abs(s.x[s.support]), p.M)


@pytest.mark.parametrize("kw", [
    dict(m=10, s0=2, sa=1, d=3, r=1.0),     # S0 < (2d-2) Sa
    dict(m=5, s0=4, sa=1, d=1, r=1.0),      # m not above S0 + Sa
    dict(m=50, s0=10, sa=1, d=2, r=0.0),
    dict(m=50, s0=4, sa=2, d=2, r=1.0),     # nothing left to decay from
])
def test_invalid_params_rejected(kw):
    with pytest.raises(ConfigurationError):
        ModelParams(**kw)


def test_invalid_params_lists_every_violation():
    with pytest.raises(ConfigurationError) as err:
        ModelParams(m=3, s0=2, sa=2, d=3, r=-1)
    msg = str(err.value)
    assert "r > 0" in msg and "m > S0 + Sa" in msg


def test_step_is_deterministic_given_seed():
    p = ModelParams(m=60, s0=10, sa=1, d=3, r=0.5)
    a, _ = generate_trajectory(p, 20, seed=5)
    b, _ = generate_trajectory(p, 20, seed=5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.x, y.x)


def test_d1_step_replaces_sa_elements():
    p = ModelParams(m=30, s0=5, sa=2, d=1, r=1.0)
    s0 = init_signal(p, seed=3)
    s1, ts = step_signal(s0, np.random.default_rng(4))
    assert ts.added.size == 2 and ts.removed.size == 2
    assert np.setdiff1d(s0.support, s1.support).size == 2
    assert np.allclose(np.abs(s1.x[s1.support]), 1.0)


def test_small_set_sizes_and_range():
    p = ModelParams(m=80, s0=16, sa=2, d=4, r=1.0)
    s = init_signal(p, seed=0)
    assert small_set(s, 1).size == 0
    assert small_set(s, 2).size == 4
    assert small_set(s, p.d).size == (2 * p.d - 2) * p.sa
    with pytest.raises(ValueError):
        small_set(s, 0)
    with pytest.raises(ValueError):
        small_set(s, p.d + 1)


def test_audit_detects_perturbed_magnitude():
    p = ModelParams(m=50, s0=10, sa=1, d=3, r=1.0)
    s0 = init_signal(p, seed=2)
    s1, ts = step_signal(s0, np.random.default_rng(9))
    assert audit_transition(s0, s1, ts, 2).ok
    bad = s1.x.copy()
    i = s1.support[0]
    bad[i] += 0.3
    s1.x = bad
    rep = audit_transition(s0, s1, ts, 2)
    assert "magnitude off the r-grid" in rep.failures


def test_audit_detects_broken_identity():
    p = ModelParams(m=50, s0=10, sa=1, d=3, r=1.0)
    s0 = init_signal(p, seed=2)
    s1, ts = step_signal(s0, np.random.default_rng(9))
    ts.added = np.zeros(0, dtype=np.intp)
    rep = audit_transition(s0, s1, ts, 2)
    assert "small-set evolution" in rep.failures


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 5), sa=st.integers(1, 3), extra=st.integers(1, 6),
       seed=st.integers(0, 2**32 - 1))
def test_trajectory_invariants(d, sa, extra, seed):
    s0 = (2 * d - 2) * sa + sa + extra
    p = ModelParams(m=s0 + sa + 15, s0=s0, sa=sa, d=d, r=0.7)
    states, trans = generate_trajectory(p, 40, seed=seed)
    hist0 = np.bincount(states[0].levels(), minlength=d + 1)
    for prev, nxt, ts in zip(states, states[1:], trans):
        assert nxt.support.size == p.s0
        assert nxt.x @ nxt.x == pytest.approx(p.power, rel=1e-10)
        np.testing.assert_array_equal(np.bincount(nxt.levels(), minlength=d + 1), hist0)
        for j in range(1, d + 1):
            assert ts.increased[j].size == sa
            assert audit_transition(prev, nxt, ts, j).ok
        for j in range(0, d):
            assert ts.decreased[j].size == sa
        alive = np.intersect1d(prev.support, nxt.support)
        assert np.all(np.sign(prev.x[alive]) == np.sign(nxt.x[alive]))
