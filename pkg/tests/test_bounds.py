import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _desk import collect, violations
from sparsetrack.bounds import (
    HALF_RIP,
    MODCS_FACTOR,
    TheoremParams,
    c1,
    c2,
    cdprime,
    certify,
    cprime,
    csres_error_bound,
    csres_error_bound_max,
    ls_step_error_bound,
    modcs_error_bound,
    required_orders,
    support_error_metrics,
    verify_conclusions,
)
from sparsetrack.constants import MatrixConstants, compute_constants
from sparsetrack.errors import BoundDomainError, ConfigurationError, MissingConstantError
from sparsetrack.experiment import ExperimentConfig, run_trial
from sparsetrack.measurement import MeasurementModel, flat_deficient_matrix, noise_bound
from sparsetrack.signal_model import ModelParams
from sparsetrack.trackers import Thresholds


def test_c1_values():
    assert c1(0.0) == pytest.approx(4.0)
    assert c1(HALF_RIP) == pytest.approx(8.7895, abs=1e-4)
    assert c1(HALF_RIP) < MODCS_FACTOR


def test_c2_value():
    assert c2(0.0) == pytest.approx(2.0)


def test_cprime_cdprime_examples():
    assert cprime(4, 1, 0.0) == pytest.approx(4 + 2 * math.sqrt(2) * 2, abs=1e-12)
    assert cprime(4, 1, 0.0) == pytest.approx(9.657, abs=1e-3)
    assert cdprime(4, 1, 0.0) == pytest.approx(8.0)


@pytest.mark.parametrize("delta", [math.sqrt(2) - 1, 0.5, -0.1])
def test_denominator_domain(delta):
    with pytest.raises(BoundDomainError):
        c1(delta)


def test_cprime_needs_nonempty_delta():
    with pytest.raises(BoundDomainError):
        cprime(3, 0, 0.1)


def _K(delta=None, theta=None):
    return MatrixConstants(delta=dict(delta or {}), theta=dict(theta or {}))


def test_modcs_bound_domain_and_value():
    K = _K({5: 0.1, 6: 0.5})
    assert modcs_error_bound(3, 1, 1, 0.2, K) == pytest.approx(c1(0.1) * 0.2)
    with pytest.raises(BoundDomainError):
        modcs_error_bound(3, 2, 1, 0.2, K)
    with pytest.raises(MissingConstantError):
        modcs_error_bound(3, 3, 1, 0.2, K)


def test_ls_bound():
    K = _K({4: 0.2}, {(4, 2): 0.1})
    assert ls_step_error_bound(4, 2, 3.0, 0.5, K) == pytest.approx(math.sqrt(2) * 0.5 + 0.6)
    with pytest.raises(BoundDomainError):
        ls_step_error_bound(4, 2, 3.0, 0.5, _K({4: 0.5}, {(4, 2): 0.1}))


def test_csres_bound_preconditions():
    K = _K({4: 0.1, 2: 0.05}, {(4, 1): 0.1})
    b = csres_error_bound(4, 1, 2.0, 0.1, K)
    assert b == pytest.approx(cprime(4, 1, 0.05) * 0.1 + 0.1 * cdprime(4, 1, 0.05) * 2.0)
    with pytest.raises(BoundDomainError):
        csres_error_bound(4, 1, 2.0, 0.1, _K({4: 0.1, 2: HALF_RIP}, {(4, 1): 0.1}))
    with pytest.raises(BoundDomainError):
        csres_error_bound(4, 0, 2.0, 0.1, K)


def test_csres_max_covers_each_size():
    K = _K({4: 0.1, 2: 0.05, 4 * 1: 0.1}, {(4, 1): 0.1, (4, 2): 0.15})
    worst = csres_error_bound_max(4, 2, 1.0, 0.1, K)
    assert worst >= csres_error_bound(4, 1, 1.0, 0.1, K)
    assert worst >= csres_error_bound(4, 2, 1.0, 0.1, K)


def test_required_orders_t2():
    p = TheoremParams("T2", s0=3, sa=1, r=1.0, eps=0.0, alpha_add=0.0)
    assert required_orders(p) == ([6], [(5, 1)])
    assert (3, 2) in required_orders(p, conclusions=True)[1]


def test_missing_constants_listed():
    p = TheoremParams("GEN", s0=4, sa=1, r=1.0, eps=0.0, alpha_add=0.0, d0=3)
    with pytest.raises(MissingConstantError) as err:
        certify(p, _K())
    assert {"delta_9", "delta_6", "theta_6,3"} <= set(err.value.missing)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        TheoremParams("T9", s0=3, sa=1, r=1.0, eps=0.0)
    with pytest.raises(ConfigurationError):
        TheoremParams("T2", s0=3, sa=1, r=1.0, eps=0.0)
    with pytest.raises(ConfigurationError):
        TheoremParams("T2", s0=3, sa=1, r=1.0, eps=0.0, alpha_add=0.1, d0=3)
    with pytest.raises(ConfigurationError):
        TheoremParams.from_dict({"variant": "T1", "s0": 3, "sa": 1, "r": 1.0, "eps": 0.0,
                                 "colour": 1})


def test_gen_derived_constants():
    p = TheoremParams("GEN", s0=10, sa=1, r=1.0, eps=0.0, alpha_add=0.0, d0=3)
    assert (p.k1, p.k2) == (4, 3)
    assert p.k3 == pytest.approx(math.sqrt(6))


@pytest.fixture(scope="module")
def flat30():
    A = flat_deficient_matrix(30, seed=0)
    p = TheoremParams("T2", s0=3, sa=1, r=1.0, eps=noise_bound(0.001, 29),
                      alpha_add=MODCS_FACTOR * noise_bound(0.001, 29))
    deltas, thetas = required_orders(p, conclusions=True)
    return A, p, compute_constants(A, deltas, thetas)


def test_certify_noiseless_passes(flat30):
    A, p, K = flat30
    p0 = TheoremParams("T2", s0=3, sa=1, r=1.0, eps=0.0, alpha_add=0.0)
    rep = certify(p0, K)
    assert rep.passed
    assert rep.implied["alpha_del"] == pytest.approx(2 * K.get_theta(5, 1))


def test_certify_reports_negative_margin():
    p = TheoremParams("T2", s0=3, sa=1, r=1.0, eps=0.01, alpha_add=0.1)
    rep = certify(p, _K({6: 0.1}, {(5, 1): 0.3}))
    e = rep.entry("theta_bound")
    assert not e.passed and e.margin == pytest.approx(0.25 - 0.3)
    assert not rep.passed and e in rep.failures
    d = rep.to_dict()
    assert d["pass"] is False and d["entries"][1]["name"] == "theta_bound"


def test_certify_rate_threshold():
    p = TheoremParams("T1", s0=3, sa=1, r=0.01, eps=0.01)
    rep = certify(p, _K({6: 0.1}))
    assert rep.entry("rate_G").lhs == 0.01
    assert rep.entry("rate_G").rhs == pytest.approx(MODCS_FACTOR * 0.01)
    assert not rep.entry("rate_G").passed


def test_gen_reduces_to_c3_bitwise():
    K = _K({6: 0.12, 5: 0.1}, {(5, 1): 0.07})
    for r, eps in [(1.0, 0.01), (0.3, 0.02), (2.0, 0.0)]:
        common = dict(s0=3, sa=1, r=r, eps=eps, alpha_add=0.05)
        c3 = certify(TheoremParams("C3", **common), K)
        gen = certify(TheoremParams("GEN", d0=2, f=1, **common), K)
        for e in c3.entries:
            g = gen.entry(e.name)
            assert (g.lhs, g.rhs, g.passed) == (e.lhs, e.rhs, e.passed)
        assert gen.implied["G1"] == c3.implied["G1"] and gen.implied["G2"] == c3.implied["G2"]


def test_support_error_metrics():
    assert support_error_metrics([1, 2, 3], [2, 3, 7, 8]) == (1, 2)


def test_verify_conclusions_on_certified_run(flat30):
    A, p, K = flat30
    rep = certify(p, K)
    assert rep.passed
    thr = Thresholds(alpha_add=p.alpha_add, alpha_del=rep.implied["alpha_del"])
    cfg = ExperimentConfig(model=ModelParams(m=30, s0=3, sa=1, d=2, r=1.0), n=29, c=0.001,
                           n0=30, horizon=15, trials=1, algorithms=("modcs-aldl",),
                           thresholds=thr)
    mm = MeasurementModel(A=A, A0=np.eye(30), c=0.001, eps=p.eps, eps0=noise_bound(0.001, 30))
    rec = run_trial(cfg, 3, keep_traces=True, measurement=mm)
    traces = rec.traces["modcs-aldl"]
    v = verify_conclusions(traces, rec.truth, p, K)
    assert v.passed, [e.to_dict() for e in v.failures]

    # a spurious index in one estimate must be caught at that time
    bad = traces[7]
    extra = np.setdiff1d(np.arange(30), rec.truth[7].support)[0]
    bad.n_hat_next = np.union1d(bad.n_hat_next, [extra])
    v = verify_conclusions(traces, rec.truth, p, K)
    e = v.entry("final_extras")
    assert not e.passed and e.t == 7


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), kind=st.sampled_from(["modcs", "ls", "csres"]))
def test_bounds_dominate_measured_error(seed, kind):
    rows, _ = collect(kind, 3, seed)
    assert rows and not violations(rows)
