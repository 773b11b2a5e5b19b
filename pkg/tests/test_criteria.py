from __future__ import annotations

import json
import math

import numpy as np
import pytest

from singstab import catalog
from singstab.criteria import (
    Estimates,
    analyze,
    approx_validate,
    build_complementary_family,
    fingerprint,
    necessary_check,
    pair_cycle_tau,
    prop1_check,
    prop2_check,
    sufficient_check,
    swap_matrix,
)
from singstab.exponents import lambda_estimate
from singstab.model import Mode, SystemFamily

SMALL = dict(eps_grid=(1e-1, 1e-2), depth=5, budget=30_000)


def _claims(conclusions):
    return {c.claim: c for c in conclusions}


def test_fingerprint_is_stable(classic_family):
    assert fingerprint(classic_family) == fingerprint(catalog.classic(1.0))
    assert fingerprint(classic_family) != fingerprint(catalog.classic(0.5))
    assert len(fingerprint(classic_family)) == 16


def test_classic_sufficient_with_simulation(classic_family):
    c = _claims(sufficient_check(classic_family, **SMALL))
    s1 = c["sufficient-1"]
    assert s1.status == "applied"
    rates = s1.evidence["simulated_rates"]
    assert all(r["rate"] < 0 for r in rates)
    assert "eps-limit-equals-bar" in c


def test_printed_family_is_premise_violation(printed_family):
    rep = analyze(printed_family, simulate_check=False, **SMALL)
    by = _claims(rep.conclusions)
    for name in ("necessary-1", "necessary-3", "sufficient-1", "sufficient-2"):
        assert by[name].status == "violated-premise"
        assert "mode 1" in by[name].justification
    # the fast block with D = +1 makes the slow-limit floor positive
    assert by["prop1-floor"].status == "applied"
    assert by["prop1-floor"].evidence["mode"] == 1


def test_prop1_floor_nonnegative_and_trend():
    # single mode, R = I, zero fast rows: lambda(Delta_Z) = 0 and eps * lambda(Sigma-eps) -> 0
    m = Mode(1, np.eye(2), np.array([[-1.0, 0.5], [0.0, -1.0]]), np.eye(2))
    fam = SystemFamily((m,), 0.5)
    out = prop1_check(fam, eps_grid=(1e-1, 1e-2, 1e-3), depth=4, budget=10_000)
    assert out["floor"] >= -1e-12
    assert out["limit_bounds"][0] == pytest.approx(0.0, abs=1e-12)
    scaled = [abs(r["scaled_lower"]) for r in out["eps_rows"]]
    assert scaled[0] > scaled[1] > scaled[2]


def test_scaled_exponent_deficit_is_linear_in_eps():
    # for a stable family eps * lambda(Sigma-eps) sits below the zero floor by O(eps)
    rng = np.random.default_rng(0)
    fams = [catalog.random_family(rng, 2, d=int(rng.integers(2, 4)), tau=0.0, R="gaussian") for _ in range(19)]
    fam = fams[18]
    vals = [e * lambda_estimate(fam, "Sigma-eps", eps=e, depth=5, budget=20_000, refine=False).certified_lower
            for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(v < 0 for v in vals)
    ratios = [vals[k] / vals[k + 1] for k in range(3)]
    assert all(8.0 < r < 12.0 for r in ratios), ratios


def test_jump_growth_finds_small_tau():
    # complementary family with rho(M11^-1 M12 N22^-1 N21) = 1.425: Sigma-bar is EU only for small tau
    M = np.array([[-1.3109716854945324, -0.7497392959676222], [1.880632275318168, -0.7546962100118146]])
    fam = build_complementary_family([M], 1, tau=0.5)
    c = _claims(necessary_check(fam, **SMALL))
    rb = c["jump-growth-small-tau"]
    assert rb.status == "applied"
    found = rb.evidence["tau_search"][-1]["tau"]
    _, tau_max = pair_cycle_tau(M, M, 1)
    assert found < tau_max


def test_pair_cycle_threshold():
    M = np.array([[-1.3109716854945324, -0.7497392959676222], [1.880632275318168, -0.7546962100118146]])
    rho0, tau_max = pair_cycle_tau(M, M, 1)
    assert rho0 == pytest.approx(1.4251109542829035, rel=1e-12)
    assert 0.07 < tau_max < 0.071
    concl = prop2_check([M], 1, tau=0.5)[0]
    assert concl.claim == "prop2-eu" and "small enough tau" in concl.statement
    assert "beyond the growth range" in concl.consistency
    assert prop2_check([M], 1, tau=0.01)[0].consistency == "consistent"


def test_swap_and_complementary_family():
    J = swap_matrix(3, 1)
    assert np.array_equal(J @ np.array([1.0, 2.0, 3.0]), [2.0, 3.0, 1.0])
    M = np.array([[-1.0, 0.5], [0.3, -1.0]])
    fam = build_complementary_family([M], 1, tau=0.5)
    assert len(fam) == 2
    assert [m.l for m in fam.modes] == [1, 1]
    # the second mode's fast variable is the first coordinate
    assert np.allclose(fam.modes[1].Lambda @ fam.modes[1].P_inv, J_swap(M))
    with pytest.raises(ValueError):
        build_complementary_family([], 1)
    with pytest.raises(ValueError):
        swap_matrix(2, 2)


def J_swap(M):
    J = swap_matrix(2, 1)
    return J @ M @ J.T


def test_prop2_worked_examples():
    es = prop2_check([np.array([[-1.0, 0.5], [0.3, -1.0]])], 1, tau=0.5)[0]
    assert (es.claim, es.status) == ("prop2-es", "applied")
    assert prop2_check([np.array([[0.2, 0.0], [0.0, -1.0]])], 1)[0].claim == "prop2-eu"
    eu = prop2_check([np.array([[-1.0, 2.0], [2.0, -1.0]])], 1)[0]
    assert eu.evidence["pairs"][0]["spectral_radius"] == pytest.approx(4.0)
    three = prop2_check([-np.eye(3) + 0.1], 1)
    assert three[0].claim == "prop2-es" and three[0].status == "violated-premise"


def test_prop2_es_agrees_with_sufficient():
    M = np.array([[-1.0, 0.5], [0.3, -1.0]])
    fam = build_complementary_family([M], 1, tau=0.5)
    assert _claims(sufficient_check(fam, simulate_check=False, **SMALL))["sufficient-1"].status == "applied"


def test_approx_validate_classic(classic_family):
    rep = approx_validate(classic_family)
    zero = [r for r in rep.rows if r["t"] == 0.0]
    assert zero and all(r["deviation"] == 0.0 for r in zero)
    assert all(r["deviation"] >= 0 for r in rep.rows)
    assert all(math.isfinite(k) for k in rep.fits.values())
    assert not rep.divergence["comparison"]
    long = [r for r in rep.rows if r["kind"] == "long" and r["eps"] == 1e-3 and 4.0 <= r["t"] <= 6.0]
    assert long and all(r["deviation"] <= rep.fits["long"] * 1e-3 for r in long)
    csv = rep.to_csv().splitlines()
    assert csv[0] == "kind,mode,eps,t,deviation,bound,ratio" and len(csv) == len(rep.rows) + 1


def test_approx_validate_mu_shift(classic_family):
    rep = approx_validate(classic_family, eps_grid=(1e-2,), t_grid=(0.0, 1.0), mu=0.5)
    assert rep.mu == 0.5
    assert rep.rows[0]["deviation"] == 0.0


def test_analysis_report_serializes(swapped_family):
    rep = analyze(swapped_family, simulate_check=False, **SMALL)
    doc = rep.to_dict()
    json.dumps(doc, default=str)
    assert rep.premise_violation_only
    text = rep.summary()
    assert "sufficient-2" in text


def test_estimates_memoize_and_capture_errors(printed_family, classic_family):
    est = Estimates(classic_family, (1e-1,), 4, 10_000)
    assert est.bar() is est.bar()
    bad = Estimates(printed_family, (1e-1,), 4, 10_000)
    assert bad.bar() is None
    assert "Hurwitz" in bad.error(("bar", printed_family.tau))
