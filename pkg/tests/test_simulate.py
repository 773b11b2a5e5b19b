from __future__ import annotations

import csv
import io

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from singstab import catalog, linalg
from singstab.chang import reduced_mode
from singstab.errors import AdmissibilityError, FitError, PremiseError
from singstab.exponents import lambda_estimate
from singstab.model import Mode, SwitchingSignal, SystemFamily, epsilon_generator
from singstab.reduced import bar_jump
from singstab.simulate import (
    Trajectory,
    fit_decay,
    make_periodic_signal,
    make_random_signal,
    signal_from_word,
    simulate,
)


def _scalar_traj(rate: float, t_end: float = 5.0) -> Trajectory:
    t = np.linspace(0, t_end, 200)
    states = np.exp(rate * t)[:, None]
    return Trajectory(t, states, np.zeros(t.size, dtype=int), (), "test", SwitchingSignal(((0, t_end),), 0))


@pytest.mark.parametrize("rate", [-2.0, 0.0, 0.5])
def test_fit_decay_exact(rate):
    assert fit_decay(_scalar_traj(rate)).rate == pytest.approx(rate, abs=1e-6)


def test_fit_decay_rotation_is_flat():
    m = Mode(1, np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2))
    fam = SystemFamily((m,), 0.0)
    # eps = 1 makes the generator the plain rotation
    tr = simulate(fam, SwitchingSignal(((0, 10.0),), 0), "Sigma-eps", eps=1.0, x0=[1.0, 0.0], dt_out=0.05)
    assert fit_decay(tr).rate == pytest.approx(0.0, abs=1e-6)


def test_fit_decay_errors():
    tr = _scalar_traj(-1.0)
    with pytest.raises(FitError):
        fit_decay(tr, (0.0, 0.1))
    zero = Trajectory(tr.times, np.zeros_like(tr.states), tr.modes, (), "z", tr.signal)
    with pytest.raises(FitError):
        fit_decay(zero)


def test_constant_signal_is_matrix_exponential(rng):
    fam = catalog.random_family(rng, 1, d=3, R="identity")
    G = epsilon_generator(fam.modes[0], 0.2)
    x0 = rng.normal(size=3)
    tr = simulate(fam, SwitchingSignal(((0, 2.0),), 0), "Sigma-eps", eps=0.2, x0=x0, dt_out=0.25)
    assert np.all(np.diff(tr.times) > 0)
    for t, x in zip(tr.times, tr.states):
        assert np.allclose(x, linalg.mat_exp(G, t) @ x0, rtol=1e-12, atol=1e-14)


def test_matches_adaptive_integrator(rng):
    for _ in range(10):
        fam = catalog.random_family(rng, 1, d=3, R="identity")
        G = epsilon_generator(fam.modes[0], 0.5)
        x0 = rng.normal(size=3)
        tr = simulate(fam, SwitchingSignal(((0, 1.0),), 0), "Sigma-eps", eps=0.5, x0=x0, dt_out=0.1)
        ref = solve_ivp(lambda t, x: G @ x, (0, 1.0), x0, method="DOP853", rtol=1e-13, atol=1e-14, t_eval=tr.times)
        assert np.max(np.abs(ref.y.T - tr.states)) <= 1e-8 * np.max(np.abs(ref.y))


def test_linearity(rng):
    fam = catalog.random_family(rng, 2, d=3, R="gaussian")
    sig = make_periodic_signal([0, 1], 0.3, 1.5)
    x0 = rng.normal(size=3)
    a = simulate(fam, sig, "Sigma-eps", eps=0.3, x0=x0, dt_out=0.1).states
    b = simulate(fam, sig, "Sigma-eps", eps=0.3, x0=-3.5 * x0, dt_out=0.1).states
    assert np.allclose(b, -3.5 * a, rtol=1e-12, atol=1e-14)


def test_jumps_are_recorded_on_both_sides(rng):
    fam = catalog.random_family(rng, 2, d=2, R="gaussian")
    sig = SwitchingSignal(((0, 0.5), (1, 0.5)), 0)
    tr = simulate(fam, sig, "Sigma-eps", eps=0.5, x0=[1.0, 0.0], t_end=1.0, dt_out=0.2)
    assert len(tr.jump_events) == 1
    ev = tr.jump_events[0]
    assert ev.time == 0.5 and (ev.mode_from, ev.mode_to) == (0, 1)
    assert np.allclose(ev.after, fam.modes[0].R @ ev.before)
    assert np.allclose(tr.state_at(0.5, "left"), ev.before)
    assert np.allclose(tr.state_at(0.5, "right"), ev.after)
    with pytest.raises(KeyError):
        tr.state_at(0.33)


def test_identity_jump_keeps_state(classic_family):
    sig = make_periodic_signal([0], 1.0, 3.0, tau=1.0)
    assert len(sig.pieces) == 3
    tr = simulate(classic_family, sig, "Sigma-eps", eps=0.1, x0=[1.0, 1.0])
    assert len(tr.jump_events) == 2
    for ev in tr.jump_events:
        assert np.array_equal(ev.before, ev.after)


def test_periodic_signal_counts():
    assert len(make_periodic_signal([0, 1], 0.4, 8).pieces) == 20
    with pytest.raises(AdmissibilityError):
        make_periodic_signal([0, 1], 0.4, 8, tau=1.0)


def test_random_signal_contract():
    a = make_random_signal(7, 1.0, 0.25, 10.0)
    assert a == make_random_signal(7, 1.0, 0.25, 10.0)
    assert all(dur >= 1.0 for _, dur in a.pieces)
    assert 1 <= len(a.pieces) <= 10
    with pytest.raises(ValueError):
        make_random_signal(1, -1.0, 1.0, 1.0)


def test_dwell_time_is_enforced(classic_family):
    with pytest.raises(AdmissibilityError):
        simulate(classic_family, SwitchingSignal(((0, 0.5), (0, 0.5)), 0), "Sigma-eps", eps=0.1)
    tr = simulate(classic_family, SwitchingSignal(((0, 0.5), (0, 0.5)), 0), "Sigma-eps", eps=0.1, check_dwell=False)
    assert tr.times[-1] == pytest.approx(1.0)


def test_reduced_targets_need_hurwitz_fast_blocks(printed_family):
    sig = make_periodic_signal([0, 1], 0.4, 1.0)
    with pytest.raises(PremiseError):
        simulate(printed_family, sig, "Sigma-bar")
    tr = simulate(printed_family, sig, "Sigma-eps", eps=0.1, x0=[1.0, 1.0], t_end=1.0)
    assert tr.states.shape[1] == 2


def test_bar_constant_signal_rate(classic_family):
    fam = classic_family.with_tau(0.0)
    tr = simulate(fam, SwitchingSignal(((0, 100.0),), 0), "Sigma-bar", x0=[1.0, 1.0], dt_out=0.5)
    assert fit_decay(tr, (10.0, 100.0)).rate == pytest.approx(-0.5, abs=2e-3)
    # inactive fast coordinate stays at zero in the carrier
    assert np.all(tr.states[:, 1] == 0)


def test_bar_flow_matches_word_product():
    rng = np.random.default_rng(2)
    fam = catalog.random_lyapunov_family(rng, 2, d=3, l=2, tau=0.5)
    est = lambda_estimate(fam, "Sigma-bar", depth=4, budget=20_000)
    assert est.witness is not None
    word = est.witness
    sig = signal_from_word(word, 1)
    # in slow coordinates the word product maps the initial state to the final one
    x0 = np.array([1.0, -0.5, 0.0])
    tr = simulate(fam, sig, "Sigma-bar", x0=x0, t_end=word.total_time, dt_out=word.total_time)
    m0, last = word.modes[0], word.modes[-1]
    l0 = fam.modes[m0].l
    y0 = (reduced_mode(fam.modes[m0]).T0 @ x0)[:l0]
    # apply the jump that closes the last piece, then compare with T0 Pi T0^-1 on the slow block
    after = bar_jump(fam.modes[sig.final_mode], fam.modes[last]) @ tr.states[-1][: fam.modes[last].l]
    lift = np.linalg.solve(reduced_mode(fam.modes[m0]).T0, np.concatenate([y0, np.zeros(fam.d - l0)]))
    full = reduced_mode(fam.modes[sig.final_mode]).T0 @ word.product @ lift
    assert np.allclose(after, full[: after.size], rtol=1e-9, atol=1e-12)


def test_csv_and_pair_table(classic_family):
    tr = simulate(classic_family, make_periodic_signal([0], 1.0, 2.0, tau=1.0), "Sigma-eps", eps=0.1,
                  x0=[1.0, 2.0], dt_out=0.5)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "x1", "x2", "mode"]
    assert len(rows) - 1 == len(tr.times)
    assert [r[0] for r in rows[1:]].count("1.0") == 2  # both sides of the jump
    table = tr.pair_table(1, 2).splitlines()
    assert table[0] == "# x1 x2" and len(table) == len(tr.times) + 1
    assert tr.to_svg().startswith("<svg")
