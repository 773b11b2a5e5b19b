from __future__ import annotations

import numpy as np
import pytest

from singstab import catalog, linalg
from singstab.chang import build_transform, reduced_mode
from singstab.reduced import (
    TimeGrid,
    bar_jump,
    bar_projector,
    build_generators,
    jump_set,
    sample_transients,
    tilde_jump,
    transient_factor,
)


def test_time_grid_contains_tau_and_nests():
    g = TimeGrid.log_spaced(0.5, per_decade=4, t_max=10)
    assert g.points[0] == 0.5
    assert all(p >= 0.5 for p in g.points)
    g1 = TimeGrid.log_spaced(1.0, per_decade=4, t_max=10)
    assert set(g1.points) <= set(g.points)
    with pytest.raises(ValueError):
        TimeGrid((0.1,), tau=0.5)
    with pytest.raises(ValueError):
        TimeGrid(())
    assert TimeGrid.log_spaced(100.0, t_max=10).points == (100.0,)


def test_bar_projector_is_idempotent(rng):
    for _ in range(10):
        m = catalog.random_mode(rng)
        proj = bar_projector(m.replace(R=np.eye(m.d)))
        assert np.allclose(proj @ proj, proj, atol=1e-10)
        assert linalg.numerical_rank(proj) == m.l


def test_example_bar_jumps_vanish(swapped_family):
    # R maps onto the kernel of the slow projection in both modes
    for m in swapped_family.modes:
        assert np.allclose(bar_projector(m), 0, atol=1e-15)
    a, b = swapped_family.modes
    assert np.allclose(bar_jump(a, b), 0)


def test_bar_jump_identity_for_single_classic(classic_family):
    m = classic_family.modes[0]
    assert bar_jump(m, m)[0, 0] == pytest.approx(1.0)


def test_tilde_jump_defaults_to_bar(rng):
    fam = catalog.random_family(rng, 2, d=3, R="gaussian")
    a, b = fam.modes
    assert np.array_equal(tilde_jump(a, b), bar_jump(a, b))
    F = transient_factor(fam, ())
    assert np.allclose(tilde_jump(a, b, F), bar_jump(a, b))


def test_transient_factor_composition(rng):
    fam = catalog.random_family(rng, 2, d=3, R="gaussian")
    f = transient_factor(fam, [(0, 0.5), (1, 1.0)])
    g0 = transient_factor(fam, [(0, 0.5)]).matrix
    g1 = transient_factor(fam, [(1, 1.0)]).matrix
    assert np.allclose(f.matrix, g1 @ g0)
    assert f.first_mode == 0 and f.last_mode == 1
    assert "X(1,s=1)" in f.describe()
    with pytest.raises(ValueError):
        transient_factor(fam, [(0, 0.0)])


def test_sample_transients_counts(classic_family):
    facs = sample_transients(classic_family, n_max=1, s_grid=(0.5, 1.0))
    assert len(facs) == 3
    assert np.array_equal(facs[0].matrix, np.eye(2))
    assert len(sample_transients(classic_family, n_max=0)) == 1
    with pytest.raises(ValueError):
        sample_transients(classic_family, n_max=-1)


def test_forbid_self_switch_drops_repeats(swapped_family):
    fam = swapped_family.with_forbid_self_switch(True)
    for f in sample_transients(fam):
        modes = [m for m, _ in f.recipe]
        assert all(x != y for x, y in zip(modes, modes[1:]))


def test_generators_match_definitions(rng):
    fam = catalog.random_family(rng, 2, d=3, tau=0.2, R="gaussian")
    grid = TimeGrid((0.2, 1.0), tau=0.2)
    eps = 0.05
    ge = build_generators(fam, "N-eps", eps=eps, grid=grid)
    m = fam.modes[1]
    ch = build_transform(m, eps)
    assert np.allclose(ge.letters[1, 1], m.R @ ch.T_inv @ linalg.mat_exp(ch.Gamma, 1.0) @ ch.T)
    gb = build_generators(fam, "N-bar", grid=grid)
    rm = reduced_mode(m)
    mid = np.zeros((3, 3))
    mid[: m.l, : m.l] = linalg.mat_exp(rm.M, 0.2)
    assert np.allclose(gb.letters[1, 0], m.R @ rm.T0_inv @ mid @ rm.T0)
    gh = build_generators(fam, "N-hat", grid=grid)
    assert gh.letters.shape == (2, 2, 3, 3)
    # shifted evaluation
    shifted = gb.with_mu(0.5)
    assert np.allclose(shifted.letter(1, 0), np.exp(0.1) * gb.letters[1, 0])
    assert np.allclose(shifted.evaluate(1, 0.2), shifted.letter(1, 0))
    with pytest.raises(ValueError):
        gb.evaluate(0, 0.1)


def test_tilde_generators_use_factors(classic_family):
    facs = sample_transients(classic_family, n_max=1, s_grid=(1.0,))
    g = build_generators(classic_family, "N-tilde", grid=TimeGrid((1.0,)), transients=facs)
    assert len(g.templates) == len(facs)
    base = build_generators(classic_family, "N-bar", grid=TimeGrid((1.0,))).letters[0, 0]
    assert np.allclose(g.letters[1, 0], facs[1].matrix @ base)


def test_generator_errors(classic_family, printed_family):
    with pytest.raises(ValueError):
        build_generators(classic_family, "N-eps")
    with pytest.raises(ValueError):
        build_generators(classic_family, "nope")
    # the printed second mode has D = +1: exp(t G/eps) overflows on long weights
    with pytest.raises(FloatingPointError):
        build_generators(printed_family, "N-eps", eps=1e-3)
    g = build_generators(printed_family, "N-eps", eps=1e-3, allow_nonfinite=True)
    assert not np.all(np.isfinite(g.letters))


def test_jump_sets(swapped_family):
    r = jump_set(swapped_family, "R")
    assert len(r) == 2 and r.first_modes == (0, 1)
    rb = jump_set(swapped_family, "R-bar")
    assert all(np.allclose(m, 0) for m in rb.members)
    rt = jump_set(swapped_family, "R-tilde", sample_transients(swapped_family, n_max=1, s_grid=(1.0,)))
    assert len(rt) == 2 * 3
    with pytest.raises(ValueError):
        jump_set(swapped_family, "Q")
