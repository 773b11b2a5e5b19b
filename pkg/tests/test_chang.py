from __future__ import annotations

import numpy as np
import pytest

from singstab import catalog, linalg
from singstab.chang import build_transform, reduced_mode, solve_Q
from singstab.errors import TransformConvergenceError
from singstab.model import Mode, epsilon_generator


def test_classic_reduced_matrix(classic_family):
    rm = reduced_mode(classic_family.modes[0])
    assert rm.M[0, 0] == pytest.approx(-0.5, abs=1e-15)
    assert rm.M_shift(0.25)[0, 0] == pytest.approx(-0.25)


def test_q0_closed_form_example(printed_family):
    assert solve_Q(printed_family.modes[0], 0.0)[0, 0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("eps", [0.3, 0.1, 1e-2, 1e-4])
def test_gamma_is_block_triangular(rng, eps):
    for _ in range(10):
        mode = catalog.random_mode(rng)
        ch = build_transform(mode, eps)
        l = mode.l
        # T G T^-1 = Gamma with zero lower-left block
        lhs = ch.T @ epsilon_generator(mode, eps) @ ch.T_inv
        assert np.allclose(lhs, ch.Gamma, atol=1e-8 * max(1.0, np.abs(lhs).max()))
        assert ch.residual <= 1e-8 * np.linalg.norm(mode.Lambda, 2)
        assert np.allclose(ch.T @ ch.T_inv, np.eye(mode.d), atol=1e-12)
        assert np.all(ch.Gamma[l:, :l] == 0)


def test_q_tends_to_q0(rng):
    mode = catalog.random_mode(rng, d=3, l=1)
    q0 = solve_Q(mode, 0.0)
    diffs = [np.linalg.norm(solve_Q(mode, e) - q0) for e in (1e-2, 1e-3, 1e-4)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 1e-3


def test_transform_is_cached_and_frozen(classic_family):
    m = classic_family.modes[0]
    a = build_transform(m, 0.1)
    assert build_transform(m, 0.1) is a
    with pytest.raises(ValueError):
        a.T[0, 0] = 1.0
    with pytest.raises(ValueError):
        build_transform(m, 0.0).gamma()
    assert np.allclose(a.gamma(1.0) - a.Gamma, np.eye(2))


def test_bad_eps(classic_family):
    with pytest.raises(ValueError):
        build_transform(classic_family.modes[0], -1.0)
    with pytest.raises(ValueError):
        solve_Q(classic_family.modes[0], np.inf)


def test_convergence_error_for_large_eps():
    # slow and fast spectra overlap at eps = 10, so the iteration cannot separate them
    m = Mode(1, np.eye(2), np.array([[0.0, 50.0], [-50.0, -0.01]]), np.eye(2))
    with pytest.raises(TransformConvergenceError) as exc:
        solve_Q(m, 10.0)
    assert exc.value.eps == 10.0


def test_gamma_spectrum_splits(rng):
    mode = catalog.random_mode(rng, d=4, l=2)
    eps = 1e-3
    ch = build_transform(mode, eps)
    rm = reduced_mode(mode)
    slow = np.sort_complex(np.linalg.eigvals(ch.Gamma[:2, :2]))
    assert np.allclose(slow, np.sort_complex(np.linalg.eigvals(rm.M)), atol=1e-2)
    assert linalg.spectral_abscissa(ch.Gamma[2:, 2:]) < -100
