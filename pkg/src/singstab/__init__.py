"""Stability analysis of singularly perturbed switched linear systems with jumps.

Typical use::

    from singstab import catalog, lambda_estimate, verdict
    fam = catalog.classic(tau=1.0)
    est = lambda_estimate(fam, "Sigma-bar")
    verdict(est)  # "ES"
"""

from __future__ import annotations

__version__ = "0.1.0"

from .chang import ChangData, build_transform, reduced_mode, solve_Q
from .criteria import (
    AnalysisReport,
    ApproximationReport,
    analyze,
    approx_validate,
    build_complementary_family,
    necessary_check,
    prop1_check,
    prop2_check,
    sufficient_check,
)
from .errors import (
    AdmissibilityError,
    DimensionError,
    FitError,
    PremiseError,
    SchemaError,
    SingstabError,
    SingularMatrixError,
    TransformConvergenceError,
)
from .exponents import (
    ExponentEstimate,
    classify_discrete,
    lambda_estimate,
    lambda_tilde_hat,
    mu_estimate,
    verdict,
)
from .io import load_family, load_signal, parse_family, parse_signal
from .model import Mode, SwitchingSignal, SystemFamily, d_hurwitz, d_hurwitz_check
from .reduced import TimeGrid, build_generators, jump_set, sample_transients
from .simulate import Trajectory, fit_decay, make_periodic_signal, make_random_signal, simulate
