"""Rank correlation matrices, their spectral CLT moments and independence tests."""

from .contour import LssFunction, custom_function, default_contour, log_function, lss_asymptotics, power_function
from .corr_matrices import (
    MatrixKind,
    gram,
    improved_spearman,
    improved_spearman_triple_sum,
    kendall,
    kendall_naive,
    pearson,
    spearman,
)
from .errors import *  # noqa: F403
from .harness import ExperimentConfig, ExperimentResult, preset, run_experiment
from .independence import (
    TestId,
    TestReport,
    mc_calibrate,
    run_tests,
    statistic_only,
    test_irho_l2,
    test_irho_log,
    test_rho_l2,
    test_rho_log,
)
from .models import AltKind, AltModel, NullModel, gen_alt, gen_null
from .mp_theory import CltMoments, Variant, clt_closed_form, mp_cdf, mp_density, mp_support
from .rank_core import TiePolicy, enumerate_quadform_cov, exact_quadform_cov, rank_columns, standardized_ranks
from .spectral import Spectrum, eigenvalues, lss

__version__ = "0.1.0"
