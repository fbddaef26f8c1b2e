"""Shared fixtures for the test suite.

The expensive Monte Carlo ensembles are session-scoped so the statistical
cross-checks and the acceptance gate reuse the same draws.
"""

import pytest

from oamturb import TurbulenceParams
from oamturb.montecarlo import run_coefficient_estimate


@pytest.fixture(scope="session")
def coef_2000():
    """2000-screen coupling-weight ensemble at w/r0 = 0.6, master seed 2.

    Shared by the quadrature-vs-ensemble consistency test and the
    mirror-symmetry statistics.
    """
    return run_coefficient_estimate(1, TurbulenceParams(w_over_r0=0.6), 2000, 2)
