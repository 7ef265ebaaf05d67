import numpy as np
import pytest

from bicens import Scenario, bf_dataset, fit_dataset, run_study


@pytest.fixture(scope="session")
def bf():
    return bf_dataset()


@pytest.fixture(scope="session")
def bf_fit(bf):
    """Canonical-corner NPMLE fit of the bundled dataset."""
    return fit_dataset(bf)


@pytest.fixture(scope="session")
def study_f0a(request):
    """Desk-scale comparison run, density x + y, n = 1000."""
    return run_study(Scenario(truth="linear-sum", n=1000, reps=200, seed=2))


@pytest.fixture(scope="session")
def study_uniform(request):
    """Uniform truth with the fixed bandwidths 0.4 (SMLE) and 0.2 (plug-in)."""
    return run_study(Scenario(truth="uniform", n=1000, reps=400, seed=2,
                              smle_h=0.4, plugin_h=0.2))
