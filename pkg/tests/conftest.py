import numpy as np
import pytest

from mobspill import FitConfig, SimConfig, fit, fit_basis, generate


@pytest.fixture(scope="session")
def sim_small():
    """One desk-scale dataset with no home/neighborhood gap."""
    return generate(SimConfig(n=300, sigma_zeta=0.0, seed=11))


@pytest.fixture(scope="session")
def fitted_small(sim_small):
    """Shrinkage fit on the shared dataset, reused by estimand tests."""
    panel, truth = sim_small
    spec = fit_basis(np.vstack([panel.w, panel.g]), degree=3, normalize="sd")
    cfg = FitConfig(n_draws=1500, n_burnin=400, n_chains=1, seed=5)
    return fit(panel, spec, cfg, shrinkage=True)
