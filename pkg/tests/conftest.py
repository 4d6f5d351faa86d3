import os
import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20130101)


@pytest.fixture
def small_setup(rng):
    """N=3 line, M=2, N_b=3 with positive definite white regressors."""
    from difflms import basis, network, pde_model

    dom = pde_model.SpatialDomain(1.0, 3)
    b = basis.sample_basis(dom, 3, n_params=2)
    truth = pde_model.random_ground_truth(b, 2, rng)
    spec = pde_model.random_regressor_spec(3, 2, rng)
    g = network.line_topology(3)
    policy = network.CombinationPolicy(network.uniform_weights(g), network.metropolis_weights(g),
                                       network.metropolis_weights(g).T, graph=g)
    return b, truth, spec, policy


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.lines():
        terminalreporter.write_line(line)
