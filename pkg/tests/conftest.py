import numpy as np
import pytest

import netar as na


def pytest_addoption(parser):
    parser.addoption(
        "--full", action="store_true", default=False,
        help="also run the full-scale Monte Carlo cells (N=500, T=400, "
             "S=1000); roughly 20 minutes extra")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full"):
        return
    skip = pytest.mark.skip(reason="full-scale cell; enable with --full")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "full_scale: full-scale Monte Carlo cells, opt-in via --full")


@pytest.fixture(scope="session")
def small_net():
    return na.gen_sbm(30, 2, seed=101)


@pytest.fixture(scope="session")
def count_panel(small_net):
    spec = na.ModelSpec.linear((1.0, 0.3, 0.2), "count")
    cfg = na.SimConfig(T=150, burn_in=200, seed=5)
    return na.simulate_count(spec, small_net, na.CopulaSpec("ar1", 0.5), cfg)


@pytest.fixture(scope="session")
def cont_panel(small_net):
    spec = na.ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    cfg = na.SimConfig(T=200, seed=7)
    return na.simulate_gaussian(spec, small_net, cfg)


@pytest.fixture
def rs():
    return np.random.default_rng(20240811)
