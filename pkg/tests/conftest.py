from __future__ import annotations

import os

import pytest

from gvarkit import estimate_gvar, make_dgp, simulate

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def golden_csv() -> str:
    return os.path.join(DATA_DIR, "panel_golden.csv")


@pytest.fixture(scope="session")
def golden_meta() -> str:
    return os.path.join(DATA_DIR, "meta_golden.json")


@pytest.fixture(scope="session")
def small_dgp():
    """Three countries, a two-instrument dominant unit, planted margin 2."""
    return make_dgp(
        n_countries=3,
        k_vars=2,
        p=2,
        q=1,
        seed=7,
        margin=2.0,
        coupling=0.08,
        x_common=2,
        common_strength=0.12,
        feedback_vars=("EPU",),
    )


@pytest.fixture(scope="session")
def small_panel(small_dgp):
    return simulate(small_dgp, 400, seed=11)


@pytest.fixture(scope="session")
def small_model(small_dgp, small_panel):
    return estimate_gvar(
        small_panel, small_dgp.specs, small_dgp.weights, small_dgp.dominant_spec
    )


@pytest.fixture(scope="session")
def plain_dgp():
    """No dominant unit; used where a smaller system is enough."""
    return make_dgp(n_countries=3, k_vars=2, p=2, q=1, seed=7, margin=2.0, coupling=0.08)


@pytest.fixture(scope="session")
def plain_panel(plain_dgp):
    return simulate(plain_dgp, 400, seed=11)


@pytest.fixture(scope="session")
def plain_model(plain_dgp, plain_panel):
    return estimate_gvar(plain_panel, plain_dgp.specs, plain_dgp.weights)
