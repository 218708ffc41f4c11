"""Shared fixtures: one moderately long simulated path reused across modules."""
from __future__ import annotations

import pytest

from stabledrift import (
    StableParams,
    builtin_kernel,
    builtin_model,
    simulate_path,
    stationary_density_oracle,
)


@pytest.fixture(scope="session")
def ou_model():
    return builtin_model("ou_linear", {"gamma": 0.0, "lam": 1.0, "sigma": 1.0})


@pytest.fixture(scope="session")
def epan():
    return builtin_kernel("epanechnikov")


@pytest.fixture(scope="session")
def noise15():
    return StableParams(1.5, 0.0)


@pytest.fixture(scope="session")
def ou_path15(ou_model, noise15):
    return simulate_path(ou_model, noise15, x0=0.0, n=60_000, delta=0.01,
                         seed=4_202_389, burn_in=12_000)


@pytest.fixture(scope="session")
def ou_density15(ou_model, noise15):
    return stationary_density_oracle(ou_model, noise15, method="fourier")
