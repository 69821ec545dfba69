"""Shared fixtures: the five-road capped-linear case study network."""

import numpy as np
import pytest

from paraflow import AffineSignal, CappedLinear, Network, Path

# Case-study constants: lam = 1, five capped-linear roads.
XBAR = (0.15, 0.15, 0.175, 0.2, 0.2)
MU = (2.0, 2.0, 3.0, 2.5, 4.0)
T0 = (8.0, 6.0, 5.0, 5.0, 2.0)
THETA = 1.5
DELTA = 2.0
LAMBDA = 1.0

DESIGNED_A = (0.2, -0.19, 0.2, 0.2, 0.0)
DESIGNED_B = (6.84, 6.13, 6.05, 6.06, 6.0)
REPORTED_X = (0.0, 0.026, 0.056, 0.063, 0.156)
REPORTED_R = (0.0, 0.052, 0.167, 0.158, 0.623)
ETA_DESIGNED = 20.0


def make_case_study() -> Network:
    paths = tuple(
        Path(
            diagram=CappedLinear(slope=m, critical_density_=xb),
            free_flow_time=t,
            bpr_theta=THETA,
            bpr_delta=DELTA,
        )
        for m, xb, t in zip(MU, XBAR, T0)
    )
    return Network(paths=paths, inflow=LAMBDA)


@pytest.fixture(scope="session")
def case_study() -> Network:
    return make_case_study()


@pytest.fixture(scope="session")
def designed_signal() -> AffineSignal:
    return AffineSignal(a=DESIGNED_A, b=DESIGNED_B)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
