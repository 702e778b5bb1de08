"""Shared fixtures and builders for the test suite."""
from __future__ import annotations

import os

import numpy as np
import pytest

from syncstab.config import (AnalysisOptions, Converter, PowerSetpoint, SystemSpec,
                             parse_system_spec)
from syncstab.frequency_response import OperatingPoint
from syncstab.network import ReducedNetwork

KP, KI = 6.5, 15782.0  # benchmark PLL tuning used throughout the suite

TWO_BUS_CFG = """\
[system]
rated_frequency_hz = 50

[nodes]
bus1
grid

[branches]
bus1 grid 0.3

[slack]
grid

[converters]
C1 bus1 6.5 15782

[operating_point inject]
C1 0.5 0.0

[operating_point absorb]
C1 -0.5 0.0
"""

STATION_CFG_PATH = os.path.join(os.path.dirname(__file__), "..", "configs",
                                "wind_storage_station.cfg")


@pytest.fixture
def two_bus_spec() -> SystemSpec:
    return parse_system_spec(TWO_BUS_CFG)


@pytest.fixture
def station_path() -> str:
    return os.path.abspath(STATION_CFG_PATH)


def synthetic_spec(n: int, *, kp: float = KP, ki: float = KI,
                   scan_points: int = 400, f0: float = 50.0,
                   root_tol_hz: float = 1e-4) -> SystemSpec:
    """A SystemSpec shell for ensemble tests that supply their own B matrix.

    Only the fields the frequency-domain pipeline reads (gains, options,
    rated frequency) carry meaning; the topology fields are placeholders.
    """
    names = tuple(f"C{i+1}" for i in range(n))
    return SystemSpec(
        rated_frequency_hz=f0,
        nodes=names + ("slack",),
        branches=(),
        slack_node="slack",
        converters=tuple(Converter(name, name, kp, ki) for name in names),
        operating_points={},
        options=AnalysisOptions(scan_points=scan_points, root_tol_hz=root_tol_hz),
    )


def random_pd_network(rng: np.random.Generator, n: int) -> ReducedNetwork:
    """Random symmetric positive-definite susceptance matrix, moderate cond."""
    a = rng.normal(size=(n, n))
    b = a @ a.T + (0.5 + rng.uniform()) * n * np.eye(n)
    return ReducedNetwork.from_b_matrix(b)


def random_operating_point(rng: np.random.Generator, n: int, *,
                           flat: bool = True) -> OperatingPoint:
    p = rng.uniform(-1.0, 1.0, size=n)
    q = rng.uniform(-0.5, 0.5, size=n)
    u = np.ones(n) if flat else rng.uniform(0.9, 1.1, size=n)
    return OperatingPoint(p, q, u)
