"""Shared fixtures: repository paths and reference cells."""

from pathlib import Path

import pytest

from voltmask import EcmParams, OcvCurve
from voltmask.ecm import load_params

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root():
    return REPO_ROOT


@pytest.fixture(scope="session")
def params_path():
    return REPO_ROOT / "params" / "paper_cell.json"


@pytest.fixture(scope="session")
def scenario_dir():
    return REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def cell(params_path):
    """The shipped reference cell."""
    return load_params(params_path)


@pytest.fixture()
def linear_cell():
    """Same scalar parameters as the shipped cell but a straight OCV line,
    so voltages are hand-checkable."""
    curve = OcvCurve((0.0, 1.0), (3.0, 4.2))
    return EcmParams(capacity_q=1.4322e4, r0=1.3513e-2, r1=1.028e-2, c1=5.2584e3, ocv=curve)
