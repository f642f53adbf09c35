#!/usr/bin/env python3

import pytest
import warnings
from unittest.mock import patch
import os
import sys

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from config import get_settings
from topology import GridShape, make_problem


# Filter out specific warnings
def pytest_configure(config):
    warnings.filterwarnings(
        "ignore",
        message="The `name` is not the first parameter anymore",
        module="starlette"
    )


@pytest.fixture
def grid():
    """Factory for processor grids: grid(2, 3) -> 2x3"""
    def _grid(rows, cols):
        return GridShape(rows, cols)
    return _grid


@pytest.fixture
def worked_problem():
    """2x2 -> 3x4 with a 12x12 block grid, the documented worked example"""
    return make_problem(GridShape(2, 2), GridShape(3, 4), 12)


@pytest.fixture
def shrink_problem():
    """2x2 -> 1x2 with a 4x4 block grid, needs a Case 1 shift"""
    return make_problem(GridShape(2, 2), GridShape(1, 2), 4)


class SettingsEnv:
    """Sets REDISTPLAN_* variables and drops the cached settings"""

    def __init__(self, monkeypatch):
        self.monkeypatch = monkeypatch

    def setenv(self, name, value):
        self.monkeypatch.setenv(name, value)
        get_settings.cache_clear()


@pytest.fixture
def fresh_settings(monkeypatch):
    get_settings.cache_clear()
    yield SettingsEnv(monkeypatch)
    get_settings.cache_clear()


# Fixture to disable logging during tests
@pytest.fixture(autouse=True)
def disable_logging():
    with patch("logging.Logger.info"), patch("logging.Logger.error"), patch("logging.Logger.warning"):
        yield
