"""Shared fixtures: scenario files and small reference systems."""

from pathlib import Path

import numpy as np
import pytest

from analysis import ParityScenario
from scenarios import SweepConfig, load_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(scope="session")
def load():
    '''Load a shipped scenario by file stem.'''
    def _load(name):
        return load_scenario(SCENARIO_DIR / f"{name}.json")
    return _load


@pytest.fixture(scope="session")
def adiabatic(load):
    return load("two_level_adiabatic")


@pytest.fixture(scope="session")
def parity_scenario(adiabatic):
    sweep = adiabatic.sweep or SweepConfig()
    return ParityScenario(adiabatic.pulse, adiabatic.system, sweep.sweep_at_fwhm,
                          adiabatic.integrator, sweep.threshold)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
