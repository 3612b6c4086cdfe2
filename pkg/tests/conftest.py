"""Shared fixtures.  The expensive ones are session scoped."""
from __future__ import annotations

import numpy as np
import pytest

from porelayer.boundary_layer import solve_navier_bl
from porelayer.config import ASYMMETRIC_CELL, SYMMETRIC_CELL, ExperimentConfig, GeometryConfig
from porelayer.experiments import run_convergence
from porelayer.geometry import CellGeometry, StripGeometry

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def asym_cell():
    return CellGeometry(ASYMMETRIC_CELL)


@pytest.fixture(scope="session")
def sym_cell():
    return CellGeometry(SYMMETRIC_CELL)


@pytest.fixture(scope="session")
def asym_bl(asym_cell):
    return solve_navier_bl(StripGeometry(asym_cell), 64)


@pytest.fixture(scope="session")
def sym_bl(sym_cell):
    return solve_navier_bl(StripGeometry(sym_cell), 64)


@pytest.fixture(scope="session")
def asym_sweep():
    """Poiseuille sweep over eps = 1/4, 1/8, 1/16 on the asymmetric cell."""
    return run_convergence(ExperimentConfig(), keep_fields=True)


@pytest.fixture(scope="session")
def sym_config():
    return ExperimentConfig(geometry=GeometryConfig(inclusions=[list(r) for r in SYMMETRIC_CELL]))
