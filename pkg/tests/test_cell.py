import numpy as np
import pytest

from porelayer.cell import compute_permeability
from porelayer.geometry import CellGeometry


def centred_square(half):
    return CellGeometry(((0.5 - half, 0.5 - half, 0.5 + half, 0.5 + half),))


@pytest.fixture(scope="module")
def asym_K(asym_cell):
    return compute_permeability(asym_cell, 64)


def test_invariants_hold(asym_K):
    assert asym_K.check() == []
    assert asym_K.asymmetry <= 1e-8
    assert np.all(asym_K.eigenvalues > 0)
    assert asym_K.energy_defect <= 0.01
    for p in asym_K.pi:
        assert abs(p.values.sum()) * p.grid.cell_area < 1e-12
    assert np.allclose(asym_K.K_inv @ asym_K.K, np.eye(2))


def test_asymmetric_cell_has_off_diagonal(asym_K):
    assert abs(asym_K.K[0, 1]) > 1e-5


def test_symmetric_cell(sym_cell):
    P = compute_permeability(sym_cell, 64)
    assert abs(P.K[0, 1]) <= 1e-8 and abs(P.K[1, 0]) <= 1e-8
    assert abs(P.K[0, 0] - P.K[1, 1]) <= 1e-10


@pytest.mark.slow
def test_refined_grid_self_oracle(sym_cell):
    k64 = compute_permeability(sym_cell, 64).K[0, 0]
    k256 = compute_permeability(sym_cell, 256).K[0, 0]
    assert abs(k64 - k256) <= 0.02 * k256


def test_monotone_in_inclusion_size():
    vals = [compute_permeability(centred_square(hw), 64).K[0, 0]
            for hw in (0.25, 0.1875, 0.125, 0.0625)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_reflection_covariance(asym_cell, asym_K):
    R = compute_permeability(asym_cell.reflected_x(), 64)
    assert np.allclose(np.diag(R.K), np.diag(asym_K.K), rtol=1e-10, atol=0)
    assert R.K[0, 1] == pytest.approx(-asym_K.K[0, 1], rel=1e-8)


def test_resolution_floor(sym_cell):
    with pytest.raises(ValueError):
        compute_permeability(sym_cell, 16)
    P = compute_permeability(sym_cell, 16, min_resolution=16)
    assert P.resolution == 16


def test_report_keys(asym_K):
    d = asym_K.to_dict()
    assert {"K", "K_energy", "eigenvalues", "resolution"} <= set(d)
