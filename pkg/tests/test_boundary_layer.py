import math
import warnings

import numpy as np
import pytest

from porelayer.boundary_layer import (TruncationWarning, interface_shift_study, sample_scaled,
                                      solve_navier_bl, strip_grid, verify_decay)
from porelayer.geometry import CellGeometry, GeometryError, StripGeometry

# the slab between y2 = -0.25 and the interface contains no solid
SHIFTABLE_SYM = CellGeometry(((0.3125, 0.3125, 0.6875, 0.6875),))
THIN_PLATE = CellGeometry(((0.25, 0.125, 0.75, 0.1875),))


def test_type_invariants(asym_bl, sym_bl):
    for r in (asym_bl, sym_bl):
        assert r.check() == []
        # omega has zero mean over the deepest pore cell
        g = r.omega.grid
        deep = g.band(-r.strip.bottom, -r.strip.bottom + 1) & g.fluid
        assert abs(r.omega.values[deep].mean()) < 1e-12


def test_slip_constant_is_minus_energy(asym_bl):
    assert asym_bl.C1_bl < 0
    assert abs(asym_bl.C1_bl + asym_bl.grad_energy) <= 0.01 * abs(asym_bl.C1_bl)


def test_beta2_row_means_vanish(asym_bl):
    assert np.abs(asym_bl.beta2_row_means()).max() <= 1e-6


def test_beta1_average_conserved_above_interface(asym_bl):
    means = asym_bl.beta1_row_means()[asym_bl.interface_row:]
    assert np.abs(means - means[0]).max() <= 1e-6


def test_symmetric_cell_has_no_pressure_constant(asym_bl, sym_bl):
    assert abs(sym_bl.C_omega_bl) <= 1e-3
    assert abs(asym_bl.C_omega_bl) > 10 * abs(sym_bl.C_omega_bl)


def test_decay_rates(asym_bl, sym_bl):
    for r in (asym_bl, sym_bl):
        rep = verify_decay(r)
        fits = rep["fits"]
        assert fits["beta_above"].rate >= 4.0
        assert fits["beta_below"].rate > 0 and fits["omega_below"].rate > 0
        assert rep["omega_bound_ok"]
    fa = verify_decay(asym_bl)["fits"]["omega_above"]
    assert fa.rate >= 5.0 and abs(fa.rate - 2 * math.pi) < 0.5


def test_shift_on_symmetric_cell():
    rows = interface_shift_study(StripGeometry(SHIFTABLE_SYM), [0.0, -0.25], 32)
    base = rows[0]
    assert base.defect == 0.0
    assert rows[1].defect <= 0.02 * abs(base.C1_a)


def test_shift_differences():
    rows = interface_shift_study(StripGeometry(THIN_PLATE), [0.0, -0.25, -0.75], 32)
    C1 = rows[0].C1_a
    d = rows[1].C1_a - rows[2].C1_a
    assert abs(d - (-0.75 - -0.25)) <= 0.02 * abs(C1)


def test_shift_through_solid_is_rejected(asym_cell):
    with pytest.raises(GeometryError):
        interface_shift_study(StripGeometry(asym_cell), [-0.25], 32)


def test_shift_law_needs_a_solid_free_slab():
    # the lines are free but the slab (-0.75, 0) cuts the inclusion: the
    # constant no longer follows C1 - a
    rows = interface_shift_study(StripGeometry(SHIFTABLE_SYM), [0.0, -0.75], 32)
    assert rows[1].defect > 0.5 * abs(rows[0].C1_a)


def test_truncation_warning():
    s = StripGeometry(SHIFTABLE_SYM, top=2, bottom=3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        solve_navier_bl(s, 16, check_truncation=True)
    with pytest.warns(TruncationWarning):
        solve_navier_bl(s, 16, check_truncation=True, truncation_tol=1e-16)


def test_truncation_limits():
    with pytest.raises(ValueError):
        solve_navier_bl(StripGeometry(SHIFTABLE_SYM, top=1, bottom=3), 16)
    with pytest.raises(ValueError):
        solve_navier_bl(StripGeometry(SHIFTABLE_SYM, top=2, bottom=2), 16)
    with pytest.raises(ValueError):
        strip_grid(StripGeometry(SHIFTABLE_SYM, top=2.01, bottom=3), 16)


def test_sample_scaled_maps_grid_points(asym_bl):
    eps = 0.125
    g = asym_bl.beta.grid
    h = g.dx * eps
    jS = asym_bl.interface_row
    x = np.arange(3) * h
    y = np.full(3, 0.5 * h)
    assert np.allclose(sample_scaled(asym_bl, eps, x, y, "beta1"), asym_bl.beta.u[jS, :3])
    # far above the strip the limit is used, below it zero
    xc = x + 0.5 * h
    assert np.all(sample_scaled(asym_bl, eps, xc, y + 10.0, "omega") == asym_bl.C_omega_bl)
    assert np.all(sample_scaled(asym_bl, eps, xc, np.full(3, -5 * eps), "beta2") == 0.0)
    with pytest.raises(ValueError):
        sample_scaled(asym_bl, eps, x + 0.3 * h, y, "beta1")


def test_report_fields(asym_bl):
    d = asym_bl.to_dict()
    assert set(d["decay_rates"]) == {"beta_above", "omega_above", "beta_below", "omega_below"}
    assert d["truncation"] == {"top": 4.0, "bottom": 4}
    assert asym_bl.slice_rows().shape[1] == 3
