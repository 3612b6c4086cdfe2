import numpy as np
import pytest

from porelayer.cell import compute_permeability
from porelayer.config import Forcing
from porelayer.effective import darcy_velocity, solve_darcy_pressure, solve_effective_stokes
from porelayer.experiments import consistent_constants, fit_rate
from porelayer.config import ExperimentConfig
from porelayer.geometry import CellGeometry, ChannelGeometry
from porelayer.grid import L2, compute_norm
from porelayer.microscale import (MemoryBudgetError, darcy_average, estimated_unknowns,
                                  free_region, porous_region, solve_microscale)


@pytest.fixture(scope="module")
def micro_eighth(asym_cell):
    ch = ChannelGeometry(1.0, 1.0, 1.0, 0.125, asym_cell)
    return solve_microscale(ch, Forcing.constant(1.0).bind(1.0), resolution=16)


def test_no_inclusions_gives_tall_poiseuille():
    ch = ChannelGeometry(1.0, 1.0, 1.0, 0.25, CellGeometry())
    sol = solve_microscale(ch, Forcing.constant(2.0).bind(1.0), resolution=8)
    y = sol.grid.yc
    exact = 1.0 * (y + 1.0) * (1.0 - y)
    assert np.abs(sol.v_eps.u - exact[:, None]).max() < 1e-10
    assert np.abs(sol.v_eps.v).max() < 1e-10


def test_invariants(micro_eighth):
    sol = micro_eighth
    g = sol.grid
    assert np.all(sol.v_eps.u[~g.u_open] == 0.0)
    assert np.all(sol.v_eps.v[[0, -1]] == 0.0)
    assert np.all(sol.p_eps.values[g.solid] == 0.0)
    assert abs(sol.p_eps.values[sol.interface_row:].mean()) < 1e-14
    scale = np.abs(sol.v_eps.u).max() / g.dy
    assert sol.max_divergence <= 10 * 1e-10 * scale


def test_zero_vertical_flux_through_every_height(micro_eighth):
    v = micro_eighth.v_eps.v
    assert np.abs(v.sum(axis=1)).max() <= 1e-10 * np.abs(v).max() * v.shape[1]


def test_free_flow_dominates(micro_eighth):
    ch = micro_eighth.channel
    free = compute_norm(micro_eighth.v_eps, L2, free_region(ch))
    por = compute_norm(micro_eighth.v_eps, L2, porous_region(ch))
    assert por * 10 < free


def test_darcy_average_zero_force(asym_cell):
    ch = ChannelGeometry(1.0, 0.5, 0.5, 0.25, asym_cell)
    sol = solve_microscale(ch, Forcing.constant(0.0).bind(1.0), resolution=8)
    avg = darcy_average(sol)
    assert not avg.velocity1.any() and not avg.velocity2.any()
    assert np.all(avg.pressure == 0.0)


def test_darcy_average_row_sums(micro_eighth):
    avg = darcy_average(micro_eighth)
    assert avg.velocity1.shape == (8, 8)
    # cell means of v2 along a row telescope to the (zero) net vertical flux
    assert np.abs(avg.velocity2.sum(axis=1)).max() < 1e-9 * np.abs(avg.velocity1).max()


def test_darcy_average_matches_darcy_law(micro_eighth, asym_cell):
    sol = micro_eighth
    ch = sol.channel
    f = Forcing.constant(1.0).bind(1.0)
    K = compute_permeability(asym_cell, 64).K
    cfg = ExperimentConfig()
    bl = consistent_constants(cfg).bl
    h = ch.eps / 16
    eff = solve_effective_stokes(ch, f, bl.C1_bl, h)
    pt = solve_darcy_pressure(ch, K, f, eff.sigma12, eff.p_eff_trace, bl.C_omega_bl, h)
    w1, w2 = darcy_velocity(K, f, pt)
    r, n = 16, ch.n_rows
    blocks = lambda a: a.reshape(n, r, ch.n_cols, r).mean(axis=(1, 3))[::-1]
    pred1, pred2 = blocks(w1), blocks(w2)
    avg = darcy_average(sol)
    # interior rows: at least 2 eps away from the interface and the bottom
    rows = slice(2, n - 2)
    diff = np.hypot(avg.velocity1[rows] - pred1[rows], avg.velocity2[rows] - pred2[rows])
    ref = np.hypot(pred1[rows], pred2[rows])
    assert np.abs(diff).max() <= 0.3 * ref.min()


def test_memory_guard_and_resolution_floor(asym_cell):
    ch = ChannelGeometry(1.0, 1.0, 1.0, 0.125, asym_cell)
    assert estimated_unknowns(ch, 16) == 3 * 128 * 256
    with pytest.raises(MemoryBudgetError):
        solve_microscale(ch, Forcing.constant(1.0).bind(1.0), max_unknowns=1000)
    with pytest.raises(ValueError):
        solve_microscale(ch, Forcing.constant(1.0).bind(1.0), resolution=4)


def test_poincare_constant_along_sweep(asym_sweep):
    ratios = []
    for eps, fields in sorted(asym_sweep.fields.items(), reverse=True):
        m = fields["micro"]
        por = porous_region(m.channel)
        grad = m.v_eps.gradient_samples(por)
        ratios.append(compute_norm(m.v_eps, L2, por) / (eps * compute_norm(grad, L2)))
    assert len(ratios) == 3
    assert max(ratios) / min(ratios) < 1.5


def test_scaling_rates(asym_sweep):
    eps = asym_sweep.epsilons
    assert fit_rate(eps, asym_sweep.table["v_L2_porous"]) >= 1.2
    assert fit_rate(eps, asym_sweep.table["v_L2_interface"]) >= 0.8
