import math

import numpy as np
import pytest

from porelayer.config import ExperimentConfig, Forcing
from porelayer.effective import (solve_counterflow, solve_darcy_pressure, solve_effective_stokes,
                                 solve_impermeable)
from porelayer.experiments import (JumpComparison, _rates, assemble_error_fields,
                                   consistent_constants, fit_rate, measure_interface_jump,
                                   run_constants, run_convergence)
from porelayer.grid import L2, compute_norm
from porelayer.microscale import porous_region, solve_microscale


def small_config(**solver):
    s = {"points_per_eps": 8, "cell_resolution": 32, "bl_resolution": 16}
    s.update(solver)
    return ExperimentConfig.from_dict({"epsilons": [0.5, 0.25, 0.125], "solver": s})


def test_fit_rate_exact_power():
    eps = [0.25, 0.125, 0.0625]
    assert fit_rate(eps, [3 * e ** 1.5 for e in eps]) == pytest.approx(1.5, abs=1e-12)
    assert math.isnan(fit_rate([0.5], [1.0]))


def test_rates_need_three_points_and_flag_drift():
    eps = [0.5, 0.25, 0.125]
    rates, notes = _rates(eps[:2], {"a": [1.0, 0.5]})
    assert rates == {}
    rates, notes = _rates(eps, {"a": [1.0, 0.9, 0.1], "b": [e ** 2 for e in eps]})
    assert rates["b"] == pytest.approx(2.0)
    assert len(notes) == 1 and "a" in notes[0]


def test_zero_forcing_gives_zero_error_fields():
    cfg = small_config()
    c = consistent_constants(cfg)
    eps = 0.25
    ch = cfg.geometry.channel(eps)
    f = Forcing.constant(0.0).bind(1.0)
    h = eps / 8
    micro = solve_microscale(ch, f, resolution=8)
    v0 = solve_impermeable(ch, f, h)
    eff = solve_effective_stokes(ch, f, c.C1_bl, h)
    cf = solve_counterflow(ch, v0.sigma12_0, h)
    pt = solve_darcy_pressure(ch, c.K.K, f, eff.sigma12, eff.p_eff_trace, c.C_omega_bl, h)
    U, P = assemble_error_fields(micro, v0, cf, c.bl, pt)
    assert not U.u.any() and not U.v.any() and not P.values.any()


def test_error_fields_reject_mismatched_grids():
    cfg = small_config()
    c = consistent_constants(cfg)
    ch = cfg.geometry.channel(0.25)
    f = Forcing.constant(1.0).bind(1.0)
    micro = solve_microscale(ch, f, resolution=8)
    v0 = solve_impermeable(ch, f, 0.25 / 16)
    cf = solve_counterflow(ch, v0.sigma12_0, 0.25 / 16)
    with pytest.raises(ValueError):
        assemble_error_fields(micro, v0, cf, c.bl, None)


def test_corrector_removes_leading_porous_error(asym_sweep):
    fields = asym_sweep.fields[0.125]
    por = porous_region(fields["micro"].channel)
    u = compute_norm(fields["U"], L2, por)
    v = compute_norm(fields["micro"].v_eps, L2, por)
    assert u < 0.2 * v


def test_mass_flow_and_velocity_errors_decrease(asym_sweep):
    for col in ("v_minus_ueff_L2_free", "mass_flow_error", "weighted_grad_v_minus_ueff_free",
                "weighted_p_minus_peff_free", "U_L2_porous"):
        vals = asym_sweep.table[col]
        assert all(b < a for a, b in zip(vals, vals[1:])), col


def test_jump_ratio_at_smallest_eps(asym_sweep):
    j = asym_sweep.jump[-1]
    assert 0.7 <= j["measured_mean"] / j["predicted_mean"] <= 1.3


def test_jump_predictor_is_linear_in_c_omega(asym_sweep):
    f = asym_sweep.fields[0.25]
    a = measure_interface_jump(f["micro"], f["eff"], 0.2)
    b = measure_interface_jump(f["micro"], f["eff"], 0.4)
    assert b.predicted_mean == pytest.approx(2 * a.predicted_mean, rel=1e-14)
    assert b.measured_mean == a.measured_mean
    with pytest.raises(ValueError):
        measure_interface_jump(f["micro"], f["eff"], 0.2, row=5)


def test_jump_comparison_edge_cases():
    z = JumpComparison(np.zeros(1), np.zeros(1), 0.0, 0.0, 2)
    assert z.relative_error == 0.0 and math.isnan(z.ratio)


def test_report_is_finite(asym_sweep):
    d = asym_sweep.to_dict()
    for col in d["table"].values():
        assert all(math.isfinite(v) for v in col)
    assert not asym_sweep.failures


def test_failed_eps_is_recorded():
    cfg = small_config(max_unknowns=20_000)
    rep = run_convergence(cfg)
    # eps = 1/8 at 8 points per eps needs 3 * 64 * 128 unknowns
    assert [f["eps"] for f in rep.failures] == [0.125]
    assert rep.table["U_L2_porous"][-1] is None and rep.jump[-1] is None
    assert rep.rates == {}


def test_sweep_needs_two_eps():
    cfg = ExperimentConfig.from_dict({"epsilons": [0.25]})
    with pytest.raises(ValueError):
        run_convergence(cfg)


def test_constants_stable_under_refinement():
    cfg = ExperimentConfig()
    a = run_constants(cfg, 64, 64, check_truncation=False)
    b = run_constants(cfg, 128, 128, check_truncation=False)
    assert abs(a.C1_bl - b.C1_bl) <= 0.02 * abs(b.C1_bl)
    assert abs(a.C_omega_bl - b.C_omega_bl) <= 0.02 * abs(b.C_omega_bl)
    assert np.abs(a.K.K - b.K.K).max() <= 0.02 * np.abs(b.K.K).max()
    assert a.problems() == [] and b.problems() == []
