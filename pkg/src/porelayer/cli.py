"""Command line entry point.

Exit codes: 0 success, 2 a checked invariant or threshold failed (or a
report value was not finite), 1 a solver or geometry error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .boundary_layer import solve_navier_bl, verify_decay
from .cell import compute_permeability
from .config import ConfigError, ExperimentConfig
from .effective import (poiseuille_mass_flow, solve_darcy_pressure, solve_effective_stokes,
                        solve_impermeable)
from .experiments import (NORM_COLUMNS, consistent_constants, measure_interface_jump,
                          run_constants, run_convergence, run_shift_study)
from .geometry import GeometryError
from .grid import compute_norm, write_field_csv, write_vector_csv
from .microscale import darcy_average, free_region, porous_region, solve_microscale
from .report import ReportError, write_report, write_rows_csv, write_sweep_csv
from .stokes import SolverError

log = logging.getLogger("porelayer")

# thresholds checked by the sweep commands
SWEEP_RATE_MIN = {
    "v_minus_ueff_L2_free": 1.2,
    "mass_flow_error": 1.2,
    "v_L2_porous": 1.2,
    "p_minus_peff_Hm12_interface": 0.35,
    "U_L2_porous": 1.6,
}
JUMP_TOL = 0.30
PERTURBATION_RATE_MIN = 1.6


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.tol is not None:
        cfg.solver.tol = args.tol
    if args.out is not None:
        cfg.output.directory = args.out
    cfg.validate()
    return cfg


def _pointwise_constant(cfg) -> tuple[float, float] | None:
    """``(f1, f2)`` if the forcing is a constant vector, else ``None``."""
    f = cfg.forcing
    ok = all(t.p == 0 and (t.trig == "1" or t.k == 0 and t.trig == "cos")
             for t in f.f1 + f.f2)
    if not ok:
        return None
    x = np.array([0.1]); y = np.array([0.2])
    a, b = f.bind(cfg.geometry.L)(x, y)
    return float(a[0]), float(b[0])


# ----------------------------------------------------------- subcommands
def cmd_permeability(cfg, args):
    res = args.resolution or cfg.solver.cell_resolution
    P = compute_permeability(cfg.geometry.cell(), res, cfg.solver.solver())
    checks = {"K_symmetric": P.asymmetry <= 1e-8,
              "K_positive_definite": bool(np.all(P.eigenvalues > 0)),
              "energy_formula_1pct": P.energy_defect <= 0.01}
    if cfg.geometry.cell().is_symmetric_x() and _square_symmetric(cfg):
        checks["symmetric_cell_offdiag"] = abs(P.K[0, 1]) <= 1e-8
    return {"permeability": P.to_dict()}, checks


def _square_symmetric(cfg):
    cell = cfg.geometry.cell()
    swapped = sorted(tuple([r.y0, r.x0, r.y1, r.x1]) for r in cell.inclusions)
    mine = sorted(tuple(r.as_list()) for r in cell.inclusions)
    return np.allclose(swapped, mine)


def cmd_boundary_layer(cfg, args):
    res = args.resolution or cfg.solver.bl_resolution
    bl = solve_navier_bl(cfg.geometry.strip(), res, cfg.solver.solver(), check_truncation=True)
    dec = verify_decay(bl)
    out = Path(cfg.output.directory)
    write_rows_csv(out / "bl_slices.csv", ["x2", "beta_deviation", "omega_deviation"],
                   bl.slice_rows())
    fits = dec["fits"]
    checks = {
        "C1_negative": bl.C1_bl < 0,
        "energy_identity_1pct": bl.energy_defect <= 0.01,
        "beta2_flux_zero": float(np.max(np.abs(bl.beta2_row_means()))) <= 1e-6,
        "omega_rate_above": fits["omega_above"].rate >= 5.0,
        "beta_rate_above": fits["beta_above"].rate >= 4.0,
        "beta_rate_below_positive": fits["beta_below"].rate > 0,
        "omega_pointwise_bound": dec["omega_bound_ok"],
    }
    if cfg.geometry.cell().is_symmetric_x():
        checks["symmetric_C_omega_zero"] = abs(bl.C_omega_bl) <= 1e-3
    payload = bl.to_dict()
    payload["omega_bound"] = {str(k): list(v) for k, v in dec["omega_bound"].items()}
    return {"boundary_layer": payload}, checks


def cmd_constants(cfg, args):
    if args.resolution:
        cfg.solver.bl_resolution = args.resolution
        cfg.solver.cell_resolution = max(args.resolution, 32)
    c = run_constants(cfg)
    checks = {"C1_negative": c.C1_bl < 0,
              "K_spd": bool(np.all(c.K.eigenvalues > 0)) and c.K.asymmetry <= 1e-8,
              "no_truncation_warning": not c.warnings}
    if cfg.geometry.cell().is_symmetric_x():
        checks["symmetric_C_omega_zero"] = abs(c.C_omega_bl) <= 1e-3
    return {"constants": c.to_dict()}, checks


def cmd_effective(cfg, args):
    if args.resolution:
        cfg.solver.points_per_eps = args.resolution
    eps = cfg.epsilons[-1] if args.eps is None else args.eps
    ch = cfg.geometry.channel(eps)
    c = run_constants(cfg, check_truncation=False)
    f = cfg.forcing.bind(ch.L)
    spacing = eps / cfg.solver.points_per_eps
    eff = solve_effective_stokes(ch, f, c.C1_bl, spacing, cfg.solver.solver())
    pt = solve_darcy_pressure(ch, c.K.K, f, eff.sigma12, eff.p_eff_trace, c.C_omega_bl, spacing)
    v0 = solve_impermeable(ch, f, spacing, cfg.solver.solver())
    out = Path(cfg.output.directory)
    write_vector_csv(out / "u_eff", eff.u_eff)
    write_field_csv(out / "p_eff.csv", eff.p_eff)
    write_field_csv(out / "p_tilde.csv", pt)
    payload = {"eps": eps, "M_eff": eff.M_eff, "C1_bl": c.C1_bl, "C_omega_bl": c.C_omega_bl,
               "sigma12_mean": eff.sigma12.mean(), "sigma12_0_mean": v0.sigma12_0.mean(),
               "slip_residual": eff.slip_residual,
               "predicted_jump_mean": -c.C_omega_bl * eff.sigma12.mean()}
    tol = cfg.solver.tol
    checks = {"slip_residual": eff.slip_residual <= 10 * tol * max(1.0, np.abs(eff.u_eff.u).max()),
              "pressure_mean_zero": abs(float(np.mean(eff.p_eff.values))) <= 1e-10}
    const = _pointwise_constant(cfg)
    if const is not None and const[1] == 0.0:
        exact = poiseuille_mass_flow(-const[0] * ch.L, ch.h, eps, c.C1_bl) * ch.L
        payload["M_eff_closed_form"] = exact
        checks["mass_flow_closed_form"] = abs(eff.M_eff - exact) <= 1e-8 * abs(exact)
    return {"effective": payload}, checks


def cmd_microscale(cfg, args):
    if args.resolution:
        cfg.solver.points_per_eps = args.resolution
    eps = cfg.epsilons[-1] if args.eps is None else args.eps
    ch = cfg.geometry.channel(eps)
    s = cfg.solver
    sol = solve_microscale(ch, cfg.forcing.bind(ch.L), s.solver(), s.points_per_eps,
                           s.max_unknowns)
    avg = darcy_average(sol)
    out = Path(cfg.output.directory)
    rows = [(k, i, avg.x[i], avg.y[k], avg.velocity1[k, i], avg.velocity2[k, i],
             avg.pressure[k, i]) for k in range(len(avg.y)) for i in range(len(avg.x))]
    write_rows_csv(out / "darcy_average.csv",
                   ["row", "col", "x1", "x2", "v1_over_eps2", "v2_over_eps2", "p_mean"], rows)
    if cfg.output.fields:
        write_vector_csv(out / "v_eps", sol.v_eps)
        write_field_csv(out / "p_eps.csv", sol.p_eps)
    free = compute_norm(sol.v_eps, "L2", free_region(ch))
    por = compute_norm(sol.v_eps, "L2", porous_region(ch))
    payload = {"eps": eps, "v_L2_free": free, "v_L2_porous": por,
               "residual": sol.residual, "max_divergence": sol.max_divergence,
               "unknowns": sol.solution.n_unknowns}
    checks = {"divergence_free": sol.max_divergence <= 10 * s.tol * max(1.0, np.abs(sol.v_eps.u).max() / sol.grid.dy),
              "pressure_mean_free_zero":
                  abs(float(np.mean(sol.p_eps.values[sol.interface_row:]))) <= 1e-10}
    return {"microscale": payload}, checks


def _sweep(cfg, args):
    if args.resolution:
        cfg.solver.points_per_eps = args.resolution
    return run_convergence(cfg)


def cmd_convergence(cfg, args):
    rep = _sweep(cfg, args)
    out = Path(cfg.output.directory)
    write_sweep_csv(out / "sweep.csv", rep.epsilons, rep.table)
    checks = {}
    if len([v for v in rep.table["v_L2_porous"] if v is not None]) >= 3:
        for name, lo in SWEEP_RATE_MIN.items():
            checks[f"rate_{name}"] = rep.rates.get(name, -math.inf) >= lo
        pp = rep.table["p_minus_ptilde_L2_porous"]
        checks["p_minus_ptilde_decreasing"] = all(b < a for a, b in zip(pp, pp[1:]))
        checks["rate_interface_perturbation"] = rep.perturbation_rate >= PERTURBATION_RATE_MIN
    checks["no_failed_eps"] = not rep.failures
    return {"convergence": rep.to_dict()}, checks


def cmd_jump(cfg, args):
    rep = _sweep(cfg, args)
    rows = [(e, j["measured_mean"], j["predicted_mean"], j["relative_error"])
            for e, j in zip(rep.epsilons, rep.jump) if j is not None]
    write_rows_csv(Path(cfg.output.directory) / "jump.csv",
                   ["eps", "measured_mean", "predicted_mean", "relative_error"], rows)
    meas = [abs(r[1]) for r in rows]
    checks = {"no_failed_eps": not rep.failures}
    if abs(rep.constants["C_omega_bl"]) > 1e-3:
        errs = [r[3] for r in rows]
        checks["jump_within_30pct"] = bool(errs) and errs[-1] <= JUMP_TOL
        checks["jump_improves"] = all(b < a for a, b in zip(errs, errs[1:]))
    else:
        checks["jump_tends_to_zero"] = all(b < a for a, b in zip(meas, meas[1:]))
    return {"jump": {"rows": [list(r) for r in rows], "constants": rep.constants}}, checks


def cmd_shift_study(cfg, args):
    rows = run_shift_study(cfg, args.resolution)
    base = rows[0].C1_a
    write_rows_csv(Path(cfg.output.directory) / "shift_study.csv",
                   ["a", "C1_a", "predicted", "defect"],
                   [(r.a, r.C1_a, r.predicted, r.defect) for r in rows])
    checks = {f"shift_{r.a:g}": r.defect <= 0.02 * abs(base) for r in rows}
    return {"shift_study": [r.__dict__ for r in rows]}, checks


COMMANDS = {
    "constants": cmd_constants,
    "boundary-layer": cmd_boundary_layer,
    "permeability": cmd_permeability,
    "effective": cmd_effective,
    "microscale": cmd_microscale,
    "convergence": cmd_convergence,
    "jump": cmd_jump,
    "shift-study": cmd_shift_study,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="porelayer",
                                description="Interface laws between free flow and a porous bed")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None, help="JSON experiment config")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--resolution", type=int, default=None,
                        help="grid points per unit cell (meaning depends on the command)")
        sp.add_argument("--tol", type=float, default=None, help="relative solver tolerance")
        if name in ("effective", "microscale"):
            sp.add_argument("--eps", type=float, default=None,
                            help="pore size (default: smallest configured)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        payload, checks = COMMANDS[args.command](cfg, args)
    except (SolverError, GeometryError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload["config"] = cfg.to_dict()
    payload["checks"] = {k: bool(v) for k, v in checks.items()}
    try:
        path = write_report(cfg.output.directory, payload)
    except ReportError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    failed = [k for k, v in checks.items() if not v]
    for k, v in checks.items():
        print(f"{'PASS' if v else 'FAIL'} {k}")
    print(f"report written to {path}")
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
