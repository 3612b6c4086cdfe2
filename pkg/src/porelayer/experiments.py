"""End-to-end experiments: constants, eps-sweeps, composite errors, jump law."""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .boundary_layer import (BoundaryLayerResult, TruncationWarning, interface_shift_study,
                             sample_scaled, solve_navier_bl)
from .cell import PermeabilityTensor, compute_permeability
from .config import ExperimentConfig
from .effective import (EffectiveSolution, V0Solution, solve_counterflow,
                        solve_darcy_pressure, solve_effective_stokes, solve_impermeable)
from .grid import (Band, H_MINUS_HALF, L2, L2_WEIGHTED, Samples, ScalarField, Trace,
                   VectorField, compute_norm)
from .microscale import MicroscaleSolution, solve_microscale
from .stokes import SolverError

log = logging.getLogger(__name__)

NORM_COLUMNS = (
    "v_minus_ueff_L2_free",
    "mass_flow_error",
    "weighted_grad_v_minus_ueff_free",
    "weighted_p_minus_peff_free",
    "p_minus_peff_Hm12_interface",
    "v_L2_porous",
    "p_minus_ptilde_L2_porous",
    "U_L2_porous",
)


# ------------------------------------------------------------------ fits
def fit_rate(eps, values) -> float:
    """Least-squares slope of ``log2 value`` against ``log2 eps``."""
    e = np.log2(np.asarray(eps, dtype=float))
    v = np.log2(np.asarray(values, dtype=float))
    if len(e) < 2 or not np.all(np.isfinite(v)):
        return float("nan")
    return float(np.polyfit(e, v, 1)[0])


# ------------------------------------------------------------- constants
@dataclass
class Constants:
    K: PermeabilityTensor
    bl: BoundaryLayerResult
    warnings: list = field(default_factory=list)

    @property
    def C1_bl(self) -> float:
        return self.bl.C1_bl

    @property
    def C_omega_bl(self) -> float:
        return self.bl.C_omega_bl

    def problems(self) -> list[str]:
        return self.K.check() + self.bl.check()

    def to_dict(self) -> dict:
        return {"K": self.K.to_dict(), "C1_bl": self.C1_bl, "C_omega_bl": self.C_omega_bl,
                "boundary_layer": self.bl.to_dict(), "warnings": list(self.warnings)}


def run_constants(cfg: ExperimentConfig, cell_resolution: int | None = None,
                  bl_resolution: int | None = None, check_truncation: bool = True,
                  min_cell_resolution: int = 32) -> Constants:
    """Permeability tensor and boundary-layer constants for the configured cell."""
    s = cfg.solver
    cell_res = s.cell_resolution if cell_resolution is None else cell_resolution
    bl_res = s.bl_resolution if bl_resolution is None else bl_resolution
    K = compute_permeability(cfg.geometry.cell(), cell_res, s.solver(), min_cell_resolution)
    caught = []
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always", TruncationWarning)
        bl = solve_navier_bl(cfg.geometry.strip(), bl_res, s.solver(),
                             check_truncation=check_truncation)
    for item in w:
        if issubclass(item.category, TruncationWarning):
            caught.append(str(item.message))
            log.warning("%s", item.message)
    return Constants(K, bl, caught)


def consistent_constants(cfg: ExperimentConfig) -> Constants:
    """Constants at the pore-scale resolution of the eps-sweep.

    The microscale solve resolves each pore cell with ``points_per_eps``
    points; computing ``K``, ``C1`` and ``C_omega`` on the same cell grid
    removes the discretization mismatch from the comparison and lets the
    boundary-layer fields be sampled without interpolation.
    """
    r = cfg.solver.points_per_eps
    return run_constants(cfg, r, r, check_truncation=False, min_cell_resolution=r)


# -------------------------------------------------------- error fields
def _sigma_at(sig: Trace, x: np.ndarray) -> np.ndarray:
    """Periodic linear interpolation of an interface trace."""
    return np.interp(x, sig.x, sig.values, period=sig.length)


def assemble_error_fields(micro: MicroscaleSolution, v0: V0Solution, counterflow,
                          bl: BoundaryLayerResult, p_tilde: ScalarField):
    """Composite velocity and pressure errors on the pore-scale grid.

    ``U = v - v0 H + (beta^{bl,eps} - eps C1 e1 H) sigma + eps C1 z^sigma H`` and
    ``P = p - p0 H - p~ (1 - H) + (omega^{bl,eps} - C_omega H) sigma
    + eps C1 p^sigma H`` with ``H`` the indicator of the free channel and
    ``sigma`` the interface shear of ``v0``.
    """
    g = micro.grid
    eps = micro.eps
    zs, ps = counterflow
    fg = v0.v0.grid
    if not (np.isclose(fg.dx, g.dx) and np.isclose(fg.dy, g.dy)):
        raise ValueError("free-channel fields use a different spacing than the pore-scale grid")
    if not (np.isclose(p_tilde.grid.dx, g.dx) and p_tilde.grid.ny + fg.ny == g.ny):
        raise ValueError("Darcy pressure grid is incompatible with the pore-scale grid")
    C1, Cw = bl.C1_bl, bl.C_omega_bl
    jS = micro.interface_row
    sig = v0.sigma12_0
    # ---- velocity
    Xu, Yu = np.meshgrid(g.xu, g.yc)
    Xv, Yv = np.meshgrid(g.xc, g.yv)
    U1 = micro.v_eps.u + eps * sample_scaled(bl, eps, Xu, Yu, "beta1") * _sigma_at(sig, Xu)
    U2 = micro.v_eps.v + eps * sample_scaled(bl, eps, Xv, Yv, "beta2") * _sigma_at(sig, Xv)
    U1[jS:] += -v0.v0.u - eps * C1 * _sigma_at(sig, Xu[jS:]) + eps * C1 * zs.u
    U2[jS:] += -v0.v0.v + eps * C1 * zs.v
    U = VectorField(g, np.where(g.u_open, U1, 0.0), U2)
    # ---- pressure
    Xc, Yc = np.meshgrid(g.xc, g.yc)
    sc = _sigma_at(sig, Xc)
    P = micro.p_eps.values + sample_scaled(bl, eps, Xc, Yc, "omega") * sc
    P[jS:] += -v0.p0.values - Cw * sc[jS:] + eps * C1 * ps.values
    P[:jS] -= p_tilde.values
    P = np.where(g.solid, 0.0, P)
    return U, ScalarField(g, P)


# -------------------------------------------------------------- jump law
@dataclass
class JumpComparison:
    x: np.ndarray
    measured_profile: np.ndarray
    measured_mean: float
    predicted_mean: float
    row: int

    @property
    def relative_error(self) -> float:
        if self.predicted_mean == 0:
            return float("inf") if self.measured_mean else 0.0
        return abs(self.measured_mean - self.predicted_mean) / abs(self.predicted_mean)

    @property
    def ratio(self) -> float:
        return self.measured_mean / self.predicted_mean if self.predicted_mean else float("nan")

    def to_dict(self):
        return {"measured_mean": self.measured_mean, "predicted_mean": self.predicted_mean,
                "relative_error": self.relative_error, "row": self.row}


def measure_interface_jump(micro: MicroscaleSolution, eff: EffectiveSolution,
                           C_omega_bl: float, row: int = 2) -> JumpComparison:
    """Porous-side minus free-side pressure at the interface, per pore column.

    The porous-side value is the fluid mean of ``p_eps`` over pore cell row
    ``row`` (1 = adjacent to the interface); the free-side value is the
    effective pressure trace averaged over the same column.  The prediction
    is ``C_omega * mean(sigma12)``, the negative of :func:`pressure_jump`.
    """
    g, ch, r = micro.grid, micro.channel, micro.resolution
    jS = micro.interface_row
    lo = jS - row * r
    if lo < 0:
        raise ValueError("requested pore row lies below the bed")
    blk = slice(lo, lo + r)
    fl = g.fluid[blk]
    p = micro.p_eps.values[blk]
    ncol = ch.n_cols
    pf = (p * fl).reshape(r, ncol, r).sum(axis=(0, 2)) / fl.reshape(r, ncol, r).sum(axis=(0, 2))
    ptr = eff.p_eff_trace.values.reshape(ncol, r).mean(axis=1)
    prof = pf - ptr
    pred = C_omega_bl * eff.sigma12.mean()
    xs = (np.arange(ncol) + 0.5) * ch.eps
    return JumpComparison(xs, prof, float(prof.mean()), float(pred), row)


# ----------------------------------------------------------- norms per eps
def _interface_pressure(micro: MicroscaleSolution) -> Trace:
    g = micro.grid
    j = micro.interface_row
    vals = 0.5 * (micro.p_eps.values[j - 1] + micro.p_eps.values[j])
    return Trace(vals, g.xc, g.x_extent)


def _interface_velocity(micro: MicroscaleSolution) -> Trace:
    g = micro.grid
    j = micro.interface_row
    return Trace(0.5 * (micro.v_eps.u[j] + micro.v_eps.u[j - 1]), g.xu, g.x_extent)


def micro_mass_flow(micro: MicroscaleSolution) -> float:
    """``int_{free} v1`` with the same end-corrected midpoint rule as the effective flow."""
    g = micro.grid
    u = micro.v_eps.u
    j = micro.interface_row
    mid = np.sum(u[j:], axis=0) * g.dy
    d0 = (u[j] - u[j - 1]) / g.dy
    dh = (micro.v_eps.ghost_top - u[-1]) / g.dy
    return float(np.sum(mid + g.dy ** 2 / 24.0 * (dh - d0)) * g.dx)


def epsilon_norms(micro, eff, v0, U, p_tilde) -> dict:
    ch = micro.channel
    free = Band(0.0, ch.h)
    por = Band(-ch.H, 0.0)
    dv = micro.v_eps.samples(free) - eff.u_eff.samples(free)
    dgrad = micro.v_eps.gradient_samples(free) - eff.u_eff.gradient_samples(free)
    dp = micro.p_eps.samples(free) - eff.p_eff.samples(free)
    g = micro.grid
    fluid_por = g.fluid & g.band(-ch.H, 0.0)
    pt_full = np.zeros_like(micro.p_eps.values)
    pt_full[: p_tilde.grid.ny] = p_tilde.values
    diff_por = ScalarField(g, np.where(fluid_por, micro.p_eps.values - pt_full, 0.0))
    return {
        "v_minus_ueff_L2_free": compute_norm(dv, L2),
        "mass_flow_error": abs(micro_mass_flow(micro) - eff.M_eff),
        "weighted_grad_v_minus_ueff_free": compute_norm(dgrad, L2_WEIGHTED),
        "weighted_p_minus_peff_free": compute_norm(dp, L2_WEIGHTED),
        "p_minus_peff_Hm12_interface": compute_norm(_interface_pressure(micro) - eff.p_eff_trace,
                                                    H_MINUS_HALF),
        "v_L2_porous": compute_norm(micro.v_eps, L2, por),
        "p_minus_ptilde_L2_porous": compute_norm(diff_por, L2, por),
        "U_L2_porous": compute_norm(U, L2, por),
        "v_L2_interface": compute_norm(_interface_velocity(micro), L2),
        "M_eps": micro_mass_flow(micro),
        "M_eff": eff.M_eff,
    }


def perturbation_difference(cfg: ExperimentConfig, eps: float, C1: float,
                            base: EffectiveSolution | None = None) -> float:
    """L2(free channel) gap between the effective flow on ``(a eps, h)`` with
    slip constant ``C1 - a`` and the baseline on ``(0, h)``."""
    ch = cfg.geometry.channel(eps)
    a = cfg.geometry.perturbation_offset
    f = cfg.forcing.bind(ch.L)
    s = cfg.solver
    spacing = eps / s.points_per_eps
    if base is None:
        base = solve_effective_stokes(ch, f, C1, spacing, s.solver())
    moved = solve_effective_stokes(ch, f, C1 - a, spacing, s.solver(), y_start=a * eps)
    free = Band(0.0, ch.h)
    return compute_norm(moved.u_eff.samples(free) - base.u_eff.samples(free), L2)


# ------------------------------------------------------------ the sweep
@dataclass
class ErrorReport:
    epsilons: list
    table: dict                     # column -> list of values per eps
    rates: dict
    constants: dict
    jump: list = field(default_factory=list)
    perturbation: list = field(default_factory=list)
    perturbation_rate: float = float("nan")
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0
    fields: dict = field(default_factory=dict)

    def column(self, name):
        return self.table[name]

    def to_dict(self) -> dict:
        return {"epsilons": self.epsilons, "table": self.table, "rates": self.rates,
                "constants": self.constants, "jump": self.jump,
                "perturbation": {"values": self.perturbation, "rate": self.perturbation_rate},
                "failures": self.failures, "warnings": self.warnings}


def _rates(eps, table, n_min=3):
    rates, notes = {}, []
    for name, vals in table.items():
        ok = [(e, v) for e, v in zip(eps, vals) if v is not None and v > 0 and math.isfinite(v)]
        if len(ok) < n_min:
            continue
        e, v = zip(*ok)
        rates[name] = fit_rate(e, v)
        if len(ok) >= 3:
            drop = fit_rate(e[1:], v[1:])
            if abs(drop - rates[name]) >= 0.3:
                notes.append(f"rate of {name} moves by {drop - rates[name]:+.2f} "
                             "when the coarsest eps is dropped")
    return rates, notes


def run_convergence(cfg: ExperimentConfig, constants: Constants | None = None,
                    keep_fields: bool = False) -> ErrorReport:
    """Microscale versus effective comparison over the configured eps list."""
    t0 = time.perf_counter()
    if len(cfg.epsilons) < 2:
        raise ValueError("a convergence sweep needs at least two eps values")
    consts = consistent_constants(cfg) if constants is None else constants
    s = cfg.solver
    C1, Cw, K = consts.C1_bl, consts.C_omega_bl, consts.K.K
    cols = {c: [] for c in NORM_COLUMNS + ("v_L2_interface", "M_eps", "M_eff")}
    rep = ErrorReport(list(cfg.epsilons), cols, {}, consts.to_dict())
    for eps in cfg.epsilons:
        ch = cfg.geometry.channel(eps)
        f = cfg.forcing.bind(ch.L)
        spacing = eps / s.points_per_eps
        try:
            micro = solve_microscale(ch, f, s.solver(), s.points_per_eps, s.max_unknowns)
            v0 = solve_impermeable(ch, f, spacing, s.solver())
            eff = solve_effective_stokes(ch, f, C1, spacing, s.solver())
            cf = solve_counterflow(ch, v0.sigma12_0, spacing, s.solver())
            pt = solve_darcy_pressure(ch, K, f, eff.sigma12, eff.p_eff_trace, Cw, spacing)
        except (SolverError, MemoryError, RuntimeError) as exc:
            rep.failures.append({"eps": eps, "error": f"{type(exc).__name__}: {exc}"})
            for c in cols:
                cols[c].append(None)
            rep.jump.append(None)
            rep.perturbation.append(None)
            continue
        eff.C_omega_bl, eff.K, eff.p_tilde = Cw, K, pt
        U, P = assemble_error_fields(micro, v0, cf, consts.bl, pt)
        norms = epsilon_norms(micro, eff, v0, U, pt)
        for c in cols:
            cols[c].append(norms[c])
        rep.jump.append(measure_interface_jump(micro, eff, Cw, s.jump_row).to_dict())
        rep.perturbation.append(perturbation_difference(cfg, eps, C1, eff))
        if keep_fields:
            rep.fields[eps] = {"micro": micro, "eff": eff, "v0": v0, "counterflow": cf,
                               "p_tilde": pt, "U": U, "P": P}
        log.info("eps = %g done", eps)
    good = [e for e, v in zip(cfg.epsilons, rep.perturbation) if v]
    rep.rates, rep.warnings = _rates(cfg.epsilons, cols)
    if len(good) >= 3:
        rep.perturbation_rate = fit_rate(good, [v for v in rep.perturbation if v])
    rep.seconds = time.perf_counter() - t0
    return rep


def run_shift_study(cfg: ExperimentConfig, resolution: int | None = None):
    s = cfg.solver
    res = s.bl_resolution if resolution is None else resolution
    return interface_shift_study(cfg.geometry.strip(), [0.0] + list(cfg.geometry.shift_offsets),
                                 res, s.solver())
