"""Navier boundary layer on a truncated periodic strip.

The strip ``(0,1) x (-L_bot, L_top)`` stacks ``L_bot`` pore cells below the
interface line ``S = {y2 = a}``.  The layer solves

    -Lap beta + grad omega = 0,  div beta = 0   off S and the inclusions,
    [ (grad beta - omega I) e2 ]_S = e1,

1-periodic in y1, ``beta = 0`` on the inclusions and at ``y2 = -L_bot``,
``d beta1/dy2 = 0`` and ``beta2 = 0`` at ``y2 = L_top``.  The slip constant
``C1`` is the y1-mean of ``beta1`` on S and ``C_omega`` the mean of omega
there, with omega normalised to zero mean over the deepest pore cell.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import StripGeometry, shift_interface
from .grid import ScalarField, StaggeredGrid, VectorField, dirichlet_form
from .stokes import SolverConfig, StokesSystem, TractionJump, WallBC, solve_stokes


class TruncationWarning(UserWarning):
    pass


@dataclass
class DecayFit:
    rate: float
    prefactor: float
    window: tuple[float, float]
    n_points: int

    def to_dict(self):
        return {"rate": self.rate, "prefactor": self.prefactor,
                "window": list(self.window), "n_points": self.n_points}


@dataclass
class BoundaryLayerResult:
    beta: VectorField
    omega: ScalarField
    C1_bl: float
    C_omega_bl: float
    grad_energy: float
    strip: StripGeometry
    resolution: int
    interface_row: int
    decay: dict = field(default_factory=dict)
    residual: float = 0.0

    @property
    def truncation(self) -> dict:
        return {"top": self.strip.top, "bottom": self.strip.bottom}

    @property
    def energy_defect(self) -> float:
        return abs(self.C1_bl + self.grad_energy) / abs(self.C1_bl)

    def beta2_row_means(self) -> np.ndarray:
        """``int_0^1 beta2(y1, b) dy1`` on every horizontal face row."""
        return self.beta.v.mean(axis=1)

    def beta1_row_means(self) -> np.ndarray:
        return self.beta.u.mean(axis=1)

    def check(self) -> list[str]:
        problems = []
        if not self.C1_bl < 0:
            problems.append(f"C1_bl = {self.C1_bl} is not negative")
        if self.energy_defect > 0.01:
            problems.append(f"|C1 + int|grad beta|^2| / |C1| = {self.energy_defect:.2e}")
        flux = float(np.max(np.abs(self.beta2_row_means())))
        if flux > 1e-6:
            problems.append(f"beta2 has nonzero row mean {flux:.2e}")
        return problems

    def slice_rows(self):
        """Rows ``(x2, |beta - (C1,0)|_row, sup|omega - C_omega|_row)`` for plotting."""
        g = self.beta.grid
        dev_b = _beta_deviation(self)
        dev_w = np.max(np.abs(self.omega.values - self.C_omega_bl), axis=1)
        return np.column_stack([g.yc, dev_b, dev_w])

    def to_dict(self) -> dict:
        return {"C1_bl": self.C1_bl, "C_omega_bl": self.C_omega_bl,
                "grad_energy": self.grad_energy,
                "decay_rates": {k: v.to_dict() for k, v in self.decay.items()},
                "truncation": self.truncation, "resolution": self.resolution,
                "interface_offset": self.strip.interface_offset}


def strip_grid(strip: StripGeometry, resolution: int) -> StaggeredGrid:
    h = 1.0 / resolution
    total = strip.top + strip.bottom
    ny = int(round(total * resolution))
    if abs(ny - total * resolution) > 1e-9:
        raise ValueError("truncation_top must be a multiple of the grid spacing")
    rects = [r.scaled(1.0, 0.0, -float(k))
             for k in range(1, strip.bottom + 1) for r in strip.cell.inclusions]
    return StaggeredGrid.from_rects(resolution, ny, h, h, rects,
                                    x0=0.0, y0=-float(strip.bottom))


def solve_navier_bl(strip: StripGeometry, resolution: int = 64,
                    cfg: SolverConfig = SolverConfig(),
                    check_truncation: bool = False,
                    truncation_tol: float = 1e-3) -> BoundaryLayerResult:
    """Solve the strip problem and extract the interface constants.

    With ``check_truncation`` the problem is re-solved on a strip of doubled
    height and a :class:`TruncationWarning` is issued if ``C1`` moves by more
    than ``truncation_tol`` (relative).
    """
    if strip.top < 2 or strip.bottom < 3:
        raise ValueError("need truncation_top >= 2 and truncation_bottom >= 3")
    g = strip_grid(strip, resolution)
    jS = g.row_of(strip.interface_offset)
    deep = g.band(-strip.bottom, -strip.bottom + 1)
    system = StokesSystem(
        g, bottom=WallBC.no_slip(ghost="linear"), top=WallBC.slip(),
        traction=(TractionJump(jS, 1.0),), pressure_region=deep)
    sol = solve_stokes(system, cfg)
    beta = sol.velocity.masked()
    omega = sol.pressure
    C1 = float(np.mean(beta.u[jS]))
    Cw = float(np.mean(omega.values[jS]))
    energy = dirichlet_form(beta, beta, walls=("dirichlet", "neumann"), kink_rows=(jS,))
    res = BoundaryLayerResult(beta, omega, C1, Cw, energy, strip, resolution, jS,
                              residual=sol.residual)
    res.decay = verify_decay(res)["fits"]
    if check_truncation:
        big = replace(strip, top=2 * strip.top)
        other = solve_navier_bl(big, resolution, cfg)
        change = abs(other.C1_bl - C1) / abs(C1)
        if change > truncation_tol:
            warnings.warn(f"doubling truncation_top changes C1_bl by {change:.3%}",
                          TruncationWarning, stacklevel=2)
    return res


def _beta_deviation(res: BoundaryLayerResult) -> np.ndarray:
    """Per u-row L2(0,1) distance of beta from (C1, 0); beta2 taken at centres."""
    b = res.beta
    b2c = b.v_at_centers()
    return np.sqrt(np.mean((b.u - res.C1_bl) ** 2 + b2c ** 2, axis=1))


def _fit(y, d, floor):
    keep = d > floor
    y, d = y[keep], d[keep]
    if len(y) < 3:
        return DecayFit(float("nan"), float("nan"), (float("nan"),) * 2, len(y))
    slope, icpt = np.polyfit(y, np.log(d), 1)
    return DecayFit(float(-slope), float(math.exp(icpt)), (float(y[0]), float(y[-1])), len(y))


def verify_decay(res: BoundaryLayerResult, floor_rel: float = 1e-9) -> dict:
    """Exponential-rate fits of the slice deviations above and below ``S``.

    Deviations below ``floor_rel`` times the largest deviation are dropped
    from the fits; they sit at the level of round-off.
    """
    g = res.beta.grid
    a = res.strip.interface_offset
    y = g.yc
    dev_b = _beta_deviation(res)
    dev_w = np.max(np.abs(res.omega.values - res.C_omega_bl), axis=1)
    above = (y >= a + 0.5) & (y <= res.strip.top - 0.5)
    below_b = (y >= -res.strip.bottom + 0.5) & (y <= a - 0.5)
    # below S the limits are beta = 0 and omega = 0 (kappa_inf = 0)
    b_low = np.sqrt(np.mean(res.beta.u ** 2 + res.beta.v_at_centers() ** 2, axis=1))
    w_low = np.max(np.abs(res.omega.values), axis=1)
    fb = floor_rel * max(dev_b.max(), 1e-300)
    fw = floor_rel * max(dev_w.max(), 1e-300)
    fits = {
        "beta_above": _fit(y[above] - a, dev_b[above], fb),
        "omega_above": _fit(y[above] - a, dev_w[above], fw),
        # fitted against depth |y2 - a| so a positive rate means decay
        "beta_below": _fit(a - y[below_b], b_low[below_b], floor_rel * b_low.max()),
        "omega_below": _fit(a - y[below_b], w_low[below_b], floor_rel * w_low.max()),
    }
    bounds = {}
    for yq in (0.5, 1.0):
        s = _sup_dev_at(res, a + yq)
        bounds[yq] = (s, 2.0 * math.exp(-2 * math.pi * yq))
    return {"fits": fits, "omega_bound": bounds,
            "omega_bound_ok": all(s <= b for s, b in bounds.values())}


def _sup_dev_at(res, yq) -> float:
    """``sup_y1 |omega(y1, yq) - C_omega|`` with linear interpolation in y2."""
    g = res.omega.grid
    t = (yq - g.y0) / g.dy - 0.5
    j = int(math.floor(t))
    th = t - j
    row = (1 - th) * res.omega.values[j] + th * res.omega.values[j + 1]
    return float(np.max(np.abs(row - res.C_omega_bl)))


@dataclass
class ShiftRow:
    a: float
    C1_a: float
    predicted: float
    defect: float


def interface_shift_study(strip: StripGeometry, offsets, resolution: int = 64,
                          cfg: SolverConfig = SolverConfig(),
                          base: BoundaryLayerResult | None = None) -> list[ShiftRow]:
    """Re-solve with ``S`` moved to ``y2 = a`` and compare with ``C1 - a``."""
    if base is None:
        base = solve_navier_bl(shift_interface(strip, 0.0), resolution, cfg)
    rows = []
    for a in offsets:
        a = float(a)
        if a == 0.0:
            r = base
        else:
            r = solve_navier_bl(shift_interface(strip, a), resolution, cfg)
        pred = base.C1_bl - a
        rows.append(ShiftRow(a, r.C1_bl, pred, abs(r.C1_bl - pred)))
    return rows


def sample_scaled(res: BoundaryLayerResult, eps: float, x: np.ndarray, y: np.ndarray,
                  what: str) -> np.ndarray:
    """Values of ``beta(x/eps)`` components or ``omega(x/eps)`` at physical points.

    Points must map onto the strip's own grid locations (same points per
    cell); below the strip the layer is taken as zero and above it as its
    limit ``(C1, 0)`` / ``C_omega``.  ``what`` is ``"beta1"``, ``"beta2"`` or
    ``"omega"``.
    """
    g = res.beta.grid
    h = g.dx
    X = np.asarray(x) / eps
    Y = np.asarray(y) / eps
    if what == "beta1":
        arr, xo, yo, limit = res.beta.u, 0.0, 0.5, res.C1_bl
    elif what == "beta2":
        arr, xo, yo, limit = res.beta.v, 0.5, 0.0, 0.0
    elif what == "omega":
        arr, xo, yo, limit = res.omega.values, 0.5, 0.5, res.C_omega_bl
    else:
        raise ValueError(what)
    fi = X / h - xo
    fj = (Y - g.y0) / h - yo
    i = np.rint(fi).astype(np.int64)
    j = np.rint(fj).astype(np.int64)
    if np.max(np.abs(fi - i), initial=0) > 1e-6 or np.max(np.abs(fj - j), initial=0) > 1e-6:
        raise ValueError("sample points do not coincide with the strip grid")
    out = np.zeros(X.shape)
    ny = arr.shape[0]
    ok = (j >= 0) & (j < ny)
    out[ok] = arr[j[ok], i[ok] % arr.shape[1]]
    out[j >= ny] = limit
    return out
