"""Macroscale problems on the free channel and the porous bed.

All free-flow solves live on ``(0, L) x (y_s, h)`` with periodicity in x1;
``y_s = 0`` except for the interface-position study.  Forcing is any
callable ``f(x1, x2) -> (f1, f2)`` accepting numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .geometry import ChannelGeometry
from .grid import ScalarField, StaggeredGrid, Trace, VectorField
from .stokes import (SolverConfig, StokesSolution, StokesSystem, WallBC, solve_stokes,
                     wall_shear, wall_value)

DEFAULT_POINTS_PER_EPS = 16


def _spacing(channel: ChannelGeometry, spacing):
    return channel.eps / DEFAULT_POINTS_PER_EPS if spacing is None else float(spacing)


def _count(length, h, what):
    n = length / h
    k = int(round(n))
    if abs(n - k) > 1e-8 or k < 1:
        raise ValueError(f"{what} is not a multiple of the grid spacing")
    return k


def free_grid(channel: ChannelGeometry, spacing=None, y_start: float = 0.0) -> StaggeredGrid:
    h = _spacing(channel, spacing)
    nx = _count(channel.L, h, "L")
    ny = _count(channel.h - y_start, h, "h - y_start")
    return StaggeredGrid(nx, ny, h, h, x0=0.0, y0=y_start)


def porous_grid(channel: ChannelGeometry, spacing=None) -> StaggeredGrid:
    h = _spacing(channel, spacing)
    return StaggeredGrid(_count(channel.L, h, "L"), _count(channel.H, h, "H"), h, h,
                         x0=0.0, y0=-channel.H)


def sample_force(f, g: StaggeredGrid):
    """Force components on the u and v faces of ``g``."""
    Xu, Yu = np.meshgrid(g.xu, g.yc)
    Xv, Yv = np.meshgrid(g.xc, g.yv)
    fu = np.broadcast_to(np.asarray(f(Xu, Yu)[0], dtype=float), Xu.shape).copy()
    fv = np.broadcast_to(np.asarray(f(Xv, Yv)[1], dtype=float), Xv.shape).copy()
    return fu, fv


def pressure_trace(p: ScalarField, side: str = "bottom") -> np.ndarray:
    """Cell-centred pressure extrapolated linearly to an x2-wall (per column)."""
    v = p.values
    if side == "bottom":
        return 1.5 * v[0] - 0.5 * v[1]
    return 1.5 * v[-1] - 0.5 * v[-2]


def column_integral(sol: StokesSolution) -> float:
    """``int u1 dx`` by the midpoint rule with its end correction.

    ``int_0^h u = sum u_j dy + dy^2/24 (u'(h) - u'(0))`` is exact on
    quadratics, so the Poiseuille mass flow is reproduced to round-off.
    """
    g = sol.velocity.grid
    u = sol.velocity.u
    mid = np.sum(u, axis=0) * g.dy
    corr = g.dy ** 2 / 24.0 * (wall_shear(sol, "top") - wall_shear(sol, "bottom"))
    return float(np.sum(mid + corr) * g.dx)


@dataclass
class V0Solution:
    v0: VectorField
    p0: ScalarField
    sigma12_0: Trace
    solution: StokesSolution


@dataclass
class EffectiveSolution:
    u_eff: VectorField
    p_eff: ScalarField
    sigma12: Trace
    M_eff: float
    eps: float
    C1_bl: float
    solution: StokesSolution
    C_omega_bl: float = 0.0
    K: np.ndarray | None = None
    p_tilde: ScalarField | None = None
    slip_residual: float = 0.0

    @property
    def p_eff_trace(self) -> Trace:
        return Trace(pressure_trace(self.p_eff), self.p_eff.grid.xc,
                     self.p_eff.grid.x_extent)


def _trace(vals, g: StaggeredGrid) -> Trace:
    return Trace(np.asarray(vals, dtype=float), g.xu.copy(), g.x_extent)


def solve_impermeable(channel: ChannelGeometry, f, spacing=None,
                      cfg: SolverConfig = SolverConfig()) -> V0Solution:
    """No-slip Stokes flow in the free channel, the interface treated as a wall."""
    g = free_grid(channel, spacing)
    fu, fv = sample_force(f, g)
    sol = solve_stokes(StokesSystem(g, fu, fv, bottom=WallBC.no_slip(), top=WallBC.no_slip()),
                       cfg)
    return V0Solution(sol.velocity, sol.pressure, _trace(wall_shear(sol, "bottom"), g), sol)


def solve_effective_stokes(channel: ChannelGeometry, f, C1_bl: float, spacing=None,
                           cfg: SolverConfig = SolverConfig(), y_start: float = 0.0,
                           eps: float | None = None) -> EffectiveSolution:
    """Free flow with the slip law ``u1 + eps C1 du1/dx2 = 0`` on the lower wall.

    ``eps`` defaults to the channel's; ``eps = 0`` gives the no-slip problem.
    ``y_start`` moves the lower wall (interface-position study).
    """
    if not C1_bl < 0:
        raise ValueError("the slip constant C1_bl must be negative")
    eps = channel.eps if eps is None else float(eps)
    g = free_grid(channel, spacing, y_start)
    fu, fv = sample_force(f, g)
    gamma = eps * C1_bl
    bottom = WallBC.no_slip() if gamma == 0 else WallBC.robin(gamma)
    sol = solve_stokes(StokesSystem(g, fu, fv, bottom=bottom, top=WallBC.no_slip()), cfg)
    sigma = wall_shear(sol, "bottom")
    slip = wall_value(sol, "bottom") + gamma * sigma
    return EffectiveSolution(sol.velocity, sol.pressure, _trace(sigma, g), column_integral(sol),
                             eps, C1_bl, sol, slip_residual=float(np.max(np.abs(slip))))


def solve_counterflow(channel: ChannelGeometry, sigma12_0, spacing=None,
                      cfg: SolverConfig = SolverConfig()):
    """Unforced flow driven by the tangential velocity ``sigma12_0`` on the interface."""
    g = free_grid(channel, spacing)
    vals = sigma12_0.values if isinstance(sigma12_0, Trace) else sigma12_0
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (g.nx,))
    sol = solve_stokes(StokesSystem(g, bottom=WallBC("dirichlet", value=vals),
                                    top=WallBC.no_slip()), cfg)
    return sol.velocity, sol.pressure


def pressure_jump(sigma12_eff, C_omega_bl: float):
    """Predicted free-minus-porous pressure jump ``-C_omega sigma12`` on the interface."""
    if isinstance(sigma12_eff, Trace):
        return sigma12_eff * (-C_omega_bl)
    return -C_omega_bl * np.asarray(sigma12_eff, dtype=float)


def _check_spd(K):
    K = np.asarray(K, dtype=float)
    if K.shape != (2, 2) or not np.allclose(K, K.T, rtol=0, atol=1e-8 * np.abs(K).max()):
        raise ValueError("K must be a symmetric 2x2 matrix")
    if not np.all(np.linalg.eigvalsh(K) > 0):
        raise ValueError("K must be positive definite")
    return 0.5 * (K + K.T)


def solve_darcy_pressure(channel: ChannelGeometry, K, f, sigma12_eff, p_eff_trace,
                         C_omega_bl: float, spacing=None) -> ScalarField:
    """Porous-bed pressure from ``div K (f - grad p) = 0``.

    Dirichlet data ``p_eff + C_omega sigma12`` on the interface, zero normal
    Darcy flux at ``x2 = -H``, periodic in x1.  Cell-centred finite volumes;
    the off-diagonal entries of ``K`` use averaged cross derivatives.
    """
    K = _check_spd(K)
    g = porous_grid(channel, spacing)
    nx, ny, dx, dy = g.nx, g.ny, g.dx, g.dy
    sig = np.broadcast_to(_vals(sigma12_eff), (nx,)).astype(float)
    pe = np.broadcast_to(_vals(p_eff_trace), (nx,)).astype(float)
    # sigma lives at x = i dx; move it to cell centres
    sig_c = 0.5 * (sig + np.roll(sig, -1)) if np.ptp(sig) > 0 else sig
    d = pe + C_omega_bl * sig_c
    k11, k12, k22 = K[0, 0], K[0, 1], K[1, 1]
    fu, fv = sample_force(f, g)   # fu: x-faces (ny, nx), fv: y-faces (ny+1, nx)
    N = nx * ny
    idx = np.arange(N).reshape(ny, nx)
    rows, cols, vals = [], [], []
    rhs = np.zeros(N)

    def add(r, c, v):
        rows.append(np.ravel(r)); cols.append(np.ravel(c))
        vals.append(np.broadcast_to(v, np.shape(r)).ravel())

    J, I = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    # Flux F = K (f - grad p); every cell balances its inflow over all faces.
    # Each face flux is written as sum_k c_k p_k + b and accumulated.
    def dpdy_at_xface(Jf, If):
        """Stencil of dp/dy at the x-face left of cell (Jf, If): list of (j, i, coef)."""
        terms = []
        for ii in (If, (If - 1) % nx):
            jp = np.minimum(Jf + 1, ny - 1)
            jm = np.maximum(Jf - 1, 0)
            span = (jp - jm) * dy
            terms.append((jp, ii, 0.5 / span))
            terms.append((jm, ii, -0.5 / span))
        return terms

    # x-faces (left face of every cell)
    Jf, If = J.ravel(), I.ravel()
    left = (If - 1) % nx
    # F1 = k11 (f1 - dp/dx) + k12 (f2 - dp/dy)
    xf = [(Jf, If, -k11 / dx), (Jf, left, k11 / dx)]
    if k12 != 0:
        xf += [(j, i, -k12 * c) for j, i, c in dpdy_at_xface(Jf, If)]
    f2_at_x = 0.25 * (fv[Jf, If] + fv[Jf + 1, If] + fv[Jf, left] + fv[Jf + 1, left])
    xb = k11 * fu[Jf, If] + k12 * f2_at_x
    # the cell right of the face gains F1 dy, the left one loses it
    for sgn, owner in ((1.0, idx[Jf, If]), (-1.0, idx[Jf, left])):
        for j, i, c in xf:
            add(owner, idx[j, i], sgn * c * dy)
        rhs[:] -= np.bincount(owner, weights=sgn * xb * dy, minlength=N)
    # y-faces: interior faces between rows j-1 and j (lower face of row j >= 1)
    Jy, Iy = J[1:].ravel(), I[1:].ravel()
    below = Jy - 1
    yf = [(Jy, Iy, -k22 / dy), (below, Iy, k22 / dy)]
    if k12 != 0:
        for jj in (Jy, below):
            yf += [(jj, (Iy + 1) % nx, -k12 * 0.25 / dx), (jj, (Iy - 1) % nx, k12 * 0.25 / dx)]
    f1_at_y = 0.25 * (fu[Jy, Iy] + fu[Jy, (Iy + 1) % nx] + fu[below, Iy] + fu[below, (Iy + 1) % nx])
    yb = k22 * fv[Jy, Iy] + k12 * f1_at_y
    for sgn, owner in ((1.0, idx[Jy, Iy]), (-1.0, idx[below, Iy])):
        for j, i, c in yf:
            add(owner, idx[j, i], sgn * c * dx)
        rhs[:] -= np.bincount(owner, weights=sgn * yb * dx, minlength=N)
    # interface face of the top row: inflow -F2 dx with
    # dp/dy = (8 d - 9 p0 + p1) / (3 dy) and dp/dx taken from the data
    if ny < 2:
        raise ValueError("porous grid needs at least two rows")
    jt = ny - 1
    It = np.arange(nx)
    own = idx[jt, It]
    c0, c1, cd = -9.0 / (3 * dy), 1.0 / (3 * dy), 8.0 / (3 * dy)
    add(own, idx[jt, It], k22 * c0 * dx)
    add(own, idx[jt - 1, It], k22 * c1 * dx)
    dd_dx = (np.roll(d, -1) - np.roll(d, 1)) / (2 * dx)
    f1_top = 0.5 * (fu[jt, It] + fu[jt, (It + 1) % nx])
    rhs[own] -= (k22 * cd * d - k22 * fv[ny, It] - k12 * (f1_top - dd_dx)) * dx
    # bottom face: zero normal flux, nothing to add
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    p = spsolve(A.tocsc(), rhs)
    return ScalarField(g, p.reshape(ny, nx))


def _vals(x):
    return x.values if isinstance(x, Trace) else np.asarray(x, dtype=float)


def darcy_velocity(K, f, p_tilde: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """``K (f - grad p)`` at cell centres of the porous grid (one-sided at the ends)."""
    g = p_tilde.grid
    P = p_tilde.values
    dpx = (np.roll(P, -1, axis=1) - np.roll(P, 1, axis=1)) / (2 * g.dx)
    dpy = np.gradient(P, g.dy, axis=0)
    X, Y = np.meshgrid(g.xc, g.yc)
    f1, f2 = f(X, Y)
    f1 = np.broadcast_to(f1, X.shape)
    f2 = np.broadcast_to(f2, X.shape)
    K = np.asarray(K)
    return (K[0, 0] * (f1 - dpx) + K[0, 1] * (f2 - dpy),
            K[1, 0] * (f1 - dpx) + K[1, 1] * (f2 - dpy))


# ------------------------------------------------------- Poiseuille closed forms
def poiseuille_velocity(x2, dp_over_L: float, h: float, eps: float, C1: float):
    """Slip-corrected Poiseuille profile; ``dp_over_L = (p_b - p_0) / L = -f1``."""
    s = eps * C1 * h / (h - eps * C1)
    return 0.5 * dp_over_L * (np.asarray(x2) - s) * (np.asarray(x2) - h)


def poiseuille_mass_flow(dp: float, h: float, eps: float, C1: float) -> float:
    """``-(dp/12) h^3 (h - 4 eps C1) / (h - eps C1)`` per unit channel length ``L = 1``.

    ``dp = p_b - p_0`` is the pressure drop over the length ``L`` of the
    channel; for a channel of length ``L`` with ``dp/L`` fixed multiply by
    ``L`` and pass ``dp``.
    """
    return -(dp / 12.0) * h ** 3 * (h - 4 * eps * C1) / (h - eps * C1)


def impermeable_poiseuille(x2, f1: float, h: float):
    return 0.5 * f1 * np.asarray(x2) * (h - np.asarray(x2))


def couette(x2, c: float, h: float):
    return c * (1.0 - np.asarray(x2) / h)
