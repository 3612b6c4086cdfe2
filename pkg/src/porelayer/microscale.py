"""Resolved pore-scale Stokes flow in the perforated channel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .effective import sample_force
from .geometry import ChannelGeometry, build_perforated_domain
from .grid import Band, ScalarField, StaggeredGrid, VectorField
from .stokes import SolverConfig, StokesSolution, StokesSystem, WallBC, solve_stokes

DEFAULT_MAX_UNKNOWNS = 2_000_000


class MemoryBudgetError(RuntimeError):
    pass


@dataclass
class MicroscaleSolution:
    v_eps: VectorField
    p_eps: ScalarField
    eps: float
    channel: ChannelGeometry
    resolution: int
    residual: float
    max_divergence: float
    solution: StokesSolution

    @property
    def grid(self) -> StaggeredGrid:
        return self.v_eps.grid

    @property
    def interface_row(self) -> int:
        return self.grid.row_of(0.0)


def channel_grid(channel: ChannelGeometry, resolution: int) -> StaggeredGrid:
    dom = build_perforated_domain(channel)
    h = channel.eps / resolution
    nx = channel.n_cols * resolution
    ny = (channel.n_rows + channel.n_free_rows) * resolution
    return StaggeredGrid.from_rects(nx, ny, h, h, dom.solids, x0=0.0, y0=-channel.H)


def estimated_unknowns(channel: ChannelGeometry, resolution: int) -> int:
    nx = channel.n_cols * resolution
    ny = (channel.n_rows + channel.n_free_rows) * resolution
    return 3 * nx * ny


def solve_microscale(channel: ChannelGeometry, f, cfg: SolverConfig = SolverConfig(),
                     resolution: int = 16,
                     max_unknowns: int = DEFAULT_MAX_UNKNOWNS) -> MicroscaleSolution:
    """One monolithic solve over the free channel and the perforated bed.

    No-slip on the obstacles and at ``x2 = -H`` and ``x2 = h``, periodic in
    x1, zero-mean pressure over the free channel.
    """
    if resolution < 8:
        raise ValueError("microscale solves need at least 8 points per eps")
    n = estimated_unknowns(channel, resolution)
    if n > max_unknowns:
        raise MemoryBudgetError(f"{n} unknowns exceed the budget of {max_unknowns}")
    g = channel_grid(channel, resolution)
    fu, fv = sample_force(f, g)
    system = StokesSystem(g, fu, fv, bottom=WallBC.no_slip(), top=WallBC.no_slip(),
                          pressure_region=g.band(0.0, channel.h))
    sol = solve_stokes(system, cfg)
    vel = sol.velocity.masked()
    p = sol.pressure
    return MicroscaleSolution(vel, p, channel.eps, channel, resolution, sol.residual,
                              sol.max_divergence, sol)


def free_region(channel: ChannelGeometry) -> Band:
    return Band(0.0, channel.h)


def porous_region(channel: ChannelGeometry) -> Band:
    return Band(-channel.H, 0.0)


@dataclass
class DarcyAverage:
    """Per pore cell averages; row 0 is the cell row adjacent to the interface."""

    x: np.ndarray
    y: np.ndarray
    velocity1: np.ndarray
    velocity2: np.ndarray
    pressure: np.ndarray


def _blocks(arr: np.ndarray, r: int, ny_porous: int) -> np.ndarray:
    """``(rows, cols, r, r)`` view of the porous part, top row first."""
    a = arr[:ny_porous]
    ncol = a.shape[1] // r
    return a.reshape(ny_porous // r, r, ncol, r).transpose(0, 2, 1, 3)[::-1]


def darcy_average(sol: MicroscaleSolution) -> DarcyAverage:
    """Cell means of ``v_eps / eps^2`` and fluid means of ``p_eps`` per pore cell."""
    g, r, ch = sol.grid, sol.resolution, sol.channel
    nyp = ch.n_rows * r
    uc = _blocks(sol.v_eps.u_at_centers(), r, nyp)
    vc = _blocks(sol.v_eps.v_at_centers(), r, nyp)
    fl = _blocks(g.fluid.astype(float), r, nyp)
    pp = _blocks(sol.p_eps.values, r, nyp)
    e2 = sol.eps ** 2
    v1 = uc.mean(axis=(2, 3)) / e2
    v2 = vc.mean(axis=(2, 3)) / e2
    pm = (pp * fl).sum(axis=(2, 3)) / fl.sum(axis=(2, 3))
    xs = (np.arange(ch.n_cols) + 0.5) * ch.eps
    ys = -(np.arange(ch.n_rows) + 0.5) * ch.eps
    return DarcyAverage(xs, ys, v1, v2, pm)
