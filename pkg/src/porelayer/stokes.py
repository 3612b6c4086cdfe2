"""Discrete Stokes saddle-point systems on the MAC grid.

The grid must be periodic in x1.  In x2 it is either periodic as well (cell
problems) or closed by a wall condition at the bottom and top rows.  Wall
conditions act on the tangential component through a ghost row half a
spacing outside the domain:

* Dirichlet ``u1 = g``: quadratic ghost ``(8 g - 6 u0 + u1) / 3`` (exact on
  parabolic profiles) or the linear reflection ``2 g - u0``;
* Robin ``u1 + gamma du1/dn_in = 0`` (bottom wall only, ``n_in`` pointing
  into the domain), eliminated with the same quadratic stencil;
* Neumann ``du1/dx2 = 0``: ghost equals the first interior value.

The normal component on a wall is prescribed.  Obstacles use zero values on
their faces and the linear reflection for tangential ghosts.  A traction
jump along an interior grid line ``S`` enters as a line source
``-density / (2 dy)`` on the two ``u`` rows adjacent to ``S``, which is the
discrete form of the surface term ``-int_S phi_1 density``.

The pressure nullspace is removed with a Lagrange multiplier enforcing zero
mean pressure over a normalization region.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from .grid import ScalarField, StaggeredGrid, VectorField, discrete_divergence

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Base class for failures of the saddle-point solve."""


class SingularSystemError(SolverError):
    pass


class CompatibilityError(SolverError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, msg, residual, solution=None):
        super().__init__(f"{msg} (achieved residual {residual:.3e})")
        self.residual = residual
        self.solution = solution


@dataclass(frozen=True)
class WallBC:
    kind: str = "dirichlet"      # dirichlet | robin | neumann
    value: object = 0.0          # tangential Dirichlet value (scalar or per column)
    gamma: float = 0.0           # Robin coefficient
    normal: object = 0.0         # prescribed normal velocity
    ghost: str = "quadratic"     # quadratic | linear (Dirichlet only)

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin", "neumann"):
            raise ValueError(f"unknown wall condition {self.kind!r}")
        if self.ghost not in ("quadratic", "linear"):
            raise ValueError(f"unknown ghost stencil {self.ghost!r}")

    @classmethod
    def no_slip(cls, ghost="quadratic"):
        return cls("dirichlet", ghost=ghost)

    @classmethod
    def robin(cls, gamma: float):
        return cls("robin", gamma=float(gamma))

    @classmethod
    def slip(cls):
        return cls("neumann")


@dataclass(frozen=True)
class TractionJump:
    """Unit-type tangential traction jump on the horizontal face row ``row``."""

    row: int
    density: object = 1.0


@dataclass
class StokesSystem:
    grid: StaggeredGrid
    force_u: np.ndarray | None = None
    force_v: np.ndarray | None = None
    bottom: WallBC | None = None
    top: WallBC | None = None
    traction: Sequence[TractionJump] = ()
    pressure_region: np.ndarray | None = None   # cell mask, default all fluid cells

    def __post_init__(self):
        g = self.grid
        if not g.periodic_x:
            raise NotImplementedError("only x1-periodic grids are supported")
        if self.force_u is None:
            self.force_u = np.zeros(g.u_shape)
        if self.force_v is None:
            self.force_v = np.zeros(g.v_shape)
        if self.force_u.shape != g.u_shape or self.force_v.shape != g.v_shape:
            raise ValueError("force arrays do not match the grid")
        if g.periodic_y:
            if self.bottom is not None or self.top is not None:
                raise ValueError("a periodic direction takes no wall conditions")
        else:
            if self.bottom is None or self.top is None:
                raise ValueError("every non-periodic boundary needs exactly one condition")
            if self.top.kind == "robin":
                raise ValueError("the Robin condition is only allowed on the interface (bottom wall)")
        for t in self.traction:
            if not (1 <= t.row <= g.ny - 1):
                raise ValueError("traction-jump line must be an interior grid line")
        if self.pressure_region is None:
            self.pressure_region = g.fluid
        else:
            self.pressure_region = np.asarray(self.pressure_region, dtype=bool) & g.fluid
        if not self.pressure_region.any():
            raise SingularSystemError("pressure normalization region contains no fluid cell")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 20
    method: str = "direct"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("solver tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.method != "direct":
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class StokesSolution:
    velocity: VectorField
    pressure: ScalarField
    residual: float
    iterations: int
    residual_history: list = field(default_factory=list)
    multiplier: float = 0.0
    n_unknowns: int = 0
    seconds: float = 0.0

    @property
    def max_divergence(self) -> float:
        return float(np.max(np.abs(discrete_divergence(self.velocity).values)))

    def residual_rows(self):
        return [(k, r) for k, r in enumerate(self.residual_history)]


def _col(val, n) -> np.ndarray:
    return np.broadcast_to(np.asarray(val, dtype=float), (n,)).astype(float)


def _ghost_coeffs(bc: WallBC, dy: float, quad_ok: np.ndarray):
    """Ghost ``= a u0 + b u1 + c`` per column, with ``c`` the data term."""
    n = quad_ok.shape[0]
    if bc.kind == "neumann":
        return np.ones(n), np.zeros(n), np.zeros(n)
    if bc.kind == "robin":
        r = bc.gamma / dy
        den = 3.0 / 8.0 - r
        if den <= 0:
            raise ValueError("Robin coefficient makes the ghost elimination singular")
        a = np.full(n, -(0.75 + r) / den)
        b = np.full(n, 0.125 / den)
        lin = ~quad_ok   # fall back to a two-point elimination: (u_g+u0)/2 + r (u0-u_g) = 0
        a[lin] = -(0.5 + r) / (0.5 - r)
        b[lin] = 0.0
        return a, b, np.zeros(n)
    gval = _col(bc.value, n)
    if bc.ghost == "linear":
        return -np.ones(n), np.zeros(n), 2.0 * gval
    a = np.where(quad_ok, -2.0, -1.0)
    b = np.where(quad_ok, 1.0 / 3.0, 0.0)
    c = np.where(quad_ok, 8.0 / 3.0, 2.0) * gval
    return a, b, c


class _Assembler:
    def __init__(self, system: StokesSystem):
        self.s = system
        g = self.g = system.grid
        self.u_open = g.u_open
        self.v_open = g.v_open
        self.u_ins = g.u_inside
        self.v_ins = g.v_inside
        self.uid = -np.ones(g.u_shape, dtype=np.int64)
        self.vid = -np.ones(g.v_shape, dtype=np.int64)
        self.pid = -np.ones((g.ny, g.nx), dtype=np.int64)
        nu = int(self.u_open.sum())
        nv = int(self.v_open.sum())
        npc = int(g.fluid.sum())
        self.uid[self.u_open] = np.arange(nu)
        self.vid[self.v_open] = nu + np.arange(nv)
        self.pid[g.fluid] = nu + nv + np.arange(npc)
        self.nu, self.nv, self.np_ = nu, nv, npc
        self.n = nu + nv + npc + 1
        self.lam = self.n - 1
        self.rows, self.cols, self.vals = [], [], []
        self.rhs = np.zeros(self.n)
        self.ghost_info = {}

    def add(self, r, c, v):
        r = np.asarray(r).ravel()
        c = np.asarray(c).ravel()
        v = np.broadcast_to(np.asarray(v, dtype=float), r.shape).ravel()
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v)

    # ---------------------------------------------------------------- u rows
    def assemble_u(self):
        g, s = self.g, self.s
        ny, nx = g.u_shape
        idx2, ic = 1.0 / g.dx ** 2, 1.0 / g.dy ** 2
        J, I = np.nonzero(self.u_open)
        row = self.uid[J, I]
        diag = np.full(row.shape, 2 * idx2 + 2 * ic)
        for di in (1, -1):
            In = (I + di) % nx
            nb = self.uid[J, In]
            m = nb >= 0
            self.add(row[m], nb[m], -idx2)
        for dj in (1, -1):
            Jn = J + dj
            inside = (Jn >= 0) & (Jn < ny)
            if g.periodic_y:
                Jn = Jn % ny
                inside[:] = True
            Jc = np.clip(Jn, 0, ny - 1)
            nb = np.where(inside, self.uid[Jc, I], -1)
            m = nb >= 0
            self.add(row[m], nb[m], -ic)
            ins = inside & self.u_ins[Jc, I]
            diag[ins] += ic
            if not g.periodic_y:
                wall = ~inside
                self._u_wall(J[wall], I[wall], row[wall], diag, np.nonzero(wall)[0],
                             top=(dj == 1))
        self.add(row, row, diag)
        # pressure gradient
        self.add(row, self.pid[J, I], 1.0 / g.dx)
        self.add(row, self.pid[J, (I - 1) % nx], -1.0 / g.dx)
        f = s.force_u[J, I].copy()
        for t in s.traction:
            dens = _col(t.density, nx)
            adj = (J == t.row) | (J == t.row - 1)
            f[adj] -= dens[I[adj]] / (2.0 * g.dy)
        self.rhs[row] += f

    def _u_wall(self, J, I, row, diag, pos, top):
        g, s = self.g, self.s
        bc = s.top if top else s.bottom
        ny = g.u_shape[0]
        j1 = ny - 2 if top else 1
        n = g.u_shape[1]
        quad_ok = np.zeros(n, dtype=bool)
        if ny >= 2:
            quad_ok = self.u_open[j1]
        a, b, c = _ghost_coeffs(bc, g.dy, quad_ok)
        self.ghost_info["top" if top else "bottom"] = (a, b, c)
        ic = 1.0 / g.dy ** 2
        # equation term -ghost / dy^2
        diag[pos] += -a[I] * ic
        nb = self.uid[j1, I] if ny >= 2 else -np.ones_like(I)
        m = (nb >= 0) & (b[I] != 0)
        self.add(row[m], nb[m], -b[I][m] * ic)
        self.rhs[row] += c[I] * ic

    # ---------------------------------------------------------------- v rows
    def assemble_v(self):
        g, s = self.g, self.s
        ny, nx = g.v_shape
        ix, icy = 1.0 / g.dx ** 2, 1.0 / g.dy ** 2
        J, I = np.nonzero(self.v_open)
        row = self.vid[J, I]
        diag = np.full(row.shape, 2 * ix + 2 * icy)
        for di in (1, -1):
            In = (I + di) % nx
            nb = self.vid[J, In]
            m = nb >= 0
            self.add(row[m], nb[m], -ix)
            diag[self.v_ins[J, In]] += ix
        vb = vt = None
        if not g.periodic_y:
            vb, vt = _col(s.bottom.normal, nx), _col(s.top.normal, nx)
        for dj in (1, -1):
            Jn = (J + dj) % ny if g.periodic_y else J + dj
            nb = self.vid[Jn, I]
            m = nb >= 0
            self.add(row[m], nb[m], -icy)
            if not g.periodic_y:
                # known normal values on the domain walls
                if dj == 1:
                    k = Jn == ny - 1
                    self.rhs[row[k]] += vt[I[k]] * icy
                else:
                    k = Jn == 0
                    self.rhs[row[k]] += vb[I[k]] * icy
        self.add(row, row, diag)
        nyc = g.ny
        self.add(row, self.pid[J % nyc, I], 1.0 / g.dy)
        self.add(row, self.pid[(J - 1) % nyc, I], -1.0 / g.dy)
        self.rhs[row] += s.force_v[J, I]

    # ------------------------------------------------------- continuity rows
    def assemble_div(self):
        g, s = self.g, self.s
        nx = g.nx
        J, I = np.nonzero(g.fluid)
        row = self.pid[J, I]
        # G^T: +1/dx for the left face, -1/dx for the right face, same in y
        for fid, sign, h in ((self.uid[J, I], 1.0, g.dx),
                             (self.uid[J, (I + 1) % nx], -1.0, g.dx)):
            m = fid >= 0
            self.add(row[m], fid[m], sign / h)
        nvy = g.v_shape[0]
        top_face = (J + 1) % nvy if g.periodic_y else J + 1
        for fid, sign in ((self.vid[J, I], 1.0), (self.vid[top_face, I], -1.0)):
            m = fid >= 0
            self.add(row[m], fid[m], sign / g.dy)
        known = np.zeros(row.shape)
        if not g.periodic_y:
            vb, vt = _col(s.bottom.normal, nx), _col(s.top.normal, nx)
            b = J == 0
            t = J == g.ny - 1
            known[b] -= vb[I[b]] / g.dy
            known[t] += vt[I[t]] / g.dy
        self.rhs[row] += known
        self.known_div = known
        # Lagrange multiplier for the pressure normalization
        w = np.where(s.pressure_region[J, I], g.cell_area, 0.0)
        m = w > 0
        self.add(row[m], np.full(m.sum(), self.lam), w[m])
        self.add(np.full(m.sum(), self.lam), row[m], w[m])

    def matrix(self):
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        return sp.csc_matrix((v, (r, c)), shape=(self.n, self.n))


def _check_connectivity(g: StaggeredGrid):
    fl = g.fluid
    if not fl.any():
        raise SingularSystemError("no fluid cell in the domain")
    ids = -np.ones(fl.shape, dtype=np.int64)
    ids[fl] = np.arange(fl.sum())
    a, b = [], []
    right = np.roll(ids, -1, axis=1)
    m = (ids >= 0) & (right >= 0)
    a.append(ids[m]); b.append(right[m])
    up = np.roll(ids, -1, axis=0)
    if not g.periodic_y:
        up[-1] = -1
    m = (ids >= 0) & (up >= 0)
    a.append(ids[m]); b.append(up[m])
    a, b = np.concatenate(a), np.concatenate(b)
    n = int(fl.sum())
    adj = sp.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n))
    ncomp, _ = csgraph.connected_components(adj, directed=False)
    if ncomp != 1:
        raise SingularSystemError(f"fluid region splits into {ncomp} disconnected parts")


def assemble(system: StokesSystem):
    """Sparse saddle matrix, right-hand side and the assembler bookkeeping."""
    _check_connectivity(system.grid)
    asm = _Assembler(system)
    asm.assemble_u()
    asm.assemble_v()
    asm.assemble_div()
    return asm.matrix(), asm.rhs, asm


def solve_stokes(system: StokesSystem, cfg: SolverConfig = SolverConfig()) -> StokesSolution:
    t0 = time.perf_counter()
    g = system.grid
    M, rhs, asm = assemble(system)
    net = float(np.sum(asm.known_div) * g.cell_area)
    scale = float(np.sum(np.abs(asm.known_div)) * g.cell_area)
    if abs(net) > 1e-12 * max(scale, 1.0) and abs(net) > 1e-14:
        raise CompatibilityError(f"net boundary flux {net:.3e} on a closed incompressible region")
    bnorm = float(np.linalg.norm(rhs))
    history = []
    if bnorm == 0.0:
        x = np.zeros(asm.n)
        history.append(0.0)
    else:
        try:
            lu = splu(M, permc_spec="COLAMD")
        except RuntimeError as exc:  # exactly singular factor
            raise SingularSystemError(str(exc)) from exc
        x = lu.solve(rhs)
        for _ in range(cfg.max_iter):
            r = rhs - M @ x
            res = float(np.linalg.norm(r)) / bnorm
            history.append(res)
            if res <= cfg.tol or not np.isfinite(res):
                break
            x += lu.solve(r)
        else:
            r = rhs - M @ x
            history.append(float(np.linalg.norm(r)) / bnorm)
    res = history[-1]
    sol = _unpack(system, asm, x, res, len(history), history)
    sol.n_unknowns = asm.n
    sol.seconds = time.perf_counter() - t0
    log.debug("stokes solve: %d unknowns, residual %.2e, %.2fs", asm.n, res, sol.seconds)
    if not np.isfinite(res):
        raise SingularSystemError("saddle-point factorization produced non-finite values")
    if res > cfg.tol:
        raise NonConvergenceError("saddle-point solve did not reach the tolerance", res, sol)
    return sol


def _unpack(system, asm, x, res, iters, history) -> StokesSolution:
    g = system.grid
    u = np.zeros(g.u_shape)
    v = np.zeros(g.v_shape)
    p = np.zeros((g.ny, g.nx))
    u[asm.u_open] = x[asm.uid[asm.u_open]]
    v[asm.v_open] = x[asm.vid[asm.v_open]]
    if not g.periodic_y:
        v[0] = _col(system.bottom.normal, g.nx)
        v[-1] = _col(system.top.normal, g.nx)
    p[g.fluid] = x[asm.pid[g.fluid]]
    reg = system.pressure_region
    p[g.fluid] -= float(np.mean(p[reg]))
    gb = gt = None
    if not g.periodic_y:
        gb = _ghost_row(u, asm.ghost_info.get("bottom"), 0, 1, asm.u_open[0])
        gt = _ghost_row(u, asm.ghost_info.get("top"), -1, -2, asm.u_open[-1])
    vel = VectorField(g, u, v, gb, gt)
    return StokesSolution(vel, ScalarField(g, p), res, iters, history,
                          multiplier=float(x[asm.lam]))


def _ghost_row(u, info, j0, j1, open_row):
    if info is None:
        return np.where(open_row, -u[j0], 0.0)
    a, b, c = info
    u1 = u[j1] if u.shape[0] >= 2 else np.zeros_like(u[j0])
    return np.where(open_row, a * u[j0] + b * u1 + c, 0.0)


# ------------------------------------------------------------- wall traces
def wall_value(sol: StokesSolution, side: str = "bottom") -> np.ndarray:
    """Tangential velocity on an x2-wall from the quadratic through ghost and two rows."""
    vf = sol.velocity
    u = vf.u
    if side == "bottom":
        gh, u0, u1 = vf.ghost_bottom, u[0], u[1]
    else:
        gh, u0, u1 = vf.ghost_top, u[-1], u[-2]
    return 0.375 * gh + 0.75 * u0 - 0.125 * u1


def wall_shear(sol: StokesSolution, side: str = "bottom") -> np.ndarray:
    """``du1/dx2`` on an x2-wall (derivative of the same quadratic)."""
    vf = sol.velocity
    dy = vf.grid.dy
    if side == "bottom":
        return (vf.u[0] - vf.ghost_bottom) / dy
    return (vf.ghost_top - vf.u[-1]) / dy
