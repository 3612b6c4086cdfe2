"""Marker-and-cell grid, discrete fields, operators and norms.

Layout (row index ``j`` runs along x2, column ``i`` along x1):

* pressure / scalar values at cell centres ``(x0 + (i+1/2) dx, y0 + (j+1/2) dy)``,
  shape ``(ny, nx)``;
* ``u`` (first velocity component) on vertical faces ``(x0 + i dx, y0 + (j+1/2) dy)``,
  shape ``(ny, nx)`` when periodic in x1, else ``(ny, nx + 1)``;
* ``v`` (second component) on horizontal faces ``(x0 + (i+1/2) dx, y0 + j dy)``,
  shape ``(ny, nx)`` when periodic in x2, else ``(ny + 1, nx)``.

Faces are *open* when both neighbouring cells are fluid, *wall* faces when
exactly one neighbour is solid (the face lies on an obstacle and carries a
zero normal velocity) and *inside* when both neighbours are solid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import Rect

L1 = "L1"
L2 = "L2"
L2_WEIGHTED = "L2w"
H_MINUS_HALF = "Hm12"
NORM_KINDS = (L1, L2, L2_WEIGHTED, H_MINUS_HALF)

_ALIASES = {
    "l1": L1, "l2": L2, "l2w": L2_WEIGHTED, "l2-weighted": L2_WEIGHTED,
    "l2-weighted-|x2|^1/2": L2_WEIGHTED, "hm12": H_MINUS_HALF,
    "h-1/2": H_MINUS_HALF, "h-minus-half": H_MINUS_HALF,
}


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StaggeredGrid:
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0
    periodic_x: bool = True
    periodic_y: bool = False
    solid: np.ndarray = None
    snap_error: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per direction")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")
        if self.solid is None:
            object.__setattr__(self, "solid", np.zeros((self.ny, self.nx), dtype=bool))
        if self.solid.shape != (self.ny, self.nx):
            raise ValueError("solid mask has the wrong shape")
        self.solid.setflags(write=False)

    @classmethod
    def from_rects(cls, nx, ny, dx, dy, rects: Iterable[Rect] = (), x0=0.0, y0=0.0,
                   periodic_x=True, periodic_y=False) -> "StaggeredGrid":
        """Grid whose solid cells are the given rectangles snapped to grid nodes."""
        solid = np.zeros((ny, nx), dtype=bool)
        err = 0.0
        for r in rects:
            fi = [(r.x0 - x0) / dx, (r.x1 - x0) / dx]
            fj = [(r.y0 - y0) / dy, (r.y1 - y0) / dy]
            i0, i1 = (int(np.floor(v + 0.5)) for v in fi)
            j0, j1 = (int(np.floor(v + 0.5)) for v in fj)
            err = max(err, max(abs(a - b) for a, b in zip(fi + fj, [i0, i1, j0, j1])))
            if i1 <= i0 or j1 <= j0:
                raise ValueError(f"inclusion {r.as_list()} vanishes at this resolution")
            solid[max(j0, 0):min(j1, ny), max(i0, 0):min(i1, nx)] = True
        return cls(nx, ny, dx, dy, x0, y0, periodic_x, periodic_y, solid, snap_error=err)

    # ------------------------------------------------------------------ shapes
    @property
    def u_shape(self):
        return (self.ny, self.nx if self.periodic_x else self.nx + 1)

    @property
    def v_shape(self):
        return (self.ny if self.periodic_y else self.ny + 1, self.nx)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    # ------------------------------------------------------------- coordinates
    @property
    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def xu(self):
        return self.x0 + np.arange(self.u_shape[1]) * self.dx

    @property
    def yv(self):
        return self.y0 + np.arange(self.v_shape[0]) * self.dy

    @property
    def x_extent(self) -> float:
        return self.nx * self.dx

    def row_of(self, y: float) -> int:
        """Index of the horizontal grid line at height ``y`` (must be a grid line)."""
        j = (y - self.y0) / self.dy
        jr = int(round(j))
        if abs(j - jr) > 1e-8:
            raise ValueError(f"y = {y} is not a grid line")
        return jr

    # ------------------------------------------------------------------- masks
    def _padded_solid_x(self):
        """Solid flags of the cells left and right of every u face."""
        s = self.solid
        if self.periodic_x:
            return np.roll(s, 1, axis=1), s
        wall = np.ones((self.ny, 1), dtype=bool)
        return np.hstack([wall, s]), np.hstack([s, wall])

    def _padded_solid_y(self):
        s = self.solid
        if self.periodic_y:
            return np.roll(s, 1, axis=0), s
        wall = np.ones((1, self.nx), dtype=bool)
        return np.vstack([wall, s]), np.vstack([s, wall])

    @property
    def u_open(self):
        a, b = self._padded_solid_x()
        return ~a & ~b

    @property
    def u_inside(self):
        a, b = self._padded_solid_x()
        return a & b

    @property
    def v_open(self):
        a, b = self._padded_solid_y()
        return ~a & ~b

    @property
    def v_inside(self):
        a, b = self._padded_solid_y()
        return a & b

    @property
    def fluid(self):
        return ~self.solid

    def band(self, y_lo: float, y_hi: float) -> np.ndarray:
        """Cell mask of the horizontal band ``y_lo < x2 < y_hi``."""
        yc = self.yc
        return np.broadcast_to(((yc > y_lo) & (yc < y_hi))[:, None], (self.ny, self.nx))

    def compatible(self, other: "StaggeredGrid") -> bool:
        return (self.nx == other.nx and self.ny == other.ny
                and np.isclose(self.dx, other.dx) and np.isclose(self.dy, other.dy)
                and np.isclose(self.x0, other.x0) and np.isclose(self.y0, other.y0)
                and self.periodic_x == other.periodic_x
                and self.periodic_y == other.periodic_y)


@dataclass
class ScalarField:
    grid: StaggeredGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise GridMismatchError("scalar values do not match the grid")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.ny, grid.nx)))

    def masked(self) -> "ScalarField":
        return ScalarField(self.grid, np.where(self.grid.solid, 0.0, self.values))

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other))

    def __mul__(self, a: float):
        return ScalarField(self.grid, a * self.values)

    __rmul__ = __mul__

    def samples(self, region=None) -> "Samples":
        g = self.grid
        X, Y = np.meshgrid(g.xc, g.yc)
        w = np.full(X.shape, g.cell_area)
        return Samples(self.values.ravel(), X.ravel(), Y.ravel(), w.ravel()).restrict(region)


@dataclass
class VectorField:
    grid: StaggeredGrid
    u: np.ndarray
    v: np.ndarray
    # ghost rows of u below the first and above the last row (None: zero wall)
    ghost_bottom: np.ndarray | None = None
    ghost_top: np.ndarray | None = None

    def __post_init__(self):
        if self.u.shape != self.grid.u_shape or self.v.shape != self.grid.v_shape:
            raise GridMismatchError("vector components do not match the grid")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.u_shape), np.zeros(grid.v_shape))

    def masked(self) -> "VectorField":
        g = self.grid
        return VectorField(g, np.where(g.u_open, self.u, 0.0),
                           np.where(g.v_open, self.v, 0.0) if g.periodic_y else
                           np.where(g.v_open | _boundary_rows(g), self.v, 0.0),
                           self.ghost_bottom, self.ghost_top)

    def __add__(self, other):
        return VectorField(self.grid, self.u + other.u, self.v + other.v,
                           _add_opt(self.ghost_bottom, other.ghost_bottom, self.u[0], other.u[0]),
                           _add_opt(self.ghost_top, other.ghost_top, self.u[-1], other.u[-1]))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, a: float):
        gb = None if self.ghost_bottom is None else a * self.ghost_bottom
        gt = None if self.ghost_top is None else a * self.ghost_top
        return VectorField(self.grid, a * self.u, a * self.v, gb, gt)

    __rmul__ = __mul__

    def u_at_centers(self):
        u = self.u
        if self.grid.periodic_x:
            return 0.5 * (u + np.roll(u, -1, axis=1))
        return 0.5 * (u[:, :-1] + u[:, 1:])

    def v_at_centers(self):
        v = self.v
        if self.grid.periodic_y:
            return 0.5 * (v + np.roll(v, -1, axis=0))
        return 0.5 * (v[:-1] + v[1:])

    def samples(self, region=None) -> "Samples":
        g = self.grid
        Xu, Yu = np.meshgrid(g.xu, g.yc)
        wu = np.full(Xu.shape, g.cell_area)
        if not g.periodic_x:
            wu[:, [0, -1]] *= 0.5
        Xv, Yv = np.meshgrid(g.xc, g.yv)
        wv = np.full(Xv.shape, g.cell_area)
        if not g.periodic_y:
            wv[[0, -1], :] *= 0.5
        su = Samples(self.u.ravel(), Xu.ravel(), Yu.ravel(), wu.ravel())
        sv = Samples(self.v.ravel(), Xv.ravel(), Yv.ravel(), wv.ravel())
        return Samples.concat([su.restrict(region), sv.restrict(region)])

    def gradient_samples(self, region=None) -> "Samples":
        """All four gradient components as quadrature samples.

        Normal derivatives sit at cell centres, shear derivatives at grid
        nodes.  Node rows on non-periodic x2 walls use the stored ghost rows.
        """
        g = self.grid
        parts = []
        # du/dx1 and dv/dx2 at cell centres
        if g.periodic_x:
            dudx = (np.roll(self.u, -1, axis=1) - self.u) / g.dx
        else:
            dudx = np.diff(self.u, axis=1) / g.dx
        if g.periodic_y:
            dvdy = (np.roll(self.v, -1, axis=0) - self.v) / g.dy
        else:
            dvdy = np.diff(self.v, axis=0) / g.dy
        Xc, Yc = np.meshgrid(g.xc, g.yc)
        wc = np.full(Xc.shape, g.cell_area)
        for arr in (dudx, dvdy):
            parts.append(Samples(arr.ravel(), Xc.ravel(), Yc.ravel(), wc.ravel()))
        # du/dx2 at nodes (x = i dx, y = j dy)
        if g.periodic_y:
            dudy = (self.u - np.roll(self.u, 1, axis=0)) / g.dy
            yn = g.y0 + np.arange(g.ny) * g.dy
            wrow = np.ones(g.ny)
        else:
            gb = -self.u[0] if self.ghost_bottom is None else self.ghost_bottom
            gt = -self.u[-1] if self.ghost_top is None else self.ghost_top
            ext = np.vstack([gb[None, :], self.u, gt[None, :]])
            dudy = np.diff(ext, axis=0) / g.dy
            yn = g.y0 + np.arange(g.ny + 1) * g.dy
            wrow = np.ones(g.ny + 1)
            wrow[[0, -1]] = 0.5
        Xn, Yn = np.meshgrid(g.xu, yn)
        wn = wrow[:, None] * np.ones(Xn.shape) * g.cell_area
        if not g.periodic_x:
            wn[:, [0, -1]] *= 0.5
        parts.append(Samples(dudy.ravel(), Xn.ravel(), Yn.ravel(), wn.ravel()))
        # dv/dx1 at nodes
        if g.periodic_x:
            dvdx = (self.v - np.roll(self.v, 1, axis=1)) / g.dx
            xn = g.x0 + np.arange(g.nx) * g.dx
            wcol = np.ones(g.nx)
        else:
            dvdx = np.diff(self.v, axis=1) / g.dx
            xn = g.x0 + np.arange(1, g.nx) * g.dx
            wcol = np.ones(g.nx - 1)
        Xn2, Yn2 = np.meshgrid(xn, g.yv)
        wn2 = np.ones(Xn2.shape) * wcol[None, :] * g.cell_area
        if not g.periodic_y:
            wn2[[0, -1], :] *= 0.5
        parts.append(Samples(dvdx.ravel(), Xn2.ravel(), Yn2.ravel(), wn2.ravel()))
        return Samples.concat([p.restrict(region) for p in parts])


def _vals(x):
    return x.values if isinstance(x, ScalarField) else x


def _add_opt(a, b, ua, ub):
    if a is None and b is None:
        return None
    a = -ua if a is None else a
    b = -ub if b is None else b
    return a + b


def _boundary_rows(g: StaggeredGrid):
    m = np.zeros(g.v_shape, dtype=bool)
    m[[0, -1], :] = True
    return m


@dataclass
class Trace:
    """Function sampled at equispaced points of the interface line."""

    values: np.ndarray
    x: np.ndarray
    length: float
    periodic: bool = True

    @property
    def dx(self) -> float:
        return self.length / len(self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __sub__(self, other):
        return Trace(self.values - _trace_vals(other), self.x, self.length, self.periodic)

    def __add__(self, other):
        return Trace(self.values + _trace_vals(other), self.x, self.length, self.periodic)

    def __mul__(self, a):
        return Trace(a * self.values, self.x, self.length, self.periodic)

    __rmul__ = __mul__


def _trace_vals(x):
    return x.values if isinstance(x, Trace) else x


@dataclass
class Band:
    """Horizontal band ``y_lo <= x2 <= y_hi``; samples on its edges get half weight."""

    y_lo: float
    y_hi: float


@dataclass
class Samples:
    values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def restrict(self, region) -> "Samples":
        if region is None:
            return self
        if isinstance(region, np.ndarray):
            keep = region.ravel()
            return Samples(self.values[keep], self.x[keep], self.y[keep], self.w[keep])
        if not isinstance(region, Band):
            raise TypeError(f"unsupported region {region!r}")
        tol = 1e-9 * max(1.0, abs(region.y_hi - region.y_lo))
        inside = (self.y > region.y_lo + tol) & (self.y < region.y_hi - tol)
        edge = (np.abs(self.y - region.y_lo) <= tol) | (np.abs(self.y - region.y_hi) <= tol)
        w = np.where(inside, self.w, np.where(edge, 0.5 * self.w, 0.0))
        keep = w > 0
        return Samples(self.values[keep], self.x[keep], self.y[keep], w[keep])

    def __sub__(self, other: "Samples") -> "Samples":
        if (len(self.values) != len(other.values)
                or not np.allclose(self.x, other.x, atol=1e-9)
                or not np.allclose(self.y, other.y, atol=1e-9)):
            raise GridMismatchError("samples are located at different points")
        return Samples(self.values - other.values, self.x, self.y, self.w)

    @staticmethod
    def concat(parts: Sequence["Samples"]) -> "Samples":
        return Samples(*(np.concatenate([getattr(p, a) for p in parts])
                         for a in ("values", "x", "y", "w")))


# ----------------------------------------------------------------- operators
def discrete_divergence(vf: VectorField) -> ScalarField:
    """Face-difference divergence at every fluid cell (zero in solid cells)."""
    g = vf.grid
    if vf.u.shape != g.u_shape or vf.v.shape != g.v_shape:
        raise GridMismatchError("vector field does not match its grid")
    if g.periodic_x:
        du = np.roll(vf.u, -1, axis=1) - vf.u
    else:
        du = vf.u[:, 1:] - vf.u[:, :-1]
    if g.periodic_y:
        dv = np.roll(vf.v, -1, axis=0) - vf.v
    else:
        dv = vf.v[1:] - vf.v[:-1]
    div = du / g.dx + dv / g.dy
    return ScalarField(g, np.where(g.solid, 0.0, div))


def discrete_gradient(q: ScalarField) -> VectorField:
    """Centred pressure gradient on open faces (zero on wall and boundary faces)."""
    g = q.grid
    p = q.values
    if g.periodic_x:
        gu = (p - np.roll(p, 1, axis=1)) / g.dx
    else:
        gu = np.zeros(g.u_shape)
        gu[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / g.dx
    if g.periodic_y:
        gv = (p - np.roll(p, 1, axis=0)) / g.dy
    else:
        gv = np.zeros(g.v_shape)
        gv[1:-1] = (p[1:] - p[:-1]) / g.dy
    return VectorField(g, np.where(g.u_open, gu, 0.0), np.where(g.v_open, gv, 0.0))


def inner(a, b) -> float:
    """Cell-area weighted inner product of two scalar or two vector fields."""
    g = a.grid
    if isinstance(a, ScalarField):
        return float(np.sum(a.values * b.values) * g.cell_area)
    return float((np.sum(a.u * b.u) + np.sum(a.v * b.v)) * g.cell_area)


def dirichlet_form(a: VectorField, b: VectorField, walls=("dirichlet", "dirichlet"),
                   kink_rows: Sequence[int] = ()) -> float:
    """Discrete ``int grad a : grad b`` with second-order wall treatment.

    Differences to an obstacle interior or to a no-slip x2-wall act over half
    a spacing.  ``walls`` gives the x2-wall type for ``u`` at the bottom and
    top (``"dirichlet"`` or ``"neumann"``).  For every face row listed in
    ``kink_rows`` the normal derivative of ``u`` may jump there; the pair
    across that row is then replaced by one-sided derivatives from each side.
    """
    g = a.grid
    if not (a.grid is b.grid or a.grid.compatible(b.grid)):
        raise GridMismatchError("fields live on different grids")
    total = 0.0
    # u component ----------------------------------------------------------
    ua, ub = a.u, b.u
    if g.periodic_x:
        total += np.sum((np.roll(ua, -1, 1) - ua) * (np.roll(ub, -1, 1) - ub)) / g.dx ** 2
    else:
        total += np.sum(np.diff(ua, axis=1) * np.diff(ub, axis=1)) / g.dx ** 2
    ins = g.u_inside
    total += _pair_terms(ua, ub, ins, g.dy, axis=0, periodic=g.periodic_y,
                         walls=walls, kink_rows=kink_rows)
    # v component ----------------------------------------------------------
    va, vb = a.v, b.v
    if g.periodic_y:
        total += np.sum((np.roll(va, -1, 0) - va) * (np.roll(vb, -1, 0) - vb)) / g.dy ** 2
    else:
        total += np.sum(np.diff(va, axis=0) * np.diff(vb, axis=0)) / g.dy ** 2
    total += _pair_terms(va, vb, g.v_inside, g.dx, axis=1, periodic=g.periodic_x,
                         walls=("open", "open"), kink_rows=())
    return float(total * g.cell_area)


def _pair_terms(fa, fb, inside, h, axis, periodic, walls, kink_rows):
    """Tangential-difference part of the Dirichlet form along ``axis``."""
    if axis == 1:
        fa, fb, inside = fa.T, fb.T, inside.T
    n = fa.shape[0]
    idx = np.arange(n)
    if periodic:
        lo, hi = idx, (idx + 1) % n
    else:
        lo, hi = idx[:-1], idx[1:]
    a0, a1, b0, b1 = fa[lo], fa[hi], fb[lo], fb[hi]
    i0, i1 = inside[lo], inside[hi]
    both = ~i0 & ~i1
    plain = np.where(both, (a1 - a0) * (b1 - b0), 0.0)
    half = np.where(i0 & ~i1, 2.0 * a1 * b1, 0.0) + np.where(i1 & ~i0, 2.0 * a0 * b0, 0.0)
    total = np.sum(plain + half) / h ** 2
    if not periodic:
        for row, kind in ((0, walls[0]), (n - 1, walls[1])):
            if kind == "dirichlet":
                total += np.sum(np.where(inside[row], 0.0, 2.0 * fa[row] * fb[row])) / h ** 2
    for jk in kink_rows:
        # pair between rows jk-1 and jk is replaced by one-sided derivatives
        A, B = jk - 1, jk
        pair = (fa[B] - fa[A]) * (fb[B] - fb[A])
        below = (fa[A] - fa[A - 1]) * (fb[A] - fb[A - 1])
        above = (fa[B + 1] - fa[B]) * (fb[B + 1] - fb[B])
        total += np.sum(0.5 * (below + above) - pair) / h ** 2
    return total


# --------------------------------------------------------------------- norms
def _kind(kind: str) -> str:
    k = _ALIASES.get(kind.lower(), kind) if isinstance(kind, str) else kind
    if k not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}")
    return k


def compute_norm(fld, kind: str = L2, region=None) -> float:
    """Norm of a field, trace or sample set over a region.

    ``region`` is a :class:`Band`, a boolean mask matching the sample layout,
    or ``None`` for the whole grid.  The ``H^{-1/2}`` norm is only defined for
    periodic :class:`Trace` objects.
    """
    kind = _kind(kind)
    if isinstance(fld, Trace):
        return _trace_norm(fld, kind)
    if kind == H_MINUS_HALF:
        raise ValueError("the H^{-1/2} norm needs a periodic trace on the interface")
    s = fld if isinstance(fld, Samples) else fld.samples(region)
    if isinstance(fld, Samples):
        s = s.restrict(region)
    if kind == L1:
        return float(np.sum(np.abs(s.values) * s.w))
    if kind == L2:
        return float(np.sqrt(np.sum(s.values ** 2 * s.w)))
    return float(np.sqrt(np.sum(np.abs(s.y) * s.values ** 2 * s.w)))


def _trace_norm(t: Trace, kind: str) -> float:
    g = np.asarray(t.values, dtype=float)
    if kind == L1:
        return float(np.sum(np.abs(g)) * t.dx)
    if kind == L2:
        return float(np.sqrt(np.sum(g ** 2) * t.dx))
    if kind == L2_WEIGHTED:
        return 0.0  # |x2| vanishes on the interface
    if not t.periodic:
        raise ValueError("the H^{-1/2} norm is only defined for periodic traces")
    n = len(g)
    coef = np.fft.fft(g) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = 1.0 / np.sqrt(1.0 + (2.0 * np.pi * k / t.length) ** 2)
    return float(np.sqrt(t.length * np.sum(mult * np.abs(coef) ** 2)))


# ---------------------------------------------------------------------- CSV
def field_rows(fld):
    """``(x1, x2, value)`` rows for a scalar field, a component array or a trace."""
    if isinstance(fld, ScalarField):
        s = fld.samples()
        return np.column_stack([s.x, s.y, s.values])
    if isinstance(fld, Trace):
        return np.column_stack([fld.x, np.zeros_like(fld.x), fld.values])
    if isinstance(fld, Samples):
        return np.column_stack([fld.x, fld.y, fld.values])
    raise TypeError("use write_vector_csv for vector fields")


def write_field_csv(path, fld) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = field_rows(fld)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "value"])
        for r in rows:
            w.writerow([repr(float(c)) for c in r])
    return path


def write_vector_csv(path_stem, vf: VectorField) -> tuple[Path, Path]:
    """Write ``<stem>_u1.csv`` and ``<stem>_u2.csv`` (component values at their faces)."""
    g = vf.grid
    stem = Path(path_stem)
    Xu, Yu = np.meshgrid(g.xu, g.yc)
    Xv, Yv = np.meshgrid(g.xc, g.yv)
    p1 = write_field_csv(stem.with_name(stem.name + "_u1.csv"),
                         Samples(vf.u.ravel(), Xu.ravel(), Yu.ravel(), np.ones(Xu.size)))
    p2 = write_field_csv(stem.with_name(stem.name + "_u2.csv"),
                         Samples(vf.v.ravel(), Xv.ravel(), Yv.ravel(), np.ones(Xv.size)))
    return p1, p2
