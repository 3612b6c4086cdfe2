"""Geometry of the periodic pore cell, the boundary-layer strip and the channel.

All inclusions are closed axis-aligned rectangles.  Cell coordinates live in
the unit square; the channel is ``(0, L) x (-H, h)`` with the porous part
below the interface ``x2 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

_INT_TOL = 1e-9


class GeometryError(ValueError):
    """Raised when a geometry violates one of its invariants."""


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f"degenerate rectangle {self}")

    @property
    def diameter(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def overlaps(self, other: "Rect") -> bool:
        """True if the interiors intersect (shared edges are allowed)."""
        return (min(self.x1, other.x1) > max(self.x0, other.x0)
                and min(self.y1, other.y1) > max(self.y0, other.y0))

    def scaled(self, s: float, dx: float = 0.0, dy: float = 0.0) -> "Rect":
        return Rect(s * self.x0 + dx, s * self.y0 + dy,
                    s * self.x1 + dx, s * self.y1 + dy)

    def reflected_x(self) -> "Rect":
        """Mirror image about ``y1 = 1/2`` in cell coordinates."""
        return Rect(1.0 - self.x1, self.y0, 1.0 - self.x0, self.y1)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


def _as_rect(r) -> Rect:
    if isinstance(r, Rect):
        return r
    return Rect(*map(float, r))


@dataclass(frozen=True)
class CellGeometry:
    """Unit pore cell ``Y = (0,1)^2`` with solid rectangles ``Y_s``."""

    inclusions: tuple[Rect, ...] = ()
    margin: float = 0.1
    validation_resolution: int = 64

    def __post_init__(self):
        object.__setattr__(self, "inclusions",
                           tuple(_as_rect(r) for r in self.inclusions))
        self.validate()

    def validate(self) -> None:
        if self.margin <= 0:
            raise GeometryError("cell margin must be positive")
        m = self.margin - 1e-12
        for r in self.inclusions:
            if r.x0 < m or r.y0 < m or r.x1 > 1 - m or r.y1 > 1 - m:
                raise GeometryError(
                    f"inclusion {r.as_list()} closer than {self.margin} to the cell boundary")
        for a in range(len(self.inclusions)):
            for b in range(a + 1, len(self.inclusions)):
                if self.inclusions[a].overlaps(self.inclusions[b]):
                    raise GeometryError("inclusions overlap")
        if not self.fluid_connected():
            raise GeometryError("fluid part of the periodic cell is not connected")

    def solid_mask(self, n: int) -> np.ndarray:
        """Boolean (n, n) mask of cells whose centre lies in a solid; rows are y."""
        c = (np.arange(n) + 0.5) / n
        X, Y = np.meshgrid(c, c)
        mask = np.zeros((n, n), dtype=bool)
        for r in self.inclusions:
            mask |= (X >= r.x0) & (X <= r.x1) & (Y >= r.y0) & (Y <= r.y1)
        return mask

    def fluid_connected(self) -> bool:
        # Inclusions keep a positive margin, so the fluid frame along the cell
        # boundary is connected and links neighbouring cells; it suffices that
        # every fluid pixel of one cell reaches that frame.
        fluid = ~self.solid_mask(self.validation_resolution)
        _, n_components = ndimage.label(fluid)
        return n_components == 1

    @property
    def solid_fraction(self) -> float:
        return sum(r.area for r in self.inclusions)

    def is_symmetric_x(self, tol: float = 1e-12) -> bool:
        """Axial symmetry about ``y1 = 1/2``."""
        mine = sorted(tuple(r.as_list()) for r in self.inclusions)
        mirrored = sorted(tuple(r.reflected_x().as_list()) for r in self.inclusions)
        return all(np.allclose(a, b, atol=tol) for a, b in zip(mine, mirrored))

    def reflected_x(self) -> "CellGeometry":
        return replace(self, inclusions=tuple(r.reflected_x() for r in self.inclusions))

    def line_hits_solid(self, y: float) -> bool:
        """Whether the horizontal line at cell height ``y`` touches a solid."""
        return any(r.y0 - 1e-12 <= y <= r.y1 + 1e-12 for r in self.inclusions)

    def to_dict(self) -> dict:
        return {"inclusions": [r.as_list() for r in self.inclusions],
                "margin": self.margin}


@dataclass(frozen=True)
class StripGeometry:
    """Truncated boundary-layer strip ``(0,1) x (-bottom, top)``.

    ``bottom`` whole pore cells are stacked below the interface; the
    interface line sits at ``y2 = interface_offset``.
    """

    cell: CellGeometry
    interface_offset: float = 0.0
    top: float = 4.0
    bottom: int = 4

    def __post_init__(self):
        if self.top <= 0:
            raise GeometryError("truncation_top must be positive")
        if int(self.bottom) != self.bottom or self.bottom < 1:
            raise GeometryError("truncation_bottom must be a positive integer")
        object.__setattr__(self, "bottom", int(self.bottom))
        a = self.interface_offset
        if a > 0:
            raise GeometryError("interface offset must be <= 0")
        if a <= -self.bottom + 1:
            raise GeometryError("interface offset must satisfy a > -L_bot + 1")
        if a < 0 and self.cell.line_hits_solid(a - math.floor(a)):
            raise GeometryError(f"interface line y2 = {a} passes through a solid inclusion")


def shift_interface(strip: StripGeometry, a: float) -> StripGeometry:
    """Same strip with the interface moved to ``y2 = a`` (``a <= 0``)."""
    return replace(strip, interface_offset=float(a))


def _is_integer_ratio(num: float, den: float) -> bool:
    q = num / den
    return q >= 1 - _INT_TOL and abs(q - round(q)) <= _INT_TOL * max(1.0, q)


@dataclass(frozen=True)
class ChannelGeometry:
    """Free channel ``(0,L) x (0,h)`` over the porous bed ``(0,L) x (-H,0)``."""

    L: float
    h: float
    H: float
    eps: float
    cell: CellGeometry = field(default_factory=CellGeometry)

    def __post_init__(self):
        for name in ("L", "h", "H", "eps"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive")
        for name in ("L", "h", "H"):
            if not _is_integer_ratio(getattr(self, name), self.eps):
                raise GeometryError(f"{name}/eps must be a positive integer")

    @property
    def n_cols(self) -> int:
        return int(round(self.L / self.eps))

    @property
    def n_rows(self) -> int:
        return int(round(self.H / self.eps))

    @property
    def n_free_rows(self) -> int:
        return int(round(self.h / self.eps))

    def with_eps(self, eps: float) -> "ChannelGeometry":
        return replace(self, eps=float(eps))


@dataclass(frozen=True)
class PerforatedDomainSpec:
    solids: tuple[Rect, ...]
    free_region: Rect
    porous_region: Rect
    eps: float


def build_perforated_domain(channel: ChannelGeometry) -> PerforatedDomainSpec:
    """Copies of the cell's inclusions, one per pore cell of the porous bed.

    Pore cells are enumerated row by row from the interface downwards, left to
    right within a row.
    """
    eps = channel.eps
    solids = []
    for k in range(1, channel.n_rows + 1):
        for i in range(channel.n_cols):
            for r in channel.cell.inclusions:
                solids.append(r.scaled(eps, i * eps, -k * eps))
    return PerforatedDomainSpec(
        solids=tuple(solids),
        free_region=Rect(0.0, 0.0, channel.L, channel.h),
        porous_region=Rect(0.0, -channel.H, channel.L, 0.0),
        eps=eps,
    )
