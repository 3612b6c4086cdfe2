"""Periodic permeability cell problems.

For i = 1, 2 solve ``-Lap w^i + grad pi^i = e^i``, ``div w^i = 0`` in the
fluid part of the unit cell with ``w^i = 0`` on the inclusions and full
periodicity, then ``K_ij = int w^i_j``.  The same tensor also equals the
Dirichlet form ``int grad w^i : grad w^j``; both are reported.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CellGeometry
from .grid import ScalarField, StaggeredGrid, VectorField, dirichlet_form
from .stokes import SolverConfig, StokesSystem, solve_stokes


@dataclass
class PermeabilityTensor:
    K: np.ndarray
    K_energy: np.ndarray
    w: tuple[VectorField, VectorField]
    pi: tuple[ScalarField, ScalarField]
    resolution: int

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.K + self.K.T))

    @property
    def K_inv(self) -> np.ndarray:
        """Drag tensor."""
        return np.linalg.inv(self.K)

    @property
    def asymmetry(self) -> float:
        return float(abs(self.K[0, 1] - self.K[1, 0]))

    @property
    def energy_defect(self) -> float:
        """Largest entrywise relative gap between the two formulas for K."""
        scale = np.max(np.abs(self.K))
        return float(np.max(np.abs(self.K - self.K_energy)) / scale)

    def check(self, rel_energy: float = 0.01) -> list[str]:
        problems = []
        if self.asymmetry > 1e-8:
            problems.append(f"K not symmetric: |K12-K21| = {self.asymmetry:.2e}")
        if not np.all(self.eigenvalues > 0):
            problems.append("K not positive definite")
        if self.energy_defect > rel_energy:
            problems.append(f"flux and energy formulas differ by {self.energy_defect:.2%}")
        for k, p in enumerate(self.pi):
            if abs(np.sum(p.values)) * p.grid.cell_area > 1e-10:
                problems.append(f"pi^{k + 1} does not have zero mean")
        return problems

    def to_dict(self) -> dict:
        return {"K": self.K.tolist(), "K_energy": self.K_energy.tolist(),
                "eigenvalues": self.eigenvalues.tolist(), "resolution": self.resolution,
                "K_inv": self.K_inv.tolist()}


def cell_grid(cell: CellGeometry, resolution: int) -> StaggeredGrid:
    h = 1.0 / resolution
    return StaggeredGrid.from_rects(resolution, resolution, h, h, cell.inclusions,
                                    periodic_x=True, periodic_y=True)


def compute_permeability(cell: CellGeometry, resolution: int = 64,
                         cfg: SolverConfig = SolverConfig(),
                         min_resolution: int = 32) -> PermeabilityTensor:
    """Solve both cell problems on a ``resolution``-squared grid.

    ``min_resolution`` may be lowered to match a coarse pore-scale solve.
    """
    if resolution < min_resolution:
        raise ValueError(f"cell problems need a resolution of at least {min_resolution}")
    g = cell_grid(cell, resolution)
    loads = [(np.ones(g.u_shape), np.zeros(g.v_shape)),
             (np.zeros(g.u_shape), np.ones(g.v_shape))]
    w, pi = [], []
    for fu, fv in loads:
        sol = solve_stokes(StokesSystem(g, fu, fv), cfg)
        vel = sol.velocity.masked()
        w.append(vel)
        pi.append(sol.pressure)
    K = np.empty((2, 2))
    KE = np.empty((2, 2))
    for i in range(2):
        K[i, 0] = np.sum(w[i].u) * g.cell_area
        K[i, 1] = np.sum(w[i].v) * g.cell_area
        for j in range(2):
            KE[i, j] = dirichlet_form(w[i], w[j])
    return PermeabilityTensor(K, KE, tuple(w), tuple(pi), resolution)
