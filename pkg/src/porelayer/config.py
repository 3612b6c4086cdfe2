"""Experiment configuration and the forcing grammar.

A forcing component is a sum of terms ``c * x2**p * trig(2 pi k x1 / L)``
with ``trig`` one of ``"1"``, ``"sin"``, ``"cos"``; such fields are smooth
and automatically L-periodic.  In JSON a forcing block is either
``{"constant": [f1, f2]}`` or
``{"f1": [{"c": 1.0, "p": 0, "trig": "sin", "k": 1}, ...], "f2": [...]}``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import CellGeometry, ChannelGeometry, Rect, StripGeometry
from .stokes import SolverConfig

# Two unequal rectangles without a vertical mirror line: nonzero C_omega.
ASYMMETRIC_CELL = ((0.125, 0.25, 0.375, 0.75), (0.5, 0.25, 0.625, 0.625))
SYMMETRIC_CELL = ((0.25, 0.25, 0.75, 0.75),)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    c: float = 1.0
    p: int = 0
    trig: str = "1"
    k: int = 0

    def __post_init__(self):
        if self.trig not in ("1", "sin", "cos"):
            raise ConfigError(f"unknown trigonometric factor {self.trig!r}")
        if int(self.p) != self.p or self.p < 0:
            raise ConfigError("x2 powers must be non-negative integers")
        if int(self.k) != self.k:
            raise ConfigError("Fourier modes must be integers")

    def __call__(self, x1, x2, L):
        base = self.c * np.asarray(x2, dtype=float) ** int(self.p)
        if self.trig == "sin":
            return base * np.sin(2 * np.pi * self.k * np.asarray(x1) / L)
        if self.trig == "cos":
            return base * np.cos(2 * np.pi * self.k * np.asarray(x1) / L)
        return base * np.ones_like(np.asarray(x1, dtype=float))


@dataclass(frozen=True)
class Forcing:
    f1: tuple[Term, ...] = ()
    f2: tuple[Term, ...] = ()

    @classmethod
    def constant(cls, f1: float, f2: float = 0.0) -> "Forcing":
        return cls((Term(float(f1)),), (Term(float(f2)),))

    @classmethod
    def from_dict(cls, d) -> "Forcing":
        if "constant" in d:
            v = d["constant"]
            if len(v) != 2:
                raise ConfigError("constant forcing needs two components")
            return cls.constant(*v)
        unknown = set(d) - {"f1", "f2"}
        if unknown:
            raise ConfigError(f"unknown forcing keys {sorted(unknown)}")
        try:
            return cls(tuple(Term(**t) for t in d.get("f1", ())),
                       tuple(Term(**t) for t in d.get("f2", ())))
        except TypeError as exc:
            raise ConfigError(f"bad forcing term: {exc}") from exc

    def to_dict(self):
        return {"f1": [asdict(t) for t in self.f1], "f2": [asdict(t) for t in self.f2]}

    def bind(self, L: float):
        """Callable ``f(x1, x2) -> (f1, f2)`` for a channel of length ``L``."""
        def f(x1, x2):
            z = np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)
            a = z + sum((t(x1, x2, L) for t in self.f1), 0.0)
            b = z + sum((t(x1, x2, L) for t in self.f2), 0.0)
            return a, b
        return f

    def times(self, alpha: float) -> "Forcing":
        return Forcing(tuple(Term(alpha * t.c, t.p, t.trig, t.k) for t in self.f1),
                       tuple(Term(alpha * t.c, t.p, t.trig, t.k) for t in self.f2))


@dataclass
class GeometryConfig:
    inclusions: list = field(default_factory=lambda: [list(r) for r in ASYMMETRIC_CELL])
    margin: float = 0.1
    L: float = 1.0
    h: float = 1.0
    H: float = 1.0
    truncation_top: float = 4.0
    truncation_bottom: int = 4
    shift_offsets: list = field(default_factory=lambda: [-0.25, -0.75])
    perturbation_offset: float = -0.25

    def cell(self) -> CellGeometry:
        return CellGeometry(tuple(Rect(*map(float, r)) for r in self.inclusions), self.margin)

    def strip(self, offset: float = 0.0) -> StripGeometry:
        return StripGeometry(self.cell(), offset, self.truncation_top, self.truncation_bottom)

    def channel(self, eps: float) -> ChannelGeometry:
        return ChannelGeometry(self.L, self.h, self.H, eps, self.cell())


@dataclass
class SolverSettings:
    tol: float = 1e-10
    max_iter: int = 20
    method: str = "direct"
    points_per_eps: int = 16
    cell_resolution: int = 128
    bl_resolution: int = 64
    max_unknowns: int = 2_000_000
    jump_row: int = 2

    def solver(self) -> SolverConfig:
        return SolverConfig(self.tol, self.max_iter, self.method)


@dataclass
class OutputConfig:
    directory: str = "out"
    fields: bool = False


@dataclass
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    forcing: Forcing = field(default_factory=lambda: Forcing.constant(1.0, 0.0))
    epsilons: list = field(default_factory=lambda: [0.25, 0.125, 0.0625])
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        eps = [float(e) for e in self.epsilons]
        if not eps:
            raise ConfigError("at least one eps value is required")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps list must be strictly decreasing")
        self.epsilons = eps
        self.geometry.cell()
        self.geometry.strip()
        for e in eps:
            self.geometry.channel(e)
        self.solver.solver()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {"geometry", "forcing", "epsilons", "solver", "output"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            geo = GeometryConfig(**d.get("geometry", {}))
            sol = SolverSettings(**d.get("solver", {}))
            out = OutputConfig(**d.get("output", {}))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        forcing = Forcing.from_dict(d["forcing"]) if "forcing" in d else Forcing.constant(1.0)
        kw = {"geometry": geo, "forcing": forcing, "solver": sol, "output": out}
        if "epsilons" in d:
            kw["epsilons"] = list(d["epsilons"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"geometry": asdict(self.geometry), "forcing": self.forcing.to_dict(),
                "epsilons": list(self.epsilons), "solver": asdict(self.solver),
                "output": asdict(self.output)}
