"""Dual-subdomain mesh, cell fields, boundary conditions, and run records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DomainError

__all__ = ["Grid1D", "CellField", "BoundaryCondition", "Trajectory"]


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh over [-n_left*dx, n_right*dx] with the interface at x=0.

    x=0 is exactly a cell face; cells 0..n_left-1 lie in the left rock and
    cells n_left..n_left+n_right-1 in the right rock.
    """

    n_left: int
    n_right: int
    dx: float

    def __post_init__(self):
        if self.n_left < 1 or self.n_right < 1:
            raise DomainError("each subdomain needs at least one cell")
        if not self.dx > 0:
            raise DomainError("cell width must be positive")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float,
                    n_left: int, n_right: int) -> "Grid1D":
        if not (x_min < 0.0 < x_max):
            raise DomainError("domain must contain the interface: x_min < 0 < x_max")
        dxl = -x_min / n_left
        dxr = x_max / n_right
        if abs(dxl - dxr) > 1e-12 * max(dxl, dxr):
            raise DomainError(
                "cell width mismatch between subdomains: the interface must "
                f"fall on a face (dx_left={dxl}, dx_right={dxr})"
            )
        return cls(n_left=n_left, n_right=n_right, dx=dxl)

    @property
    def x_min(self) -> float:
        return -self.n_left * self.dx

    @property
    def x_max(self) -> float:
        return self.n_right * self.dx

    @property
    def n_cells(self) -> int:
        return self.n_left + self.n_right

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    def side_of_cell(self, j: int) -> int:
        return 1 if j < self.n_left else 2

    def compatible(self, other: "Grid1D") -> bool:
        return (self.n_left == other.n_left and self.n_right == other.n_right
                and abs(self.dx - other.dx) <= 1e-14 * self.dx)


@dataclass
class CellField:
    """Piecewise-constant cell averages of the saturation at one time."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def copy(self) -> "CellField":
        return CellField(self.values.copy(), self.time)


@dataclass(frozen=True)
class BoundaryCondition:
    """Outer-boundary closure: outflow, Dirichlet(value), or zero flux."""

    kind: str
    value: Optional[float] = None

    @classmethod
    def outflow(cls) -> "BoundaryCondition":
        return cls("outflow")

    @classmethod
    def dirichlet(cls, value: float) -> "BoundaryCondition":
        if not 0.0 <= value <= 1.0:
            raise DomainError("Dirichlet saturation must lie in [0,1]")
        return cls("dirichlet", float(value))

    @classmethod
    def zero_flux(cls) -> "BoundaryCondition":
        return cls("zero_flux")

    def __str__(self):
        if self.kind == "dirichlet":
            return f"dirichlet({self.value})"
        return self.kind


@dataclass
class Trajectory:
    """Snapshots plus per-step scalar series produced by a solver run.

    Behaves as a sequence of :class:`CellField` snapshots; per-step series
    (interface flux, outer-boundary fluxes, interface traces for capillary
    runs) support flux audits and mass-balance closure without storing every
    intermediate state.
    """

    grid: Grid1D
    mode_tag: str
    times: List[float] = field(default_factory=list)
    fields: List[np.ndarray] = field(default_factory=list)
    eps: Optional[float] = None
    step_times: List[float] = field(default_factory=list)
    step_dts: List[float] = field(default_factory=list)
    interface_flux: List[float] = field(default_factory=list)
    left_boundary_flux: List[float] = field(default_factory=list)
    right_boundary_flux: List[float] = field(default_factory=list)
    interface_traces: List[tuple] = field(default_factory=list)
    tie_breaks: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> CellField:
        if isinstance(k, slice):
            raise TypeError("index snapshots individually")
        return CellField(self.fields[k], self.times[k])

    def append(self, values: np.ndarray, time: float):
        self.fields.append(np.array(values, dtype=float))
        self.times.append(float(time))

    def mass(self, k: int, region=None) -> float:
        """Discrete mass of snapshot k, optionally restricted to a region
        whose endpoints must coincide with cell faces."""
        u = self.fields[k]
        dx = self.grid.dx
        if region is None:
            return float(np.sum(u) * dx)
        xa, xb = region
        faces = self.grid.faces
        ia = int(round((xa - faces[0]) / dx))
        ib = int(round((xb - faces[0]) / dx))
        if (abs(faces[0] + ia * dx - xa) > 1e-9 * dx
                or abs(faces[0] + ib * dx - xb) > 1e-9 * dx):
            raise ValueError(f"region ({xa}, {xb}) is not aligned to cell faces")
        ia = max(ia, 0)
        ib = min(ib, self.grid.n_cells)
        return float(np.sum(u[ia:ib]) * dx)

    def time_average_interface_flux(self, t_from: float = 0.0) -> float:
        ts = np.asarray(self.step_times)
        dts = np.asarray(self.step_dts)
        fs = np.asarray(self.interface_flux)
        sel = ts >= t_from - 1e-14
        if not np.any(sel):
            raise ValueError("no recorded steps past t_from")
        return float(np.sum(fs[sel] * dts[sel]) / np.sum(dts[sel]))
