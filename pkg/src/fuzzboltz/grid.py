"""Discrete phase space: periodic space grid, truncated velocity grid, moments.

The spatial domain is a torus [0, Lx)^dx sampled on a uniform grid; the
velocity domain is the box [-vmax, vmax]^2 sampled on a cell-centered grid
that is exactly symmetric under v -> -v.  Angular quadrature on the unit
circle uses the midpoint rule with Nomega nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridError",
    "PhaseGrid",
    "DistributionFunction",
    "MomentVector",
    "make_grid",
    "moments",
    "weighted_norm",
    "l1_distance",
]


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


class PhaseGrid:
    """Phase-space lattice: x on a torus, v in a truncated box, omega on S^1.

    Parameters
    ----------
    dx : int
        Spatial dimension, 1 or 2.  The velocity dimension is fixed at 2.
    Lx : float
        Torus period per spatial axis.
    Nx : int
        Grid points per spatial axis.
    vmax : float
        Velocity box half-width; f is implicitly 0 outside the box.
    Nv : int
        Grid points per velocity axis (even, >= 4).
    Nomega : int
        Angular quadrature nodes on S^1 (even, >= 4).
    """

    DV = 2  # velocity dimension is fixed

    def __init__(self, dx: int, Lx: float, Nx: int, vmax: float, Nv: int, Nomega: int):
        if dx not in (1, 2):
            raise GridError(f"dx must be 1 or 2, got {dx}")
        if Lx <= 0:
            raise GridError(f"Lx must be positive, got {Lx}")
        if vmax <= 0:
            raise GridError(f"vmax must be positive, got {vmax}")
        if Nx < 2:
            raise GridError(f"Nx must be >= 2, got {Nx}")
        if Nv < 4 or Nv % 2 != 0:
            raise GridError(f"Nv must be even and >= 4, got {Nv}")
        if Nomega < 4 or Nomega % 2 != 0:
            raise GridError(f"Nomega must be even and >= 4, got {Nomega}")

        self.dx = int(dx)
        self.Lx = float(Lx)
        self.Nx = int(Nx)
        self.vmax = float(vmax)
        self.Nv = int(Nv)
        self.Nomega = int(Nomega)

        self.dx_cell = self.Lx / self.Nx
        self.dv_cell = 2.0 * self.vmax / self.Nv
        self.domega = 2.0 * np.pi / self.Nomega

        # Cell-centered velocity axis built so that v[Nv-1-a] == -v[a] bitwise.
        a = np.arange(self.Nv)
        self.v_axis = (2 * a - self.Nv + 1) * (self.dv_cell / 2.0)
        self.x_axis = np.arange(self.Nx) * self.dx_cell

        self.n_xcells = self.Nx**self.dx
        self.n_vcells = self.Nv**2

        V0, V1 = np.meshgrid(self.v_axis, self.v_axis, indexing="ij")
        self.v_nodes = np.column_stack([V0.ravel(), V1.ravel()])  # (n_vcells, 2)
        self.vsq = self.v_nodes[:, 0] ** 2 + self.v_nodes[:, 1] ** 2

        if self.dx == 1:
            self.x_nodes = self.x_axis.reshape(-1, 1)
        else:
            X0, X1 = np.meshgrid(self.x_axis, self.x_axis, indexing="ij")
            self.x_nodes = np.column_stack([X0.ravel(), X1.ravel()])

        theta = (np.arange(self.Nomega) + 0.5) * self.domega
        self.omega_nodes = np.column_stack([np.cos(theta), np.sin(theta)])

        # Quadrature weights for one x-cell and one v-cell.
        self.wx = self.dx_cell**self.dx
        self.wv = self.dv_cell**2

    def key(self) -> tuple:
        return (self.dx, self.Lx, self.Nx, self.vmax, self.Nv, self.Nomega)

    def __eq__(self, other) -> bool:
        return isinstance(other, PhaseGrid) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return (
            f"PhaseGrid(dx={self.dx}, Lx={self.Lx}, Nx={self.Nx}, "
            f"vmax={self.vmax}, Nv={self.Nv}, Nomega={self.Nomega})"
        )

    def torus_centered(self, x: np.ndarray) -> np.ndarray:
        """Map torus coordinates to the representative in [-Lx/2, Lx/2)."""
        half = self.Lx / 2.0
        return (x + half) % self.Lx - half


def make_grid(dx: int, Lx: float, Nx: int, vmax: float, Nv: int, Nomega: int) -> PhaseGrid:
    """Build a validated PhaseGrid with precomputed nodes and weights."""
    return PhaseGrid(dx, Lx, Nx, vmax, Nv, Nomega)


@dataclass
class DistributionFunction:
    """Nonnegative density values on a PhaseGrid.

    ``values`` has shape (Nx**dx, Nv**2): flattened x index (row-major) by
    flattened v index (axis-0 outer).
    """

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        expected = (self.grid.n_xcells, self.grid.n_vcells)
        if self.values.shape != expected:
            raise GridError(f"values shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values)):
            raise GridError("values contain non-finite entries")
        if np.any(self.values < 0):
            raise GridError("values contain negative entries")

    @classmethod
    def zeros(cls, grid: PhaseGrid) -> "DistributionFunction":
        return cls(grid, np.zeros((grid.n_xcells, grid.n_vcells)))

    def copy(self) -> "DistributionFunction":
        return _wrap(self.grid, self.values.copy())

    def is_x_uniform(self) -> bool:
        """True when every x-slice is bitwise identical."""
        if self.grid.n_xcells == 1:
            return True
        return bool(np.all(self.values == self.values[0]))


def _wrap(grid: PhaseGrid, values: np.ndarray) -> DistributionFunction:
    """Construct a DistributionFunction skipping validation (internal)."""
    f = object.__new__(DistributionFunction)
    f.grid = grid
    f.values = values
    return f


@dataclass
class MomentVector:
    """Mass, momentum and the unweighted second moment sum(|v|^2 f)."""

    mass: float
    momentum: np.ndarray  # shape (2,)
    energy: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.mass, self.momentum[0], self.momentum[1], self.energy])


def moments(f: DistributionFunction, t: float = 0.0) -> MomentVector:
    """Discrete mass, momentum and energy moment of f.

    Momentum components are accumulated over mirrored node pairs
    (v and -v) so that even-in-v data yields exactly zero momentum.
    """
    g = f.grid
    w = g.wx * g.wv
    vals = f.values.reshape(g.n_xcells, g.Nv, g.Nv)

    mass = float(vals.sum()) * w
    energy = float(np.dot(f.values.sum(axis=0), g.vsq)) * w

    half = g.Nv // 2
    vneg = g.v_axis[:half]  # strictly negative half of the axis
    # axis-0 pairing: rows a and Nv-1-a carry opposite v1
    d0 = vals[:, :half, :] - vals[:, ::-1, :][:, :half, :]
    p1 = float(np.dot(vneg, d0.sum(axis=(0, 2)))) * w
    # axis-1 pairing for v2
    d1 = vals[:, :, :half] - vals[:, :, ::-1][:, :, :half]
    p2 = float(np.dot(d1.sum(axis=(0, 1)), vneg)) * w

    return MomentVector(mass=mass, momentum=np.array([p1, p2]), energy=energy, t=t)


def weighted_norm(f: DistributionFunction, p: float, q: float) -> float:
    """Weighted L1 norm sum((<x>^p + <v>^q) f) with <z> = sqrt(1+|z|^2).

    The spatial factor uses the centered torus representative of x.
    """
    if p < 0 or q < 0:
        raise GridError("weights p, q must be nonnegative")
    g = f.grid
    xc = g.torus_centered(g.x_nodes)
    bx = (1.0 + (xc**2).sum(axis=1)) ** (p / 2.0)  # <x>^p per x node
    bv = (1.0 + g.vsq) ** (q / 2.0)  # <v>^q per v node
    # single full-array reduction so that p=q=0 gives exactly 2*mass
    total = float(((bx[:, None] + bv[None, :]) * f.values).sum())
    return total * g.wx * g.wv


def l1_distance(f: DistributionFunction, g: DistributionFunction) -> float:
    """L1 distance between two distributions on the same grid."""
    if f.grid != g.grid:
        raise GridError("l1_distance requires matching grids")
    return float(np.abs(f.values - g.values).sum()) * f.grid.wx * f.grid.wv
