from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class UniformGrid1D:
    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self) -> None:
        if isinstance(self.n_cells, bool) or not isinstance(self.n_cells, (int, np.integer)):
            raise TypeError(f"Invalid type {type(self.n_cells)}. Valid types are int")
        if self.n_cells < 1:
            raise ValueError(f"Invalid number of cells {self.n_cells}. Valid values are >= 1.")
        if not float(self.x_left) < float(self.x_right):
            raise ValueError(f"Invalid interval [{self.x_left}, {self.x_right}]. x_left must be < x_right.")
        object.__setattr__(self, "x_left", float(self.x_left))
        object.__setattr__(self, "x_right", float(self.x_right))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @classmethod
    def from_spacing(cls, x_left: float, x_right: float, h: float) -> "UniformGrid1D":
        """Grid whose spacing is h, rejecting h that does not divide the interval."""
        ratio = (x_right - x_left) / h
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"Invalid spacing {h}. It must divide [{x_left}, {x_right}] evenly.")
        return cls(x_left, x_right, n)

    @property
    def spacing(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        # x_i = x_L + i*dx
        return self.x_left + self.spacing * np.arange(self.n_cells + 1, dtype=float)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


@dataclass(frozen=True)
class Grid2D:
    x: UniformGrid1D
    y: UniformGrid1D

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x.n_cells + 1, self.y.n_cells + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates with entry (i, j) at (x_i, y_j)."""
        return np.meshgrid(self.x.nodes, self.y.nodes, indexing="ij")


@dataclass(frozen=True, eq=False)
class ScalarField1D:
    grid: UniformGrid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_cells + 1,):
            raise ValueError(f"Invalid field length {vals.shape}. Expected ({self.grid.n_cells + 1},)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("Field values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, grid: UniformGrid1D, fn) -> "ScalarField1D":
        x = grid.nodes
        return cls(grid, np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy())

    def to_csv(self, path: str | Path) -> None:
        data = np.column_stack([self.grid.nodes, self.values])
        np.savetxt(path, data, delimiter=",", header="x,u", comments="", fmt="%.17g")


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    grid_x: UniformGrid1D
    grid_y: UniformGrid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        shape = (self.grid_x.n_cells + 1, self.grid_y.n_cells + 1)
        if vals.shape != shape:
            raise ValueError(f"Invalid field shape {vals.shape}. Expected {shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("Field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.grid_x, self.grid_y)

    def to_csv(self, path: str | Path) -> None:
        # one line per y index
        np.savetxt(path, self.values.T, delimiter=",", fmt="%.17g")
