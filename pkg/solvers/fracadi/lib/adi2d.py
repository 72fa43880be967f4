"""
Peaceman-Rachford ADI for the two-dimensional two-sided fractional
convection-diffusion equation.

One step from t_n to t_{n+1}:

    (1 - dt/2 dx_op) u*      = (1 + dt/2 dy_op) u^n + dt/2 s^{n+1/2}
    (1 - dt/2 dy_op) u^{n+1} = (1 + dt/2 dx_op) u*  + dt/2 s^{n+1/2}

with u* on the x-boundary columns given by the intermediate boundary
condition built from the Dirichlet data at t_n and t_{n+1}.
"""
import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_solve

from solvers.fracadi.lib.errors import DivergenceError
from solvers.fracadi.lib.frac_coeffs import FractionalOrder, OperatorRows, as_order, operator_rows
from solvers.fracadi.lib.grids import Grid2D, ScalarField2D, UniformGrid1D
from solvers.fracadi.lib.solver_core import (check_nonnegative, diffusion_scale, factor_implicit,
                                             half_step_matrix, sample, step_count)

LOG = logging.getLogger("fracadi.adi")

Coefficient2D = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Problem2D:
    x_left: float
    x_right: float
    y_left: float
    y_right: float
    alpha: FractionalOrder
    beta: FractionalOrder
    t_final: float
    d_plus: Coefficient2D
    d_minus: Coefficient2D
    e_plus: Coefficient2D
    e_minus: Coefficient2D
    g: Coefficient2D
    h: Coefficient2D
    source: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    initial: Coefficient2D
    boundary: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    exact: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    name: str = "problem2d"

    def __post_init__(self) -> None:
        self.alpha = as_order(self.alpha)
        self.beta = as_order(self.beta)
        if not (self.x_left < self.x_right and self.y_left < self.y_right):
            raise ValueError("Invalid rectangle: left bounds must be below right bounds")
        if not self.t_final > 0.0:
            raise ValueError(f"Invalid final time {self.t_final}. Valid values are > 0.")

    def grid(self, n_x: int, n_y: int) -> Grid2D:
        return Grid2D(UniformGrid1D(self.x_left, self.x_right, n_x),
                      UniformGrid1D(self.y_left, self.y_right, n_y))


@dataclass(frozen=True, eq=False)
class Solution2D:
    field: ScalarField2D
    steps: int
    dt: float
    dt_adjusted: bool = False


class LineSystems:
    """Factored (1 - dt/2 delta) matrices for every interior grid line of one direction."""

    def __init__(self, rows: OperatorRows, xi: np.ndarray, eta: np.ndarray, gam: np.ndarray,
                 lines: np.ndarray, label: str) -> None:
        # xi, eta, gam have one column per line, one row per node along it
        self.rows = rows
        self.label = label
        self.groups: list[tuple[tuple[np.ndarray, np.ndarray], np.ndarray]] = []
        keyed: dict[bytes, list[int]] = {}
        for line in lines:
            key = b"".join(np.ascontiguousarray(c[:, line]).tobytes() for c in (xi, eta, gam))
            keyed.setdefault(key, []).append(int(line))
        inner = slice(1, rows.n_cells)
        for members in keyed.values():
            first = members[0]
            A = half_step_matrix(rows, xi[inner, first], eta[inner, first], gam[inner, first])
            self.groups.append((factor_implicit(A, where=f"{label} line {first}"),
                                np.asarray(members)))
        LOG.debug("%s systems: %d lines, %d distinct factorizations",
                  label, len(lines), len(self.groups))

    @property
    def n_factorizations(self) -> int:
        return len(self.groups)


@dataclass(eq=False)
class DirectionOperators:
    """
    Per-direction coefficient arrays on the full (N_x+1, N_y+1) mesh and the
    factored line systems; ``apply_x``/``apply_y`` evaluate (dt/2) delta on
    all lines at once.
    """
    dt: float
    grid: Grid2D
    x_rows: OperatorRows
    y_rows: OperatorRows
    xi_x: np.ndarray
    eta_x: np.ndarray
    gam_x: np.ndarray
    xi_y: np.ndarray
    eta_y: np.ndarray
    gam_y: np.ndarray
    x_systems: LineSystems
    y_systems: LineSystems

    def apply_x(self, U: np.ndarray) -> np.ndarray:
        n = self.x_rows.n_cells
        out = np.zeros_like(U)
        inner = slice(1, n)
        out[inner, :] = (self.xi_x[inner, :] * (self.x_rows.left @ U)
                         + self.eta_x[inner, :] * (self.x_rows.right @ U)
                         + self.gam_x[inner, :] * (U[2:, :] - U[:-2, :]))
        return out

    def apply_y(self, U: np.ndarray) -> np.ndarray:
        n = self.y_rows.n_cells
        out = np.zeros_like(U)
        inner = slice(1, n)
        out[:, inner] = (self.xi_y[:, inner] * (U @ self.y_rows.left.T)
                         + self.eta_y[:, inner] * (U @ self.y_rows.right.T)
                         + self.gam_y[:, inner] * (U[:, 2:] - U[:, :-2]))
        return out

    def apply_y_column(self, values: np.ndarray, i: int) -> np.ndarray:
        """(dt/2) delta_y along the single column x = x_i."""
        n = self.y_rows.n_cells
        out = np.zeros_like(values)
        out[1:n] = (self.xi_y[i, 1:n] * (self.y_rows.left @ values)
                    + self.eta_y[i, 1:n] * (self.y_rows.right @ values)
                    + self.gam_y[i, 1:n] * (values[2:] - values[:-2]))
        return out


def build_direction_operators(problem: Problem2D, grid: Grid2D, dt: float) -> DirectionOperators:
    if not dt > 0.0:
        raise ValueError(f"Invalid time step {dt}. Valid values are > 0.")
    if grid.x.n_cells < 3 or grid.y.n_cells < 3:
        raise ValueError(f"Invalid grid {grid.x.n_cells}x{grid.y.n_cells}. Both sizes must be >= 3.")

    X, Y = grid.mesh()
    coeffs = {name: sample(getattr(problem, name), X, Y)
              for name in ("d_plus", "d_minus", "e_plus", "e_minus", "g", "h")}
    for name in ("d_plus", "d_minus", "e_plus", "e_minus"):
        check_nonnegative(name, coeffs[name].ravel(), list(zip(X.ravel(), Y.ravel())))

    x_rows = operator_rows(problem.alpha, grid.x.n_cells)
    y_rows = operator_rows(problem.beta, grid.y.n_cells)
    sx = diffusion_scale(problem.alpha, grid.x.spacing, dt)
    sy = diffusion_scale(problem.beta, grid.y.spacing, dt)

    xi_x, eta_x = sx * coeffs["d_plus"], sx * coeffs["d_minus"]
    gam_x = dt * coeffs["g"] / (4.0 * grid.x.spacing)
    xi_y, eta_y = sy * coeffs["e_plus"], sy * coeffs["e_minus"]
    gam_y = dt * coeffs["h"] / (4.0 * grid.y.spacing)

    # x-lines are indexed by j, y-lines by i
    x_systems = LineSystems(x_rows, xi_x, eta_x, gam_x, np.arange(1, grid.y.n_cells), "x")
    y_systems = LineSystems(y_rows, xi_y.T, eta_y.T, gam_y.T, np.arange(1, grid.x.n_cells), "y")
    return DirectionOperators(dt, grid, x_rows, y_rows, xi_x, eta_x, gam_x,
                              xi_y, eta_y, gam_y, x_systems, y_systems)


def _map(fn, items, executor: Optional[Executor]) -> list:
    if executor is None or len(items) < 2:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def intermediate_boundary(b_now: np.ndarray, b_next: np.ndarray,
                          ops: DirectionOperators) -> np.ndarray:
    """
    u* on the columns i = 0 and i = N_x.

    b_now, b_next hold the Dirichlet data along those two columns at t_n and
    t_{n+1}, shape (2, N_y+1), corners included.
    """
    out = np.empty_like(b_now, dtype=float)
    for row, i in enumerate((0, ops.grid.x.n_cells)):
        Bn, Bn1 = b_now[row], b_next[row]
        out[row] = 0.5 * ((Bn1 - ops.apply_y_column(Bn1, i)) + (Bn + ops.apply_y_column(Bn, i)))
        # y-edge entries are not used by either sweep
        out[row, 0] = 0.5 * (Bn[0] + Bn1[0])
        out[row, -1] = 0.5 * (Bn[-1] + Bn1[-1])
    return out


def sweep_x(u_n: ScalarField2D, t_n: float, dt: float, ops: DirectionOperators,
            source_mid: np.ndarray, star_boundary: np.ndarray, step: int = 0,
            executor: Optional[Executor] = None) -> ScalarField2D:
    U = u_n.values
    rhs = U + ops.apply_y(U) + 0.5 * dt * source_mid
    star = np.empty_like(U)
    n_x = ops.grid.x.n_cells

    def solve(group):
        factors, js = group
        b = rhs[:, js].copy()
        b[0, :] = star_boundary[0, js]
        b[n_x, :] = star_boundary[1, js]
        return js, lu_solve(factors, b, check_finite=False)

    for js, sol in _map(solve, ops.x_systems.groups, executor):
        if not np.all(np.isfinite(sol)):
            bad = js[np.argmax(~np.all(np.isfinite(sol), axis=0))]
            raise DivergenceError(step, int(bad), "row")
        star[:, js] = sol
    star[0, :] = star_boundary[0]
    star[n_x, :] = star_boundary[1]
    # y-edge rows of u* never enter sweep_y
    star[1:n_x, 0] = U[1:n_x, 0]
    star[1:n_x, -1] = U[1:n_x, -1]
    return ScalarField2D(u_n.grid_x, u_n.grid_y, star)


def sweep_y(u_star: ScalarField2D, t_n: float, dt: float, ops: DirectionOperators,
            source_mid: np.ndarray, boundary_next: np.ndarray, step: int = 0,
            executor: Optional[Executor] = None) -> ScalarField2D:
    """Second half step; boundary_next holds the Dirichlet data at t_{n+1} on the mesh edges."""
    S = u_star.values
    rhs = S + ops.apply_x(S) + 0.5 * dt * source_mid
    new = boundary_next.astype(float, copy=True)
    n_y = ops.grid.y.n_cells

    def solve(group):
        factors, is_ = group
        b = rhs[is_, :].T.copy()
        b[0, :] = boundary_next[is_, 0]
        b[n_y, :] = boundary_next[is_, n_y]
        return is_, lu_solve(factors, b, check_finite=False)

    for is_, sol in _map(solve, ops.y_systems.groups, executor):
        if not np.all(np.isfinite(sol)):
            bad = is_[np.argmax(~np.all(np.isfinite(sol), axis=0))]
            raise DivergenceError(step, int(bad), "column")
        new[is_, :] = sol.T
    return ScalarField2D(u_star.grid_x, u_star.grid_y, new)


def boundary_edges(boundary: Callable[[np.ndarray, np.ndarray, float], np.ndarray], grid: Grid2D,
                   t: float) -> np.ndarray:
    """Dirichlet data on the four edges of the mesh at time t; interior entries are zero."""
    x, y = grid.x.nodes, grid.y.nodes
    out = np.zeros(grid.shape)
    for i in (0, grid.x.n_cells):
        out[i, :] = sample(boundary, np.full_like(y, x[i]), y, t)
    for j in (0, grid.y.n_cells):
        out[1:-1, j] = sample(boundary, x[1:-1], np.full_like(x[1:-1], y[j]), t)
    return out


def adi_step(u: ScalarField2D, t_n: float, problem: Problem2D, ops: DirectionOperators,
             step: int = 0, executor: Optional[Executor] = None) -> ScalarField2D:
    dt = ops.dt
    X, Y = ops.grid.mesh()
    n_x = ops.grid.x.n_cells
    source_mid = sample(problem.source, X, Y, t_n + 0.5 * dt)
    b_now = boundary_edges(problem.boundary, ops.grid, t_n)
    b_next = boundary_edges(problem.boundary, ops.grid, t_n + dt)
    star_cols = intermediate_boundary(b_now[[0, n_x], :], b_next[[0, n_x], :], ops)
    star = sweep_x(u, t_n, dt, ops, source_mid, star_cols, step, executor)
    return sweep_y(star, t_n, dt, ops, source_mid, b_next, step, executor)


def solve2d(problem: Problem2D, n_x: int, n_y: int, dt: float, threads: int = 1) -> Solution2D:
    grid = problem.grid(n_x, n_y)
    steps, dt_used, adjusted = step_count(problem.t_final, dt)
    if adjusted:
        LOG.warning("dt=%g does not divide t_final=%g; using dt=%.12g (%d steps)",
                    dt, problem.t_final, dt_used, steps)

    ops = build_direction_operators(problem, grid, dt_used)
    X, Y = grid.mesh()
    U = sample(problem.initial, X, Y)
    b0 = boundary_edges(problem.boundary, grid, 0.0)
    U[0, :], U[-1, :], U[:, 0], U[:, -1] = b0[0, :], b0[-1, :], b0[:, 0], b0[:, -1]
    u = ScalarField2D(grid.x, grid.y, U)

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in range(steps):
            u = adi_step(u, n * dt_used, problem, ops, step=n + 1, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    LOG.debug("solve2d %s %dx%d finished after %d steps", problem.name, n_x, n_y, steps)
    return Solution2D(u, steps, dt_used, adjusted)
