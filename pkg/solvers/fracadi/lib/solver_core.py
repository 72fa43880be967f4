import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.special import gamma

from solvers.fracadi.lib.errors import AssemblyError, DivergenceError
from solvers.fracadi.lib.frac_coeffs import FractionalOrder, OperatorRows, as_order, operator_rows
from solvers.fracadi.lib.grids import ScalarField1D, UniformGrid1D

LOG = logging.getLogger("fracadi.solver")

Coefficient = Callable[[np.ndarray], np.ndarray]


def sample(fn: Callable, *args) -> np.ndarray:
    """Evaluate a vectorised callback, broadcasting scalar results to the argument shape."""
    shape = np.broadcast_shapes(*(a.shape for a in args if isinstance(a, np.ndarray)))
    return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape).copy()


@dataclass
class Problem1D:
    x_left: float
    x_right: float
    alpha: FractionalOrder
    t_final: float
    d_plus: Coefficient
    d_minus: Coefficient
    g: Coefficient
    source: Callable[[np.ndarray, float], np.ndarray]
    initial: Coefficient
    boundary_left: Callable[[float], float]
    boundary_right: Callable[[float], float]
    exact: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = "problem1d"

    def __post_init__(self) -> None:
        self.alpha = as_order(self.alpha)
        if not self.x_left < self.x_right:
            raise ValueError(f"Invalid domain ({self.x_left}, {self.x_right})")
        if not self.t_final > 0.0:
            raise ValueError(f"Invalid final time {self.t_final}. Valid values are > 0.")

    def grid(self, n_cells: int) -> UniformGrid1D:
        return UniformGrid1D(self.x_left, self.x_right, n_cells)


@dataclass(frozen=True, eq=False)
class CNSystem:
    matrix_minus: tuple[np.ndarray, np.ndarray]
    matrix_plus: np.ndarray
    grid: UniformGrid1D
    dt: float
    operator: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class Solution1D:
    field: ScalarField1D
    steps: int
    dt: float
    dt_adjusted: bool = False


def diffusion_scale(order: FractionalOrder, dx: float, dt: float) -> float:
    """dt / (2 Gamma(4 - alpha) dx^alpha), the factor in front of d+ and d-."""
    return dt / (2.0 * gamma(4.0 - order.value) * dx ** order.value)


def check_nonnegative(name: str, values: np.ndarray, nodes) -> None:
    if np.any(values < 0.0):
        at = np.asarray(nodes)[np.argmin(values)]
        raise ValueError(f"Invalid diffusion coefficient {name}: negative value {values.min():.6g} at {at}")


def half_step_matrix(rows: OperatorRows, xi: np.ndarray, eta: np.ndarray,
                     gam: np.ndarray) -> np.ndarray:
    """
    A for one grid line: interior row i holds xi_i p_{i,.} + eta_i q_{i,.} plus
    the central convection stencil (+gam_i at i+1, -gam_i at i-1); boundary rows are zero.

    xi, eta, gam are given on the interior nodes 1..N-1.
    """
    n = rows.n_cells
    A = np.zeros((n + 1, n + 1))
    A[1:n, :] = xi[:, None] * rows.left + eta[:, None] * rows.right
    idx = np.arange(1, n)
    A[idx, idx + 1] += gam
    A[idx, idx - 1] -= gam
    return A


def factor_implicit(A: np.ndarray, where: str = "line") -> tuple[np.ndarray, np.ndarray]:
    """LU of (I - A) with identity boundary rows."""
    M = np.eye(A.shape[0]) - A
    M[0, :] = 0.0
    M[-1, :] = 0.0
    M[0, 0] = 1.0
    M[-1, -1] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    if not np.all(np.isfinite(lu)) or np.any(diag == 0.0):
        raise AssemblyError("Singular implicit matrix", where)
    return lu, piv


def assemble(problem: Problem1D, grid: UniformGrid1D, dt: float) -> CNSystem:
    if not dt > 0.0:
        raise ValueError(f"Invalid time step {dt}. Valid values are > 0.")
    if grid.n_cells < 3:
        raise ValueError(f"Invalid grid with {grid.n_cells} cells. Valid grids have >= 3 cells.")

    x = grid.nodes
    dp = sample(problem.d_plus, x)
    dm = sample(problem.d_minus, x)
    g = sample(problem.g, x)
    check_nonnegative("d_plus", dp, x)
    check_nonnegative("d_minus", dm, x)

    order = problem.alpha
    rows = operator_rows(order, grid.n_cells)
    scale = diffusion_scale(order, grid.spacing, dt)
    inner = slice(1, grid.n_cells)
    A = half_step_matrix(rows, scale * dp[inner], scale * dm[inner],
                         dt * g[inner] / (4.0 * grid.spacing))

    factors = factor_implicit(A, where="1D system")
    plus = np.eye(grid.n_cells + 1) + A
    LOG.debug("Assembled CN system n_cells=%d dt=%g", grid.n_cells, dt)
    return CNSystem(factors, plus, grid, dt, A)


def cn_step(system: CNSystem, u: ScalarField1D, t_n: float, problem: Problem1D,
            step: int = 0) -> ScalarField1D:
    dt = system.dt
    x = system.grid.nodes
    t_next = t_n + dt
    rhs = system.matrix_plus @ u.values + dt * sample(problem.source, x, t_n + 0.5 * dt)
    rhs[0] = problem.boundary_left(t_next)
    rhs[-1] = problem.boundary_right(t_next)
    new = lu_solve(system.matrix_minus, rhs, check_finite=False)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(step)
    return ScalarField1D(system.grid, new)


def step_count(t_final: float, dt: float) -> tuple[int, float, bool]:
    """Number of steps reaching t_final, shrinking dt when it does not divide t_final."""
    if not dt > 0.0:
        raise ValueError(f"Invalid time step {dt}. Valid values are > 0.")
    ratio = t_final / dt
    steps = int(round(ratio))
    if steps >= 1 and abs(ratio - steps) <= 1e-9 * ratio:
        return steps, dt, False
    steps = max(1, math.ceil(ratio))
    return steps, t_final / steps, True


def solve1d(problem: Problem1D, n_cells: int, dt: float) -> Solution1D:
    grid = problem.grid(n_cells)
    steps, dt_used, adjusted = step_count(problem.t_final, dt)
    if adjusted:
        LOG.warning("dt=%g does not divide t_final=%g; using dt=%.12g (%d steps)",
                    dt, problem.t_final, dt_used, steps)

    system = assemble(problem, grid, dt_used)
    u = ScalarField1D.sample(grid, problem.initial)
    for n in range(steps):
        u = cn_step(system, u, n * dt_used, problem, step=n + 1)
    LOG.debug("solve1d %s n_cells=%d finished after %d steps", problem.name, n_cells, steps)
    return Solution1D(u, steps, dt_used, adjusted)
