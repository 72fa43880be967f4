import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from solvers.fracadi.lib.adi2d import Problem2D, solve2d
from solvers.fracadi.lib.enums import Side
from solvers.fracadi.lib.errors import FracAdiError
from solvers.fracadi.lib.frac_coeffs import OperatorRows, as_order, closed_forms, operator_rows
from solvers.fracadi.lib.frac_operators import AnalyticFunction1D, apply_spline, rl_quadrature
from solvers.fracadi.lib.grids import ScalarField1D, ScalarField2D, UniformGrid1D
from solvers.fracadi.lib.solver_core import Problem1D, solve1d

LOG = logging.getLogger("fracadi.analysis")

CONSTANT_COEFFICIENT_NOTE = ("Fourier sweeps certify constant coefficients only; "
                             "variable-coefficient stability is observed empirically.")


# Errors and orders

def linf_error(numeric: ScalarField1D | ScalarField2D, exact: Callable, t: float) -> float:
    if isinstance(numeric, ScalarField2D):
        X, Y = numeric.grid.mesh()
        ref = np.broadcast_to(np.asarray(exact(X, Y, t), dtype=float), X.shape)
    else:
        x = numeric.grid.nodes
        ref = np.broadcast_to(np.asarray(exact(x, t), dtype=float), x.shape)
    return float(np.max(np.abs(numeric.values - ref)))


def observed_orders(h_values: Sequence[float], errors: Sequence[Optional[float]]) -> list[Optional[float]]:
    """log(e_{k-1}/e_k) / log(h_{k-1}/h_k); None for the first entry or a missing/non-positive error."""
    orders: list[Optional[float]] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 is None or e1 is None or e0 <= 0.0 or e1 <= 0.0:
            orders.append(None)
            continue
        orders.append(math.log(e0 / e1) / math.log(h_values[k - 1] / h_values[k]))
    return orders


def check_halving(h_values: Sequence[float]) -> None:
    if len(h_values) < 1:
        raise ValueError("At least one step size is required")
    for h0, h1 in zip(h_values, h_values[1:]):
        if abs(h0 / h1 - 2.0) > 1e-9:
            raise ValueError(f"Invalid step sequence {list(h_values)}. Each h must halve the previous one.")


@dataclass
class ConvergenceEntry:
    h: float
    error: Optional[float] = None
    order: Optional[float] = None
    steps: Optional[int] = None
    dt: Optional[float] = None
    failure: Optional[str] = None
    failure_kind: Optional[str] = None


@dataclass
class ConvergenceReport:
    problem_id: str
    alpha: float
    beta: Optional[float]
    dt_rule: str
    entries: list[ConvergenceEntry] = field(default_factory=list)

    @property
    def errors(self) -> list[Optional[float]]:
        return [e.error for e in self.entries]

    @property
    def orders(self) -> list[Optional[float]]:
        return [e.order for e in self.entries]

    def to_dict(self) -> dict:
        return asdict(self)


def _fill_orders(report: ConvergenceReport) -> ConvergenceReport:
    orders = observed_orders([e.h for e in report.entries], report.errors)
    for entry, order in zip(report.entries, orders):
        entry.order = order
    return report


def _run_entry(problem: Problem1D | Problem2D, h: float, dt: Optional[float],
               threads: int) -> ConvergenceEntry:
    step = h if dt is None else dt
    try:
        if isinstance(problem, Problem2D):
            gx = UniformGrid1D.from_spacing(problem.x_left, problem.x_right, h)
            gy = UniformGrid1D.from_spacing(problem.y_left, problem.y_right, h)
            sol = solve2d(problem, gx.n_cells, gy.n_cells, step, threads=threads)
        else:
            grid = UniformGrid1D.from_spacing(problem.x_left, problem.x_right, h)
            sol = solve1d(problem, grid.n_cells, step)
    except FracAdiError as exc:
        LOG.warning("Study entry h=%g failed: %s", h, exc)
        return ConvergenceEntry(h, failure=str(exc), failure_kind=type(exc).__name__)
    err = linf_error(sol.field, problem.exact, problem.t_final)
    LOG.info("%s h=%g error=%.4e steps=%d", problem.name, h, err, sol.steps)
    return ConvergenceEntry(h, err, steps=sol.steps, dt=sol.dt)


def convergence_study(problem: Problem1D | Problem2D, h_values: Sequence[float],
                      dt: Optional[float] = None, threads: int = 1) -> ConvergenceReport:
    """
    Solve once per h and tabulate l-infinity errors at t_final.

    dt=None ties the time step to the spacing (dt = h). With threads > 1 the
    entries run concurrently; the report is identical either way.
    """
    check_halving(h_values)
    if problem.exact is None:
        raise ValueError(f"Problem {problem.name} has no exact solution")
    beta = problem.beta.value if isinstance(problem, Problem2D) else None
    report = ConvergenceReport(problem.name, problem.alpha.value, beta,
                               "match-h" if dt is None else f"{dt!r}")
    if threads > 1 and len(h_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            report.entries = list(pool.map(lambda h: _run_entry(problem, h, dt, 1), h_values))
    else:
        report.entries = [_run_entry(problem, h, dt, threads) for h in h_values]
    return _fill_orders(report)


def truncation_study(function: AnalyticFunction1D, side: Side, alpha: float,
                     x_left: float, x_right: float, h_values: Sequence[float],
                     tol: float = 1e-10, problem_id: str = "operator") -> ConvergenceReport:
    """Max interior deviation of the spline operator from the quadrature oracle, per h."""
    check_halving(h_values)
    report = ConvergenceReport(problem_id, as_order(alpha).value, None, "none")
    for h in h_values:
        grid = UniformGrid1D.from_spacing(x_left, x_right, h)
        field_ = ScalarField1D.sample(grid, function.f)
        approx = apply_spline(field_, alpha, side)
        try:
            ref = rl_quadrature(function, alpha, grid.interior, grid, side, tol)
        except FracAdiError as exc:
            report.entries.append(ConvergenceEntry(h, failure=str(exc), failure_kind=type(exc).__name__))
            continue
        report.entries.append(ConvergenceEntry(h, float(np.max(np.abs(approx - ref)))))
    return _fill_orders(report)


# Von Neumann amplification

GENERIC_ROW_CELLS = 512


def generic_row(alpha: float, n_cells: int = GENERIC_ROW_CELLS) -> tuple[np.ndarray, np.ndarray, int]:
    """(p_{j,.}, q_{j,.}) over all columns for the deep interior row j = N/2."""
    rows = operator_rows(alpha, n_cells)
    j = n_cells // 2
    return rows.left[j - 1], rows.right[j - 1], j


def _symbol(theta: np.ndarray, alpha: float, xi: float, eta: float, gam: float,
            n_cells: int) -> np.ndarray:
    p, q, j = generic_row(alpha, n_cells)
    phase = np.exp(1j * np.outer(theta, np.arange(n_cells + 1) - j))
    return xi * (phase @ p) + eta * (phase @ q) + gam * (np.exp(1j * theta) - np.exp(-1j * theta))


def amplification_1d(omega, alpha: float, xi: float, eta: float, gam: float,
                     dx: float = 1.0 / GENERIC_ROW_CELLS, n_cells: int = GENERIC_ROW_CELLS):
    """|1 + Z| / |1 - Z| for the CN step with constant xi, eta, gamma."""
    theta = np.atleast_1d(np.asarray(omega, dtype=float)) * dx
    Z = _symbol(theta, as_order(alpha).value, xi, eta, gam, n_cells)
    mag = np.abs(1.0 + Z) / np.abs(1.0 - Z)
    return float(mag[0]) if np.ndim(omega) == 0 else mag


def amplification_2d(omega, alpha: float, beta: float, xi: float, eta: float, gam: float,
                     xi_t: float, eta_t: float, gam_t: float, omega_y=None,
                     dx: float = 1.0 / GENERIC_ROW_CELLS, dy: float = 1.0 / GENERIC_ROW_CELLS,
                     n_cells: int = GENERIC_ROW_CELLS, factored: bool = False):
    """
    Amplification of the unsplit 2D CN step, |1 + Zx + Zy| / |1 - Zx - Zy|.

    ``factored=True`` gives the ADI product |(1 + Zx)(1 + Zy)| / |(1 - Zx)(1 - Zy)|.
    omega_y defaults to omega.
    """
    wx = np.atleast_1d(np.asarray(omega, dtype=float))
    wy = wx if omega_y is None else np.atleast_1d(np.asarray(omega_y, dtype=float))
    Zx = _symbol(wx * dx, as_order(alpha).value, xi, eta, gam, n_cells)
    Zy = _symbol(wy * dy, as_order(beta).value, xi_t, eta_t, gam_t, n_cells)
    if factored:
        mag = np.abs((1.0 + Zx) * (1.0 + Zy)) / np.abs((1.0 - Zx) * (1.0 - Zy))
    else:
        mag = np.abs(1.0 + Zx + Zy) / np.abs(1.0 - Zx - Zy)
    return float(mag[0]) if np.ndim(omega) == 0 else mag


@dataclass
class AmplificationSweep:
    omega: np.ndarray
    magnitudes: np.ndarray
    max_magnitude: float
    parameters: dict

    def to_dict(self) -> dict:
        return {
            "parameters": self.parameters,
            "max_magnitude": self.max_magnitude,
            "n_samples": int(self.omega.size),
            "limitations": CONSTANT_COEFFICIENT_NOTE,
        }


def omega_samples(dx: float, n_omega: int = 1024) -> np.ndarray:
    return 2.0 * np.pi / dx * np.arange(n_omega) / n_omega


def amplification_sweep_1d(alpha: float, xi: float, eta: float, gam: float,
                           n_omega: int = 1024, n_cells: int = GENERIC_ROW_CELLS) -> AmplificationSweep:
    dx = 1.0 / n_cells
    omega = omega_samples(dx, n_omega)
    mags = amplification_1d(omega, alpha, xi, eta, gam, dx=dx, n_cells=n_cells)
    params = {"alpha": float(alpha), "xi": xi, "eta": eta, "gamma": gam}
    return AmplificationSweep(omega, mags, float(np.max(mags)), params)


def amplification_sweep_2d(alpha: float, beta: float, xi: float, eta: float, gam: float,
                           xi_t: float, eta_t: float, gam_t: float, n_omega: int = 1024,
                           n_cells: int = GENERIC_ROW_CELLS, factored: bool = False) -> AmplificationSweep:
    dx = 1.0 / n_cells
    omega = omega_samples(dx, n_omega)
    mags = amplification_2d(omega, alpha, beta, xi, eta, gam, xi_t, eta_t, gam_t,
                            dx=dx, dy=dx, n_cells=n_cells, factored=factored)
    params = {"alpha": float(alpha), "beta": float(beta), "xi": xi, "eta": eta, "gamma": gam,
              "xi_tilde": xi_t, "eta_tilde": eta_t, "gamma_tilde": gam_t, "factored": factored}
    return AmplificationSweep(omega, mags, float(np.max(mags)), params)


# Coefficient audit

@dataclass(frozen=True)
class AuditViolation:
    check: str
    row: int
    column: Optional[int]
    value: float
    expected: str


@dataclass
class AuditReport:
    alpha: float
    n_cells: int
    violations: list[AuditViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> Optional[AuditViolation]:
        return self.violations[0] if self.violations else None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_cells": self.n_cells,
            "passed": self.passed,
            "first_violation": None if self.passed else asdict(self.first_violation),
            "n_violations": len(self.violations),
        }


def coefficient_audit(alpha: float, n_cells: int, rows: Optional[OperatorRows] = None,
                      rtol: float = 1e-12) -> AuditReport:
    """
    Check sign, closed-form and transpose properties of the p/q tables.

    Per-entry checks run first (closed forms and tail signs on rows 2..N-2,
    then the transpose identity), row sums last, so a single corrupted entry is
    reported at its own (i, k).
    """
    order = as_order(alpha)
    if n_cells < 4:
        raise ValueError(f"Invalid number of cells {n_cells}. Valid values are >= 4.")
    rows = rows if rows is not None else operator_rows(order, n_cells)
    P, Q = rows.left, rows.right
    report = AuditReport(order.value, n_cells)
    found = report.violations.append
    forms = closed_forms(order)

    def close(value: float, target: float) -> bool:
        return abs(value - target) <= rtol * max(1.0, abs(target))

    for i in range(2, n_cells - 1):
        p, q = P[i - 1], Q[i - 1]
        spots = ((p, i + 1, "outer"), (p, i, "diagonal"), (p, i - 1, "inner"),
                 (q, i - 1, "outer"), (q, i, "diagonal"), (q, i + 1, "inner"))
        for table, k, name in spots:
            if not close(table[k], forms[name]):
                found(AuditViolation(f"closed-form {'p' if table is p else 'q'} {name}", i, k,
                                     float(table[k]), f"{forms[name]!r}"))
        for k in range(0, i - 1):
            if not p[k] > 0.0:
                found(AuditViolation("tail p", i, k, float(p[k]), "> 0"))
        for k in range(i + 2, n_cells + 1):
            if not q[k] > 0.0:
                found(AuditViolation("tail q", i, k, float(q[k]), "> 0"))

    # q_{i,k} against p_{k,i} on interior columns
    for i in range(1, n_cells):
        for k in range(1, n_cells):
            if not close(Q[i - 1, k], P[k - 1, i]):
                found(AuditViolation("transpose", i, k, float(Q[i - 1, k]), f"{P[k - 1, i]!r}"))

    for i in range(1, n_cells):
        sp, sq = float(P[i - 1].sum()), float(Q[i - 1].sum())
        if not sp < 0.0:
            found(AuditViolation("sum p", i, None, sp, "< 0"))
        if not sq < 0.0:
            found(AuditViolation("sum q", i, None, sq, "< 0"))

    if report.passed:
        LOG.debug("Coefficient audit passed alpha=%s n_cells=%d", order.value, n_cells)
    else:
        LOG.debug("Coefficient audit failed alpha=%s n_cells=%d: %s",
                  order.value, n_cells, report.first_violation)
    return report
