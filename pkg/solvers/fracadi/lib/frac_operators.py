"""
Spline fractional-derivative operators on uniform grids and the independent
oracles used to check them and to build manufactured forcing terms.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from solvers.fracadi.lib.enums import Side
from solvers.fracadi.lib.errors import OracleConvergenceError
from solvers.fracadi.lib.frac_coeffs import FractionalOrder, as_order, operator_rows
from solvers.fracadi.lib.grids import ScalarField1D, UniformGrid1D

LOG = logging.getLogger("fracadi.operators")

Fn = Callable[[np.ndarray], np.ndarray]

GAUSS_ORDER = 32
MAX_PANELS = 4096


@dataclass(frozen=True)
class AnalyticFunction1D:
    f: Fn
    f1: Fn
    f2: Fn

    def __call__(self, x):
        return self.f(x)

    def check_consistency(self, points, step: float = 1e-5, atol: float = 1e-6) -> None:
        """
        Compare f1, f2 against central differences of f and f1.

        The tolerance is relative: atol * max(1, max|exact derivative|) over the points.

        Raises:
            ValueError: if a derivative callback disagrees with its difference quotient.
        """
        x = np.asarray(points, dtype=float)
        d1 = (self.f(x + step) - self.f(x - step)) / (2.0 * step)
        d2 = (self.f1(x + step) - self.f1(x - step)) / (2.0 * step)
        for name, fd, exact in (("f1", d1, self.f1(x)), ("f2", d2, self.f2(x))):
            # difference quotients lose digits on steep functions
            tol = atol * np.maximum(1.0, np.max(np.abs(exact)))
            bad = np.abs(fd - exact) > tol
            if np.any(bad):
                at = float(x[np.argmax(bad)])
                raise ValueError(f"Derivative callback {name} inconsistent with f at x={at:.6g}")


def _check_spline_grid(u: ScalarField1D) -> None:
    if u.grid.n_cells < 2:
        raise ValueError(f"Invalid grid with {u.grid.n_cells} cells. Valid grids have >= 2 cells.")


def spline_scale(order: FractionalOrder, dx: float) -> float:
    return 1.0 / (gamma(4.0 - order.value) * dx ** order.value)


def apply_left_spline(u: ScalarField1D, alpha: "float | FractionalOrder") -> np.ndarray:
    """Left spline derivative at the interior nodes 1..N-1."""
    _check_spline_grid(u)
    order = as_order(alpha)
    rows = operator_rows(order, u.grid.n_cells)
    return spline_scale(order, u.grid.spacing) * (rows.left @ u.values)


def apply_right_spline(u: ScalarField1D, alpha: "float | FractionalOrder") -> np.ndarray:
    """Right spline derivative at the interior nodes 1..N-1."""
    _check_spline_grid(u)
    order = as_order(alpha)
    rows = operator_rows(order, u.grid.n_cells)
    return spline_scale(order, u.grid.spacing) * (rows.right @ u.values)


def apply_spline(u: ScalarField1D, alpha: "float | FractionalOrder", side: Side) -> np.ndarray:
    if side == Side.LEFT:
        return apply_left_spline(u, alpha)
    return apply_right_spline(u, alpha)


def hat_interpolant(u: ScalarField1D, xi) -> np.ndarray:
    """Piecewise-linear interpolant of the nodal values, evaluated at xi."""
    return np.interp(np.asarray(xi, dtype=float), u.grid.nodes, u.values)


# Grunwald-Letnikov

def gl_weights(alpha: "float | FractionalOrder", n: int) -> np.ndarray:
    """(-1)^i C(alpha, i) for i = 0..n."""
    a = as_order(alpha).value
    w = np.empty(n + 1)
    w[0] = 1.0
    for i in range(1, n + 1):
        w[i] = w[i - 1] * (i - 1 - a) / i
    return w


def _gl_count(span: float, h: float) -> int:
    if h <= 0.0:
        raise ValueError(f"Invalid step {h}. Valid steps are > 0.")
    ratio = span / h
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"Invalid step {h}: distance {span} is not a positive integer multiple of it.")
    return m


def gl_left(f: Fn, x: float, h: float, alpha: "float | FractionalOrder", x_left: float) -> float:
    order = as_order(alpha)
    m = _gl_count(x - x_left, h)
    w = gl_weights(order, m)
    return float(h ** -order.value * np.dot(w, f(x - h * np.arange(m + 1))))


def gl_right(f: Fn, x: float, h: float, alpha: "float | FractionalOrder", x_right: float) -> float:
    order = as_order(alpha)
    m = _gl_count(x_right - x, h)
    w = gl_weights(order, m)
    return float(h ** -order.value * np.dot(w, f(x + h * np.arange(m + 1))))


# Power laws

def _power_factor(p: float, order: FractionalOrder) -> float:
    if p <= -1.0:
        raise ValueError(f"Invalid exponent {p}. Valid exponents are > -1.")
    arg = p + 1.0 - order.value
    if arg <= 0.0 and float(arg).is_integer():
        raise ValueError(f"Invalid exponent {p}: Gamma({arg}) is a pole.")
    return gamma(p + 1.0) / gamma(arg)


def rl_power_left(p: float, alpha: "float | FractionalOrder", x: float, x_left: float) -> float:
    order = as_order(alpha)
    if not x > x_left:
        raise ValueError(f"Invalid point {x}. It must lie right of x_left={x_left}.")
    return float(_power_factor(p, order) * (x - x_left) ** (p - order.value))


def rl_power_right(p: float, alpha: "float | FractionalOrder", x: float, x_right: float) -> float:
    order = as_order(alpha)
    if not x < x_right:
        raise ValueError(f"Invalid point {x}. It must lie left of x_right={x_right}.")
    return float(_power_factor(p, order) * (x_right - x) ** (p - order.value))


# Weakly singular quadrature

@lru_cache(maxsize=32)
def _jacobi_rule(n: int, nu: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 + t)^nu on [-1, 1]
    return roots_jacobi(n, 0.0, nu)


@lru_cache(maxsize=8)
def _legendre_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(n)


def _panel_integral(g: Fn, length: float, nu: float, panels: int, n: int) -> float:
    """int_0^length s^nu g(s) ds with a Gauss-Jacobi panel at s = 0."""
    h = length / panels
    tj, wj = _jacobi_rule(n, nu)
    total = (0.5 * h) ** (nu + 1.0) * np.dot(wj, g(0.5 * h * (1.0 + tj)))
    if panels > 1:
        tl, wl = _legendre_rule(n)
        starts = h * np.arange(1, panels)[:, None]
        s = starts + 0.5 * h * (1.0 + tl)[None, :]
        total += 0.5 * h * np.sum(wl[None, :] * s ** nu * g(s))
    return float(total)


def weakly_singular_integral(g: Fn, length: float, nu: float, tol: float,
                             n: int = GAUSS_ORDER, max_panels: int = MAX_PANELS) -> float:
    """
    Integrate s^nu g(s) over [0, length] for -1 < nu < 0.

    The panel count is doubled until two successive estimates agree to
    tol * max(1, |estimate|), so tol is absolute for integrals of size at most
    one and relative above that.

    Raises:
        OracleConvergenceError: when max_panels is exceeded.
    """
    if length <= 0.0:
        return 0.0
    panels = 1
    prev = _panel_integral(g, length, nu, panels, n)
    while panels < max_panels:
        panels *= 2
        cur = _panel_integral(g, length, nu, panels, n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            LOG.debug("Quadrature converged with %d panels", panels)
            return cur
        prev = cur
    raise OracleConvergenceError(prev, tol, panels=panels)


def rl_quadrature_left(u: AnalyticFunction1D, alpha: "float | FractionalOrder", x: float,
                       x_left: float, tol: float = 1e-10) -> float:
    """
    Left derivative of u at x from the second-derivative transfer formula.

    tol is passed to weakly_singular_integral and bounds the integral to
    tol * max(1, |integral|); the boundary terms are exact.
    """
    order = as_order(alpha)
    a = order.value
    if not x > x_left:
        raise ValueError(f"Invalid point {x}. It must lie right of x_left={x_left}.")
    L = x - x_left
    try:
        integral = weakly_singular_integral(lambda s: u.f2(x - s), L, 1.0 - a, tol)
    except OracleConvergenceError as exc:
        raise exc.at(x) from None
    return float(integral / gamma(2.0 - a)
                 + u.f(x_left) * L ** -a / gamma(1.0 - a)
                 + u.f1(x_left) * L ** (1.0 - a) / gamma(2.0 - a))


def rl_quadrature_right(u: AnalyticFunction1D, alpha: "float | FractionalOrder", x: float,
                        x_right: float, tol: float = 1e-10) -> float:
    """
    Right derivative of u at x; mirror of rl_quadrature_left with E = -d/dx.

    Successive estimates of the integral agree to tol * max(1, |integral|).
    """
    order = as_order(alpha)
    a = order.value
    if not x < x_right:
        raise ValueError(f"Invalid point {x}. It must lie left of x_right={x_right}.")
    L = x_right - x
    try:
        integral = weakly_singular_integral(lambda s: u.f2(x + s), L, 1.0 - a, tol)
    except OracleConvergenceError as exc:
        raise exc.at(x) from None
    return float(integral / gamma(2.0 - a)
                 + u.f(x_right) * L ** -a / gamma(1.0 - a)
                 - u.f1(x_right) * L ** (1.0 - a) / gamma(2.0 - a))


def rl_quadrature(u: AnalyticFunction1D, alpha: "float | FractionalOrder", points,
                  grid: UniformGrid1D, side: Side, tol: float = 1e-10) -> np.ndarray:
    """Oracle values at several points strictly inside the grid interval."""
    if side == Side.LEFT:
        vals = [rl_quadrature_left(u, alpha, float(x), grid.x_left, tol) for x in points]
    else:
        vals = [rl_quadrature_right(u, alpha, float(x), grid.x_right, tol) for x in points]
    return np.asarray(vals, dtype=float)
