"""
Benchmark problems with manufactured solutions u = exp(-t) X(x) [Y(y)] and
the forcing builder that turns them into solver inputs.
"""
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

from solvers.fracadi.lib.adi2d import Problem2D
from solvers.fracadi.lib.enums import Side
from solvers.fracadi.lib.errors import OracleConvergenceError
from solvers.fracadi.lib.frac_coeffs import FractionalOrder, as_order
from solvers.fracadi.lib.frac_operators import (AnalyticFunction1D, rl_power_left, rl_power_right,
                                                rl_quadrature_left, rl_quadrature_right)
from solvers.fracadi.lib.grids import UniformGrid1D
from solvers.fracadi.lib.solver_core import Problem1D, sample

LOG = logging.getLogger("fracadi.registry")

DEFAULT_TOL = 1e-10


# Spatial factors

def _sin_quartic() -> AnalyticFunction1D:
    # sin(x^4)
    return AnalyticFunction1D(
        f=lambda x: np.sin(x ** 4),
        f1=lambda x: 4.0 * x ** 3 * np.cos(x ** 4),
        f2=lambda x: 12.0 * x ** 2 * np.cos(x ** 4) - 16.0 * x ** 6 * np.sin(x ** 4),
    )


def _sin_quartic_reflected() -> AnalyticFunction1D:
    # sin((1-x)^4)
    return AnalyticFunction1D(
        f=lambda x: np.sin((1.0 - x) ** 4),
        f1=lambda x: -4.0 * (1.0 - x) ** 3 * np.cos((1.0 - x) ** 4),
        f2=lambda x: (12.0 * (1.0 - x) ** 2 * np.cos((1.0 - x) ** 4)
                      - 16.0 * (1.0 - x) ** 6 * np.sin((1.0 - x) ** 4)),
    )


def _bump() -> AnalyticFunction1D:
    """sin((2x)^4) sin((2-2x)^4)."""
    def parts(x):
        a, b = 16.0 * x ** 4, 16.0 * (1.0 - x) ** 4
        da, db = 64.0 * x ** 3, -64.0 * (1.0 - x) ** 3
        dda, ddb = 192.0 * x ** 2, 192.0 * (1.0 - x) ** 2
        return np.sin(a), np.cos(a), np.sin(b), np.cos(b), da, db, dda, ddb

    def f(x):
        sa, _, sb, _, *_ = parts(x)
        return sa * sb

    def f1(x):
        sa, ca, sb, cb, da, db, _, _ = parts(x)
        return da * ca * sb + db * sa * cb

    def f2(x):
        sa, ca, sb, cb, da, db, dda, ddb = parts(x)
        return ((dda * ca - da ** 2 * sa) * sb + 2.0 * da * db * ca * cb
                + (ddb * cb - db ** 2 * sb) * sa)

    return AnalyticFunction1D(f, f1, f2)


# x^3 (1-x)^3 as a polynomial; symmetric under x -> 1-x
POWERLAW_TERMS = {3: 1.0, 4: -3.0, 5: 3.0, 6: -1.0}


def _powerlaw() -> AnalyticFunction1D:
    return AnalyticFunction1D(
        f=lambda x: x ** 3 * (1.0 - x) ** 3,
        f1=lambda x: 3.0 * x ** 2 - 12.0 * x ** 3 + 15.0 * x ** 4 - 6.0 * x ** 5,
        f2=lambda x: 6.0 * x - 36.0 * x ** 2 + 60.0 * x ** 3 - 30.0 * x ** 4,
    )


def powerlaw_left(alpha: float, x: float) -> float:
    return sum(c * rl_power_left(p, alpha, x, 0.0) for p, c in POWERLAW_TERMS.items())


def powerlaw_right(alpha: float, x: float) -> float:
    return sum(c * rl_power_right(p, alpha, x, 1.0) for p, c in POWERLAW_TERMS.items())


# Coefficient sets: each maps orders to vectorised callbacks

@dataclass(frozen=True)
class Coefficients:
    d_plus: Callable
    d_minus: Callable
    g: Callable
    e_plus: Optional[Callable] = None
    e_minus: Optional[Callable] = None
    h: Optional[Callable] = None


def _const(c: float) -> Callable:
    return lambda *xs: np.full(np.shape(xs[0]), c, dtype=float)


def _two_sided_1d(alpha: FractionalOrder, beta=None) -> Coefficients:
    ga = gamma(3.0 - alpha.value)
    return Coefficients(d_plus=lambda x: ga * x ** alpha.value,
                        d_minus=lambda x: ga * (2.0 - x) ** alpha.value,
                        g=lambda x: 0.25 * x)


def _two_sided_2d(alpha: FractionalOrder, beta: FractionalOrder) -> Coefficients:
    ga, gb = gamma(3.0 - alpha.value), gamma(3.0 - beta.value)
    return Coefficients(d_plus=lambda x, y: ga * x ** alpha.value + 0.0 * y,
                        d_minus=lambda x, y: ga * (2.0 - x) ** alpha.value + 0.0 * y,
                        g=lambda x, y: 0.25 * x + 0.0 * y,
                        e_plus=lambda x, y: gb * y ** beta.value + 0.0 * x,
                        e_minus=lambda x, y: gb * (2.0 - y) ** beta.value + 0.0 * x,
                        h=lambda x, y: 0.25 * y + 0.0 * x)


def _one_sided_2d(alpha: FractionalOrder, beta: FractionalOrder) -> Coefficients:
    return Coefficients(d_plus=_const(1.0), d_minus=_const(0.0), g=_const(1.0),
                        e_plus=_const(1.0), e_minus=_const(0.0), h=_const(1.0))


def _powerlaw_coefficients(alpha: FractionalOrder, beta=None) -> Coefficients:
    return Coefficients(d_plus=_const(1.0), d_minus=_const(1.0), g=_const(0.5))


@dataclass(frozen=True)
class ProblemRegistryEntry:
    id: str
    dimension: int
    description: str
    table: str
    x_factor: AnalyticFunction1D
    y_factor: Optional[AnalyticFunction1D] = None
    coefficients: Optional[Callable[..., Coefficients]] = None
    side: Optional[Side] = None
    domain: tuple[float, float] = (0.0, 1.0)
    t_final: float = 1.0

    @property
    def is_operator_test(self) -> bool:
        return self.side is not None

    def exact(self, *args):
        """exp(-t) X(x) in 1D, exp(-t) X(x) Y(y) in 2D."""
        if self.dimension == 1:
            x, t = args
            return np.exp(-t) * self.x_factor.f(x)
        x, y, t = args
        return np.exp(-t) * self.x_factor.f(x) * self.y_factor.f(y)

    def make_problem(self, alpha: float, beta: Optional[float] = None,
                     oracle_tol: float = DEFAULT_TOL) -> Problem1D | Problem2D:
        if self.is_operator_test:
            raise ValueError(f"Problem {self.id} is an operator test, not a PDE problem")
        a = as_order(alpha)
        lo, hi = self.domain
        if self.dimension == 1:
            coeffs = self.coefficients(a)
            forcing = SeparableForcing(self, a, None, coeffs, oracle_tol)
            return Problem1D(lo, hi, a, self.t_final, coeffs.d_plus, coeffs.d_minus, coeffs.g,
                             source=forcing,
                             initial=lambda x: self.exact(x, 0.0),
                             boundary_left=lambda t: float(self.exact(lo, t)),
                             boundary_right=lambda t: float(self.exact(hi, t)),
                             exact=self.exact, name=self.id)
        b = as_order(beta if beta is not None else alpha)
        coeffs = self.coefficients(a, b)
        forcing = SeparableForcing(self, a, b, coeffs, oracle_tol)
        return Problem2D(lo, hi, lo, hi, a, b, self.t_final,
                         coeffs.d_plus, coeffs.d_minus, coeffs.e_plus, coeffs.e_minus,
                         coeffs.g, coeffs.h, source=forcing,
                         initial=lambda x, y: self.exact(x, y, 0.0),
                         boundary=self.exact, exact=self.exact, name=self.id)


class SeparableForcing:
    """
    Source term for u = exp(-t) X(x) [Y(y)].

    Spatial profiles are built once per grid from oracle derivatives of the
    factors and then scaled by exp(-t). Boundary nodes carry zero: the solvers
    never read the source there.
    """

    def __init__(self, entry: ProblemRegistryEntry, alpha: FractionalOrder,
                 beta: Optional[FractionalOrder], coeffs: Coefficients, tol: float) -> None:
        self.entry = entry
        self.alpha = alpha
        self.beta = beta
        self.coeffs = coeffs
        self.tol = tol
        self._profiles: dict[tuple, np.ndarray] = {}
        self._factor_terms: dict[tuple, dict[str, np.ndarray]] = {}
        self._lock = threading.Lock()

    def __call__(self, *args) -> np.ndarray:
        t = args[-1]
        if self.entry.dimension == 1:
            x = np.asarray(args[0], dtype=float)
            key = ("x", x.size, float(x[0]), float(x[-1]))
            build = lambda: self._profile_1d(x)
        else:
            X, Y = np.asarray(args[0], dtype=float), np.asarray(args[1], dtype=float)
            key = ("xy", X.shape, float(X[0, 0]), float(X[-1, 0]), float(Y[0, 0]), float(Y[0, -1]))
            build = lambda: self._profile_2d(X[:, 0], Y[0, :])
        with self._lock:
            profile = self._profiles.get(key)
        if profile is None:
            profile = build()
            with self._lock:
                profile = self._profiles.setdefault(key, profile)
        return np.exp(-t) * profile

    def factor_terms(self, factor: AnalyticFunction1D, order: FractionalOrder, nodes: np.ndarray,
                     left: bool, right: bool) -> dict[str, np.ndarray]:
        """
        Left/right oracle derivatives and first derivative of one factor on the interior nodes.

        Concurrent first calls may each compute the terms; every caller gets the first stored copy.
        """
        key = (id(factor), order.value, nodes.size, float(nodes[0]), float(nodes[-1]), left, right)
        with self._lock:
            cached = self._factor_terms.get(key)
        if cached is not None:
            return cached
        lo, hi = nodes[0], nodes[-1]
        inner = nodes[1:-1]
        terms = {"f": factor.f(inner), "f1": factor.f1(inner),
                 "left": np.zeros_like(inner), "right": np.zeros_like(inner)}
        for idx, x in enumerate(inner):
            try:
                if left:
                    terms["left"][idx] = rl_quadrature_left(factor, order, float(x), float(lo), self.tol)
                if right:
                    terms["right"][idx] = rl_quadrature_right(factor, order, float(x), float(hi), self.tol)
            except OracleConvergenceError as exc:
                LOG.debug("Oracle failed for %s at x=%g", self.entry.id, x)
                raise exc.at(float(x)) from None
        with self._lock:
            return self._factor_terms.setdefault(key, terms)

    def _profile_1d(self, x: np.ndarray) -> np.ndarray:
        inner = x[1:-1]
        dp = sample(self.coeffs.d_plus, inner)
        dm = sample(self.coeffs.d_minus, inner)
        g = sample(self.coeffs.g, inner)
        T = self.factor_terms(self.entry.x_factor, self.alpha, x, bool(np.any(dp)), bool(np.any(dm)))
        profile = np.zeros_like(x)
        profile[1:-1] = -T["f"] - dp * T["left"] - dm * T["right"] - g * T["f1"]
        LOG.debug("Built 1D forcing profile for %s on %d nodes", self.entry.id, x.size)
        return profile

    def _profile_2d(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        Xi, Yi = np.meshgrid(x[1:-1], y[1:-1], indexing="ij")
        c = {name: sample(getattr(self.coeffs, name), Xi, Yi)
             for name in ("d_plus", "d_minus", "g", "e_plus", "e_minus", "h")}
        TX = self.factor_terms(self.entry.x_factor, self.alpha, x,
                               bool(np.any(c["d_plus"])), bool(np.any(c["d_minus"])))
        TY = self.factor_terms(self.entry.y_factor, self.beta, y,
                               bool(np.any(c["e_plus"])), bool(np.any(c["e_minus"])))
        fx, fy = TX["f"][:, None], TY["f"][None, :]
        interior = (-fx * fy
                    - c["d_plus"] * TX["left"][:, None] * fy
                    - c["d_minus"] * TX["right"][:, None] * fy
                    - c["g"] * TX["f1"][:, None] * fy
                    - c["e_plus"] * fx * TY["left"][None, :]
                    - c["e_minus"] * fx * TY["right"][None, :]
                    - c["h"] * fx * TY["f1"][None, :])
        profile = np.zeros((x.size, y.size))
        profile[1:-1, 1:-1] = interior
        LOG.debug("Built 2D forcing profile for %s on %dx%d nodes", self.entry.id, x.size, y.size)
        return profile


def build_forcing(entry: ProblemRegistryEntry, grids, oracle_tol: float = DEFAULT_TOL,
                  alpha: float = 1.5, beta: Optional[float] = None) -> SeparableForcing:
    """
    Forcing sampler for a registry problem with profiles precomputed on grids.

    grids is a UniformGrid1D (1D) or an (x, y) pair of UniformGrid1D (2D).
    """
    a = as_order(alpha)
    if entry.dimension == 1:
        forcing = SeparableForcing(entry, a, None, entry.coefficients(a), oracle_tol)
        x = grids.nodes
        forcing(x, 0.0)
        return forcing
    b = as_order(beta if beta is not None else alpha)
    forcing = SeparableForcing(entry, a, b, entry.coefficients(a, b), oracle_tol)
    gx, gy = grids
    X, Y = np.meshgrid(gx.nodes, gy.nodes, indexing="ij")
    forcing(X, Y, 0.0)
    return forcing


def powerlaw_forcing(alpha: float, grid: UniformGrid1D) -> np.ndarray:
    """Closed-form spatial forcing profile of powerlaw-1d (the exp(-t) factor removed)."""
    a = as_order(alpha)
    coeffs = _powerlaw_coefficients(a)
    x = grid.nodes
    inner = x[1:-1]
    X = _powerlaw()
    left = np.array([powerlaw_left(a, float(xi)) for xi in inner])
    right = np.array([powerlaw_right(a, float(xi)) for xi in inner])
    profile = np.zeros_like(x)
    profile[1:-1] = (-X.f(inner) - sample(coeffs.d_plus, inner) * left
                     - sample(coeffs.d_minus, inner) * right - sample(coeffs.g, inner) * X.f1(inner))
    return profile


_CHECK_POINTS = np.linspace(0.0, 1.0, 9)[1:-1]


def _build_registry() -> dict[str, ProblemRegistryEntry]:
    bump = _bump()
    entries = [
        ProblemRegistryEntry("table1", 1, "Right spline operator on sin((1-x)^4)",
                             "right operator errors", _sin_quartic_reflected(), side=Side.RIGHT),
        ProblemRegistryEntry("table2", 1, "Left spline operator on sin(x^4)",
                             "left operator errors", _sin_quartic(), side=Side.LEFT),
        ProblemRegistryEntry("cd1d", 1, "1D two-sided convection-diffusion, "
                             "u = exp(-t) sin((2x)^4) sin((2-2x)^4)",
                             "1D solver errors", bump, coefficients=_two_sided_1d),
        ProblemRegistryEntry("cd2d-twosided", 2, "2D two-sided convection-diffusion, "
                             "u = exp(-t) X(x) X(y) with X = sin((2s)^4) sin((2-2s)^4)",
                             "2D two-sided solver errors", bump, y_factor=bump, coefficients=_two_sided_2d),
        ProblemRegistryEntry("cd2d-onesided", 2, "2D one-sided convection-diffusion, "
                             "u = exp(-t) sin(x^4) sin(y^4)",
                             "2D one-sided solver errors", _sin_quartic(), y_factor=_sin_quartic(),
                             coefficients=_one_sided_2d),
        ProblemRegistryEntry("powerlaw-1d", 1, "1D cross-check, u = exp(-t) x^3 (1-x)^3 "
                             "with closed-form derivatives", "-", _powerlaw(),
                             coefficients=_powerlaw_coefficients),
    ]
    for entry in entries:
        for factor in {id(f): f for f in (entry.x_factor, entry.y_factor) if f is not None}.values():
            factor.check_consistency(_CHECK_POINTS)
    return {entry.id: entry for entry in entries}


_REGISTRY: Optional[dict[str, ProblemRegistryEntry]] = None
_REGISTRY_LOCK = threading.Lock()


def registry() -> list[ProblemRegistryEntry]:
    global _REGISTRY
    with _REGISTRY_LOCK:
        if _REGISTRY is None:
            _REGISTRY = _build_registry()
            LOG.debug("Loaded %d registry problems", len(_REGISTRY))
    return list(_REGISTRY.values())


def get_entry(problem_id: str) -> ProblemRegistryEntry:
    entries = {e.id: e for e in registry()}
    if problem_id not in entries:
        raise ValueError(f"Invalid problem id {problem_id!r}. Valid values are {sorted(entries)}.")
    return entries[problem_id]
