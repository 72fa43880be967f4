from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from solvers.fracadi.lib.adi2d import Problem2D
from solvers.fracadi.lib.frac_coeffs import as_order
from solvers.fracadi.lib.frac_operators import rl_quadrature_left, rl_quadrature_right
from solvers.fracadi.lib.grids import UniformGrid1D
from solvers.fracadi.lib.registry import (Coefficients, ProblemRegistryEntry, SeparableForcing,
                                          build_forcing, get_entry, powerlaw_forcing, registry)
from solvers.fracadi.lib.solver_core import Problem1D


SAMPLES = np.linspace(0.0, 1.0, 11)


def test_registry_lists_all_problems():
    """Operator tests and PDE problems are all registered."""
    ids = {entry.id for entry in registry()}
    assert ids == {"table1", "table2", "cd1d", "cd2d-twosided", "cd2d-onesided", "powerlaw-1d"}


def test_unknown_problem_raises():
    """Unknown ids are rejected with the list of valid ones."""
    with pytest.raises(ValueError, match="cd1d"):
        get_entry("cd3d")


def test_operator_tests_have_no_pde():
    """table1 and table2 carry a side, not a problem."""
    entry = get_entry("table1")
    assert entry.is_operator_test
    with pytest.raises(ValueError):
        entry.make_problem(1.5)


def test_make_problem_types():
    """1D entries build Problem1D, 2D entries Problem2D with beta defaulting to alpha."""
    assert isinstance(get_entry("cd1d").make_problem(1.5), Problem1D)
    problem = get_entry("cd2d-twosided").make_problem(1.3)
    assert isinstance(problem, Problem2D)
    assert problem.beta.value == 1.3


def test_cd1d_initial_value():
    """u(0.5, 0) = sin(1)^2."""
    problem = get_entry("cd1d").make_problem(1.5)
    assert problem.initial(np.array([0.5]))[0] == pytest.approx(0.70807, abs=1e-5)
    assert problem.boundary_left(0.3) == 0.0
    assert problem.boundary_right(0.3) == pytest.approx(0.0, abs=1e-15)


def test_one_sided_boundary_is_nonzero():
    """u(1, y, t) = exp(-t) sin(1) sin(y^4)."""
    problem = get_entry("cd2d-onesided").make_problem(1.5, 1.5)
    y = np.linspace(0.0, 1.0, 7)
    values = problem.boundary(np.ones_like(y), y, 0.4)
    np.testing.assert_allclose(values, np.exp(-0.4) * np.sin(1.0) * np.sin(y ** 4), rtol=1e-14)


@pytest.mark.parametrize("problem_id", ["cd1d", "powerlaw-1d"])
def test_one_dimensional_callbacks_agree_with_exact(problem_id):
    """Initial and boundary callbacks equal the exact solution to 1e-12."""
    problem = get_entry(problem_id).make_problem(1.5)
    np.testing.assert_allclose(problem.initial(SAMPLES), problem.exact(SAMPLES, 0.0), atol=1e-12)
    for t in (0.0, 0.37, 1.0):
        assert problem.boundary_left(t) == pytest.approx(float(problem.exact(0.0, t)), abs=1e-12)
        assert problem.boundary_right(t) == pytest.approx(float(problem.exact(1.0, t)), abs=1e-12)


@pytest.mark.parametrize("problem_id", ["cd2d-twosided", "cd2d-onesided"])
def test_two_dimensional_callbacks_agree_with_exact(problem_id):
    """Initial and boundary callbacks equal the exact solution on the edges."""
    problem = get_entry(problem_id).make_problem(1.6, 1.4)
    X, Y = np.meshgrid(SAMPLES, SAMPLES, indexing="ij")
    np.testing.assert_allclose(problem.initial(X, Y), problem.exact(X, Y, 0.0), atol=1e-12)
    edge = np.zeros_like(SAMPLES)
    for x, y in ((edge, SAMPLES), (edge + 1.0, SAMPLES), (SAMPLES, edge), (SAMPLES, edge + 1.0)):
        np.testing.assert_allclose(problem.boundary(x, y, 0.6), problem.exact(x, y, 0.6), atol=1e-12)


def test_forcing_vanishes_without_operators():
    """With zero coefficients the forcing reduces to -exp(-t) X on interior nodes."""
    factor = get_entry("table2").x_factor
    zero = lambda x: 0.0 * x
    entry = ProblemRegistryEntry("zero", 1, "time derivative only", "-", factor,
                                 coefficients=lambda a, b=None: Coefficients(zero, zero, zero))
    grid = UniformGrid1D(0.0, 1.0, 10)
    forcing = build_forcing(entry, grid, alpha=1.5)
    x = grid.nodes
    values = forcing(x, 0.5)
    np.testing.assert_allclose(values[1:-1], -np.exp(-0.5) * factor.f(x[1:-1]), rtol=1e-14)
    assert values[0] == 0.0 and values[-1] == 0.0


@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
def test_power_law_oracle_forcing_matches_closed_form(alpha):
    """Oracle-built forcing agrees with the closed-form power-law profile."""
    grid = UniformGrid1D(0.0, 1.0, 16)
    forcing = build_forcing(get_entry("powerlaw-1d"), grid, 1e-12, alpha=alpha)
    np.testing.assert_allclose(forcing(grid.nodes, 0.0), powerlaw_forcing(alpha, grid), atol=1e-9)


def test_cd1d_forcing_combines_all_terms():
    """At one interior node the forcing is -X - d+ DL X - d- DR X - g X'."""
    entry = get_entry("cd1d")
    grid = UniformGrid1D(0.0, 1.0, 8)
    forcing = build_forcing(entry, grid, alpha=1.7)
    problem = entry.make_problem(1.7)
    x = grid.nodes[3]
    X = entry.x_factor
    expect = (-X.f(x)
              - problem.d_plus(x) * rl_quadrature_left(X, 1.7, x, 0.0)
              - problem.d_minus(x) * rl_quadrature_right(X, 1.7, x, 1.0)
              - problem.g(x) * X.f1(x))
    assert forcing(grid.nodes, 0.0)[3] == pytest.approx(expect, rel=1e-8)


def test_forcing_profiles_are_cached():
    """The spatial profile is built once per grid and rescaled in time."""
    grid = UniformGrid1D(0.0, 1.0, 12)
    forcing = build_forcing(get_entry("powerlaw-1d"), grid, alpha=1.5)
    first = forcing(grid.nodes, 0.0)
    later = forcing(grid.nodes, 1.0)
    assert len(forcing._profiles) == 1
    np.testing.assert_allclose(later, np.exp(-1.0) * first, rtol=1e-15)


def test_two_dimensional_forcing_is_zero_on_edges():
    """The solver never reads boundary forcing; it is stored as zero."""
    gx = UniformGrid1D(0.0, 1.0, 6)
    forcing = build_forcing(get_entry("cd2d-onesided"), (gx, gx), alpha=1.5, beta=1.5)
    X, Y = np.meshgrid(gx.nodes, gx.nodes, indexing="ij")
    values = forcing(X, Y, 0.0)
    assert np.all(values[0] == 0.0) and np.all(values[-1] == 0.0)
    assert np.all(values[:, 0] == 0.0) and np.all(values[:, -1] == 0.0)
    assert np.all(np.isfinite(values[1:-1, 1:-1]))


def test_concurrent_factor_terms_share_one_result():
    """Threads asking for the same oracle terms all receive the one cached copy."""
    entry = get_entry("powerlaw-1d")
    order = as_order(1.5)
    forcing = SeparableForcing(entry, order, None, entry.coefficients(order), 1e-10)
    nodes = UniformGrid1D(0.0, 1.0, 10).nodes
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: forcing.factor_terms(entry.x_factor, order, nodes, True, True),
                                range(8)))
    assert all(r is results[0] for r in results)
    assert len(forcing._factor_terms) == 1
