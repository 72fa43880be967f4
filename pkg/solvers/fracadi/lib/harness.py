import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from jsonschema.exceptions import ValidationError

from solvers.fracadi.lib.adi2d import solve2d
from solvers.fracadi.lib.analysis import (CONSTANT_COEFFICIENT_NOTE, GENERIC_ROW_CELLS,
                                          ConvergenceReport, amplification_sweep_1d,
                                          amplification_sweep_2d, coefficient_audit,
                                          convergence_study, linf_error, truncation_study)
from solvers.fracadi.lib.enums import Command, OutputFormat
from solvers.fracadi.lib.errors import AssemblyError, DivergenceError, OracleConvergenceError
from solvers.fracadi.lib.frac_coeffs import as_order, operator_rows
from solvers.fracadi.lib.registry import ProblemRegistryEntry, get_entry
from solvers.fracadi.lib.reporting import (artifact_name, write_coefficients, write_convergence,
                                           write_summary)
from solvers.fracadi.lib.run_config import MATCH_H, RunConfig
from solvers.fracadi.lib.solver_core import diffusion_scale, solve1d

LOG = logging.getLogger("fracadi.harness")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ORACLE = 4

AUDIT_NOTE = ("Closed forms and tail signs are checked on rows 2..N-2; rows next to the "
              "boundary follow the empty-integral convention and are covered by the row sums.")

STABILITY_TOL = 1e-12


@dataclass
class RunResult:
    exit_code: int
    artifacts: list[Path] = field(default_factory=list)
    results: list = field(default_factory=list)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, OracleConvergenceError):
        return EXIT_ORACLE
    if isinstance(exc, (DivergenceError, AssemblyError)):
        return EXIT_SOLVER
    if isinstance(exc, (ValueError, TypeError, ValidationError, OSError)):
        return EXIT_CONFIG
    raise exc


def _failure_code(reports: list[ConvergenceReport]) -> int:
    kinds = {e.failure_kind for r in reports for e in r.entries if e.failure_kind}
    if "OracleConvergenceError" in kinds:
        return EXIT_ORACLE
    return EXIT_SOLVER if kinds else EXIT_OK


def order_pairs(alphas: list[float], betas: list[float]) -> list[tuple[float, float]]:
    """Pair alpha and beta lists element-wise; a single value pairs with every entry of the other."""
    if len(alphas) == len(betas):
        return list(zip(alphas, betas))
    if len(betas) == 1:
        return [(a, betas[0]) for a in alphas]
    if len(alphas) == 1:
        return [(alphas[0], b) for b in betas]
    raise ValueError(f"Invalid alpha/beta lists {alphas}, {betas}. "
                     "Valid lists have equal length or a single value.")


def _problem(entry: ProblemRegistryEntry, config: RunConfig, alpha: float, beta: Optional[float]):
    problem = entry.make_problem(alpha, beta, oracle_tol=config.oracle_tol)
    if config.t_final is not None:
        problem.t_final = config.t_final
    return problem


def _fixed_dt(config: RunConfig) -> Optional[float]:
    return None if config.dt == MATCH_H else config.dt


def _pde_entry(config: RunConfig, dimension: Optional[int] = None) -> ProblemRegistryEntry:
    entry = get_entry(config.problem)
    if entry.is_operator_test:
        raise ValueError(f"Invalid problem {entry.id} for {config.command.value}: "
                         "it is an operator test, use operator-test.")
    if dimension is not None and entry.dimension != dimension:
        raise ValueError(f"Invalid problem {entry.id} for {config.command.value}: "
                         f"it is {entry.dimension}D.")
    return entry


# Commands

def run_coeffs(config: RunConfig) -> RunResult:
    result = RunResult(EXIT_OK)
    for alpha in config.alphas:
        rows = operator_rows(alpha, config.n)
        result.artifacts.append(write_coefficients(rows, config.out, config.format))
        result.results.append(rows)
    return result


def run_operator_test(config: RunConfig) -> RunResult:
    entry = get_entry(config.problem)
    if not entry.is_operator_test:
        raise ValueError(f"Invalid problem {entry.id} for operator-test. "
                         "Valid problems are table1, table2.")
    lo, hi = entry.domain
    reports = [truncation_study(entry.x_factor, entry.side, alpha, lo, hi, config.h,
                                config.oracle_tol, problem_id=entry.id)
               for alpha in config.alphas]
    artifacts = write_convergence(reports, Command.OPERATOR_TEST.value, entry.id,
                                  config.out, config.format)
    return RunResult(_failure_code(reports), artifacts, reports)


def run_converge(config: RunConfig) -> RunResult:
    entry = get_entry(config.problem)
    if entry.is_operator_test:
        return run_operator_test(config)
    if entry.dimension == 1:
        pairs = [(a, None) for a in config.alphas]
    else:
        pairs = order_pairs(config.alphas, config.betas)
    reports = []
    for alpha, beta in pairs:
        problem = _problem(entry, config, alpha, beta)
        reports.append(convergence_study(problem, config.h, dt=_fixed_dt(config),
                                         threads=config.worker_count))
    artifacts = write_convergence(reports, Command.CONVERGE.value, entry.id,
                                  config.out, config.format)
    return RunResult(_failure_code(reports), artifacts, reports)


def _solve_summary(entry: ProblemRegistryEntry, problem, sol, n: int, alpha: float,
                   beta: Optional[float]) -> dict:
    summary = {"problem": entry.id, "alpha": alpha, "n": n, "dt": sol.dt, "steps": sol.steps,
               "dt_adjusted": sol.dt_adjusted, "t_final": problem.t_final}
    if beta is not None:
        summary["beta"] = beta
    if problem.exact is not None:
        summary["error"] = linf_error(sol.field, problem.exact, problem.t_final)
    return summary


def run_solve1d(config: RunConfig) -> RunResult:
    entry = _pde_entry(config, dimension=1)
    result = RunResult(EXIT_OK)
    for alpha in config.alphas:
        problem = _problem(entry, config, alpha, None)
        dt = _fixed_dt(config) or (problem.x_right - problem.x_left) / config.n
        sol = solve1d(problem, config.n, dt)
        summary = _solve_summary(entry, problem, sol, config.n, alpha, None)
        LOG.info("solve1d %s alpha=%g n=%d error=%s", entry.id, alpha, config.n, summary.get("error"))
        name = artifact_name("solve1d", entry.id, alpha, None, config.format)
        result.artifacts.append(write_summary(summary, config.out / name, config.format))
        if config.dump_field:
            path = config.out / artifact_name("solve1d", entry.id, alpha, None,
                                              OutputFormat.CSV, suffix="_field")
            sol.field.to_csv(path)
            result.artifacts.append(path)
        result.results.append(summary)
    return result


def run_solve2d(config: RunConfig) -> RunResult:
    entry = _pde_entry(config, dimension=2)
    result = RunResult(EXIT_OK)
    for alpha, beta in order_pairs(config.alphas, config.betas):
        problem = _problem(entry, config, alpha, beta)
        dt = _fixed_dt(config) or (problem.x_right - problem.x_left) / config.n
        sol = solve2d(problem, config.n, config.n, dt, threads=config.worker_count)
        summary = _solve_summary(entry, problem, sol, config.n, alpha, beta)
        LOG.info("solve2d %s alpha=%g beta=%g n=%d error=%s", entry.id, alpha, beta,
                 config.n, summary.get("error"))
        name = artifact_name("solve2d", entry.id, alpha, beta, config.format)
        result.artifacts.append(write_summary(summary, config.out / name, config.format))
        if config.dump_field:
            path = config.out / artifact_name("solve2d", entry.id, alpha, beta,
                                              OutputFormat.CSV, suffix="_field")
            sol.field.to_csv(path)
            result.artifacts.append(path)
        result.results.append(summary)
    return result


def run_stability(config: RunConfig) -> RunResult:
    """
    Amplification sweeps with unit constant coefficients on the generic-row grid.

    The time step is config.dt, or the grid spacing under match-h.
    """
    result = RunResult(EXIT_OK)
    dx = 1.0 / GENERIC_ROW_CELLS
    dt = _fixed_dt(config) or dx
    for alpha, beta in order_pairs(config.alphas, config.betas):
        a, b = as_order(alpha), as_order(beta)
        xi = diffusion_scale(a, dx, dt)
        xi_t = diffusion_scale(b, dx, dt)
        gam = dt / (4.0 * dx)
        sweeps = {
            "one_d": amplification_sweep_1d(a.value, xi, xi, gam),
            "two_d": amplification_sweep_2d(a.value, b.value, xi, xi, gam, xi_t, xi_t, gam),
            "two_d_factored": amplification_sweep_2d(a.value, b.value, xi, xi, gam, xi_t, xi_t, gam,
                                                     factored=True),
        }
        worst = max(s.max_magnitude for s in sweeps.values())
        payload = {name: s.to_dict() for name, s in sweeps.items()}
        payload.update({"alpha": a.value, "beta": b.value, "dt": dt, "dx": dx,
                        "max_magnitude": worst, "stable": worst <= 1.0 + STABILITY_TOL,
                        "limitations": CONSTANT_COEFFICIENT_NOTE})
        if not payload["stable"]:
            LOG.warning("Amplification factor %.6g exceeds 1 for alpha=%g beta=%g", worst, alpha, beta)
        name = artifact_name("stability", None, a.value, b.value, config.format)
        result.artifacts.append(write_summary(payload, config.out / name, config.format))
        result.results.append(payload)
    return result


def run_audit(config: RunConfig) -> RunResult:
    result = RunResult(EXIT_OK)
    for alpha in config.alphas:
        report = coefficient_audit(alpha, config.n)
        payload = report.to_dict()
        payload["limitations"] = AUDIT_NOTE
        if not report.passed:
            LOG.warning("Coefficient audit failed for alpha=%g: %s", alpha, report.first_violation)
            result.exit_code = EXIT_SOLVER
        name = artifact_name("audit", None, alpha, None, config.format, suffix=f"_n{config.n}")
        result.artifacts.append(write_summary(payload, config.out / name, config.format))
        result.results.append(report)
    return result


COMMANDS: dict[Command, Callable[[RunConfig], RunResult]] = {
    Command.COEFFS: run_coeffs,
    Command.OPERATOR_TEST: run_operator_test,
    Command.SOLVE1D: run_solve1d,
    Command.SOLVE2D: run_solve2d,
    Command.CONVERGE: run_converge,
    Command.STABILITY: run_stability,
    Command.AUDIT: run_audit,
}


def run(config: RunConfig) -> RunResult:
    """Execute config.command; failures come back as exit codes, never as exceptions."""
    if config.command is None:
        raise RuntimeError("Call read_config before run")
    LOG.info("Running %s (problem=%s, alpha=%s)", config.command.value, config.problem, config.alphas)
    try:
        result = COMMANDS[config.command](config)
    except Exception as exc:
        code = exit_code_for(exc)
        LOG.warning("%s failed: %s", config.command.value, exc)
        return RunResult(code)
    LOG.info("%s finished with exit code %d (%d artifacts)", config.command.value,
             result.exit_code, len(result.artifacts))
    return result
