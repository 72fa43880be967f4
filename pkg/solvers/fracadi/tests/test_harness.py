import csv
import json

import pytest

from solvers.fracadi import app
from solvers.fracadi.lib import analysis, harness
from solvers.fracadi.lib.errors import DivergenceError, OracleConvergenceError
from solvers.fracadi.lib.harness import (EXIT_CONFIG, EXIT_OK, EXIT_ORACLE, EXIT_SOLVER, order_pairs,
                                         run)
from solvers.fracadi.lib.run_config import RunConfig


def make_config(tmp_path, **overrides) -> RunConfig:
    cfg = RunConfig().read_config()
    cfg.apply_overrides({"out": str(tmp_path), **overrides})
    return cfg


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_order_pairs():
    """Equal-length lists zip; a single value is broadcast; anything else is an error."""
    assert order_pairs([1.1, 1.6], [1.1, 1.4]) == [(1.1, 1.1), (1.6, 1.4)]
    assert order_pairs([1.1, 1.9], [1.5]) == [(1.1, 1.5), (1.9, 1.5)]
    assert order_pairs([1.5], [1.2, 1.3]) == [(1.5, 1.2), (1.5, 1.3)]
    with pytest.raises(ValueError):
        order_pairs([1.1, 1.2], [1.3, 1.4, 1.5])


def test_run_requires_loaded_config():
    """A config that was never read cannot run."""
    with pytest.raises(RuntimeError):
        run(RunConfig())


def test_coeffs_csv(tmp_path):
    """One record per nonzero p and q entry."""
    result = run(make_config(tmp_path, command="coeffs", alphas="1.5", n=8))
    assert result.exit_code == EXIT_OK
    [path] = result.artifacts
    assert path.name == "coeffs_a1.5_n8.csv"
    rows = read_csv(path)
    assert list(rows[0]) == ["side", "i", "k", "value"]
    assert len(rows) == sum((i + 2) + (8 - i + 2) for i in range(1, 8))
    first = rows[0]
    assert (first["side"], first["i"], first["k"]) == ("left", "1", "0")


def test_audit_json(tmp_path):
    """The audit passes and reports its limitation."""
    result = run(make_config(tmp_path, command="audit", alphas="1.1,1.9", n=16, format="json"))
    assert result.exit_code == EXIT_OK
    assert [p.name for p in result.artifacts] == ["audit_a1.1_n16.json", "audit_a1.9_n16.json"]
    payload = json.loads(result.artifacts[0].read_text())
    assert payload["passed"] is True
    assert "rows 2..N-2" in payload["limitations"]


def test_audit_failure_maps_to_solver_exit(tmp_path, monkeypatch):
    """A failed audit exits with the solver code."""
    real = analysis.coefficient_audit

    def failing(alpha, n_cells):
        report = real(alpha, n_cells)
        report.violations.append(analysis.AuditViolation("sum p", 3, None, 0.1, "< 0"))
        return report

    monkeypatch.setattr(harness, "coefficient_audit", failing)
    result = run(make_config(tmp_path, command="audit", alphas="1.5", n=8))
    assert result.exit_code == EXIT_SOLVER


def test_stability_json(tmp_path):
    """Every sweep is at or below one and the limitations are stated."""
    result = run(make_config(tmp_path, command="stability", alphas="1.1,1.9", betas="1.3,1.7",
                             format="json", dt=0.5))
    assert result.exit_code == EXIT_OK
    assert [p.name for p in result.artifacts] == ["stability_a1.1_b1.3.json", "stability_a1.9_b1.7.json"]
    for path in result.artifacts:
        payload = json.loads(path.read_text())
        assert payload["stable"] is True
        assert payload["max_magnitude"] <= 1.0 + 1e-12
        assert payload["two_d_factored"]["parameters"]["factored"] is True
        assert "constant coefficients" in payload["limitations"]


def test_operator_test_csv(tmp_path):
    """Left operator errors with the CSV columns h, error, order."""
    result = run(make_config(tmp_path, command="operator-test", problem="table2", alphas="1.5",
                             h="1/50,1/100"))
    assert result.exit_code == EXIT_OK
    [path] = result.artifacts
    assert path.name == "operator-test_table2_a1.5.csv"
    rows = read_csv(path)
    assert list(rows[0]) == ["h", "error", "order"]
    assert float(rows[0]["error"]) == pytest.approx(2.4122e-2, rel=0.05)
    assert rows[0]["order"] == "-"
    assert float(rows[1]["order"]) == pytest.approx(1.8937, abs=0.05)


def test_converge_delegates_operator_problems(tmp_path):
    """converge on an operator test runs the operator study."""
    result = run(make_config(tmp_path, command="converge", problem="table1", alphas="1.5", h="1/50"))
    assert result.exit_code == EXIT_OK
    assert result.artifacts[0].name == "operator-test_table1_a1.5.csv"


def test_converge_cd1d_csv(tmp_path):
    """1D convection-diffusion errors at t = 1 with dt = h."""
    result = run(make_config(tmp_path, command="converge", problem="cd1d", alphas="1.5",
                             h="1/50,1/100"))
    assert result.exit_code == EXIT_OK
    rows = read_csv(result.artifacts[0])
    assert float(rows[0]["error"]) == pytest.approx(1.9815e-3, rel=0.1)
    assert float(rows[1]["error"]) == pytest.approx(5.0092e-4, rel=0.1)
    assert float(rows[1]["order"]) == pytest.approx(2.0, abs=0.1)


def test_converge_markdown_has_one_column_pair_per_order(tmp_path):
    """Markdown tables put each alpha side by side."""
    result = run(make_config(tmp_path, command="converge", problem="powerlaw-1d", alphas="1.2,1.8",
                             h="1/8,1/16", format="md"))
    text = result.artifacts[0].read_text()
    assert "alpha=1.2 error" in text and "alpha=1.8 error" in text
    assert "| 1/16 |" in text


def test_converge_is_deterministic_across_threads(tmp_path):
    """Sequential and threaded runs write byte-identical JSON."""
    one = run(make_config(tmp_path / "one", command="converge", problem="powerlaw-1d", alphas="1.5",
                          h="1/8,1/16,1/32", format="json", threads=1))
    four = run(make_config(tmp_path / "four", command="converge", problem="powerlaw-1d", alphas="1.5",
                           h="1/8,1/16,1/32", format="json", threads=4))
    assert one.artifacts[0].read_bytes() == four.artifacts[0].read_bytes()


def test_solve2d_summary_and_field(tmp_path):
    """A 2D solve at dx = dt = 1/25 reports the reference error and dumps the field."""
    result = run(make_config(tmp_path, command="solve2d", problem="cd2d-twosided", alphas="1.1",
                             betas="1.1", n=25, format="json", dump_field=True))
    assert result.exit_code == EXIT_OK
    summary_path, field_path = result.artifacts
    summary = json.loads(summary_path.read_text())
    assert summary["steps"] == 25
    assert summary["error"] == pytest.approx(9.5946e-3, rel=0.1)
    assert field_path.name == "solve2d_cd2d-twosided_a1.1_b1.1_field.csv"
    assert len(field_path.read_text().splitlines()) == 26


def test_solve1d_with_shorter_final_time(tmp_path):
    """The t_final override shortens the run."""
    result = run(make_config(tmp_path, command="solve1d", problem="cd1d", alphas="1.5", n=20,
                             t_final=0.5, dump_field=True))
    assert result.exit_code == EXIT_OK
    summary = result.results[0]
    assert summary["t_final"] == 0.5
    assert summary["steps"] == 10
    assert read_csv(result.artifacts[1])[0].keys() == {"x", "u"}


@pytest.mark.parametrize("command, problem", [
    ("converge", "cd3d"),
    ("solve1d", "table1"),
    ("solve1d", "cd2d-onesided"),
    ("solve2d", "cd1d"),
    ("operator-test", "cd1d"),
])
def test_bad_problem_is_config_error(tmp_path, command, problem):
    """Unknown or mismatched problems exit with the config code."""
    result = run(make_config(tmp_path, command=command, problem=problem, alphas="1.5"))
    assert result.exit_code == EXIT_CONFIG
    assert result.artifacts == []


def test_divergence_maps_to_solver_exit(tmp_path, monkeypatch):
    """DivergenceError from a solve exits with the solver code."""
    def diverging(*args, **kwargs):
        raise DivergenceError(7)

    monkeypatch.setattr(harness, "solve1d", diverging)
    result = run(make_config(tmp_path, command="solve1d", problem="cd1d", alphas="1.5", n=10))
    assert result.exit_code == EXIT_SOLVER


def test_oracle_failure_maps_to_oracle_exit(tmp_path, monkeypatch):
    """An oracle that never converges exits with the oracle code and still writes the table."""
    def failing(*args, **kwargs):
        raise OracleConvergenceError(0.0, 1e-10, x=0.02, panels=4096)

    monkeypatch.setattr(analysis, "rl_quadrature", failing)
    result = run(make_config(tmp_path, command="operator-test", problem="table2", alphas="1.5",
                             h="1/50,1/100"))
    assert result.exit_code == EXIT_ORACLE
    rows = read_csv(result.artifacts[0])
    assert [r["error"] for r in rows] == ["nan", "nan"]


# Command line

@pytest.fixture
def no_env_config(monkeypatch):
    monkeypatch.delenv("FRACADI_CONFIG", raising=False)


def test_main_audit_exits_zero(tmp_path, capsys, no_env_config):
    """A successful run prints its artifacts and exits 0."""
    with pytest.raises(SystemExit) as info:
        app.main(["audit", "--alpha", "1.5", "--n", "16", "--out", str(tmp_path), "--format", "json"])
    assert info.value.code == 0
    assert "audit_a1.5_n16.json" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["coeffs", "--alpha", "2.5"],
    ["converge", "--h", "1/3,abc"],
    ["solve2d", "--threads", "0"],
    ["converge", "--dt", "-1"],
])
def test_main_invalid_flags_exit_two(tmp_path, argv, no_env_config):
    """Invalid flag values exit with the config code."""
    with pytest.raises(SystemExit) as info:
        app.main(argv + ["--out", str(tmp_path)])
    assert info.value.code == EXIT_CONFIG


def test_main_invalid_config_file_exits_two(tmp_path, no_env_config):
    """A schema violation in the config file exits with the config code."""
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"alpha": 3.0}), encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        app.main(["coeffs", "--config", str(cfg), "--out", str(tmp_path)])
    assert info.value.code == EXIT_CONFIG


def test_main_reads_config_from_environment(tmp_path, monkeypatch):
    """FRACADI_CONFIG supplies the file when --config is absent; flags still win."""
    cfg = tmp_path / "env.json"
    cfg.write_text(json.dumps({"alpha": 1.3, "n": 8, "format": "json"}), encoding="utf-8")
    monkeypatch.setenv("FRACADI_CONFIG", str(cfg))
    with pytest.raises(SystemExit) as info:
        app.main(["coeffs", "--out", str(tmp_path), "--format", "csv"])
    assert info.value.code == 0
    assert (tmp_path / "coeffs_a1.3_n8.csv").exists()


def test_main_saves_effective_config(tmp_path, no_env_config):
    """--save-config writes the merged settings."""
    saved = tmp_path / "effective.json"
    with pytest.raises(SystemExit):
        app.main(["coeffs", "--alpha", "1.7", "--n", "6", "--out", str(tmp_path),
                  "--save-config", str(saved)])
    payload = json.loads(saved.read_text())
    assert payload["command"] == "coeffs"
    assert payload["alpha"] == [1.7]
    assert payload["n"] == 6
