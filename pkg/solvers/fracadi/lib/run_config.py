import json
import logging
import os
from pathlib import Path
from typing import Any

from solvers.fracadi.lib.configparsers import RunConfigParser, parse_list, parse_spacing
from solvers.fracadi.lib.enums import Command, OutputFormat
from solvers.fracadi.lib.frac_coeffs import FractionalOrder

LOG = logging.getLogger("fracadi.config")

MATCH_H = "match-h"


def _order_list(val, name: str) -> list[float]:
    items = parse_list(val)
    if not items:
        raise ValueError(f"Invalid {name} {val!r}. At least one value is required.")
    out = []
    for item in items:
        if isinstance(item, bool):
            raise TypeError(f"Invalid type {type(item)}. Valid types are float, list[float]")
        try:
            out.append(FractionalOrder(float(item)).value)
        except (TypeError, ValueError) as e:
            raise ValueError(f"Invalid {name} {item!r}. Valid values lie in (1, 2).") from e
    return out


class RunConfig:
    """
    Effective settings of one fracadi run.

    Fields start as None; read_config() fills them from a JSON document (or the
    built-in fallbacks) and apply_overrides() lets command-line flags win.
    """

    def __init__(self, config_file: str | Path | None = None):
        self.config_file = config_file
        self._command = None
        self._problem = None
        self._alphas = None
        self._betas = None
        self._n = None
        self._h = None
        self._dt = None
        self._t_final = None
        self._out = None
        self._format = None
        self._oracle_tol = None
        self._threads = None
        self._dump_field = False

    @property
    def command(self) -> Command:
        return self._command

    @command.setter
    def command(self, val: str | Command) -> None:
        if isinstance(val, Command):
            self._command = val
        elif isinstance(val, str):
            try:
                self._command = Command(val)
            except ValueError:
                raise ValueError(f"Invalid command {val}. "
                                 f"Valid values are {[e.value for e in Command]}.")
        else:
            raise TypeError(f"Invalid type {type(val)}. Valid types are str, Command")

    @property
    def problem(self) -> str:
        return self._problem

    @problem.setter
    def problem(self, val: str) -> None:
        if not isinstance(val, str) or not val:
            raise TypeError("problem must be a non-empty string")
        self._problem = val

    @property
    def alphas(self) -> list[float]:
        return self._alphas

    @alphas.setter
    def alphas(self, val) -> None:
        self._alphas = _order_list(val, "alpha")

    @property
    def betas(self) -> list[float]:
        return self._betas

    @betas.setter
    def betas(self, val) -> None:
        self._betas = _order_list(val, "beta")

    @property
    def n(self) -> int:
        return self._n

    @n.setter
    def n(self, val: int) -> None:
        if isinstance(val, bool) or not isinstance(val, int):
            raise TypeError(f"Invalid type {type(val)}. Valid types are int")
        if val < 4:
            raise ValueError(f"Invalid grid size {val}. Valid values are >= 4.")
        self._n = val

    @property
    def h(self) -> list[float]:
        return self._h

    @h.setter
    def h(self, val) -> None:
        values = [parse_spacing(v) for v in parse_list(val)]
        if not values:
            raise ValueError("Invalid h list. At least one spacing is required.")
        for v in values:
            if not 0.0 < v <= 0.25:
                raise ValueError(f"Invalid spacing {v}. Valid values are in (0, 1/4].")
        self._h = values

    @property
    def dt(self) -> float | str:
        return self._dt

    @dt.setter
    def dt(self, val: float | str) -> None:
        if isinstance(val, str):
            if val in ("match", MATCH_H):
                self._dt = MATCH_H
                return
            try:
                val = float(val)
            except ValueError:
                raise ValueError(f"Invalid time step {val!r}. Valid values are > 0 or '{MATCH_H}'.")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise TypeError(f"Invalid type {type(val)}. Valid types are float, str")
        if not val > 0.0:
            raise ValueError(f"Invalid time step {val}. Valid values are > 0 or '{MATCH_H}'.")
        self._dt = float(val)

    @property
    def t_final(self) -> float | None:
        return self._t_final

    @t_final.setter
    def t_final(self, val: float | None) -> None:
        if val is None:
            self._t_final = None
            return
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise TypeError(f"Invalid type {type(val)}. Valid types are float, None")
        if not val > 0.0:
            raise ValueError(f"Invalid final time {val}. Valid values are > 0.")
        self._t_final = float(val)

    @property
    def out(self) -> Path:
        return self._out

    @out.setter
    def out(self, val: str | Path) -> None:
        if not isinstance(val, (str, Path)):
            raise TypeError(f"Invalid type {type(val)}. Valid types are str, Path")
        self._out = Path(val)

    @property
    def format(self) -> OutputFormat:
        return self._format

    @format.setter
    def format(self, val: str | OutputFormat) -> None:
        if isinstance(val, OutputFormat):
            self._format = val
        elif isinstance(val, str):
            try:
                self._format = OutputFormat(val)
            except ValueError:
                raise ValueError(f"Invalid format {val}. "
                                 f"Valid values are {[e.value for e in OutputFormat]}.")
        else:
            raise TypeError(f"Invalid type {type(val)}. Valid types are str, OutputFormat")

    @property
    def oracle_tol(self) -> float:
        return self._oracle_tol

    @oracle_tol.setter
    def oracle_tol(self, val: float) -> None:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise TypeError(f"Invalid type {type(val)}. Valid types are float")
        if not val > 0.0:
            raise ValueError(f"Invalid oracle tolerance {val}. Valid values are > 0.")
        self._oracle_tol = float(val)

    @property
    def threads(self) -> int | str:
        return self._threads

    @threads.setter
    def threads(self, val: int | str) -> None:
        if val == "auto":
            self._threads = "auto"
            return
        if isinstance(val, str):
            try:
                val = int(val)
            except ValueError:
                raise ValueError(f"Invalid thread count {val!r}. Valid values are >= 1 or 'auto'.")
        if isinstance(val, bool) or not isinstance(val, int):
            raise TypeError(f"Invalid type {type(val)}. Valid types are int, str")
        if val < 1:
            raise ValueError(f"Invalid thread count {val}. Valid values are >= 1 or 'auto'.")
        self._threads = val

    @property
    def worker_count(self) -> int:
        if self._threads == "auto":
            return os.cpu_count() or 1
        return self._threads

    @property
    def dump_field(self) -> bool:
        return self._dump_field

    @dump_field.setter
    def dump_field(self, val: bool) -> None:
        if not isinstance(val, bool):
            raise TypeError("dump_field must be a bool")
        self._dump_field = val

    def read_config(self) -> "RunConfig":
        parser = RunConfigParser(self.config_file)
        self.command = parser.parse_command()
        self.problem = parser.parse_problem()
        self.alphas = parser.parse_alpha()
        self.betas = parser.parse_beta()
        self.n = parser.parse_n()
        self.h = parser.parse_h()
        self.dt = parser.parse_dt()
        self.t_final = parser.parse_t_final()
        self.out = parser.parse_out()
        self.format = parser.parse_format()
        self.oracle_tol = parser.parse_oracle_tol()
        self.threads = parser.parse_threads()
        self.dump_field = parser.parse_dump_field()
        return self

    def apply_overrides(self, overrides: dict[str, Any]) -> "RunConfig":
        """Set every field whose override is not None."""
        for key, val in overrides.items():
            if val is None:
                continue
            if not hasattr(type(self), key):
                raise ValueError(f"Invalid setting {key}.")
            setattr(self, key, val)
            LOG.debug("Override %s=%r", key, val)
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command.value,
            "problem": self.problem,
            "alpha": list(self.alphas),
            "beta": list(self.betas),
            "n": self.n,
            "h": list(self.h),
            "dt": self.dt,
            "t_final": self.t_final,
            "out": str(self.out),
            "format": self.format.value,
            "oracle_tol": self.oracle_tol,
            "threads": self.threads,
            "dump_field": self.dump_field,
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        return path
