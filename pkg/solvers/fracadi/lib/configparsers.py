import json
import logging
from pathlib import Path
from typing import Any

from jsonschema import validate

LOG = logging.getLogger("fracadi.config")

SCHEMA_PATH = Path(__file__).resolve().parents[3] / "shared" / "run_config.json"

DEFAULT_H = ["1/50", "1/100", "1/200", "1/400"]


def parse_spacing(val: str | float | int) -> float:
    """A grid spacing written as a decimal or as a fraction such as '1/50'."""
    if isinstance(val, bool):
        raise TypeError(f"Invalid type {type(val)}. Valid types are float, str")
    if isinstance(val, (int, float)):
        return float(val)
    if not isinstance(val, str):
        raise TypeError(f"Invalid type {type(val)}. Valid types are float, str")
    num, sep, den = val.partition("/")
    try:
        h = float(num) / float(den) if sep else float(num)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"Invalid spacing {val!r}. Valid values look like 0.02 or 1/50.")
    return h


def parse_list(val: str | float | list) -> list:
    """Comma-separated command-line list or a JSON scalar/array."""
    if isinstance(val, list):
        return val
    if isinstance(val, str):
        return [part.strip() for part in val.split(",") if part.strip()]
    return [val]


def load_schema(path: Path = SCHEMA_PATH) -> dict[str, Any] | None:
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        LOG.warning("Run config schema %s unavailable (%s); skipping validation", path, e)
        return None


class RunConfigParser:
    def __init__(self, filename: str | Path | None = None, schema_path: Path = SCHEMA_PATH):
        self.filename = None if filename is None else Path(filename)
        self.document: dict[str, Any] = {}
        if self.filename is not None:
            with self.filename.open("r", encoding="utf-8") as fh:
                self.document = json.load(fh)
            schema = load_schema(schema_path)
            if schema is not None:
                validate(instance=self.document, schema=schema)
            LOG.debug("Run config loaded from %s: %s", self.filename, self.document)

    def _get(self, key: str, fallback: Any) -> Any:
        val = self.document.get(key)
        return fallback if val is None else val

    def parse_command(self) -> str:
        return self._get("command", "converge")

    def parse_problem(self) -> str:
        return self._get("problem", "cd1d")

    def parse_alpha(self) -> list[float]:
        return [float(a) for a in parse_list(self._get("alpha", 1.5))]

    def parse_beta(self) -> list[float]:
        return [float(b) for b in parse_list(self._get("beta", 1.5))]

    def parse_n(self) -> int:
        return self._get("n", 50)

    def parse_h(self) -> list[float]:
        return [parse_spacing(h) for h in self._get("h", DEFAULT_H)]

    def parse_dt(self) -> float | str:
        dt = self._get("dt", "match-h")
        return "match-h" if dt in ("match", "match-h") else dt

    def parse_t_final(self) -> float | None:
        return self.document.get("t_final")

    def parse_out(self) -> str:
        return self._get("out", "./results")

    def parse_format(self) -> str:
        return self._get("format", "csv")

    def parse_oracle_tol(self) -> float:
        return self._get("oracle_tol", 1e-10)

    def parse_threads(self) -> int | str:
        return self._get("threads", 1)

    def parse_dump_field(self) -> bool:
        return self._get("dump_field", False)
