from enum import Enum


class Command(Enum):
    COEFFS        = "coeffs"
    OPERATOR_TEST = "operator-test"
    SOLVE1D       = "solve1d"
    SOLVE2D       = "solve2d"
    CONVERGE      = "converge"
    STABILITY     = "stability"
    AUDIT         = "audit"

    def needs_problem(self) -> bool:
        return self in (Command.OPERATOR_TEST, Command.SOLVE1D, Command.SOLVE2D, Command.CONVERGE)

    def uses_h_list(self) -> bool:
        return self in (Command.OPERATOR_TEST, Command.CONVERGE)


class OutputFormat(Enum):
    CSV  = "csv"
    JSON = "json"
    MD   = "md"

    def to_suffix(self) -> str:
        return {"csv": ".csv", "json": ".json", "md": ".md"}[self.value]


class Side(Enum):
    LEFT  = 1
    RIGHT = 2

    def to_label(self) -> str:
        return {1: "left", 2: "right"}[self.value]
