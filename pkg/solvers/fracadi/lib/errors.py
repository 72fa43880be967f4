class FracAdiError(RuntimeError):
    """Base class for solver failures that are not argument errors."""


class AssemblyError(FracAdiError):
    def __init__(self, message: str, where: str | None = None) -> None:
        super().__init__(message if where is None else f"{message} ({where})")
        self.where = where


class DivergenceError(FracAdiError):
    def __init__(self, step: int, index: int | None = None, direction: str | None = None) -> None:
        msg = f"Non-finite values after step {step}"
        if index is not None:
            msg += f" in {direction or 'line'} {index}"
        super().__init__(msg)
        self.step = step
        self.index = index
        self.direction = direction


class OracleConvergenceError(FracAdiError):
    def __init__(self, estimate: float, tol: float, x: float | None = None, panels: int | None = None) -> None:
        where = "" if x is None else f" at x={x:.6g}"
        super().__init__(f"Quadrature did not reach tol={tol:g}{where} "
                         f"(last estimate {estimate:.12g}, {panels} panels)")
        self.estimate = estimate
        self.tol = tol
        self.x = x
        self.panels = panels

    def at(self, x: float) -> "OracleConvergenceError":
        return OracleConvergenceError(self.estimate, self.tol, x=x, panels=self.panels)
