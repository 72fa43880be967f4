"""
Coefficient tables of the linear-spline approximations to the left and right
Riemann-Liouville derivatives of order 1 < alpha < 2.

The left operator at interior node i is

    (Gamma(4 - alpha) dx^alpha)^-1 * sum_{k=0}^{i+1} p_{i,k} u_k

with p_{i,k} = a_{i-1,k} - 2 a_{i,k} + a_{i+1,k}; the right operator uses
q_{i,k} = b_{i-1,k} - 2 b_{i,k} + b_{i+1,k} for k = i-1..N.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LOG = logging.getLogger("fracadi.coeffs")


@dataclass(frozen=True)
class FractionalOrder:
    value: float

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float, np.floating)):
            raise TypeError(f"Invalid type {type(self.value)}. Valid types are int, float")
        if not 1.0 < float(self.value) < 2.0:
            raise ValueError(f"Invalid fractional order {self.value}. "
                             f"Valid values lie in the open interval (1, 2).")
        object.__setattr__(self, "value", float(self.value))

    @property
    def exponent(self) -> float:
        return 3.0 - self.value

    def __float__(self) -> float:
        return self.value


def as_order(val: "float | FractionalOrder") -> FractionalOrder:
    return val if isinstance(val, FractionalOrder) else FractionalOrder(val)


def _check_index(name: str, val) -> int:
    if isinstance(val, bool) or not isinstance(val, (int, np.integer)):
        raise TypeError(f"{name} must be an integer")
    return int(val)


def _pw(m, e: float):
    """m**e for integer m >= 1 via exp(e*log m); m <= 0 maps to 0."""
    m = np.asarray(m, dtype=float)
    out = np.exp(e * np.log(np.maximum(m, 1.0)))
    return np.where(m > 0, out, 0.0)


def a_coef(i: int, k: int, alpha: "float | FractionalOrder") -> float:
    order = as_order(alpha)
    i, k = _check_index("i", i), _check_index("k", k)
    if not 0 <= k <= i:
        raise ValueError(f"Invalid index pair (i={i}, k={k}). Valid pairs satisfy 0 <= k <= i.")
    if i == 0:
        # integral over [x_0, x_0]
        return 0.0
    if k == i:
        return 1.0
    e = order.exponent
    if k == 0:
        return float(_pw(i - 1, e) - _pw(i, e - 1.0) * (i - 3.0 + order.value))
    m = i - k
    return float(_pw(m + 1, e) - 2.0 * _pw(m, e) + _pw(m - 1, e))


def b_coef(i: int, k: int, alpha: "float | FractionalOrder", n_cells: int) -> float:
    order = as_order(alpha)
    i, k = _check_index("i", i), _check_index("k", k)
    n = _check_index("n_cells", n_cells)
    if not 0 <= i <= k <= n:
        raise ValueError(f"Invalid index pair (i={i}, k={k}) for n_cells={n}. "
                         f"Valid pairs satisfy 0 <= i <= k <= n_cells.")
    if i == n:
        # integral over [x_N, x_N]
        return 0.0
    if k == i:
        return 1.0
    e = order.exponent
    if k == n:
        m = n - i
        return float((3.0 - order.value - m) * _pw(m, e - 1.0) + _pw(m - 1, e))
    m = k - i
    return float(_pw(m + 1, e) - 2.0 * _pw(m, e) + _pw(m - 1, e))


def _a_table(order: FractionalOrder, n: int) -> np.ndarray:
    """a_{i,k} for 0 <= k <= i <= n, zero above the diagonal."""
    e = order.exponent
    i = np.arange(n + 1)[:, None]
    k = np.arange(n + 1)[None, :]
    m = i - k
    table = _pw(m + 1, e) - 2.0 * _pw(m, e) + _pw(m - 1, e)
    table = np.where(m < 0, 0.0, table)
    rows = np.arange(1, n + 1)
    table[rows, 0] = _pw(rows - 1, e) - _pw(rows, e - 1.0) * (rows - 3.0 + order.value)
    np.fill_diagonal(table, 1.0)
    table[0, 0] = 0.0
    return table


def _b_table(order: FractionalOrder, n: int) -> np.ndarray:
    """b_{i,k} for 0 <= i <= k <= n, zero below the diagonal."""
    e = order.exponent
    i = np.arange(n + 1)[:, None]
    k = np.arange(n + 1)[None, :]
    m = k - i
    table = _pw(m + 1, e) - 2.0 * _pw(m, e) + _pw(m - 1, e)
    table = np.where(m < 0, 0.0, table)
    rows = np.arange(0, n)
    dist = n - rows
    table[rows, n] = (3.0 - order.value - dist) * _pw(dist, e - 1.0) + _pw(dist - 1, e)
    np.fill_diagonal(table, 1.0)
    table[n, n] = 0.0
    return table


@dataclass(frozen=True, eq=False)
class OperatorRows:
    """
    Dense p and q tables for one (alpha, N) pair.

    ``left[i - 1, k]`` is p_{i,k} and ``right[i - 1, k]`` is q_{i,k} for the
    interior rows i = 1..N-1 and all columns k = 0..N; entries outside a row's
    stencil are stored as zero.
    """
    order: FractionalOrder
    n_cells: int
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.n_cells - 1, self.n_cells + 1)
        for name in ("left", "right"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"Invalid {name} table shape {arr.shape}. Expected {shape}")
            arr.setflags(write=False)

    def _check_row(self, i: int) -> int:
        i = _check_index("i", i)
        if not 1 <= i <= self.n_cells - 1:
            raise ValueError(f"Invalid row {i}. Valid rows are 1..{self.n_cells - 1}.")
        return i

    def left_row(self, i: int) -> np.ndarray:
        i = self._check_row(i)
        return self.left[i - 1, : i + 2]

    def right_row(self, i: int) -> np.ndarray:
        i = self._check_row(i)
        return self.right[i - 1, i - 1:]

    @property
    def left_rows(self) -> tuple[np.ndarray, ...]:
        return tuple(self.left_row(i) for i in range(1, self.n_cells))

    @property
    def right_rows(self) -> tuple[np.ndarray, ...]:
        return tuple(self.right_row(i) for i in range(1, self.n_cells))

    def interior_left(self) -> np.ndarray:
        return self.left[:, 1:self.n_cells]

    def interior_right(self) -> np.ndarray:
        return self.right[:, 1:self.n_cells]


@lru_cache(maxsize=64)
def _cached_rows(alpha: float, n_cells: int) -> OperatorRows:
    order = FractionalOrder(alpha)
    a = _a_table(order, n_cells)
    b = _b_table(order, n_cells)
    left = a[:-2] - 2.0 * a[1:-1] + a[2:]
    right = b[:-2] - 2.0 * b[1:-1] + b[2:]
    LOG.debug("Built coefficient tables alpha=%s n_cells=%d", alpha, n_cells)
    return OperatorRows(order, n_cells, left, right)


def operator_rows(alpha: "float | FractionalOrder", n_cells: int) -> OperatorRows:
    """Cached, read-only coefficient tables for (alpha, n_cells)."""
    order = as_order(alpha)
    n = _check_index("n_cells", n_cells)
    if n < 2:
        raise ValueError(f"Invalid number of cells {n}. Valid values are >= 2.")
    return _cached_rows(order.value, n)


def left_row(i: int, alpha: "float | FractionalOrder", n_cells: int) -> np.ndarray:
    return operator_rows(alpha, n_cells).left_row(i)


def right_row(i: int, alpha: "float | FractionalOrder", n_cells: int) -> np.ndarray:
    return operator_rows(alpha, n_cells).right_row(i)


def closed_forms(alpha: "float | FractionalOrder") -> dict[str, float]:
    """Values every row away from the boundary shares near its diagonal."""
    e = as_order(alpha).exponent
    return {
        "outer": 1.0,
        "diagonal": 2.0 ** e - 4.0,
        "inner": 6.0 - 2.0 ** (e + 2.0) + 3.0 ** e,
    }
