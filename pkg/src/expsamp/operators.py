"""The Kantorovich exponential sampling operator.

For a kernel chi and rate w > 0 the operator evaluates

    (I_w f)(x) = sum_k chi(e^-k * x^w) * w * integral_{k/w}^{(k+1)/w} f(e^u) du,

i.e. a kernel-weighted sum of normalized cell averages of f(e^u) on the
uniform log-grid of mesh 1/w.  Compact kernel support makes the sum finite:
only k with w*log(x) - k inside the log-support contribute.  Cell averages
come either from Gauss-Legendre quadrature of a known f or from an ingested
series of precomputed means.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence, TextIO, Union

import numpy as np

from .functions import TestFunction
from .kernels import Kernel

__all__ = [
    "OperatorConfig",
    "SampleSeries",
    "GridPoint",
    "MissingSampleError",
    "SampleFormatError",
    "cell_mean",
    "apply",
    "apply_from_samples",
    "apply_grid",
    "read_sample_csv",
    "write_sample_csv",
    "write_grid_csv",
]

FuncLike = Union[TestFunction, Callable[[float], float]]


class MissingSampleError(ValueError):
    """A sample series lacks a cell index the kernel window requires."""


class SampleFormatError(ValueError):
    """A sample CSV file violates the expected schema."""


@dataclass(frozen=True)
class OperatorConfig:
    """Sampling rate and per-cell quadrature order.

    The truncation range of the series is not configured here: it is derived
    from the kernel log-support at evaluation time, widened by one index on
    each side (the extra terms are exactly zero).
    """

    w: float
    quad_nodes: int = 7

    def __post_init__(self) -> None:
        if self.w <= 0.0:
            raise ValueError(f"sampling rate w must be positive, got {self.w}")
        if not 1 <= self.quad_nodes <= 64:
            raise ValueError(f"quad_nodes must be in 1..64, got {self.quad_nodes}")


def _as_callable(f: FuncLike) -> Callable[[float], float]:
    return f.f if isinstance(f, TestFunction) else f


@lru_cache(maxsize=None)
def _gauss_rule(n: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return tuple(nodes), tuple(weights)


def cell_mean(f: FuncLike, w: float, k: int, quad_nodes: int = 7) -> float:
    """Normalized cell average w * integral_{k/w}^{(k+1)/w} f(e^u) du.

    Gauss-Legendre with ``quad_nodes`` points; exact whenever u -> f(e^u) is
    a polynomial of degree <= 2*quad_nodes - 1 on the cell.
    """
    nodes, weights = _gauss_rule(quad_nodes)
    g = _as_callable(f)
    return 0.5 * math.fsum(
        wt * g(math.exp((k + 0.5 * (xi + 1.0)) / w)) for xi, wt in zip(nodes, weights)
    )


def _support_window(kernel: Kernel, wt: float, widen: int = 1) -> range:
    a, b = kernel.log_support
    return range(math.ceil(wt - b) - widen, math.floor(wt - a) + 1 + widen)


def apply(f: FuncLike, kernel: Kernel, cfg: OperatorConfig, x: float) -> float:
    """(I_w f)(x) for a function given in closed form."""
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x}")
    wt = cfg.w * math.log(x)
    terms = []
    for k in _support_window(kernel, wt):
        weight = kernel.eval_log(wt - k)
        if weight != 0.0:
            terms.append(weight * cell_mean(f, cfg.w, k, cfg.quad_nodes))
    return math.fsum(terms)


def _apply_with_cache(
    f: FuncLike,
    kernel: Kernel,
    cfg: OperatorConfig,
    x: float,
    means: dict[int, float],
) -> float:
    # Same sum as apply(); reuses cell means across evaluation points.
    wt = cfg.w * math.log(x)
    terms = []
    for k in _support_window(kernel, wt):
        weight = kernel.eval_log(wt - k)
        if weight != 0.0:
            mean = means.get(k)
            if mean is None:
                mean = means[k] = cell_mean(f, cfg.w, k, cfg.quad_nodes)
            terms.append(weight * mean)
    return math.fsum(terms)


@dataclass(frozen=True)
class SampleSeries:
    """Cell means of an unknown signal on the log-grid of mesh 1/w.

    ``means[k]`` is w * integral_{k/w}^{(k+1)/w} f(e^u) du; the mapping must
    be dense on k_range.
    """

    w: float
    means: Mapping[int, float]
    k_range: tuple[int, int]

    def __post_init__(self) -> None:
        if self.w <= 0.0:
            raise ValueError(f"sampling rate w must be positive, got {self.w}")
        k_min, k_max = self.k_range
        missing = [k for k in range(k_min, k_max + 1) if k not in self.means]
        if missing:
            raise ValueError(f"sample series has gaps at k={missing[:8]}")

    @classmethod
    def from_function(
        cls, f: FuncLike, w: float, k_min: int, k_max: int, quad_nodes: int = 7
    ) -> "SampleSeries":
        means = {k: cell_mean(f, w, k, quad_nodes) for k in range(k_min, k_max + 1)}
        return cls(w=w, means=means, k_range=(k_min, k_max))

    @classmethod
    def covering(
        cls,
        f: FuncLike,
        kernel: Kernel,
        w: float,
        xs: Sequence[float],
        quad_nodes: int = 7,
    ) -> "SampleSeries":
        """Series whose k_range covers the kernel window of every x in xs."""
        lo = min(xs)
        hi = max(xs)
        a, b = kernel.log_support
        k_min = math.ceil(w * math.log(lo) - b) - 1
        k_max = math.floor(w * math.log(hi) - a) + 1
        return cls.from_function(f, w, k_min, k_max, quad_nodes)


def apply_from_samples(series: SampleSeries, kernel: Kernel, x: float) -> float:
    """(I_w f)(x) from stored cell means.

    Raises MissingSampleError naming the first cell index the kernel window
    needs but the series does not cover.
    """
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x}")
    wt = series.w * math.log(x)
    k_min, k_max = series.k_range
    terms = []
    for k in _support_window(kernel, wt, widen=0):
        if not k_min <= k <= k_max:
            raise MissingSampleError(
                f"reconstruction at x={x:g} needs sample k={k}, "
                f"series covers [{k_min}, {k_max}]"
            )
        weight = kernel.eval_log(wt - k)
        if weight != 0.0:
            terms.append(weight * series.means[k])
    return math.fsum(terms)


@dataclass(frozen=True)
class GridPoint:
    x: float
    approx: float
    exact: float
    abs_error: float


def apply_grid(
    f: FuncLike, kernel: Kernel, cfg: OperatorConfig, xs: Sequence[float]
) -> list[GridPoint]:
    """Per-point operator values with errors against f itself."""
    if len(xs) == 0:
        raise ValueError("empty evaluation grid")
    g = _as_callable(f)
    means: dict[int, float] = {}
    out = []
    for x in xs:
        value = _apply_with_cache(f, kernel, cfg, x, means)
        exact = g(x)
        out.append(GridPoint(x=x, approx=value, exact=exact, abs_error=abs(value - exact)))
    return out


# ---------------------------------------------------------------------------
# Sample-series CSV: first line "# w=<value>", then header "k,mean".

def write_sample_csv(dest: Union[str, TextIO], series: SampleSeries) -> None:
    """Means are written with shortest round-trip precision so that a
    read-back series reproduces the operator to full accuracy."""
    if isinstance(dest, str):
        with open(dest, "w", newline="") as fh:
            write_sample_csv(fh, series)
        return
    dest.write(f"# w={series.w!r}\n")
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["k", "mean"])
    k_min, k_max = series.k_range
    for k in range(k_min, k_max + 1):
        writer.writerow([k, repr(series.means[k])])


def read_sample_csv(src: Union[str, TextIO]) -> SampleSeries:
    if isinstance(src, str):
        with open(src, "r", newline="") as fh:
            return read_sample_csv(fh)
    first = src.readline().strip()
    if not first.startswith("# w="):
        raise SampleFormatError(f"line 1: expected '# w=<value>' sidecar, got {first!r}")
    try:
        w = float(first[4:])
    except ValueError:
        raise SampleFormatError(f"line 1: bad rate value {first[4:]!r}") from None
    reader = csv.reader(src)
    header = next(reader, None)
    if header != ["k", "mean"]:
        raise SampleFormatError(f"line 2: expected header 'k,mean', got {header!r}")
    means: dict[int, float] = {}
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != 2:
            raise SampleFormatError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            k = int(row[0])
        except ValueError:
            raise SampleFormatError(f"line {lineno}: bad cell index {row[0]!r}") from None
        try:
            mean = float(row[1])
        except ValueError:
            raise SampleFormatError(f"line {lineno}: bad mean value {row[1]!r}") from None
        if k in means:
            raise SampleFormatError(f"line {lineno}: duplicate cell index k={k}")
        means[k] = mean
    if not means:
        raise SampleFormatError("sample file contains no rows")
    return SampleSeries(w=w, means=means, k_range=(min(means), max(means)))


def write_grid_csv(dest: Union[str, TextIO], points: Iterable[GridPoint]) -> None:
    """Output CSV: x,approx,exact,abs_error at 12 significant digits, LF."""
    if isinstance(dest, str):
        with open(dest, "w", newline="") as fh:
            write_grid_csv(fh, points)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["x", "approx", "exact", "abs_error"])
    for p in points:
        writer.writerow([f"{p.x:.12g}", f"{p.approx:.12g}", f"{p.exact:.12g}", f"{p.abs_error:.12g}"])
