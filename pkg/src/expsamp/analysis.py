"""Empirical verification of the operator's approximation behaviour.

Three kinds of studies:

* pointwise Voronovskaya checks: w^q-scaled errors against the limit
  constant predicted by the kernel's moment brackets;
* convergence-order regression: least-squares slope of log(sup error)
  against log(w) over a geometric rate list;
* quantitative bound checks: both sides of the K-functional error
  estimates, with the (uncomputable) K-functional infimum replaced by an
  upper bound over a list of smooth candidate functions.

Studies are pure given their inputs; grid cells may be evaluated in worker
threads (capped by EXPSAMP_THREADS) with results assembled in input order.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO, Union

import numpy as np

from .combinations import CombinationScheme, apply_combo, combo_moment_bracket
from .functions import TestFunction
from .kernels import Kernel
from .moments import (
    _absolute_moment_sup_cached,
    algebraic_moment_at_log,
    kantorovich_bracket_at_log,
)
from .operators import OperatorConfig, _apply_with_cache, apply

__all__ = [
    "ConvergenceStudy",
    "BoundReport",
    "ErrorTable",
    "MomentPreconditionError",
    "sup_norm",
    "voronovskaya_check",
    "estimate_order",
    "expansion_prediction",
    "first_order_bound",
    "vanishing_moment_bound",
    "combo_bound",
    "make_table",
    "table_deviations",
]

ERROR_FLOOR_SCALE = 1e-13


class MomentPreconditionError(Exception):
    """A bound requires vanishing lower moments and the kernel has none."""


def _thread_cap() -> int:
    raw = os.environ.get("EXPSAMP_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"EXPSAMP_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"EXPSAMP_THREADS must be >= 0, got {n}")
    return (os.cpu_count() or 1) if n == 0 else n


def _map_ordered(fn: Callable, items: Sequence) -> list:
    cap = min(_thread_cap(), len(items))
    if cap <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))


def sup_norm(
    g: Callable[[float], float],
    interval: tuple[float, float],
    points: int = 2001,
) -> float:
    """sup |g| over the interval: dense grid plus one local refinement pass."""
    lo, hi = interval
    grid = np.linspace(lo, hi, points)
    vals = [abs(g(x)) for x in grid]
    i = int(np.argmax(vals))
    best = vals[i]
    sub = np.linspace(grid[max(i - 1, 0)], grid[min(i + 1, points - 1)], 81)
    for x in sub:
        v = abs(g(x))
        if v > best:
            best = v
    return float(best)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Errors along a rate list, with an order fit or a predicted limit.

    ``errors`` are absolute errors per rate.  For Voronovskaya studies
    ``scaled_errors`` holds the signed w^q-scaled errors, ``predicted_limit``
    the moment-bracket constant, and ``deviations`` the per-rate distance
    from it.  ``exact_reproduction`` marks the infinite-order path taken
    when the operator reproduces the function to round-off.
    """

    w_list: tuple[float, ...]
    errors: tuple[float, ...]
    fitted_order: Optional[float] = None
    fitted_constant: Optional[float] = None
    scaled_errors: Optional[tuple[float, ...]] = None
    predicted_limit: Optional[float] = None
    deviations: Optional[tuple[float, ...]] = None
    exact_reproduction: bool = False

    @property
    def deviation_at_largest_w(self) -> Optional[float]:
        return self.deviations[-1] if self.deviations else None


def _check_w_list(w_list: Sequence[float], minimum: int) -> tuple[float, ...]:
    ws = tuple(float(w) for w in w_list)
    if len(ws) < minimum:
        raise ValueError(f"need at least {minimum} rates, got {len(ws)}")
    if any(w <= 0.0 for w in ws) or any(b <= a for a, b in zip(ws, ws[1:])):
        raise ValueError("rate list must be positive and strictly increasing")
    return ws


def voronovskaya_check(
    f: TestFunction,
    kernel: Kernel,
    x: float,
    w_list: Sequence[float],
    scheme: Optional[CombinationScheme] = None,
    quad_nodes: int = 7,
) -> ConvergenceStudy:
    """w^q-scaled pointwise errors against the predicted limit constant.

    Without a scheme, q = 1 and the limit is
    (theta f)(x)/2 * (1 + 2 m_1(chi, x)); with an order-p scheme, q = p and
    the limit is (theta^p f)(x) * Mbar_p / (p+1)! built from the combined
    moment bracket.
    """
    ws = _check_w_list(w_list, minimum=4)
    q = 1 if scheme is None else scheme.p
    if f.max_theta < q:
        raise ValueError(f"{f.label}: needs Mellin derivative of order {q}")

    if scheme is None:
        m1 = algebraic_moment_at_log(kernel, 1, math.log(x))
        predicted = 0.5 * f.theta(1)(x) * (1.0 + 2.0 * m1)

        def evaluate(w: float) -> float:
            return apply(f, kernel, OperatorConfig(w=w, quad_nodes=quad_nodes), x)

    else:
        bracket = combo_moment_bracket(kernel, scheme, q, x)
        predicted = f.theta(q)(x) * bracket / math.factorial(q + 1)

        def evaluate(w: float) -> float:
            return apply_combo(f, kernel, scheme, w, x, quad_nodes)

    values = _map_ordered(evaluate, ws)
    fx = f.f(x)
    scaled = tuple(w ** q * (v - fx) for w, v in zip(ws, values))
    return ConvergenceStudy(
        w_list=ws,
        errors=tuple(abs(v - fx) for v in values),
        scaled_errors=scaled,
        predicted_limit=predicted,
        deviations=tuple(abs(s - predicted) for s in scaled),
    )


def _sup_error(
    f: TestFunction,
    kernel: Kernel,
    scheme: Optional[CombinationScheme],
    w: float,
    probe_grid: Sequence[float],
    quad_nodes: int,
) -> float:
    if scheme is None:
        caches: list[dict[int, float]] = [{}]
        rates = [w]
        coeffs = [1.0]
    else:
        caches = [{} for _ in scheme.coeffs]
        rates = [i * w for i in range(1, scheme.p + 1)]
        coeffs = [float(c) for c in scheme.coeffs]
    worst = 0.0
    for x in probe_grid:
        value = math.fsum(
            c * _apply_with_cache(f, kernel, OperatorConfig(w=r, quad_nodes=quad_nodes), x, cache)
            for c, r, cache in zip(coeffs, rates, caches)
        )
        err = abs(value - f.f(x))
        if err > worst:
            worst = err
    return worst


def estimate_order(
    f: TestFunction,
    kernel: Kernel,
    scheme: Optional[CombinationScheme],
    w_list: Sequence[float],
    probe_grid: Sequence[float],
    quad_nodes: int = 7,
) -> ConvergenceStudy:
    """Fitted convergence order from sup errors over a geometric rate list.

    The fit uses only the top half of the rates (the small-w entries are
    pre-asymptotic).  When the sup error sits at the round-off floor the
    function is reproduced exactly and an infinite order is reported
    instead of a meaningless fit.
    """
    ws = _check_w_list(w_list, minimum=5)
    if len(probe_grid) == 0:
        raise ValueError("empty probe grid")
    errors = tuple(
        _map_ordered(
            lambda w: _sup_error(f, kernel, scheme, w, probe_grid, quad_nodes), ws
        )
    )
    floor = ERROR_FLOOR_SCALE * (1.0 + max(abs(f.f(x)) for x in probe_grid))
    if min(errors) < floor:
        return ConvergenceStudy(
            w_list=ws,
            errors=errors,
            fitted_order=math.inf,
            fitted_constant=0.0,
            exact_reproduction=True,
        )
    half = (len(ws) + 1) // 2
    log_w = np.log(ws[-half:])
    log_e = np.log(errors[-half:])
    slope, intercept = np.polyfit(log_w, log_e, 1)
    return ConvergenceStudy(
        w_list=ws,
        errors=errors,
        fitted_order=float(-slope),
        fitted_constant=float(math.exp(intercept)),
    )


def expansion_prediction(
    f: TestFunction, kernel: Kernel, x: float, w: float, r: int
) -> float:
    """Truncated expansion of the operator error at x:

    sum_{i=1}^{r} (theta^i f)(x) / ((i+1)! w^i) * bracket_i(chi, x^w),

    where bracket_i is the order-i averaged-moment bracket evaluated at
    u = x^w (in log scale, so large w cannot overflow).  The true error
    minus this prediction decays like o(w^-r).
    """
    if not 1 <= r <= f.max_theta:
        raise ValueError(f"expansion order r={r} not in 1..{f.max_theta}")
    wt = w * math.log(x)
    return math.fsum(
        f.theta(i)(x)
        / (math.factorial(i + 1) * w ** i)
        * kantorovich_bracket_at_log(kernel, i, wt)
        for i in range(1, r + 1)
    )


# ---------------------------------------------------------------------------
# Quantitative bound checks


@dataclass(frozen=True)
class BoundReport:
    """Measured left side and computed right side of an error estimate.

    ``satisfied`` is None when the estimate degenerates (order-raising
    schemes zero out the right side) and the check is not applicable.
    ``surrogate_desc`` records how the K-functional was upper-bounded.
    """

    bound: str
    lhs: float
    rhs: float
    satisfied: Optional[bool]
    surrogate_desc: str
    details: dict[str, float] = field(default_factory=dict)


def _widened_interval(f: TestFunction, kernel: Kernel, w: float) -> tuple[float, float]:
    # every cell the operator touches for x in eval_interval lies inside
    margin = (kernel.support_radius + 1.0) / w
    lo, hi = f.eval_interval
    return lo * math.exp(-margin), hi * math.exp(margin)


def _k_upper(
    f: TestFunction,
    candidates: Sequence[TestFunction],
    r: int,
    eps: float,
    interval: tuple[float, float],
) -> tuple[float, str]:
    """min over smooth g of ||theta^r(f-g)|| + eps*||theta^(r+1) g|| on the
    interval; any such g upper-bounds the K-functional, keeping the
    estimates testable without solving the infimum."""
    pool = [g for g in candidates if g.max_theta >= r + 1]
    if f.max_theta >= r + 1 and all(g is not f for g in pool):
        pool.insert(0, f)
    if not pool:
        raise ValueError(
            f"no candidate with a Mellin derivative of order {r + 1} to bound the K-functional"
        )
    best = math.inf
    best_label = ""
    for g in pool:
        if g is f:
            dist = 0.0
        else:
            fr = f.theta(r)
            gr = g.theta(r)
            dist = sup_norm(lambda y: fr(y) - gr(y), interval)
        value = dist + eps * sup_norm(g.theta(r + 1), interval)
        if value < best:
            best = value
            best_label = g.label
    desc = (
        f"K-functional upper bound min_g(||theta^{r}(f-g)|| + eps*||theta^{r + 1}g||), "
        f"candidates={[g.label for g in pool]}, best=g={best_label}, "
        f"norms on [{interval[0]:.6g}, {interval[1]:.6g}]"
    )
    return best, desc


def first_order_bound(
    f: TestFunction,
    kernel: Kernel,
    w: float,
    x: float,
    candidates: Sequence[TestFunction] = (),
    quad_nodes: int = 7,
) -> BoundReport:
    """First-order remainder estimate.

    lhs: |(I_w f)(x) - f(x) - (theta f)(x)/(2w) * (1 + 2 m_1(chi, x^w))|
    rhs: (1 + 2 M_1)/w * K(f, (1 + 3 M_1 + 3 M_2) / (6w (1 + 2 M_1)))
    """
    if f.max_theta < 1:
        raise ValueError(f"{f.label}: needs a first Mellin derivative")
    m1 = algebraic_moment_at_log(kernel, 1, w * math.log(x))
    actual = apply(f, kernel, OperatorConfig(w=w, quad_nodes=quad_nodes), x)
    lhs = abs(actual - f.f(x) - f.theta(1)(x) / (2.0 * w) * (1.0 + 2.0 * m1))
    M1 = _absolute_moment_sup_cached(kernel, 1)
    M2 = _absolute_moment_sup_cached(kernel, 2)
    eps = (1.0 + 3.0 * M1 + 3.0 * M2) / (6.0 * w * (1.0 + 2.0 * M1))
    k_value, desc = _k_upper(f, candidates, 1, eps, _widened_interval(f, kernel, w))
    rhs = (1.0 + 2.0 * M1) / w * k_value
    return BoundReport(
        bound="first_order",
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs + 1e-12,
        surrogate_desc=desc,
        details={"M1": M1, "M2": M2, "eps": eps, "K_upper": k_value, "m1_at_xw": m1},
    )


def vanishing_moment_bound(
    f: TestFunction,
    kernel: Kernel,
    w: float,
    x: float,
    r: int,
    candidates: Sequence[TestFunction] = (),
    quad_nodes: int = 7,
) -> BoundReport:
    """Order-r remainder estimate for kernels with m_1 = ... = m_{r-1} = 0.

    lhs: |(I_w f)(x) - f(x) - sum_{i<=r} (theta^i f)(x)/((i+1)! w^i)
          - (theta^r f)(x) m_r(chi, x^w) / (r! w^r)|
    rhs: 2A/(w^r (r+1)!) * K(f, B/(2A(r+1)w)),
         A = 1 + (r+1) M_r,  B = 1 + (r+2) M_{r+1}.

    Raises MomentPreconditionError when a lower moment is nonzero at the
    evaluation point (that is a failed hypothesis, not a failed bound).
    """
    if not 1 <= r <= 3:
        raise ValueError(f"bound order r={r} not in 1..3")
    if f.max_theta < r:
        raise ValueError(f"{f.label}: needs Mellin derivatives through order {r}")
    wt = w * math.log(x)
    for j in range(1, r):
        mj = algebraic_moment_at_log(kernel, j, wt)
        if abs(mj) > 1e-10:
            raise MomentPreconditionError(
                f"kernel {kernel.label!r}: m_{j}(chi, u) = {mj:.3e} != 0 at u = x^w "
                f"(log u = {wt:.6g}); the order-{r} bound does not apply"
            )
    m_r = algebraic_moment_at_log(kernel, r, wt)
    actual = apply(f, kernel, OperatorConfig(w=w, quad_nodes=quad_nodes), x)
    series = math.fsum(
        f.theta(i)(x) / (math.factorial(i + 1) * w ** i) for i in range(1, r + 1)
    )
    lhs = abs(
        actual - f.f(x) - series - f.theta(r)(x) * m_r / (math.factorial(r) * w ** r)
    )
    Mr = _absolute_moment_sup_cached(kernel, r)
    Mr1 = _absolute_moment_sup_cached(kernel, r + 1)
    A = 1.0 + (r + 1) * Mr
    B = 1.0 + (r + 2) * Mr1
    eps = B / (2.0 * A * (r + 1) * w)
    k_value, desc = _k_upper(f, candidates, r, eps, _widened_interval(f, kernel, w))
    rhs = 2.0 * A / (w ** r * math.factorial(r + 1)) * k_value
    return BoundReport(
        bound=f"vanishing_moment:r={r}",
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs + 1e-12,
        surrogate_desc=desc,
        details={"A": A, "B": B, "eps": eps, "K_upper": k_value, "m_r_at_xw": m_r},
    )


def combo_bound(
    f: TestFunction,
    kernel: Kernel,
    scheme: CombinationScheme,
    w: float,
    x: float,
    candidates: Sequence[TestFunction] = (),
    quad_nodes: int = 7,
) -> BoundReport:
    """First-order estimate for the combined operator.

    lhs: |(I_{w,p} f)(x) - f(x)
          - (theta f)(x)/(2w) * sum_i (c_i/i)(1 + 2 m_1(chi, x^{iw}))|
    rhs: (1 + 2 M_1)/w * (sum_i c_i/i) * K(theta f, A/(6wB)),
         A = sum_i c_i/i^2 * (1 + 3 M_1 + 3 M_2),
         B = sum_i c_i/i * (1 + 2 M_1).

    For order-raising schemes (p >= 2) the coefficient sums vanish, the
    right side degenerates to 0, and the report is emitted with
    ``satisfied=None`` (not applicable).  For p = 1 this reduces exactly to
    the plain first-order estimate.
    """
    if f.max_theta < 1:
        raise ValueError(f"{f.label}: needs a first Mellin derivative")
    t = math.log(x)
    actual = apply_combo(f, kernel, scheme, w, x, quad_nodes)
    theta1 = f.theta(1)(x)
    drift = math.fsum(
        float(c) / i * (1.0 + 2.0 * algebraic_moment_at_log(kernel, 1, i * w * t))
        for i, c in enumerate(scheme.coeffs, start=1)
    )
    lhs = abs(actual - f.f(x) - theta1 / (2.0 * w) * drift)
    M1 = _absolute_moment_sup_cached(kernel, 1)
    M2 = _absolute_moment_sup_cached(kernel, 2)
    s1 = float(scheme.power_sum(1))
    s2 = float(scheme.power_sum(2))
    A = s2 * (1.0 + 3.0 * M1 + 3.0 * M2)
    B = s1 * (1.0 + 2.0 * M1)
    details = {"M1": M1, "M2": M2, "A": A, "B": B, "coeff_sum_1": s1, "coeff_sum_2": s2}
    if s1 <= 0.0 or B == 0.0:
        return BoundReport(
            bound=f"combination:p={scheme.p}",
            lhs=lhs,
            rhs=0.0,
            satisfied=None,
            surrogate_desc=(
                "not applicable: sum_i c_i/i <= 0 makes the stated right side degenerate"
            ),
            details=details,
        )
    eps = A / (6.0 * w * B)
    k_value, desc = _k_upper(f, candidates, 1, eps, _widened_interval(f, kernel, w))
    rhs = (1.0 + 2.0 * M1) / w * s1 * k_value
    if rhs <= 0.0:
        return BoundReport(
            bound=f"combination:p={scheme.p}",
            lhs=lhs,
            rhs=rhs,
            satisfied=None,
            surrogate_desc="not applicable: right side is non-positive",
            details=details,
        )
    details.update({"eps": eps, "K_upper": k_value})
    return BoundReport(
        bound=f"combination:p={scheme.p}",
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs + 1e-12,
        surrogate_desc=desc,
        details=details,
    )


# ---------------------------------------------------------------------------
# Error tables


@dataclass(frozen=True)
class ErrorTable:
    """Rows of |f - I_{iw} f| for i = 1..p plus the combined operator."""

    w: float
    p: int
    x_values: tuple[float, ...]
    column_labels: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def rounded_rows(self, decimals: int = 4) -> list[tuple[float, ...]]:
        return [tuple(round(v, decimals) for v in row) for row in self.rows]

    def to_csv(self, dest: Union[str, TextIO], decimals: int = 4) -> None:
        if isinstance(dest, str):
            with open(dest, "w", newline="") as fh:
                self.to_csv(fh, decimals)
            return
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(("x",) + self.column_labels)
        for x, row in zip(self.x_values, self.rows):
            writer.writerow([f"{x:.12g}"] + [f"{v:.{decimals}f}" for v in row])

    def to_latex(self, dest: Union[str, TextIO], decimals: int = 4) -> None:
        if isinstance(dest, str):
            with open(dest, "w", newline="") as fh:
                self.to_latex(fh, decimals)
            return
        cols = "|" + "l|" * (1 + len(self.column_labels))
        dest.write("\\begin{tabular}{" + cols + "}\n\\hline\n")
        header = " & ".join(["$x$"] + [lab.replace("_", "\\_") for lab in self.column_labels])
        dest.write(header + " \\\\\n\\hline\n")
        for x, row in zip(self.x_values, self.rows):
            cells = " & ".join([f"{x:.12g}"] + [f"{v:.{decimals}f}" for v in row])
            dest.write(cells + " \\\\\n\\hline\n")
        dest.write("\\end{tabular}\n")


def make_table(
    f: TestFunction,
    kernel: Kernel,
    scheme: CombinationScheme,
    w: float,
    xs: Sequence[float],
    quad_nodes: int = 7,
) -> ErrorTable:
    """Error table at the given points: one column per single-rate operator
    I_{iw}, i = 1..p, then the combined operator."""
    if len(xs) == 0:
        raise ValueError("empty point list")
    p = scheme.p
    labels = tuple(f"abs_err_w{i * w:g}" for i in range(1, p + 1)) + (f"abs_err_combo_p{p}",)
    caches: list[dict[int, float]] = [{} for _ in range(p)]
    rows = []
    for x in xs:
        singles = [
            _apply_with_cache(
                f, kernel, OperatorConfig(w=i * w, quad_nodes=quad_nodes), x, caches[i - 1]
            )
            for i in range(1, p + 1)
        ]
        fx = f.f(x)
        combo = math.fsum(float(c) * v for c, v in zip(scheme.coeffs, singles))
        rows.append(tuple(abs(v - fx) for v in singles) + (abs(combo - fx),))
    return ErrorTable(
        w=w,
        p=p,
        x_values=tuple(float(x) for x in xs),
        column_labels=labels,
        rows=tuple(rows),
    )


def table_deviations(
    table: ErrorTable,
    expected: dict[float, Sequence[float]],
    tol: float,
) -> list[dict]:
    """Cells differing from reference values by more than tol.

    Returns one record per offending cell; an empty list means the table
    reproduces the reference within tolerance.
    """
    out = []
    for x, row in zip(table.x_values, table.rows):
        ref = expected.get(x)
        if ref is None:
            continue
        for label, got, want in zip(table.column_labels, row, ref):
            if abs(got - want) > tol:
                out.append(
                    {"x": x, "column": label, "computed": got, "expected": want,
                     "delta": abs(got - want)}
                )
    return out
