"""Discrete moments of sampling kernels.

The algebraic moment of order nu at u is

    m_nu(chi, u) = sum_k chi(e^-k * u) * (k - log u)^nu

and the absolute moment replaces both factors by absolute values.  Both
are 1-periodic functions of log(u).  For kernels with transform metadata
the same quantity can be evaluated on the frequency side,

    m_nu(chi, u) = i^nu * sum_m phi^(nu)(2*pi*m) * u^(-2*pi*i*m),

where phi(t) is the transform at the imaginary point it; agreement of the
two routes is the main correctness check for both.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .kernels import Kernel

__all__ = [
    "MomentReport",
    "algebraic_moment",
    "algebraic_moment_at_log",
    "absolute_moment",
    "absolute_moment_at_log",
    "absolute_moment_sup",
    "poisson_moment",
    "kantorovich_bracket",
    "kantorovich_bracket_at_log",
    "moment_tail",
    "build_moment_report",
]

MAX_MOMENT_ORDER = 8

_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


def _check_order(nu: int) -> None:
    if not 0 <= nu <= MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must be in 0..{MAX_MOMENT_ORDER}, got {nu}")


def _window(kernel: Kernel, t: float) -> range:
    """Integers k with t - k inside the log-support, widened by one on each
    side; the extra terms evaluate to exactly 0."""
    a, b = kernel.log_support
    return range(math.ceil(t - b) - 1, math.floor(t - a) + 2)


def algebraic_moment_at_log(kernel: Kernel, nu: int, log_u: float) -> float:
    """m_nu(chi, u) with u given as log(u); avoids overflow for u = x^w."""
    _check_order(nu)
    return math.fsum(
        kernel.eval_log(log_u - k) * (k - log_u) ** nu for k in _window(kernel, log_u)
    )


def algebraic_moment(kernel: Kernel, nu: int, u: float) -> float:
    """Algebraic moment m_nu(chi, u) = sum_k chi(e^-k u)(k - log u)^nu."""
    if u <= 0.0:
        raise ValueError(f"moment location must be positive, got {u}")
    return algebraic_moment_at_log(kernel, nu, math.log(u))


def absolute_moment_at_log(kernel: Kernel, nu: int, log_u: float) -> float:
    _check_order(nu)
    return math.fsum(
        abs(kernel.eval_log(log_u - k)) * abs(k - log_u) ** nu
        for k in _window(kernel, log_u)
    )


def absolute_moment(kernel: Kernel, nu: int, u: float) -> float:
    """Absolute moment M_nu(chi, u); dominates |m_nu(chi, u)| pointwise."""
    if u <= 0.0:
        raise ValueError(f"moment location must be positive, got {u}")
    return absolute_moment_at_log(kernel, nu, math.log(u))


def absolute_moment_sup(kernel: Kernel, nu: int, grid_size: int = 4096) -> float:
    """Estimate of M_nu(chi) = sup_u M_nu(chi, u).

    The map s -> M_nu(chi, e^s) is 1-periodic, so the sup is taken over a
    dense grid on [0, 1) followed by local zooming around the best point
    down to argument resolution ~1e-11.
    """
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    step = 1.0 / grid_size
    best_s = 0.0
    best = -math.inf
    for i in range(grid_size):
        s = i * step
        v = absolute_moment_at_log(kernel, nu, s)
        if v > best:
            best, best_s = v, s
    radius = step
    while radius > 1e-11:
        lo = best_s - radius
        h = 2.0 * radius / 32
        for i in range(33):
            s = lo + i * h
            v = absolute_moment_at_log(kernel, nu, s)
            if v > best:
                best, best_s = v, s
        radius /= 8.0
    return best


@lru_cache(maxsize=None)
def _absolute_moment_sup_cached(kernel: Kernel, nu: int) -> float:
    # Kernel hashes by identity; safe because kernels are immutable.
    return absolute_moment_sup(kernel, nu)


def poisson_moment(kernel: Kernel, nu: int, u: float, K_max: int) -> float:
    """Frequency-side evaluation of m_nu(chi, u).

    Sums i^nu * phi^(nu)(2*pi*m) * u^(-2*pi*i*m) over |m| <= K_max using the
    kernel's analytic transform derivatives.  Exact (up to round-off) when
    every omitted frequency has a vanishing derivative, e.g. order-n
    B-splines with nu < n need only K_max = 0.
    """
    _check_order(nu)
    if u <= 0.0:
        raise ValueError(f"moment location must be positive, got {u}")
    if K_max < 0:
        raise ValueError(f"K_max must be >= 0, got {K_max}")
    derivs = kernel.mellin_transform_derivs
    if derivs is None:
        raise ValueError(f"kernel {kernel.label!r} carries no transform derivative metadata")
    t = math.log(u)
    total = complex(derivs(nu, 0.0))
    for m in range(1, K_max + 1):
        freq = 2.0 * math.pi * m
        phase = cmath.exp(-1j * freq * t)
        total += complex(derivs(nu, freq)) * phase
        total += complex(derivs(nu, -freq)) / phase
    return (_I_POWERS[nu % 4] * total).real


def kantorovich_bracket_at_log(kernel: Kernel, i: int, log_u: float) -> float:
    """sum_{j=1}^{i+1} C(i+1, j) * m_{i-j+1}(chi, u) with u given as log(u).

    This is the coefficient the cell-averaging produces on
    (theta^i f)(x) / ((i+1)! w^i) in the operator's expansion.
    """
    if not 0 <= i <= 6:
        raise ValueError(f"bracket order must be in 0..6, got {i}")
    return math.fsum(
        math.comb(i + 1, j) * algebraic_moment_at_log(kernel, i - j + 1, log_u)
        for j in range(1, i + 2)
    )


def kantorovich_bracket(kernel: Kernel, i: int, u: float) -> float:
    if u <= 0.0:
        raise ValueError(f"moment location must be positive, got {u}")
    return kantorovich_bracket_at_log(kernel, i, math.log(u))


def moment_tail(kernel: Kernel, r: int, u: float, gamma: float) -> float:
    """Tail sum of |chi(e^-k u)| |k - log u|^r over |k - log u| > gamma.

    Exactly 0 once gamma exceeds the log-support radius, which is the
    compact-support form of the usual decay condition on kernels.
    """
    _check_order(r)
    t = math.log(u)
    return math.fsum(
        abs(kernel.eval_log(t - k)) * abs(k - t) ** r
        for k in _window(kernel, t)
        if abs(k - t) > gamma
    )


@dataclass(frozen=True)
class MomentReport:
    """One row of a kernel moment table."""

    order: int
    algebraic: float
    absolute_sup: float
    u_independent: bool
    at_u: Optional[float] = None


def build_moment_report(
    kernel: Kernel,
    nu: int,
    at_u: float = 1.0,
    grid_size: int = 4096,
    probe_points: int = 64,
) -> MomentReport:
    """Compute m_nu at ``at_u``, the sup of M_nu, and check numerically
    whether m_nu is constant in u (probed over one period of log u)."""
    algebraic = algebraic_moment(kernel, nu, at_u)
    sup = absolute_moment_sup(kernel, nu, grid_size)
    independent = True
    for i in range(probe_points):
        s = (i + 0.5) / probe_points
        if abs(algebraic_moment_at_log(kernel, nu, s) - algebraic) > 1e-10:
            independent = False
            break
    return MomentReport(
        order=nu,
        algebraic=algebraic,
        absolute_sup=sup,
        u_independent=independent,
        at_u=at_u,
    )
