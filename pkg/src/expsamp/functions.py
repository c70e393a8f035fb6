"""Test functions bundled with closed-form Mellin derivatives.

The Mellin derivative is theta f = x * f'(x); iterating,

    theta^2 f = x f' + x^2 f''
    theta^3 f = x f' + 3 x^2 f'' + x^3 f'''

so a function with hand-derived ordinary derivatives up to third order
yields theta f, theta^2 f, theta^3 f in closed form.  The registry below
holds the functions used in the numerical experiments; ``const:<c>`` is
parsed dynamically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["TestFunction", "BUILTIN_FUNCTIONS", "get_function"]

Real = Callable[[float], float]


@dataclass(frozen=True)
class TestFunction:
    """A function on the positive half-line with its Mellin derivatives.

    ``mellin_derivs`` holds (theta f, theta^2 f, theta^3 f).  ``eval_interval``
    is where sup norms and errors are measured.
    """

    __test__ = False  # not a pytest collection target

    f: Real
    mellin_derivs: tuple[Real, ...]
    label: str
    eval_interval: tuple[float, float]

    def theta(self, j: int) -> Real:
        """theta^j f for j = 0..len(mellin_derivs); raises if unavailable."""
        if j == 0:
            return self.f
        if 1 <= j <= len(self.mellin_derivs):
            return self.mellin_derivs[j - 1]
        raise ValueError(f"{self.label}: Mellin derivative of order {j} not available")

    @property
    def max_theta(self) -> int:
        return len(self.mellin_derivs)

    @classmethod
    def from_derivatives(
        cls,
        label: str,
        f: Real,
        df: Real,
        d2f: Real,
        d3f: Real,
        eval_interval: tuple[float, float],
    ) -> "TestFunction":
        """Build from ordinary derivatives f', f'', f'''."""
        theta1 = lambda x: x * df(x)
        theta2 = lambda x: x * df(x) + x * x * d2f(x)
        theta3 = lambda x: x * df(x) + 3.0 * x * x * d2f(x) + x ** 3 * d3f(x)
        return cls(f=f, mellin_derivs=(theta1, theta2, theta3), label=label,
                   eval_interval=eval_interval)


def _constant(c: float) -> TestFunction:
    zero = lambda x: 0.0
    return TestFunction(
        f=lambda x: c,
        mellin_derivs=(zero, zero, zero),
        label=f"const:{c:g}",
        eval_interval=(0.5, 3.0),
    )


def _log_power(p: int) -> TestFunction:
    # (log x)^p for p = 1, 2, 3; theta lowers the power by one each time
    derivs = {
        1: (lambda x: 1.0 / x,
            lambda x: -1.0 / x ** 2,
            lambda x: 2.0 / x ** 3),
        2: (lambda x: 2.0 * math.log(x) / x,
            lambda x: (2.0 - 2.0 * math.log(x)) / x ** 2,
            lambda x: (4.0 * math.log(x) - 6.0) / x ** 3),
        3: (lambda x: 3.0 * math.log(x) ** 2 / x,
            lambda x: (6.0 * math.log(x) - 3.0 * math.log(x) ** 2) / x ** 2,
            lambda x: (6.0 - 18.0 * math.log(x) + 6.0 * math.log(x) ** 2) / x ** 3),
    }[p]
    label = "log" if p == 1 else f"log{p}"
    return TestFunction.from_derivatives(
        label, lambda x: math.log(x) ** p, *derivs, eval_interval=(0.5, 3.0)
    )


def _cos4exp() -> TestFunction:
    # f(x) = 1 - cos(4 e^x): oscillatory with x as the operator argument
    f = lambda x: 1.0 - math.cos(4.0 * math.exp(x))
    df = lambda x: 4.0 * math.exp(x) * math.sin(4.0 * math.exp(x))
    d2f = lambda x: (4.0 * math.exp(x) * math.sin(4.0 * math.exp(x))
                     + 16.0 * math.exp(2.0 * x) * math.cos(4.0 * math.exp(x)))
    d3f = lambda x: (4.0 * math.exp(x) * math.sin(4.0 * math.exp(x))
                     + 48.0 * math.exp(2.0 * x) * math.cos(4.0 * math.exp(x))
                     - 64.0 * math.exp(3.0 * x) * math.sin(4.0 * math.exp(x)))
    return TestFunction.from_derivatives("cos4exp", f, df, d2f, d3f, (0.5, 1.0))


def _sinmix() -> TestFunction:
    # g(x) = sin(2 pi x) + 2 sin(pi x / 2)
    pi = math.pi
    f = lambda x: math.sin(2.0 * pi * x) + 2.0 * math.sin(0.5 * pi * x)
    df = lambda x: 2.0 * pi * math.cos(2.0 * pi * x) + pi * math.cos(0.5 * pi * x)
    d2f = lambda x: (-4.0 * pi ** 2 * math.sin(2.0 * pi * x)
                     - 0.5 * pi ** 2 * math.sin(0.5 * pi * x))
    d3f = lambda x: (-8.0 * pi ** 3 * math.cos(2.0 * pi * x)
                     - 0.25 * pi ** 3 * math.cos(0.5 * pi * x))
    return TestFunction.from_derivatives("sinmix", f, df, d2f, d3f, (0.5 * pi, 4.0))


BUILTIN_FUNCTIONS: dict[str, Callable[[], TestFunction]] = {
    "log": lambda: _log_power(1),
    "log2": lambda: _log_power(2),
    "log3": lambda: _log_power(3),
    "cos4exp": _cos4exp,
    "sinmix": _sinmix,
}


def get_function(name: str) -> TestFunction:
    """Look up a built-in test function; ``const:<c>`` takes any constant."""
    if name.startswith("const:"):
        try:
            return _constant(float(name.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"bad constant in function name {name!r}") from None
    if name == "const":
        return _constant(1.0)
    try:
        return BUILTIN_FUNCTIONS[name]()
    except KeyError:
        known = ", ".join(sorted(BUILTIN_FUNCTIONS) + ["const:<c>"])
        raise ValueError(f"unknown function {name!r} (known: {known})") from None
