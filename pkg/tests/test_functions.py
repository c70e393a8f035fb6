"""Built-in test functions: registry behavior and derivative consistency."""

import math

import numpy as np
import pytest

from expsamp.functions import BUILTIN_FUNCTIONS, TestFunction, get_function


def _mellin_fd(g, x: float) -> float:
    """x * g'(x) by Richardson-extrapolated central differences."""
    h = 1e-4 * max(1.0, abs(x))
    d_h = (g(x + h) - g(x - h)) / (2.0 * h)
    d_2h = (g(x + 2 * h) - g(x - 2 * h)) / (4.0 * h)
    return x * (4.0 * d_h - d_2h) / 3.0


class TestRegistry:
    def test_known_names(self):
        for name in ("log", "log2", "log3", "cos4exp", "sinmix"):
            f = get_function(name)
            assert f.label == name
            assert f.max_theta == 3

    def test_constant_parsing(self):
        f = get_function("const:2.5")
        assert f.f(0.3) == 2.5
        assert f.theta(1)(0.3) == 0.0
        assert f.theta(3)(9.0) == 0.0

    def test_unknown_rejected(self):
        with pytest.raises(ValueError, match="unknown function"):
            get_function("exp")
        with pytest.raises(ValueError, match="bad constant"):
            get_function("const:abc")

    def test_missing_derivative_order_rejected(self):
        with pytest.raises(ValueError):
            get_function("log").theta(4)


class TestDerivativeConsistency:
    """Each stored theta^j must match x d/dx applied to theta^(j-1)."""

    @pytest.mark.parametrize("name", sorted(BUILTIN_FUNCTIONS))
    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_finite_difference_chain(self, name, j):
        f = get_function(name)
        lo, hi = f.eval_interval
        prev = f.theta(j - 1)
        cur = f.theta(j)
        for x in np.linspace(lo * 1.02, hi * 0.98, 23):
            fd = _mellin_fd(prev, x)
            assert fd == pytest.approx(cur(x), abs=1e-6 * (1.0 + abs(cur(x))))

    def test_log_family_closed_forms(self):
        f = get_function("log3")
        for x in (0.6, 1.0, 2.3):
            L = math.log(x)
            assert f.theta(1)(x) == pytest.approx(3.0 * L * L, rel=1e-13, abs=1e-13)
            assert f.theta(2)(x) == pytest.approx(6.0 * L, rel=1e-13, abs=1e-13)
            assert f.theta(3)(x) == pytest.approx(6.0, rel=1e-13)

    def test_from_derivatives_composition(self):
        """theta^2 f = x f' + x^2 f'' and theta^3 adds 3x^2 f'' + x^3 f'''."""
        f = TestFunction.from_derivatives(
            "cube",
            lambda x: x ** 3,
            lambda x: 3.0 * x ** 2,
            lambda x: 6.0 * x,
            lambda x: 6.0,
            (0.5, 2.0),
        )
        for x in (0.7, 1.4):
            assert f.theta(1)(x) == pytest.approx(3.0 * x ** 3, rel=1e-14)
            assert f.theta(2)(x) == pytest.approx(9.0 * x ** 3, rel=1e-14)
            assert f.theta(3)(x) == pytest.approx(27.0 * x ** 3, rel=1e-14)
