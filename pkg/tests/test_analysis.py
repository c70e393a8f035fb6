"""Convergence studies, expansion predictions, bound checks, error tables."""

import io
import math

import numpy as np
import pytest

from expsamp.analysis import (
    MomentPreconditionError,
    combo_bound,
    estimate_order,
    expansion_prediction,
    first_order_bound,
    make_table,
    sup_norm,
    table_deviations,
    vanishing_moment_bound,
    voronovskaya_check,
)
from expsamp.combinations import solve_coefficients
from expsamp.functions import get_function
from expsamp.kernels import parse_kernel_spec
from expsamp.operators import OperatorConfig, apply

B2 = parse_kernel_spec("bspline:2")
B4 = parse_kernel_spec("bspline:4")
COMBO = parse_kernel_spec("combo:4:e^1:e^2")
W_GEOM = [10.0, 20.0, 40.0, 80.0, 160.0]


class TestSupNorm:
    def test_known_maximum(self):
        assert sup_norm(lambda x: math.sin(x), (0.0, math.pi), 501) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_endpoint_maximum(self):
        assert sup_norm(lambda x: x * x, (-2.0, 1.5)) == pytest.approx(4.0, abs=1e-12)


class TestVoronovskaya:
    def test_log_single_rate_exact(self):
        """For f = log the scaled error is 1/2 at every rate: theta f = 1,
        the first moment vanishes, and the expansion terminates."""
        study = voronovskaya_check(get_function("log"), B2, 2.0, W_GEOM)
        assert study.predicted_limit == pytest.approx(0.5, abs=1e-13)
        for s in study.scaled_errors:
            assert s == pytest.approx(0.5, abs=1e-11)
        assert study.deviation_at_largest_w < 1e-11

    def test_first_order_constant_b4(self):
        study = voronovskaya_check(get_function("log2"), B4, 2.0, W_GEOM)
        want = get_function("log2").theta(1)(2.0) / 2.0
        assert study.predicted_limit == pytest.approx(want, rel=1e-12)
        rel = study.deviation_at_largest_w / abs(study.predicted_limit)
        assert rel < 0.02

    def test_second_order_combination_b4(self):
        f = get_function("log3")
        study = voronovskaya_check(f, B4, math.e, W_GEOM, solve_coefficients(2))
        assert study.predicted_limit == pytest.approx(-f.theta(2)(math.e) / 6.0, rel=1e-12)
        assert study.deviation_at_largest_w / abs(study.predicted_limit) < 0.02

    def test_third_order_combination_b4(self):
        f = get_function("log3")
        study = voronovskaya_check(f, B4, math.e, W_GEOM, solve_coefficients(3))
        assert study.predicted_limit == pytest.approx(f.theta(3)(math.e) / 48.0, rel=1e-12)
        assert study.deviation_at_largest_w / abs(study.predicted_limit) < 0.02

    def test_translated_kernel_constant(self):
        f = get_function("log2")
        study = voronovskaya_check(f, COMBO, 2.0, W_GEOM, solve_coefficients(2))
        assert study.predicted_limit == pytest.approx(f.theta(2)(2.0) / 3.0, rel=1e-12)
        assert study.deviation_at_largest_w / abs(study.predicted_limit) < 0.02

    def test_scaled_errors_cauchy_at_top(self):
        """Successive w^q-scaled errors stabilise: the last two ratios are
        within 5% of one another for the oscillatory function."""
        f = get_function("cos4exp")
        study = voronovskaya_check(f, B4, 0.75, W_GEOM)
        ratio = study.scaled_errors[-1] / study.scaled_errors[-2]
        assert abs(ratio - 1.0) < 0.05

    def test_w_list_validation(self):
        with pytest.raises(ValueError):
            voronovskaya_check(get_function("log"), B2, 2.0, [10.0, 20.0, 40.0])
        with pytest.raises(ValueError):
            voronovskaya_check(get_function("log"), B2, 2.0, [10.0, 10.0, 20.0, 40.0])


class TestEstimateOrder:
    def test_single_rate_order_one(self):
        f = get_function("cos4exp")
        grid = np.linspace(0.5, 1.0, 201)
        study = estimate_order(f, B2, None, W_GEOM, grid)
        assert study.fitted_order == pytest.approx(1.0, abs=0.15)
        assert study.fitted_constant > 0.0

    def test_order_three_when_moments_u_independent(self):
        """With the order-4 spline the brackets through order 3 are constant
        in u, so the p = 3 combination genuinely reaches order 3."""
        f = get_function("cos4exp")
        grid = np.linspace(0.5, 1.0, 201)
        study = estimate_order(f, B4, solve_coefficients(3), W_GEOM, grid)
        assert study.fitted_order == pytest.approx(3.0, abs=0.2)

    def test_bspline2_combination_capped_by_oscillating_moment(self):
        """The order-2 spline has m_2(chi, u) = {log u}(1 - {log u}), which
        varies with u; the surviving w^-2 term caps the p = 3 combination at
        order 2 in sup norm even though the coefficient system removes the
        constant part.  Verified against the closed-form error for
        f = (log x)^2 in test_combinations; here the regression sees it."""
        f = get_function("cos4exp")
        grid = np.linspace(0.5, 1.0, 201)
        study = estimate_order(f, B2, solve_coefficients(3), W_GEOM, grid)
        assert 1.7 < study.fitted_order < 2.4

    def test_exact_reproduction_reports_infinite_order(self):
        f = get_function("log")
        grid = np.linspace(0.5, 2.0, 101)
        study = estimate_order(f, B2, solve_coefficients(2), W_GEOM, grid)
        assert study.exact_reproduction
        assert math.isinf(study.fitted_order)
        assert not math.isnan(study.fitted_order)

    def test_needs_five_rates(self):
        with pytest.raises(ValueError):
            estimate_order(get_function("log"), B2, None, [10.0, 20.0, 40.0, 80.0], [1.0])


class TestExpansionPrediction:
    def test_exact_for_log_first_order(self):
        """The expansion is exact for f = log: prediction equals the true
        error 1/(2w)."""
        f = get_function("log")
        for w in (5.0, 40.0):
            for x in (0.7, 1.9):
                pred = expansion_prediction(f, B2, x, w, 1)
                true = apply(f, B2, OperatorConfig(w), x) - math.log(x)
                assert pred == pytest.approx(1.0 / (2.0 * w), abs=1e-13)
                assert pred == pytest.approx(true, abs=1e-12)

    def test_first_order_term_for_vanishing_first_moment(self):
        """Kernels with m_1 = 0 predict (theta f)(x)/(2w) at order 1."""
        f = get_function("cos4exp")
        x, w = 0.8, 25.0
        assert expansion_prediction(f, B4, x, w, 1) == pytest.approx(
            f.theta(1)(x) / (2.0 * w), rel=1e-10
        )

    def test_exact_for_quadratic_log(self):
        """f = (log x)^2 is a Mellin polynomial of degree 2, so the r = 2
        prediction matches the brute-force operator error to round-off."""
        f = get_function("log2")
        for x in (1.0, 1.3, 2.0):
            for w in (25.0, 50.0, 100.0):
                actual = apply(f, B2, OperatorConfig(w), x) - f.f(x)
                assert expansion_prediction(f, B2, x, w, 2) == pytest.approx(
                    actual, abs=1e-12
                )

    @pytest.mark.parametrize("name,x", [("cos4exp", 0.8), ("log3", 1.7)])
    def test_residual_shrinks_faster_than_wr(self, name, x):
        """|actual - predicted| * w^r keeps a ratio < 0.75 per doubling of w,
        with brute-force operator evaluation as the oracle."""
        f = get_function(name)
        r = 2
        prev = None
        for w in (25.0, 50.0, 100.0, 200.0):
            actual = apply(f, B2, OperatorConfig(w), x) - f.f(x)
            resid = abs(actual - expansion_prediction(f, B2, x, w, r)) * w ** r
            if prev is not None:
                assert resid < 0.75 * prev
            prev = resid

    def test_large_rate_no_overflow(self):
        """u = x^w is handled in log scale; x = 2, w = 2000 would overflow."""
        val = expansion_prediction(get_function("log2"), B4, 2.0, 2000.0, 2)
        assert math.isfinite(val)

    def test_order_validation(self):
        with pytest.raises(ValueError):
            expansion_prediction(get_function("log"), B2, 1.0, 10.0, 4)


class TestFirstOrderBound:
    def test_log_lhs_vanishes(self):
        """The expansion is exact on log, so the measured left side is zero
        and any right side dominates."""
        rep = first_order_bound(get_function("log"), B2, 20.0, 1.0)
        assert rep.lhs < 1e-12
        assert rep.satisfied

    def test_oscillatory_satisfied(self):
        rep = first_order_bound(get_function("cos4exp"), B2, 15.0, 0.75)
        assert rep.satisfied
        assert rep.lhs <= rep.rhs

    def test_random_configurations_dominated(self):
        rng = np.random.default_rng(20260808)
        fns = [get_function(n) for n in ("log", "log2", "log3", "cos4exp", "sinmix")]
        for _ in range(25):
            f = fns[rng.integers(len(fns))]
            kernel = (B2, B4)[rng.integers(2)]
            w = float(rng.uniform(5.0, 100.0))
            lo, hi = f.eval_interval
            x = float(rng.uniform(lo, hi))
            rep = first_order_bound(f, kernel, w, x)
            assert rep.satisfied, (f.label, kernel.label, w, x)

    def test_candidate_list_tightens_bound(self):
        """A candidate with smaller theta^2 can only shrink the surrogate."""
        f = get_function("cos4exp")
        loose = first_order_bound(f, B2, 20.0, 0.8)
        tight = first_order_bound(f, B2, 20.0, 0.8, candidates=[get_function("log")])
        assert tight.rhs <= loose.rhs + 1e-12
        assert tight.satisfied

    def test_no_usable_candidate_rejected(self):
        """A function without a second Mellin derivative and an empty
        candidate list leaves nothing to bound the K-functional with."""
        from expsamp.functions import TestFunction

        bare = TestFunction(
            f=lambda x: math.log(x),
            mellin_derivs=(lambda x: 1.0,),
            label="bare-log",
            eval_interval=(0.5, 2.0),
        )
        with pytest.raises(ValueError, match="candidate"):
            first_order_bound(bare, B2, 10.0, 1.0)


class TestVanishingMomentBound:
    def test_b4_order_two_runs_and_holds(self):
        rep = vanishing_moment_bound(get_function("log3"), B4, 12.0, 1.5, 2)
        assert rep.satisfied
        assert rep.lhs <= rep.rhs

    def test_b2_order_two_admissible(self):
        """m_1 vanishes identically for the symmetric splines, so r = 2
        passes the precondition even for order 2 and a report is emitted."""
        rep = vanishing_moment_bound(get_function("log3"), B2, 12.0, 1.5, 2)
        assert rep.satisfied is not None
        assert rep.lhs >= 0.0 and rep.rhs > 0.0

    def test_b2_order_two_constant_undercounts(self):
        """The stated right side uses 1 + (r+2) M_{r+1}, which drops the
        intermediate-moment terms of the cell integral of |u - log x|^3
        (the first-order estimate keeps them: 1 + 3 M_1 + 3 M_2).  For the
        order-2 spline the exact cubic remainder of (log x)^3 at
        half-integer w*log(x) exceeds that right side by ~25%, so the
        report honestly comes back unsatisfied there.  The order-4 spline
        keeps a structural margin and always satisfies it (previous test
        and the acceptance suite)."""
        f = get_function("log3")
        w = 40.0
        x = math.exp((math.floor(w * 0.51) + 0.5) / w)  # w*log(x) at a half-integer
        rep = vanishing_moment_bound(f, B2, w, x, 2)
        assert rep.satisfied is False
        assert 1.1 < rep.lhs / rep.rhs < 1.4

    def test_b2_order_three_precondition_fails(self):
        """m_2 of the order-2 spline is 1/4 at half-integer log u."""
        with pytest.raises(MomentPreconditionError, match="m_2"):
            vanishing_moment_bound(get_function("log3"), B2, 10.0, math.exp(0.05), 3)

    def test_log_with_order_two(self):
        rep = vanishing_moment_bound(get_function("log"), B4, 20.0, 1.0, 2)
        assert rep.lhs <= rep.rhs + 1e-12


class TestComboBound:
    def test_p1_reduces_to_first_order(self):
        f = get_function("log2")
        a = combo_bound(f, B4, solve_coefficients(1), 20.0, 2.0)
        b = first_order_bound(f, B4, 20.0, 2.0)
        assert a.lhs == pytest.approx(b.lhs, abs=1e-15)
        assert a.rhs == pytest.approx(b.rhs, abs=1e-15)
        assert a.satisfied

    def test_p2_not_applicable(self):
        """sum c_i / i = 0 for the order-raising schemes, which zeroes the
        stated right side; the report is emitted but marked not applicable."""
        rep = combo_bound(get_function("log2"), B4, solve_coefficients(2), 20.0, 2.0)
        assert rep.satisfied is None
        assert "not applicable" in rep.surrogate_desc

    def test_p2_log_lhs_zero(self):
        rep = combo_bound(get_function("log"), B2, solve_coefficients(2), 20.0, 2.0)
        assert rep.lhs < 1e-12


class TestThreadCap:
    def test_parallel_study_matches_serial(self, monkeypatch):
        """EXPSAMP_THREADS > 1 must not change results or their order."""
        f = get_function("cos4exp")
        grid = np.linspace(0.5, 1.0, 51)
        serial = estimate_order(f, B2, None, W_GEOM, grid)
        monkeypatch.setenv("EXPSAMP_THREADS", "3")
        threaded = estimate_order(f, B2, None, W_GEOM, grid)
        assert threaded.errors == serial.errors
        assert threaded.fitted_order == serial.fitted_order

    def test_auto_cap(self, monkeypatch):
        monkeypatch.setenv("EXPSAMP_THREADS", "0")
        study = voronovskaya_check(get_function("log"), B2, 2.0, W_GEOM)
        assert study.predicted_limit == pytest.approx(0.5, abs=1e-13)

    def test_invalid_cap_rejected(self, monkeypatch):
        monkeypatch.setenv("EXPSAMP_THREADS", "lots")
        with pytest.raises(ValueError, match="EXPSAMP_THREADS"):
            voronovskaya_check(get_function("log"), B2, 2.0, W_GEOM)


class TestErrorTable:
    def test_constant_rows_zero(self):
        table = make_table(get_function("const:1"), B2, solve_coefficients(2), 10.0, [0.7, 1.3])
        for row in table.rows:
            assert all(v < 1e-13 for v in row)

    def test_shape_and_labels(self):
        table = make_table(get_function("cos4exp"), B2, solve_coefficients(3), 15.0, [0.6, 0.9])
        assert table.column_labels == (
            "abs_err_w15",
            "abs_err_w30",
            "abs_err_w45",
            "abs_err_combo_p3",
        )
        assert len(table.rows) == 2 and len(table.rows[0]) == 4

    def test_rounding(self):
        table = make_table(get_function("cos4exp"), B2, solve_coefficients(2), 15.0, [0.6])
        rounded = table.rounded_rows(4)[0]
        assert all(abs(a - b) <= 5e-5 for a, b in zip(rounded, table.rows[0]))

    def test_csv_output(self):
        table = make_table(get_function("cos4exp"), B2, solve_coefficients(2), 15.0, [0.6, 0.9])
        buf = io.StringIO()
        table.to_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "x,abs_err_w15,abs_err_w30,abs_err_combo_p2"
        assert len(lines) == 3
        assert all(len(line.split(",")) == 4 for line in lines[1:])

    def test_latex_output(self):
        table = make_table(get_function("cos4exp"), B2, solve_coefficients(2), 15.0, [0.6])
        buf = io.StringIO()
        table.to_latex(buf)
        text = buf.getvalue()
        assert text.startswith("\\begin{tabular}")
        assert text.rstrip().endswith("\\end{tabular}")

    def test_deviation_report(self):
        table = make_table(get_function("cos4exp"), B2, solve_coefficients(2), 15.0, [0.6])
        good = {0.6: tuple(table.rows[0])}
        assert table_deviations(table, good, 1e-9) == []
        bad = {0.6: tuple(v + 0.01 for v in table.rows[0])}
        report = table_deviations(table, bad, 2e-3)
        assert len(report) == 3
        assert report[0]["column"] == "abs_err_w15"
        assert report[0]["delta"] == pytest.approx(0.01, abs=1e-9)
