"""Kantorovich exponential sampling operators.

Reconstruction of functions on the positive half-line from exponentially
spaced local-average samples, with Mellin B-spline kernels, discrete
moment analysis, and order-raising linear combinations of operators.
"""

from .analysis import (
    BoundReport,
    ConvergenceStudy,
    ErrorTable,
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
from .combinations import (
    CombinationScheme,
    apply_combo,
    combo_moment_bracket,
    solve_coefficients,
)
from .functions import BUILTIN_FUNCTIONS, TestFunction, get_function
from .kernels import (
    Kernel,
    KernelSpecError,
    MellinBSplineSpec,
    TranslatedComboSpec,
    bspline_eval,
    bspline_mellin_transform,
    build_bspline_kernel,
    build_translated_combo,
    parse_kernel_spec,
)
from .moments import (
    MomentReport,
    absolute_moment,
    absolute_moment_sup,
    algebraic_moment,
    build_moment_report,
    kantorovich_bracket,
    moment_tail,
    poisson_moment,
)
from .operators import (
    GridPoint,
    MissingSampleError,
    OperatorConfig,
    SampleFormatError,
    SampleSeries,
    apply,
    apply_from_samples,
    apply_grid,
    cell_mean,
    read_sample_csv,
    write_grid_csv,
    write_sample_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BUILTIN_FUNCTIONS",
    "CombinationScheme",
    "ConvergenceStudy",
    "ErrorTable",
    "GridPoint",
    "Kernel",
    "KernelSpecError",
    "MellinBSplineSpec",
    "MissingSampleError",
    "MomentPreconditionError",
    "MomentReport",
    "OperatorConfig",
    "SampleFormatError",
    "SampleSeries",
    "TestFunction",
    "TranslatedComboSpec",
    "absolute_moment",
    "absolute_moment_sup",
    "algebraic_moment",
    "apply",
    "apply_combo",
    "apply_from_samples",
    "apply_grid",
    "bspline_eval",
    "bspline_mellin_transform",
    "build_bspline_kernel",
    "build_moment_report",
    "build_translated_combo",
    "cell_mean",
    "combo_bound",
    "combo_moment_bracket",
    "estimate_order",
    "expansion_prediction",
    "first_order_bound",
    "get_function",
    "kantorovich_bracket",
    "make_table",
    "moment_tail",
    "parse_kernel_spec",
    "poisson_moment",
    "read_sample_csv",
    "solve_coefficients",
    "sup_norm",
    "table_deviations",
    "vanishing_moment_bound",
    "voronovskaya_check",
    "write_grid_csv",
    "write_sample_csv",
]
