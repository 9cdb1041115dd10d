"""Numerical harnesses for the improved Sobolev and Poincare-type inequalities."""

from .families import FamilySpec, make_function, random_function
from .heat import heat_kernel_bound_check
from .p1 import (
    alpha_grid,
    approx_norm_check,
    band_limit_approx,
    layer_cake_integral,
    strong_p1_proof_trace,
    threshold_apply,
    threshold_lemma_check,
    weak_p1_trace,
)
from .params import ParamError, SoboParams, ThresholdSpec, validate_params
from .poincare import (
    PoincareResult,
    dyadic_kernel_regression,
    m0_kernel_t_scaling,
    poincare_proof_trace,
    poincare_ratio,
)
from .report import InequalityReport
from .sobolev import check_improved_sobolev, estimate_best_constant, inequality_sides, pointwise_split_trace

__all__ = [
    "FamilySpec", "make_function", "random_function", "heat_kernel_bound_check", "alpha_grid",
    "approx_norm_check", "band_limit_approx", "layer_cake_integral", "strong_p1_proof_trace",
    "threshold_apply", "threshold_lemma_check", "weak_p1_trace", "ParamError", "SoboParams",
    "ThresholdSpec", "validate_params", "PoincareResult", "dyadic_kernel_regression",
    "m0_kernel_t_scaling", "poincare_proof_trace", "poincare_ratio", "InequalityReport",
    "check_improved_sobolev", "estimate_best_constant", "inequality_sides", "pointwise_split_trace",
]
