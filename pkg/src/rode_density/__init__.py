"""Density approximation for random non-autonomous linear ODEs.

The solution of x'(t) = a(t) x(t) + b(t), x(t0) = x0, with stochastic-process
coefficients is approximated through truncated orthogonal series expansions
of a and b.  The density of the truncated solution at a fixed time has exact
integral representations; this package evaluates them by tensor quadrature or
Monte Carlo and ships the verification tooling around them (convergence
tables, normalization audits, theorem applicability checks) plus a CLI.

Submodules are loaded on first attribute access so the CLI can pin thread
environment variables before numpy comes in.
"""

import importlib

__version__ = "0.1.0"

# public name -> owning submodule
_EXPORT_MAP = {
    "Regularity": "distributions",
    "ScalarDistribution": "distributions",
    "UnsupportedOperationError": "distributions",
    "beta_dist": "distributions",
    "custom": "distributions",
    "dist_from_json": "distributions",
    "gamma_dist": "distributions",
    "normal": "distributions",
    "quartic_cauchy": "distributions",
    "support_sign": "distributions",
    "uniform": "distributions",
    "CovKernel": "kl",
    "DomainError": "kl",
    "KLProcess": "kl",
    "KLTerm": "kl",
    "NonPSDKernelError": "kl",
    "SineCoef": "kl",
    "brownian_bridge": "kl",
    "brownian_motion": "kl",
    "eval_truncated": "kl",
    "explicit_series": "kl",
    "nystrom_solve": "kl",
    "parseval_partial": "kl",
    "proc_from_json": "kl",
    "remark_bound": "kl",
    "reorder": "kl",
    "truncate": "kl",
    "NumericalQualityError": "quadrature",
    "QuadratureCapError": "quadrature",
    "QuadratureSpec": "quadrature",
    "UnsupportedRuleError": "quadrature",
    "gauss_rule": "quadrature",
    "iter_tensor_chunks": "quadrature",
    "mc_expectation": "quadrature",
    "tensor_integrate": "quadrature",
    "ExponentOverflowError": "solution",
    "K_a": "solution",
    "PathSample": "solution",
    "ProblemSpec": "solution",
    "S_b": "solution",
    "paths_to_csv": "solution",
    "residual_check": "solution",
    "sample_paths": "solution",
    "x_trunc": "solution",
    "DensityGrid": "density",
    "FormulaPreconditionError": "density",
    "HypothesisError": "density",
    "PointEvaluationError": "density",
    "SingularDenominatorError": "density",
    "UndefinedPointError": "density",
    "density_grid": "density",
    "eta1_denominator": "density",
    "exact_gaussian_curve": "density",
    "exact_gaussian_homogeneous": "density",
    "f1_complete": "density",
    "f1_eta1_form": "density",
    "f1_homogeneous": "density",
    "f1_mc": "density",
    "f1_xi1_form": "density",
    "ConvergenceReport": "verify",
    "H4Norm": "verify",
    "HypothesisReport": "verify",
    "convergence_table": "verify",
    "h4_norm_estimate": "verify",
    "hypothesis_report": "verify",
    "linf_error": "verify",
    "normalization_audit": "verify",
    "EXAMPLES": "examples",
    "ExampleDef": "examples",
    "FigureSpec": "examples",
    "example_names": "examples",
    "get_example": "examples",
}

__all__ = sorted(_EXPORT_MAP) + ["__version__"]


def __getattr__(name):
    modname = _EXPORT_MAP.get(name)
    if modname is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(importlib.import_module(f".{modname}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORT_MAP))
