"""Density formulas for the solution of the random linear ODE.

All four deterministic formulas express the density of the truncated solution
at time t as an expectation over the random inputs and are evaluated with the
tensor rules from the quadrature module; the expectation form is the same
integrand under plain Monte Carlo.

The evaluation is organized in two phases so a whole x-grid shares one pass
over the integration nodes: per block of nodes, compute the x-independent
features (the exponential drift factor and the forcing integral), then sweep
the x values against them.  This keeps the dominant cost proportional to the
node count, not node count times grid size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .distributions import ScalarDistribution, support_sign
from .kl import _gl
from .quadrature import QuadratureSpec, iter_tensor_chunks, NumericalQualityError
from .solution import ProblemSpec, ExponentOverflowError

__all__ = [
    "DensityGrid",
    "f1_complete",
    "f1_homogeneous",
    "f1_eta1_form",
    "f1_xi1_form",
    "f1_mc",
    "eta1_denominator",
    "exact_gaussian_homogeneous",
    "exact_gaussian_curve",
    "density_grid",
    "FormulaPreconditionError",
    "UndefinedPointError",
    "SingularDenominatorError",
    "HypothesisError",
    "PointEvaluationError",
]

_EXP_LIMIT = 700.0
_VALUE_BLOCK = 4_000_000  # max elements of an (x-block, nodes) intermediate
_FORMULAS = ("auto", "f1n", "f1homo", "eta1", "xi1")


class FormulaPreconditionError(ValueError):
    """The requested formula does not apply to this problem."""


class UndefinedPointError(FormulaPreconditionError):
    """The formula is undefined at the requested point (x=0 isolation)."""


class SingularDenominatorError(FormulaPreconditionError):
    """The isolated-mode denominator vanishes (t = t0)."""


class HypothesisError(FormulaPreconditionError):
    """A numeric hypothesis check failed (mode sign or vanishing integral)."""


class PointEvaluationError(RuntimeError):
    """Wraps a per-point failure with its (x, t, N) location."""

    def __init__(self, message: str, x=None, t=None, N=None):
        super().__init__(message)
        self.x = x
        self.t = t
        self.N = N


# ---------------------------------------------------------------------------
# per-formula evaluation plans
# ---------------------------------------------------------------------------


@dataclass
class _Plan:
    labels: list
    dists: list
    features: Callable
    value: Callable


def _check_t(spec: ProblemSpec, t: float) -> float:
    t = float(t)
    t0, t1 = spec.proc_a.interval
    if not (t0 - 1e-12 <= t <= t1 + 1e-12):
        raise FormulaPreconditionError(f"t={t} outside the problem interval [{t0}, {t1}]")
    return t


def _guard_exponent(k: np.ndarray, strict: bool) -> None:
    if strict and k.size and float(np.max(np.abs(k))) > _EXP_LIMIT:
        raise ExponentOverflowError(
            f"drift integral magnitude {float(np.max(np.abs(k))):.6g} exceeds "
            f"{_EXP_LIMIT:g}; exp() would overflow"
        )


def _inner_rule(spec: ProblemSpec, t: float, n: int):
    x, w = _gl(n)
    t0 = spec.t0
    return 0.5 * (t + t0) + 0.5 * (t - t0) * x, 0.5 * (t - t0) * w


def _plan_complete(spec: ProblemSpec, N: int, t: float, quad: QuadratureSpec) -> _Plan:
    if spec.proc_b is None:
        raise FormulaPreconditionError(
            "problem has no forcing process; use f1_homogeneous"
        )
    n_a = spec.proc_a.n_terms_available(N)
    n_b = spec.proc_b.n_terms_available(N)  # N = M throughout
    m_t = float(spec.proc_a.mean_integral([t])[0])
    c_t = spec.proc_a.coef_integrals([t], n_a)[0]
    s_nodes, s_w = _inner_rule(spec, t, quad.inner_time_nodes)
    m_s = spec.proc_a.mean_integral(s_nodes)
    c_s = spec.proc_a.coef_integrals(s_nodes, n_a)
    mu_b = spec.proc_b.mean_values(s_nodes)
    cv_s = spec.proc_b.coef_values(s_nodes, n_b)
    f0 = spec.x0_dist.pdf

    def features(pts, strict):
        xi, eta = pts[:, :n_a], pts[:, n_a:]
        k_t = m_t + (xi @ c_t if n_a else 0.0)
        k_s = m_s[None, :] + (xi @ c_s.T if n_a else 0.0)
        _guard_exponent(np.atleast_1d(k_t), strict)
        _guard_exponent(k_s, strict)
        decay = np.exp(-k_s)
        forcing = mu_b[None, :] + (eta @ cv_s.T if n_b else 0.0)
        return np.exp(-k_t) * np.ones(len(pts)), (forcing * decay) @ s_w

    def value(xcol, feats):
        y, z = feats
        return f0(xcol * y - z) * y

    labels = [f"xi{j}" for j in range(1, n_a + 1)] + [f"eta{i}" for i in range(1, n_b + 1)]
    return _Plan(labels, spec.proc_a.coeff_dists(n_a) + spec.proc_b.coeff_dists(n_b),
                 features, value)


def _plan_homogeneous(spec: ProblemSpec, N: int, t: float, quad: QuadratureSpec) -> _Plan:
    if spec.proc_b is not None:
        raise FormulaPreconditionError(
            "problem has a forcing process; use f1_complete"
        )
    n_a = spec.proc_a.n_terms_available(N)
    m_t = float(spec.proc_a.mean_integral([t])[0])
    c_t = spec.proc_a.coef_integrals([t], n_a)[0]
    f0 = spec.x0_dist.pdf

    def features(pts, strict):
        k_t = m_t + (pts @ c_t if n_a else np.zeros(len(pts)))
        _guard_exponent(np.atleast_1d(k_t), strict)
        return (np.exp(-k_t) * np.ones(len(pts)),)

    def value(xcol, feats):
        (y,) = feats
        return f0(xcol * y) * y

    return _Plan([f"xi{j}" for j in range(1, n_a + 1)], spec.proc_a.coeff_dists(n_a),
                 features, value)


def _check_psi1_positive(spec: ProblemSpec) -> None:
    t0, t1 = spec.proc_b.interval
    grid = np.linspace(t0, t1, 1002)[1:-1]
    vals = spec.proc_b.coef_values(grid, 1)[:, 0]
    if np.min(vals) <= 0:
        raise HypothesisError(
            "leading forcing eigenfunction is not positive on the open interval; "
            "the isolated-mode formula needs psi_1 > 0 (reorder modes or use f1_complete)"
        )


def _plan_eta1(spec: ProblemSpec, N: int, t: float, quad: QuadratureSpec) -> _Plan:
    if spec.proc_b is None or spec.proc_b.n_terms_available(1) < 1:
        raise FormulaPreconditionError(
            "the eta1-isolated formula needs a forcing process with at least one mode"
        )
    if t <= spec.t0:
        raise SingularDenominatorError(
            "eta1-isolated formula is singular at t = t0 (zero-length forcing integral)"
        )
    _check_psi1_positive(spec)
    n_a = spec.proc_a.n_terms_available(N)
    n_b = spec.proc_b.n_terms_available(N)
    m_t = float(spec.proc_a.mean_integral([t])[0])
    c_t = spec.proc_a.coef_integrals([t], n_a)[0]
    s_nodes, s_w = _inner_rule(spec, t, quad.inner_time_nodes)
    m_s = spec.proc_a.mean_integral(s_nodes)
    c_s = spec.proc_a.coef_integrals(s_nodes, n_a)
    mu_b = spec.proc_b.mean_values(s_nodes)
    cv_s = spec.proc_b.coef_values(s_nodes, n_b)
    f_eta1 = spec.proc_b.term(1).dist.pdf

    def features(pts, strict):
        x0 = pts[:, 0]
        xi = pts[:, 1 : 1 + n_a]
        eta_rest = pts[:, 1 + n_a :]
        k_t = m_t + (xi @ c_t if n_a else 0.0)
        k_s = m_s[None, :] + (xi @ c_s.T if n_a else 0.0)
        _guard_exponent(np.atleast_1d(k_t), strict)
        _guard_exponent(k_s, strict)
        decay = np.exp(-k_s)
        den = decay @ (s_w * cv_s[:, 0])
        rest = mu_b[None, :] + (eta_rest @ cv_s[:, 1:].T if n_b > 1 else 0.0)
        shift = (rest * decay) @ s_w
        return np.exp(-k_t) * np.ones(len(pts)), den, shift, x0

    def value(xcol, feats):
        y, den, shift, x0 = feats
        return f_eta1((xcol * y - x0 - shift) / den) * y / den

    labels = (["x0"] + [f"xi{j}" for j in range(1, n_a + 1)]
              + [f"eta{i}" for i in range(2, n_b + 1)])
    dists = [spec.x0_dist] + spec.proc_a.coeff_dists(n_a) + spec.proc_b.coeff_dists(n_b)[1:]
    return _Plan(labels, dists, features, value)


def _plan_xi1(spec: ProblemSpec, N: int, t: float, quad: QuadratureSpec) -> _Plan:
    if spec.proc_b is not None:
        raise FormulaPreconditionError(
            "the xi1-isolated formula applies to homogeneous problems; use f1_eta1_form"
        )
    n_a = spec.proc_a.n_terms_available(N)
    if n_a < 1:
        raise FormulaPreconditionError("the xi1-isolated formula needs at least one drift mode")
    m_t = float(spec.proc_a.mean_integral([t])[0])
    c_t = spec.proc_a.coef_integrals([t], n_a)[0]
    c1 = float(c_t[0])
    if abs(c1) <= 1e-12:
        raise HypothesisError(
            "int phi_1 over [t0, t] is numerically zero; the xi1-isolated "
            "denominator vanishes (reorder modes or use f1_homogeneous)"
        )
    f_xi1 = spec.proc_a.term(1).dist.pdf

    def features(pts, strict):
        x0 = pts[:, 0]
        rest = pts[:, 1:] @ c_t[1:] if n_a > 1 else np.zeros(len(pts))
        with np.errstate(divide="ignore"):
            log_x0 = np.log(np.abs(x0))
        return x0, rest, log_x0

    def value(xcol, feats):
        x0, rest, log_x0 = feats
        same_side = (x0 * xcol) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = (np.log(np.abs(xcol)) - log_x0 - m_t - rest) / c1
            vals = f_xi1(np.where(same_side, arg, 0.0)) / (np.abs(xcol) * abs(c1))
        return np.where(same_side, vals, 0.0)

    labels = ["x0"] + [f"xi{j}" for j in range(2, n_a + 1)]
    dists = [spec.x0_dist] + spec.proc_a.coeff_dists(n_a)[1:]
    return _Plan(labels, dists, features, value)


_PLANNERS = {
    "f1n": _plan_complete,
    "f1homo": _plan_homogeneous,
    "eta1": _plan_eta1,
    "xi1": _plan_xi1,
}


# ---------------------------------------------------------------------------
# curve engines
# ---------------------------------------------------------------------------


def _tensor_curve(plan: _Plan, quad: QuadratureSpec, xs: np.ndarray) -> np.ndarray:
    totals = np.zeros(xs.size)
    for pts, w in iter_tensor_chunks(plan.dists, quad, plan.labels):
        feats = plan.features(pts, True)
        block = max(1, _VALUE_BLOCK // max(len(w), 1))
        for i in range(0, xs.size, block):
            xcol = xs[i : i + block, None]
            totals[i : i + block] += plan.value(xcol, feats) @ w
    return totals


def _sample_dims(dists, n: int, seed_list: list) -> np.ndarray:
    cols = [d.sample(np.random.default_rng(seed_list + [k]), n) for k, d in enumerate(dists)]
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def _mc_curve(plan: _Plan, n_samples: int, seed, xs: np.ndarray):
    seed_list = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    n = int(n_samples)
    samples = _sample_dims(plan.dists, n, seed_list)
    sums = np.zeros(xs.size)
    sumsq = np.zeros(xs.size)
    counts = np.zeros(xs.size, dtype=np.int64)
    chunk = 1 << 17
    for start in range(0, n, chunk):
        pts = samples[start : start + chunk]
        feats = plan.features(pts, False)
        block = max(1, _VALUE_BLOCK // max(len(pts), 1))
        for i in range(0, xs.size, block):
            xcol = xs[i : i + block, None]
            vals = plan.value(xcol, feats)
            finite = np.isfinite(vals)
            vals = np.where(finite, vals, 0.0)
            sums[i : i + block] += vals.sum(axis=1)
            sumsq[i : i + block] += (vals * vals).sum(axis=1)
            counts[i : i + block] += finite.sum(axis=1)
    n_bad = int(np.max(n - counts)) if xs.size else 0
    if n_bad > 0.001 * n:
        raise NumericalQualityError(
            f"{n_bad} of {n} integrand evaluations were non-finite (> 0.1%)"
        )
    means = sums / np.maximum(counts, 1)
    var = (sumsq - counts * means**2) / np.maximum(counts - 1, 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / np.maximum(counts, 1))
    return means, stderr


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------


def _scalar(spec, N, x, t, quad, formula) -> float:
    t = _check_t(spec, t)
    plan = _PLANNERS[formula](spec, N, t, quad)
    xs = np.asarray([float(x)])
    if quad.mode == "mc":
        vals, _ = _mc_curve(plan, quad.n_samples, quad.seed, xs)
    else:
        vals = _tensor_curve(plan, quad, xs)
    return max(float(vals[0]), 0.0)


def f1_complete(spec: ProblemSpec, N: int, x: float, t: float, quad: QuadratureSpec) -> float:
    """Density of the truncated solution via the full-expectation formula.

    Integrates the initial-condition density along the inverse flow over all
    drift and forcing coefficients (N modes each).
    """
    return _scalar(spec, N, x, t, quad, "f1n")


def f1_homogeneous(spec: ProblemSpec, N: int, x: float, t: float, quad: QuadratureSpec) -> float:
    """Density for problems without forcing: E[f0(x e^{-K}) e^{-K}]."""
    return _scalar(spec, N, x, t, quad, "f1homo")


def f1_eta1_form(spec: ProblemSpec, N: int, x: float, t: float, quad: QuadratureSpec) -> float:
    """Density with the dominant forcing mode isolated by a change of variables.

    Valid for t > t0 when the leading forcing eigenfunction is positive; the
    expectation runs over the initial condition, all drift modes, and the
    remaining forcing modes, with the leading mode's density evaluated at the
    isolated argument.
    """
    return _scalar(spec, N, x, t, quad, "eta1")


def f1_xi1_form(spec: ProblemSpec, N: int, x: float, t: float, quad: QuadratureSpec) -> float:
    """Homogeneous-case density with the dominant drift mode isolated.

    Uses the log transform of x/x0, so x=0 is excluded and the initial
    condition is integrated over the part of its support sharing x's sign.
    The integrand is smooth whenever the isolated mode's density is, which
    makes this form converge much faster than the direct one for jump
    initial densities.
    """
    if float(x) == 0.0:
        raise UndefinedPointError("xi1-isolated density is undefined at x = 0")
    return _scalar(spec, N, x, t, quad, "xi1")


def f1_mc(spec: ProblemSpec, N: int, x: float, t: float, n_samples: int, seed) -> tuple[float, float]:
    """Monte Carlo estimate (value, stderr) of the expectation-form density.

    Works for homogeneous and forced problems alike; the integrand matches
    f1_complete / f1_homogeneous exactly, so tensor quadrature on the same
    problem is a cross-check within a few standard errors.
    """
    t = _check_t(spec, t)
    quad = QuadratureSpec(mode="mc", n_samples=max(int(n_samples), 100))
    formula = "f1homo" if spec.proc_b is None else "f1n"
    plan = _PLANNERS[formula](spec, N, t, quad)
    vals, errs = _mc_curve(plan, n_samples, seed, np.asarray([float(x)]))
    return max(float(vals[0]), 0.0), float(errs[0])


def eta1_denominator(spec: ProblemSpec, N: int, t: float, quad: QuadratureSpec,
                     xi=None) -> float:
    """The isolated-mode scale sqrt(gamma_1) * int psi_1 e^{-K(s)} ds.

    ``xi`` fixes the drift coefficients (defaults to all zeros); exposed for
    diagnostics and tests of the eta1 formula's denominator.
    """
    t = _check_t(spec, t)
    if spec.proc_b is None:
        raise FormulaPreconditionError("no forcing process")
    n_a = spec.proc_a.n_terms_available(N)
    xi_arr = np.zeros((1, n_a)) if xi is None else np.atleast_2d(np.asarray(xi, dtype=float))
    s_nodes, s_w = _inner_rule(spec, t, quad.inner_time_nodes)
    m_s = spec.proc_a.mean_integral(s_nodes)
    c_s = spec.proc_a.coef_integrals(s_nodes, xi_arr.shape[1])
    k_s = m_s[None, :] + (xi_arr @ c_s.T if xi_arr.shape[1] else 0.0)
    lead = spec.proc_b.coef_values(s_nodes, 1)[:, 0]
    return float((np.exp(-k_s) @ (s_w * lead))[0])


# ---------------------------------------------------------------------------
# exact oracle for Gaussian drift, homogeneous case
# ---------------------------------------------------------------------------


def exact_gaussian_homogeneous(x0_dist: ScalarDistribution, t: float, x: float,
                               mean_a, var_fn) -> float:
    """Exact density when the integrated drift is Normal(m(t), var(t)).

    ``mean_a`` and ``var_fn`` give the integrated drift mean and variance at
    t (callables, or a constant for the mean).  The single remaining integral
    over the Gaussian is done adaptively to ~1e-10 with the initial density's
    jump locations passed as breakpoints.
    """
    m = float(mean_a(t)) if callable(mean_a) else float(mean_a)
    var = float(var_fn(t)) if callable(var_fn) else float(var_fn)
    x = float(x)
    if var <= 0:
        return float(x0_dist.pdf(x * math.exp(-m)) * math.exp(-m))
    sd = math.sqrt(var)

    def integrand(y):
        return x0_dist.pdf(x * math.exp(-m - y)) * math.exp(-m - y) \
            * math.exp(-0.5 * (y / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))

    lo, hi = -13.0 * sd, 13.0 * sd
    breaks = []
    s_lo, s_hi = x0_dist.support
    for edge in (s_lo, s_hi):
        if np.isfinite(edge) and edge != 0 and x / edge > 0:
            y_star = math.log(x / edge) - m
            if lo < y_star < hi:
                breaks.append(y_star)
    val, _ = integrate.quad(integrand, lo, hi, points=sorted(breaks) or None,
                            epsabs=1e-10, epsrel=1e-10, limit=200)
    return max(float(val), 0.0)


def exact_gaussian_curve(x0_dist: ScalarDistribution, t: float, xs,
                         mean_a, var_fn) -> np.ndarray:
    """Vectorized exact_gaussian_homogeneous over an x grid."""
    return np.array([exact_gaussian_homogeneous(x0_dist, t, x, mean_a, var_fn)
                     for x in np.asarray(xs, dtype=float)])


# ---------------------------------------------------------------------------
# grid evaluation
# ---------------------------------------------------------------------------


@dataclass
class DensityGrid:
    """Density estimates over an (x, t) grid plus the method that made them."""

    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray  # shape (len(ts), len(xs)), clamped >= 0
    method: QuadratureSpec
    N: int
    formula: str
    stderr: Optional[np.ndarray] = None  # present iff MC
    raw_min: float = 0.0  # most negative pre-clamp value, diagnostic

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["t", "x", "value"] + (["stderr"] if self.stderr is not None else [])
        writer.writerow(header)
        for i, t in enumerate(self.ts):
            for j, x in enumerate(self.xs):
                row = [f"{t:.17g}", f"{x:.17g}", f"{self.values[i, j]:.17g}"]
                if self.stderr is not None:
                    row.append(f"{self.stderr[i, j]:.17g}")
                writer.writerow(row)

    def to_json(self) -> dict:
        out = {
            "xs": self.xs.tolist(),
            "ts": self.ts.tolist(),
            "values": self.values.tolist(),
            "N": self.N,
            "formula": self.formula,
            "method": self.method.to_json(),
            "raw_min": self.raw_min,
        }
        if self.stderr is not None:
            out["stderr"] = self.stderr.tolist()
        return out


def _route(spec: ProblemSpec, N: int, ts: np.ndarray, quad: QuadratureSpec,
           formula: str) -> str:
    if formula not in _FORMULAS:
        raise ValueError(f"unknown formula {formula!r}; choose one of {_FORMULAS}")
    if formula != "auto":
        return formula
    if spec.proc_b is not None:
        return "f1n"
    # The direct homogeneous integrand inherits every jump of the initial
    # density, which ruins fixed-order Gauss rules; when the dominant-mode
    # isolation applies, its integrand is smooth, so prefer it.
    if quad.mode == "tensor" and not spec.x0_dist.regularity.continuous \
            and support_sign(spec.x0_dist) != "mixed" \
            and spec.proc_a.n_terms_available(max(N, 1)) >= 1:
        c1_ok = True
        for t in ts:
            if t <= spec.t0:
                continue
            c1 = spec.proc_a.coef_integrals([float(t)], 1)[0, 0]
            if abs(c1) <= 1e-12:
                c1_ok = False
                break
        if c1_ok and N >= 1:
            return "xi1"
    return "f1homo"


def density_grid(spec: ProblemSpec, N: int, xs, ts, quad: QuadratureSpec,
                 formula: str = "auto") -> DensityGrid:
    """Evaluate the density over an (x, t) grid.

    ``formula`` 'auto' picks the complete form for forced problems and, for
    homogeneous ones, the dominant-mode isolated form whenever it applies
    (jump initial density, sign-definite support); points it cannot serve
    (x=0, t=t0) fall back to the direct form, which agrees there.  A named
    formula is used as requested and per-point failures carry their (x,t,N)
    location.
    """
    xs = np.asarray(xs, dtype=float).reshape(-1)
    ts = np.asarray(ts, dtype=float).reshape(-1)
    resolved = _route(spec, N, ts, quad, formula)
    is_mc = quad.mode == "mc"
    values = np.zeros((ts.size, xs.size))
    stderr = np.zeros((ts.size, xs.size)) if is_mc else None
    raw_min = 0.0
    for i, t in enumerate(ts):
        t = float(t)
        try:
            _check_t(spec, t)
            # the isolated form cannot serve x=0 or t=t0; the direct form
            # agrees with it wherever both are defined
            use = resolved
            if resolved == "xi1" and t <= spec.t0:
                use = "f1homo"
            if use == "xi1" and formula == "auto" and np.any(xs == 0.0):
                nz = xs != 0.0
                row, err_row = _eval_row(spec, N, t, xs[nz], quad, "xi1", i, xs.size)
                zrow, zerr = _eval_row(spec, N, t, xs[~nz], quad, "f1homo", i, xs.size)
                full = np.empty(xs.size)
                full[nz], full[~nz] = row, zrow
                row = full
                if is_mc:
                    efull = np.empty(xs.size)
                    efull[nz], efull[~nz] = err_row, zerr
                    err_row = efull
            else:
                row, err_row = _eval_row(spec, N, t, xs, quad, use, i, xs.size)
        except PointEvaluationError:
            raise
        except Exception as e:
            raise PointEvaluationError(
                f"at (t={t}, N={N}): {e}", t=t, N=N
            ) from e
        raw_min = min(raw_min, float(np.min(row, initial=0.0)))
        values[i] = np.maximum(row, 0.0)
        if is_mc:
            stderr[i] = err_row
    return DensityGrid(xs=xs, ts=ts, values=values, method=quad, N=N,
                       formula=resolved, stderr=stderr, raw_min=raw_min)


def _eval_row(spec, N, t, xs, quad, formula, t_idx, row_len):
    """One t-row of the grid; MC points get (seed, point-index) substreams."""
    if xs.size == 0:
        return np.zeros(0), np.zeros(0)
    if formula == "xi1" and np.any(xs == 0.0):
        bad = float(xs[np.argmax(xs == 0.0)])
        raise PointEvaluationError(
            f"at (x={bad}, t={t}, N={N}): xi1-isolated density is undefined at x = 0",
            x=bad, t=t, N=N,
        )
    plan = _PLANNERS[formula](spec, N, t, quad)
    if quad.mode == "mc":
        vals = np.empty(xs.size)
        errs = np.empty(xs.size)
        for j, x in enumerate(xs):
            point_index = t_idx * row_len + j
            v, e = _mc_curve(plan, quad.n_samples, [quad.seed, point_index],
                             np.asarray([x]))
            vals[j], errs[j] = v[0], e[0]
        return vals, errs
    return _tensor_curve(plan, quad, xs), None
