"""Karhunen-Loeve machinery.

Catalog expansions (Brownian motion and Brownian bridge on a rescaled
interval), explicit user series given directly as coefficient functions
sqrt(nu_j)*phi_j, a Nystrom eigensolver for covariance kernels, truncation,
and the partial-sum diagnostics used by the applicability checks.

A process is the data (mean function, ordered eigenpairs, coefficient laws).
Eigenpairs are kept in descending eigenvalue order so the first mode is the
dominant one by default; a rank may be unbounded, in which case terms come
from a generator and only truncations are ever materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .distributions import ScalarDistribution, normal

__all__ = [
    "KLTerm",
    "KLProcess",
    "CovKernel",
    "SineCoef",
    "brownian_motion",
    "brownian_bridge",
    "explicit_series",
    "nystrom_solve",
    "truncate",
    "reorder",
    "parseval_partial",
    "remark_bound",
    "eval_truncated",
    "DomainError",
    "NonPSDKernelError",
    "proc_from_json",
]

_SQRT2 = math.sqrt(2.0)
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class DomainError(ValueError):
    """Time argument outside the process interval."""


class NonPSDKernelError(RuntimeError):
    """Covariance kernel produced an eigenvalue below the PSD tolerance."""


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _gl_on(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gl(n)
    return 0.5 * (hi + lo) + 0.5 * (hi - lo) * x, 0.5 * (hi - lo) * w


def _check_coeff_dist(dist: ScalarDistribution) -> ScalarDistribution:
    # series coefficients must be standardized: zero mean, unit variance
    if abs(dist.mean) > 1e-8 or abs(dist.variance - 1.0) > 1e-8:
        raise ValueError(
            f"coefficient distribution {dist!r} must have mean 0 and variance 1 "
            f"(got mean {dist.mean}, variance {dist.variance})"
        )
    return dist


@dataclass(frozen=True)
class SineCoef:
    """Coefficient function amplitude*sin(k*pi*t) on [0,1], with closed forms."""

    amplitude: float
    k: int

    def __call__(self, t):
        return self.amplitude * np.sin(self.k * math.pi * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class KLTerm:
    """One eigenpair: eigenvalue, orthonormal eigenfunction, coefficient law.

    ``int_phi`` is the running integral of phi from the interval start, kept
    as a closed form whenever the construction provides one.
    """

    eigenvalue: float
    phi: Callable[[np.ndarray], np.ndarray]
    int_phi: Optional[Callable[[np.ndarray], np.ndarray]]
    dist: ScalarDistribution

    @property
    def coef_amplitude(self) -> float:
        return math.sqrt(self.eigenvalue)


class KLProcess:
    """A (possibly truncated) series representation of a stochastic process."""

    def __init__(
        self,
        mean_fn: Callable[[np.ndarray], np.ndarray],
        interval: tuple[float, float],
        terms: Optional[Sequence[KLTerm]] = None,
        term_factory: Optional[Callable[[int], KLTerm]] = None,
        mean_int: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        mean_const: Optional[float] = None,
    ):
        t0, t1 = float(interval[0]), float(interval[1])
        if not t0 < t1:
            raise ValueError(f"bad interval [{t0}, {t1}]")
        if terms is None and term_factory is None:
            terms = []
        self.mean_fn = mean_fn
        self.interval = (t0, t1)
        self._terms: list[KLTerm] = list(terms) if terms is not None else []
        self._factory = term_factory
        self._mean_int = mean_int
        self._mean_const = mean_const
        if terms is not None and term_factory is None:
            for tm in self._terms:
                if tm.eigenvalue < 0:
                    raise ValueError(f"negative eigenvalue {tm.eigenvalue}")
            order = np.argsort([-tm.eigenvalue for tm in self._terms], kind="stable")
            self._terms = [self._terms[i] for i in order]
            self.rank: Optional[int] = len(self._terms)
        else:
            self.rank = None

    # -- terms ---------------------------------------------------------

    def term(self, j: int) -> KLTerm:
        """1-based eigenpair access; materializes from the factory as needed."""
        if j < 1:
            raise ValueError("term index is 1-based")
        while len(self._terms) < j:
            if self._factory is None:
                raise IndexError(f"process has only {len(self._terms)} modes")
            self._terms.append(self._factory(len(self._terms) + 1))
        return self._terms[j - 1]

    def n_terms_available(self, n: int) -> int:
        return min(n, self.rank) if self.rank is not None else n

    def trace_sum(self, n: int) -> float:
        n = self.n_terms_available(n)
        return float(sum(self.term(j).eigenvalue for j in range(1, n + 1)))

    # -- time integrals -------------------------------------------------

    def _check_t(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        t0, t1 = self.interval
        if np.any(t < t0 - 1e-12) or np.any(t > t1 + 1e-12):
            raise DomainError(f"time {t!r} outside interval [{t0}, {t1}]")
        return t

    def mean_values(self, ts) -> np.ndarray:
        ts = self._check_t(ts)
        return np.broadcast_to(np.asarray(self.mean_fn(ts), dtype=float), ts.shape).copy()

    def mean_integral(self, ts) -> np.ndarray:
        """Integral of the mean from the interval start to each t."""
        ts = self._check_t(np.atleast_1d(ts))
        t0 = self.interval[0]
        if self._mean_int is not None:
            return np.asarray(self._mean_int(ts), dtype=float)
        if self._mean_const is not None:
            return self._mean_const * (ts - t0)
        x, w = _gl(48)
        out = np.empty_like(ts)
        for i, t in enumerate(ts):
            nodes = 0.5 * (t + t0) + 0.5 * (t - t0) * x
            out[i] = 0.5 * (t - t0) * float(np.asarray(self.mean_fn(nodes), dtype=float) @ w)
        return out

    def int_phi(self, j: int, ts) -> np.ndarray:
        """Running integral of the j-th eigenfunction from the interval start."""
        ts = self._check_t(np.atleast_1d(ts))
        tm = self.term(j)
        if tm.int_phi is not None:
            return np.asarray(tm.int_phi(ts), dtype=float)
        t0 = self.interval[0]
        x, w = _gl(64)
        out = np.empty_like(ts)
        for i, t in enumerate(ts):
            nodes = 0.5 * (t + t0) + 0.5 * (t - t0) * x
            out[i] = 0.5 * (t - t0) * float(np.asarray(tm.phi(nodes), dtype=float) @ w)
        return out

    def coef_integrals(self, ts, n: int) -> np.ndarray:
        """Matrix of sqrt(nu_j) * int phi_j over [t0, t], shape (len(ts), n)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        n = self.n_terms_available(n)
        out = np.zeros((ts.size, n))
        for j in range(1, n + 1):
            out[:, j - 1] = self.term(j).coef_amplitude * self.int_phi(j, ts)
        return out

    def coef_values(self, ts, n: int) -> np.ndarray:
        """Matrix of sqrt(nu_j) * phi_j(t) values, shape (len(ts), n)."""
        ts = self._check_t(np.atleast_1d(ts))
        n = self.n_terms_available(n)
        out = np.zeros((ts.size, n))
        for j in range(1, n + 1):
            tm = self.term(j)
            out[:, j - 1] = tm.coef_amplitude * np.asarray(tm.phi(ts), dtype=float)
        return out

    def coeff_dists(self, n: int) -> list[ScalarDistribution]:
        n = self.n_terms_available(n)
        return [self.term(j).dist for j in range(1, n + 1)]

    @property
    def eigenpairs(self) -> list[tuple[float, Callable]]:
        """(eigenvalue, eigenfunction) pairs; finite-rank processes only."""
        if self.rank is None:
            raise ValueError("process has unbounded rank; truncate first")
        return [(self.term(j).eigenvalue, self.term(j).phi) for j in range(1, self.rank + 1)]

    @property
    def eigenvalues(self) -> list[float]:
        return [pair[0] for pair in self.eigenpairs]


# ---------------------------------------------------------------------------
# catalog constructions
# ---------------------------------------------------------------------------


def _catalog_process(interval, base_eig, base_freq) -> KLProcess:
    t0, t1 = float(interval[0]), float(interval[1])
    if t0 != 0.0:
        raise ValueError("catalog processes are defined on intervals starting at 0")
    span = t1

    def factory(j: int) -> KLTerm:
        nu = span * base_eig(j)
        omega = base_freq(j) / span

        def phi(t, omega=omega, span=span):
            return _SQRT2 / math.sqrt(span) * np.sin(omega * np.asarray(t, dtype=float))

        def int_phi(t, omega=omega, span=span):
            t = np.asarray(t, dtype=float)
            return _SQRT2 / math.sqrt(span) * (1.0 - np.cos(omega * t)) / omega

        return KLTerm(nu, phi, int_phi, normal(0.0, 1.0))

    return KLProcess(
        mean_fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        interval=(t0, t1),
        terms=None,
        term_factory=factory,
        mean_const=0.0,
    )


def brownian_motion(interval: tuple[float, float] = (0.0, 1.0)) -> KLProcess:
    """Standard Brownian-motion expansion, rescaled from [0,1] by the interval length.

    Eigenvalues 1/((j-1/2)^2 pi^2) with eigenfunctions sqrt(2) sin((j-1/2) pi t)
    on the unit interval; independent standard normal coefficients.
    """
    return _catalog_process(
        interval,
        base_eig=lambda j: 1.0 / ((j - 0.5) ** 2 * math.pi**2),
        base_freq=lambda j: (j - 0.5) * math.pi,
    )


def brownian_bridge(interval: tuple[float, float] = (0.0, 1.0)) -> KLProcess:
    """Standard Brownian-bridge expansion: eigenvalues 1/(j^2 pi^2), sine eigenfunctions."""
    return _catalog_process(
        interval,
        base_eig=lambda j: 1.0 / (j**2 * math.pi**2),
        base_freq=lambda j: j * math.pi,
    )


def _term_from_coef(coef, dist: ScalarDistribution, interval) -> KLTerm:
    _check_coeff_dist(dist)
    t0, t1 = interval
    if isinstance(coef, SineCoef) and t0 == 0.0 and t1 == 1.0:
        nu = coef.amplitude**2 / 2.0
        omega = coef.k * math.pi

        def phi(t, omega=omega):
            return _SQRT2 * np.sin(omega * np.asarray(t, dtype=float))

        def int_phi(t, omega=omega):
            return _SQRT2 * (1.0 - np.cos(omega * np.asarray(t, dtype=float))) / omega

        return KLTerm(nu, phi, int_phi, dist)
    # generic coefficient function: recover nu = ||coef||^2, phi = coef/sqrt(nu)
    x, w = _gl_on(512, t0, t1)
    vals = np.asarray(coef(x), dtype=float)
    nu = float(np.sum(w * vals * vals))
    if nu <= 0:
        raise ValueError("coefficient function is numerically zero")
    root = math.sqrt(nu)
    return KLTerm(nu, lambda t: np.asarray(coef(t), dtype=float) / root, None, dist)


def _validate_orthonormal(terms: Sequence[KLTerm], interval) -> None:
    # sine-family terms with distinct frequencies are exactly orthonormal
    if all(t.int_phi is not None for t in terms):
        return
    check = list(terms)
    x, w = _gl_on(256, *interval)
    vals = np.column_stack([np.asarray(t.phi(x), dtype=float) for t in check])
    gram = vals.T @ (w[:, None] * vals)
    err = np.max(np.abs(gram - np.eye(len(check))))
    if err > 1e-6:
        raise ValueError(f"series eigenfunctions are not orthonormal (max Gram error {err:.3g})")


def explicit_series(
    mean_fn: Union[float, Callable],
    terms: Optional[Sequence[tuple]] = None,
    interval: tuple[float, float] = (0.0, 1.0),
    term_factory: Optional[Callable[[int], tuple]] = None,
    mean_int: Optional[Callable] = None,
) -> KLProcess:
    """Series given directly by its coefficient functions sqrt(nu_j)*phi_j.

    ``terms`` is a list of (coef_fn, dist) pairs; alternatively pass
    ``term_factory`` mapping a 1-based index to such a pair for series without
    a fixed rank.  A constant may be passed for the mean.  Declared terms must
    be orthogonal after factoring out the amplitude; this is verified
    numerically (sine-family terms with distinct frequencies are exact and
    skip the numeric check).
    """
    mean_const = None
    if isinstance(mean_fn, (int, float)):
        mean_const = float(mean_fn)
        const = mean_const
        mean_fn = lambda t, c=const: np.full_like(np.asarray(t, dtype=float), c)
    if terms is not None and term_factory is not None:
        raise ValueError("pass either terms or term_factory, not both")
    if term_factory is not None:
        def factory(j: int) -> KLTerm:
            coef, dist = term_factory(j)
            return _term_from_coef(coef, dist, interval)

        return KLProcess(mean_fn, interval, terms=None, term_factory=factory,
                         mean_int=mean_int, mean_const=mean_const)
    built = [_term_from_coef(c, d, interval) for c, d in (terms or [])]
    kvals = [c.k for c, _ in (terms or []) if isinstance(c, SineCoef)]
    if len(set(kvals)) != len(kvals):
        raise ValueError("sine terms must have distinct frequencies")
    _validate_orthonormal(built, interval)
    return KLProcess(mean_fn, interval, terms=built, mean_int=mean_int, mean_const=mean_const)


# ---------------------------------------------------------------------------
# Nystrom eigensolver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovKernel:
    """Symmetric covariance kernel on a square interval."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    interval: tuple[float, float]

    def __post_init__(self):
        rng = np.random.default_rng(0)
        t0, t1 = self.interval
        s = rng.uniform(t0, t1, size=64)
        t = rng.uniform(t0, t1, size=64)
        a = np.asarray(self.fn(s, t), dtype=float)
        b = np.asarray(self.fn(t, s), dtype=float)
        if np.max(np.abs(a - b)) > 1e-12:
            raise ValueError("kernel is not symmetric within 1e-12")


def nystrom_solve(
    kernel: CovKernel,
    n_nodes: int,
    n_modes: int,
    coeff_dist: Optional[ScalarDistribution] = None,
) -> KLProcess:
    """Discretize the covariance operator on a Gauss-Legendre grid.

    The weighted kernel matrix is symmetrized as W^(1/2) K W^(1/2), solved
    densely, and eigenfunctions are extended off-grid with the interpolation
    formula phi(t) = (1/lambda) sum_i w_i k(t, s_i) phi(s_i).  Eigenvalues in
    [-1e-10, 0] are clipped to 0; modes below 1e-12 of the leading eigenvalue
    are dropped; anything below -1e-8 is a PSD failure.
    """
    if n_modes > n_nodes:
        raise ValueError("n_modes must be <= n_nodes")
    t0, t1 = kernel.interval
    nodes, weights = _gl_on(n_nodes, t0, t1)
    K = np.asarray(kernel.fn(nodes[:, None], nodes[None, :]), dtype=float)
    sqw = np.sqrt(weights)
    B = sqw[:, None] * K * sqw[None, :]
    B = 0.5 * (B + B.T)
    eigvals, eigvecs = np.linalg.eigh(B)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    if eigvals[-1] < -1e-8:
        raise NonPSDKernelError(f"kernel eigenvalue {eigvals[-1]:.3g} below -1e-8")
    eigvals = np.where((eigvals > -1e-10) & (eigvals < 0.0), 0.0, eigvals)
    lam1 = eigvals[0]
    terms = []
    dist = coeff_dist if coeff_dist is not None else normal(0.0, 1.0)
    for m in range(min(n_modes, n_nodes)):
        lam = float(eigvals[m])
        if lam < 1e-12 * lam1:
            break
        grid_vals = eigvecs[:, m] / sqw
        # canonical sign: largest-magnitude grid value positive
        if grid_vals[np.argmax(np.abs(grid_vals))] < 0:
            grid_vals = -grid_vals

        def phi(t, lam=lam, gv=grid_vals):
            t = np.asarray(t, dtype=float)
            Kt = np.asarray(kernel.fn(t[..., None], nodes), dtype=float)
            return (Kt @ (weights * gv)) / lam

        terms.append(KLTerm(lam, phi, None, dist))
    return KLProcess(
        mean_fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        interval=(t0, t1),
        terms=terms,
        mean_const=0.0,
    )


# ---------------------------------------------------------------------------
# operations on processes
# ---------------------------------------------------------------------------


def truncate(proc: KLProcess, n: int) -> KLProcess:
    """First n eigenpairs (fewer if the rank is smaller), same mean."""
    if n < 0:
        raise ValueError("truncation order must be >= 0")
    n_eff = proc.n_terms_available(n)
    terms = [proc.term(j) for j in range(1, n_eff + 1)]
    return KLProcess(
        proc.mean_fn,
        proc.interval,
        terms=terms,
        mean_int=proc._mean_int,
        mean_const=proc._mean_const,
    )


def reorder(proc: KLProcess, order: Sequence[int]) -> KLProcess:
    """Permute eigenpairs (1-based indices); lets callers pick a different pivot mode."""
    if proc.rank is None:
        raise ValueError("reorder needs a finite-rank process; truncate first")
    if sorted(order) != list(range(1, proc.rank + 1)):
        raise ValueError(f"order must be a permutation of 1..{proc.rank}")
    terms = [proc.term(j) for j in order]
    out = KLProcess(
        proc.mean_fn,
        proc.interval,
        terms=terms,
        mean_int=proc._mean_int,
        mean_const=proc._mean_const,
    )
    # bypass the canonical descending sort applied by the constructor
    out._terms = terms
    return out


def parseval_partial(proc: KLProcess, t: float, n: int) -> float:
    """Partial sum of (int_{t0}^t phi_j)^2, which grows toward t - t0 from below."""
    n = proc.n_terms_available(n)
    ts = [float(t)]
    return float(sum(proc.int_phi(j, ts)[0] ** 2 for j in range(1, n + 1)))


def remark_bound(proc: KLProcess, grid_size: int = 512) -> tuple[float, float]:
    """Sup over t of sum_j sqrt(nu_j) |int phi_j|, with its analytic bound.

    The bound is sqrt(sum_j nu_j) * sqrt(T - t0) by Cauchy-Schwarz; the pair
    (value, bound) is returned and the inequality is asserted.
    """
    if proc.rank is None:
        raise ValueError("remark_bound needs a finite-rank process; truncate first")
    t0, t1 = proc.interval
    ts = np.linspace(t0, t1, grid_size)
    mat = proc.coef_integrals(ts, proc.rank)
    value = float(np.max(np.sum(np.abs(mat), axis=1))) if proc.rank else 0.0
    bound = math.sqrt(proc.trace_sum(proc.rank)) * math.sqrt(t1 - t0)
    if value > bound + 1e-12:
        raise RuntimeError(f"partial-sum value {value} exceeds analytic bound {bound}")
    return value, bound


def eval_truncated(proc: KLProcess, t: float, coeffs) -> float:
    """mu(t) + sum_j sqrt(nu_j) phi_j(t) coeffs_j for a single time point."""
    coeffs = np.asarray(coeffs, dtype=float)
    ts = np.asarray([float(t)])
    base = float(proc.mean_values(ts)[0])
    if coeffs.size == 0:
        return base
    row = proc.coef_values(ts, coeffs.size)[0]
    return base + float(row @ coeffs)


# ---------------------------------------------------------------------------
# JSON construction
# ---------------------------------------------------------------------------


# Named coefficient-function registry for JSON configs.  Each entry maps a
# term index j and a params dict to the sine coefficient for that term.
_COEF_REGISTRY: dict[str, Callable[[int, dict], SineCoef]] = {
    "sine": lambda j, p: SineCoef(float(p["amplitude"]), int(p.get("k", j))),
    "sqrt2_over_j_sin": lambda j, p: SineCoef(_SQRT2 / j, j),
    "sqrt2_over_j3_sin": lambda j, p: SineCoef(_SQRT2 / j**3, j),
    "sqrt2_over_j4_plus_c_sin": lambda j, p: SineCoef(_SQRT2 / (j**4 + float(p.get("c", 0.0))), j),
}

# Named covariance kernels for JSON nystrom configs.
_KERNEL_REGISTRY: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "min": lambda s, t: np.minimum(s, t),
    "min_minus_prod": lambda s, t: np.minimum(s, t) - s * t,
}


def proc_from_json(obj: dict) -> KLProcess:
    """Build a process from its JSON description.

    Supported types: 'brownian_motion', 'brownian_bridge', and
    'explicit_series'.  Series terms come from a small named-function
    registry: an explicit list [{"coef": "sine", "params": {"amplitude": A,
    "k": k}, "dist": {...}}, ...], or a rank-free family
    {"family": {"coef": "sqrt2_over_j_sin", "params": {...}},
     "coeff_dist": {...}} where the j-th term is generated on demand.
    """
    from .distributions import dist_from_json

    kind = obj.get("type")
    interval = tuple(obj.get("interval", (0.0, 1.0)))
    if kind == "brownian_motion":
        return brownian_motion(interval)
    if kind == "brownian_bridge":
        return brownian_bridge(interval)
    if kind == "explicit_series":
        mean = obj.get("mean", 0.0)
        if obj.get("terms") is not None:
            terms = []
            for idx, term in enumerate(obj["terms"], start=1):
                maker = _COEF_REGISTRY.get(term.get("coef"))
                if maker is None:
                    raise ValueError(f"unknown coefficient function {term.get('coef')!r}")
                terms.append((maker(idx, term.get("params", {})), dist_from_json(term["dist"])))
            return explicit_series(mean, terms, interval)
        fam = obj.get("family")
        if fam is None:
            raise ValueError("explicit_series JSON needs 'terms' or 'family'")
        maker = _COEF_REGISTRY.get(fam.get("coef"))
        if maker is None:
            raise ValueError(f"unknown coefficient function {fam.get('coef')!r}")
        dist_obj = obj.get("coeff_dist")
        if dist_obj is None:
            raise ValueError("family form needs 'coeff_dist'")
        params = fam.get("params", {})

        def factory(j: int):
            return maker(j, params), dist_from_json(dist_obj)

        return explicit_series(mean, terms=None, interval=interval, term_factory=factory)
    if kind == "nystrom":
        fn = _KERNEL_REGISTRY.get(obj.get("kernel"))
        if fn is None:
            raise ValueError(f"unknown kernel {obj.get('kernel')!r}; "
                             f"expected one of {sorted(_KERNEL_REGISTRY)}")
        dist_obj = obj.get("coeff_dist")
        dist = dist_from_json(dist_obj) if dist_obj is not None else None
        return nystrom_solve(
            CovKernel(fn, interval),
            int(obj.get("n_nodes", 200)),
            int(obj.get("n_modes", 10)),
            coeff_dist=dist,
        )
    raise ValueError(f"unknown process type {kind!r}")
