"""Scalar probability distributions for initial conditions and series coefficients.

A small catalog (normal, uniform, beta, gamma, and a quartic-tail law with
density sqrt(2)/(pi*(1+x^4))) plus a custom escape hatch.  Every entry carries
vectorized pdf evaluation, seeded sampling, a numeric cdf, and the regularity
metadata consumed by the applicability checks in :mod:`rode_density.verify`.

All distributions are immutable after construction and safe to share across
threads.  Sampling always goes through an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats

__all__ = [
    "Regularity",
    "ScalarDistribution",
    "normal",
    "uniform",
    "beta_dist",
    "gamma_dist",
    "quartic_cauchy",
    "custom",
    "support_sign",
    "dist_from_json",
    "UnsupportedOperationError",
]

_SQRT2 = math.sqrt(2.0)


class UnsupportedOperationError(RuntimeError):
    """Raised when an operation (e.g. sampling) is not available for a distribution."""


@dataclass(frozen=True)
class Regularity:
    """Density regularity flags, declared per catalog entry.

    ``lipschitz_on_support`` refers to the pdf restricted to the closure of its
    support; ``continuous`` refers to continuity of the pdf on the whole real
    line (a uniform density is Lipschitz on its support but not continuous).
    """

    lipschitz_on_support: bool
    continuous: bool
    bounded: bool
    compact_support: bool


class ScalarDistribution:
    """A univariate absolutely continuous distribution.

    Parameters are validated at construction; evaluation never raises for
    finite inputs and returns 0 outside the support.
    """

    def __init__(
        self,
        kind: str,
        params: dict,
        support: tuple[float, float],
        regularity: Regularity,
        pdf_fn: Callable[[np.ndarray], np.ndarray],
        sample_fn: Optional[Callable[[np.random.Generator, int], np.ndarray]],
        cdf_fn: Optional[Callable[[np.ndarray], np.ndarray]],
        mean: float,
        variance: float,
    ):
        self.kind = kind
        self.params = dict(params)
        self.support = (float(support[0]), float(support[1]))
        self.regularity = regularity
        self._pdf_fn = pdf_fn
        self._sample_fn = sample_fn
        self._cdf_fn = cdf_fn
        self.mean = float(mean)
        self.variance = float(variance)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}({inner})"

    def pdf(self, x):
        """Vectorized density evaluation; 0 outside the support."""
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.zeros_like(arr)
        lo, hi = self.support
        inside = (arr >= lo) & (arr <= hi)
        if inside.any():
            out[inside] = self._pdf_fn(arr[inside])
        np.maximum(out, 0.0, out=out)
        return float(out[0]) if scalar else out

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw i.i.d. samples.  Deterministic given the generator state."""
        if self._sample_fn is None:
            raise UnsupportedOperationError(
                f"{self.kind} distribution has no sampler; supply one at construction"
            )
        n = 1 if size is None else int(size)
        draws = self._sample_fn(rng, n)
        return float(draws[0]) if size is None else draws

    def cdf(self, x):
        """Cumulative distribution function (numeric where no closed form exists)."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if self._cdf_fn is not None:
            out = self._cdf_fn(arr)
        else:
            lo = self.support[0]
            out = np.empty_like(arr)
            for i, v in enumerate(arr):
                if v <= lo:
                    out[i] = 0.0
                else:
                    a = lo if np.isfinite(lo) else v - 60.0
                    out[i], _ = integrate.quad(lambda u: self.pdf(u), a, v, limit=200)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if np.asarray(x).ndim == 0 else out

    def to_json(self) -> dict:
        if self.kind == "custom":
            raise UnsupportedOperationError("custom distributions do not serialize")
        return {"kind": self.kind, "params": dict(self.params)}


def normal(mean: float = 0.0, variance: float = 1.0) -> ScalarDistribution:
    """Normal law parameterized by mean and variance (not standard deviation)."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    sd = math.sqrt(variance)
    frozen = stats.norm(loc=mean, scale=sd)
    return ScalarDistribution(
        kind="normal",
        params={"mean": mean, "variance": variance},
        support=(-math.inf, math.inf),
        regularity=Regularity(True, True, True, False),
        pdf_fn=frozen.pdf,
        sample_fn=lambda rng, n: rng.normal(mean, sd, size=n),
        cdf_fn=frozen.cdf,
        mean=mean,
        variance=variance,
    )


def uniform(lo: float, hi: float) -> ScalarDistribution:
    if not lo < hi:
        raise ValueError(f"uniform requires lo < hi, got [{lo}, {hi}]")
    height = 1.0 / (hi - lo)
    return ScalarDistribution(
        kind="uniform",
        params={"lo": lo, "hi": hi},
        support=(lo, hi),
        # constant on its support, but jumps at the endpoints
        regularity=Regularity(True, False, True, True),
        pdf_fn=lambda x: np.full_like(x, height),
        sample_fn=lambda rng, n: rng.uniform(lo, hi, size=n),
        cdf_fn=lambda x: np.clip((x - lo) * height, 0.0, 1.0),
        mean=0.5 * (lo + hi),
        variance=(hi - lo) ** 2 / 12.0,
    )


def beta_dist(alpha: float, beta: float) -> ScalarDistribution:
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"beta requires positive shape parameters, got ({alpha}, {beta})")
    frozen = stats.beta(alpha, beta)
    # pdf ~ x^(alpha-1) near 0: bounded needs exponent >= 0, Lipschitz >= 1 (or exactly 0)
    lipschitz = (alpha == 1.0 or alpha >= 2.0) and (beta == 1.0 or beta >= 2.0)
    continuous = alpha > 1.0 and beta > 1.0
    bounded = alpha >= 1.0 and beta >= 1.0
    return ScalarDistribution(
        kind="beta",
        params={"alpha": alpha, "beta": beta},
        support=(0.0, 1.0),
        regularity=Regularity(lipschitz, continuous, bounded, True),
        pdf_fn=frozen.pdf,
        sample_fn=lambda rng, n: rng.beta(alpha, beta, size=n),
        cdf_fn=frozen.cdf,
        mean=alpha / (alpha + beta),
        variance=alpha * beta / ((alpha + beta) ** 2 * (alpha + beta + 1.0)),
    )


def gamma_dist(shape: float, rate: float) -> ScalarDistribution:
    """Gamma law with shape/rate convention (density ~ x^(shape-1) e^(-rate x))."""
    if shape <= 0 or rate <= 0:
        raise ValueError(f"gamma requires positive shape and rate, got ({shape}, {rate})")
    frozen = stats.gamma(shape, scale=1.0 / rate)
    lipschitz = shape == 1.0 or shape >= 2.0
    continuous = shape > 1.0
    bounded = shape >= 1.0
    return ScalarDistribution(
        kind="gamma",
        params={"shape": shape, "rate": rate},
        support=(0.0, math.inf),
        regularity=Regularity(lipschitz, continuous, bounded, False),
        pdf_fn=frozen.pdf,
        sample_fn=lambda rng, n: rng.gamma(shape, 1.0 / rate, size=n),
        cdf_fn=frozen.cdf,
        mean=shape / rate,
        variance=shape / rate**2,
    )


# ---------------------------------------------------------------------------
# quartic-tail law: pdf sqrt(2)/(pi*(1+x^4)), mean 0, variance 1
# ---------------------------------------------------------------------------


def _qc_pdf(x: np.ndarray) -> np.ndarray:
    return _SQRT2 / (math.pi * (1.0 + x**4))


def _qc_tail(r: np.ndarray) -> np.ndarray:
    # mass above r > 0: expand 1/(1+x^4) = x^-4 - x^-8 + ...; r >= 8 keeps 1e-13
    return _SQRT2 / math.pi * (1.0 / (3.0 * r**3) - 1.0 / (7.0 * r**7) + 1.0 / (11.0 * r**11))


class _QuarticTables:
    """Precomputed cdf knots for inverse-cdf sampling, built lazily once."""

    _instance = None

    def __init__(self):
        glx, glw = np.polynomial.legendre.leggauss(12)
        # arctan-spaced knots concentrate resolution near the origin
        u = np.linspace(math.atan(-40.0), math.atan(40.0), 4001)
        knots = np.tan(u)
        mid = 0.5 * (knots[1:] + knots[:-1])
        half = 0.5 * (knots[1:] - knots[:-1])
        nodes = mid[:, None] + half[:, None] * glx[None, :]
        increments = half * (_qc_pdf(nodes) @ glw)
        cdf = np.concatenate(([0.0], np.cumsum(increments))) + _qc_tail(40.0)
        self.knots = knots
        self.cdf = cdf
        self.gl = (glx, glw)

    @classmethod
    def get(cls) -> "_QuarticTables":
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    def cdf_at(self, x: np.ndarray) -> np.ndarray:
        """Cdf via knot table plus a partial-panel Gauss rule; ~1e-12 accurate."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x <= self.knots[0]
        right = x >= self.knots[-1]
        mid = ~(left | right)
        out[left] = _qc_tail(np.maximum(-x[left], 40.0))
        out[right] = 1.0 - _qc_tail(np.maximum(x[right], 40.0))
        if mid.any():
            xm = x[mid]
            idx = np.searchsorted(self.knots, xm, side="right") - 1
            a = self.knots[idx]
            halfw = 0.5 * (xm - a)
            glx, glw = self.gl
            nodes = (a + halfw)[:, None] + halfw[:, None] * glx[None, :]
            out[mid] = self.cdf[idx] + halfw * (_qc_pdf(nodes) @ glw)
        return out

    def ppf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo_mass = self.cdf[0]
        hi_mass = self.cdf[-1]
        x = np.empty_like(u)
        low = u < lo_mass
        high = u > hi_mass
        mid = ~(low | high)
        # asymptotic tail inversion of u = sqrt(2)/(3 pi |x|^3)
        with np.errstate(divide="ignore"):
            x[low] = -np.cbrt(_SQRT2 / (3.0 * math.pi * np.maximum(u[low], 1e-300)))
            x[high] = np.cbrt(_SQRT2 / (3.0 * math.pi * np.maximum(1.0 - u[high], 1e-300)))
        if mid.any():
            guess = np.interp(u[mid], self.cdf, self.knots)
            for _ in range(3):
                guess = guess - (self.cdf_at(guess) - u[mid]) / _qc_pdf(guess)
            x[mid] = guess
        return x


def quartic_cauchy() -> ScalarDistribution:
    """Heavy-but-square-integrable law with density sqrt(2)/(pi*(1+x^4))."""
    return ScalarDistribution(
        kind="quartic_cauchy",
        params={},
        support=(-math.inf, math.inf),
        regularity=Regularity(True, True, True, False),
        pdf_fn=_qc_pdf,
        sample_fn=lambda rng, n: _QuarticTables.get().ppf(rng.random(n)),
        cdf_fn=lambda x: _QuarticTables.get().cdf_at(x),
        mean=0.0,
        variance=1.0,
    )


def custom(
    pdf: Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float],
    regularity: Regularity,
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
    mean: Optional[float] = None,
    variance: Optional[float] = None,
) -> ScalarDistribution:
    """User-supplied density.  Callers must declare regularity flags themselves.

    The density is checked to integrate to 1 within 1e-8 at construction.
    Mean and variance are computed numerically when not given.
    """
    lo, hi = float(support[0]), float(support[1])
    total, _ = integrate.quad(lambda u: float(np.atleast_1d(pdf(np.asarray([u])))[0]), lo, hi, limit=400)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"custom pdf integrates to {total!r}, not 1 within 1e-8")
    scalar_pdf = lambda u: float(np.atleast_1d(pdf(np.asarray([u])))[0])
    if mean is None:
        mean, _ = integrate.quad(lambda u: u * scalar_pdf(u), lo, hi, limit=400)
    if variance is None:
        second, _ = integrate.quad(lambda u: u * u * scalar_pdf(u), lo, hi, limit=400)
        variance = second - mean**2
    return ScalarDistribution(
        kind="custom",
        params={"support": (lo, hi)},
        support=(lo, hi),
        regularity=regularity,
        pdf_fn=lambda x: np.asarray(pdf(x), dtype=float),
        sample_fn=sampler,
        cdf_fn=None,
        mean=mean,
        variance=variance,
    )


def support_sign(dist: ScalarDistribution) -> str:
    """Sign of the support: 'positive', 'negative', or 'mixed'.

    An endpoint at 0 still counts as sign-definite since single points carry
    no probability for an absolutely continuous law.
    """
    lo, hi = dist.support
    if lo >= 0.0:
        return "positive"
    if hi <= 0.0:
        return "negative"
    return "mixed"


_FACTORIES = {
    "normal": lambda p: normal(p["mean"], p["variance"]),
    "uniform": lambda p: uniform(p["lo"], p["hi"]),
    "beta": lambda p: beta_dist(p["alpha"], p["beta"]),
    "gamma": lambda p: gamma_dist(p["shape"], p["rate"]),
    "quartic_cauchy": lambda p: quartic_cauchy(),
}


def dist_from_json(obj: dict) -> ScalarDistribution:
    kind = obj.get("kind")
    if kind not in _FACTORIES:
        raise ValueError(f"unknown distribution kind {kind!r}; expected one of {sorted(_FACTORIES)}")
    return _FACTORIES[kind](obj.get("params", {}))
