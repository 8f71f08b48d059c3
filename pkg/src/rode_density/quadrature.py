"""Gaussian quadrature rules, tensor-product integration, and Monte Carlo expectation.

Rules are discrete probability measures wherever a classical weight matches the
distribution (probabilists' Hermite for normal laws).  Bounded supports get a
mapped Gauss-Legendre rule with the density folded into the weights.  Unbounded
non-Gaussian coefficient laws are supported only through Monte Carlo or through
an explicit truncation interval, since no classical rule matches such tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable, NamedTuple, Optional, Sequence

import math
import numpy as np

from .distributions import ScalarDistribution

__all__ = [
    "QuadratureSpec",
    "Rule",
    "gauss_rule",
    "iter_tensor_chunks",
    "tensor_integrate",
    "mc_expectation",
    "QuadratureCapError",
    "UnsupportedRuleError",
    "NumericalQualityError",
]

_CHUNK = 1 << 18


class QuadratureCapError(RuntimeError):
    """Tensor grid would exceed the configured point cap."""


class UnsupportedRuleError(ValueError):
    """No classical rule matches the distribution's weight."""


class NumericalQualityError(RuntimeError):
    """Too many non-finite integrand evaluations."""


@dataclass(frozen=True)
class QuadratureSpec:
    """How an expectation gets evaluated.

    mode 'tensor' uses a Gauss rule per dimension; 'mc' uses plain Monte Carlo
    with a seeded generator.  ``inner_time_nodes`` controls the Gauss-Legendre
    resolution of time integrals inside integrands.  ``trunc`` maps dimension
    labels (exact label, or a prefix such as 'xi' covering 'xi1', 'xi2', ...)
    to truncation intervals for unbounded non-Gaussian dimensions.
    """

    mode: str = "tensor"
    nodes_per_dim: int = 16
    n_samples: int = 100_000
    seed: int = 0
    inner_time_nodes: int = 64
    tensor_cap: float = 1e7
    trunc: Optional[dict] = None

    def __post_init__(self):
        if self.mode not in ("tensor", "mc"):
            raise ValueError(f"mode must be 'tensor' or 'mc', got {self.mode!r}")
        if self.nodes_per_dim < 1:
            raise ValueError("nodes_per_dim must be >= 1")
        if self.mode == "mc" and self.n_samples < 100:
            raise ValueError("n_samples must be >= 100")
        if self.inner_time_nodes < 2:
            raise ValueError("inner_time_nodes must be >= 2")

    def trunc_for(self, label: str) -> Optional[tuple[float, float]]:
        if not self.trunc:
            return None
        if label in self.trunc:
            lo, hi = self.trunc[label]
            return (float(lo), float(hi))
        prefix = label.rstrip("0123456789")
        if prefix in self.trunc:
            lo, hi = self.trunc[prefix]
            return (float(lo), float(hi))
        return None

    def to_json(self) -> dict:
        out = {"mode": self.mode}
        if self.mode == "tensor":
            out["nodes_per_dim"] = self.nodes_per_dim
        else:
            out["n_samples"] = self.n_samples
            out["seed"] = self.seed
        if self.inner_time_nodes != 64:
            out["inner_time_nodes"] = self.inner_time_nodes
        if self.tensor_cap != 1e7:
            out["tensor_cap"] = self.tensor_cap
        if self.trunc:
            out["trunc"] = {k: list(v) for k, v in self.trunc.items()}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "QuadratureSpec":
        kwargs = dict(obj)
        trunc = kwargs.get("trunc")
        if trunc is not None:
            kwargs["trunc"] = {k: (float(v[0]), float(v[1])) for k, v in trunc.items()}
        return cls(**kwargs)


class Rule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray
    # True when the weights already integrate against the distribution
    # (Hermite); False when the caller must fold the pdf in (Legendre).
    includes_density: bool


def _legendre(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi + lo) + 0.5 * (hi - lo) * x, 0.5 * (hi - lo) * w


def gauss_rule(dist: ScalarDistribution, n: int, trunc: Optional[tuple[float, float]] = None) -> Rule:
    """Pick the Gauss rule matching a distribution.

    Normal laws get a probabilists' Hermite rule (weights sum to 1, nodes
    affinely mapped to the law's mean and standard deviation).  Bounded
    supports get Legendre on the support (weights sum to hi-lo, density to be
    folded by the caller).  Anything else requires a truncation interval.
    """
    if n < 1:
        raise ValueError("rule order must be >= 1")
    if dist.kind == "normal":
        x, w = np.polynomial.hermite.hermgauss(n)
        sd = math.sqrt(dist.params["variance"])
        nodes = dist.params["mean"] + sd * x * math.sqrt(2.0)
        return Rule(nodes, w / math.sqrt(math.pi), True)
    lo, hi = dist.support
    if np.isfinite(lo) and np.isfinite(hi):
        nodes, weights = _legendre(n, lo, hi)
        return Rule(nodes, weights, False)
    if trunc is not None:
        tlo, thi = trunc
        if not tlo < thi:
            raise ValueError(f"bad truncation interval {trunc!r}")
        nodes, weights = _legendre(n, tlo, thi)
        return Rule(nodes, weights, False)
    raise UnsupportedRuleError(
        f"no classical rule for {dist.kind} on unbounded support; "
        "use mode='mc' or supply a truncation interval"
    )


def _dim_rules(dists: Sequence[ScalarDistribution], spec: QuadratureSpec,
               labels: Optional[Sequence[str]] = None) -> list[Rule]:
    if labels is None:
        labels = [f"dim{i}" for i in range(len(dists))]
    rules = []
    for dist, label in zip(dists, labels):
        rule = gauss_rule(dist, spec.nodes_per_dim, spec.trunc_for(label))
        if not rule.includes_density:
            rule = Rule(rule.nodes, rule.weights * dist.pdf(rule.nodes), True)
        rules.append(rule)
    return rules


def check_cap(n_points: float, cap: float) -> None:
    if n_points > cap:
        raise QuadratureCapError(
            f"tensor grid of {n_points:.3g} points exceeds the cap {cap:.3g}; "
            "reduce nodes_per_dim, raise tensor_cap, or use mode='mc'"
        )


def iter_tensor_chunks(
    dists: Sequence[ScalarDistribution],
    spec: QuadratureSpec,
    labels: Optional[Sequence[str]] = None,
):
    """Yield (points, weights) blocks of the tensor grid in a fixed order.

    Points are (chunk, d) arrays; weights already contain every dimension's
    probability mass.  The chunking is independent of thread count, so any
    accumulation over the blocks is reproducible.
    """
    d = len(dists)
    if d == 0:
        yield np.zeros((1, 0)), np.ones(1)
        return
    rules = _dim_rules(dists, spec, labels)
    shape = [len(r.nodes) for r in rules]
    total_points = float(np.prod([float(s) for s in shape]))
    check_cap(total_points, spec.tensor_cap)
    n_total = int(total_points)
    for start in range(0, n_total, _CHUNK):
        stop = min(start + _CHUNK, n_total)
        idx = np.unravel_index(np.arange(start, stop), shape)
        pts = np.empty((stop - start, d))
        w = np.ones(stop - start)
        for k in range(d):
            pts[:, k] = rules[k].nodes[idx[k]]
            w *= rules[k].weights[idx[k]]
        yield pts, w


def tensor_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    dists: Sequence[ScalarDistribution],
    spec: QuadratureSpec,
    labels: Optional[Sequence[str]] = None,
) -> float:
    """E[f] over independent coordinates by a tensor-product Gauss rule.

    ``f`` receives a (points, d) array and must return (points,) values.
    Exact for per-dimension polynomials of degree <= 2n-1.
    """
    acc = 0.0
    for pts, w in iter_tensor_chunks(dists, spec, labels):
        vals = np.asarray(f(pts), dtype=float)
        acc += float(np.sum(w * vals))
    return acc


def mc_expectation(
    f: Callable[[np.ndarray], np.ndarray],
    dists: Sequence[ScalarDistribution],
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Plain Monte Carlo estimate of E[f] with its standard error.

    Raises if more than 0.1% of the evaluations are non-finite; a smaller
    fraction is dropped from the average.
    """
    rng = np.random.default_rng(seed)
    n = int(n_samples)
    X = np.column_stack([d.sample(rng, n) for d in dists]) if dists else np.zeros((n, 0))
    vals = np.asarray(f(X), dtype=float)
    finite = np.isfinite(vals)
    n_bad = int(np.size(vals) - np.count_nonzero(finite))
    if n_bad > 0.001 * n:
        raise NumericalQualityError(
            f"{n_bad} of {n} integrand evaluations were non-finite (> 0.1%)"
        )
    good = vals[finite]
    est = float(np.mean(good))
    stderr = float(np.std(good, ddof=1) / math.sqrt(good.size)) if good.size > 1 else 0.0
    return est, stderr
