"""Named example problems: the five benchmark configurations, one per name.

Each entry bundles the problem spec builder with the grids, quadrature
defaults and reference settings its benchmark tables and figures use, so a
single name reproduces an experiment end to end (CLI ``--example exampleK``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import (
    ScalarDistribution,
    beta_dist,
    gamma_dist,
    normal,
    quartic_cauchy,
    uniform,
)
from .kl import SineCoef, brownian_bridge, brownian_motion, explicit_series
from .quadrature import QuadratureSpec
from .solution import ProblemSpec
from .density import exact_gaussian_curve

__all__ = ["ExampleDef", "FigureSpec", "EXAMPLES", "get_example", "example_names"]


@dataclass(frozen=True)
class FigureSpec:
    """Reproduction settings for one published curve (shape + regression lock)."""

    name: str
    grid: np.ndarray
    t: float
    N: int
    quad: QuadratureSpec
    mode_window: tuple[float, float]  # expected location of the curve's peak


@dataclass(frozen=True)
class ExampleDef:
    """One named benchmark configuration."""

    name: str
    summary: str
    build: Callable[[], ProblemSpec]
    table_t: float
    ref_grid: np.ndarray
    default_quad: QuadratureSpec
    norm_grid: np.ndarray
    norm_quad: QuadratureSpec
    figure: FigureSpec
    oracle: Optional[Callable] = None  # (xs, t) -> exact curve
    default_mc: Optional[tuple[int, int]] = None  # (n_samples, seed)

    def problem(self) -> ProblemSpec:
        return self.build()


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


# -- builders ---------------------------------------------------------------


def _build_ex1() -> ProblemSpec:
    return ProblemSpec(x0_dist=uniform(1.0, 2.0), proc_a=brownian_motion((0.0, 1.0)))


def _series_sqrt2_over_j(dist_factory: Callable[[], ScalarDistribution], mean_fn=0.0):
    # sqrt(nu_j) phi_j = (sqrt2/j) sin(j pi t): amplitude sqrt2/j, frequency j
    def factory(j: int):
        return SineCoef(math.sqrt(2.0) / j, j), dist_factory()

    return explicit_series(mean_fn, None, (0.0, 1.0), term_factory=factory)


def _build_ex2() -> ProblemSpec:
    return ProblemSpec(
        x0_dist=uniform(1.0, 2.0),
        proc_a=_series_sqrt2_over_j(quartic_cauchy),
    )


def _build_ex3() -> ProblemSpec:
    root3 = math.sqrt(3.0)
    return ProblemSpec(
        x0_dist=beta_dist(5.0, 6.0),
        proc_a=_series_sqrt2_over_j(lambda: uniform(-root3, root3), mean_fn=-1.0),
    )


def _build_ex4() -> ProblemSpec:
    return ProblemSpec(
        x0_dist=normal(0.0, 1.0),
        proc_a=brownian_motion((0.0, 1.0)),
        proc_b=brownian_bridge((0.0, 1.0)),
    )


def _build_ex5() -> ProblemSpec:
    root3 = math.sqrt(3.0)

    def a_factory(j: int):
        return SineCoef(math.sqrt(2.0) / j**3, j), uniform(-root3, root3)

    def b_factory(i: int):
        return SineCoef(math.sqrt(2.0) / (i**4 + 6.0), i), normal(0.0, 1.0)

    proc_a = explicit_series(0.0, None, (0.0, 1.0), term_factory=a_factory)
    proc_b = explicit_series(0.0, None, (0.0, 1.0), term_factory=b_factory)
    return ProblemSpec(x0_dist=gamma_dist(4.0, 9.0), proc_a=proc_a, proc_b=proc_b)


def _ex1_oracle(xs, t):
    return exact_gaussian_curve(uniform(1.0, 2.0), t, xs, 0.0, lambda u: u**3 / 3.0)


# -- registry ---------------------------------------------------------------

EXAMPLES: dict[str, ExampleDef] = {
    "example1": ExampleDef(
        name="example1",
        summary="x0 ~ Uniform(1,2), drift = standard Brownian motion on [0,1], no forcing",
        build=_build_ex1,
        table_t=0.5,
        ref_grid=_grid(0.0, 4.0, 401),
        default_quad=QuadratureSpec(mode="tensor", nodes_per_dim=24, inner_time_nodes=64),
        norm_grid=_grid(0.0, 4.5, 226),
        norm_quad=QuadratureSpec(mode="tensor", nodes_per_dim=16),
        figure=FigureSpec(
            name="brownia",
            grid=_grid(0.5, 3.0, 251),
            t=0.5,
            N=2,
            quad=QuadratureSpec(mode="tensor", nodes_per_dim=16),
            mode_window=(0.9, 2.1),
        ),
        oracle=_ex1_oracle,
    ),
    "example2": ExampleDef(
        name="example2",
        summary="x0 ~ Uniform(1,2), drift series (sqrt2/j) sin(j pi t) with quartic-tail "
        "coefficients, no forcing",
        build=_build_ex2,
        table_t=0.7,
        ref_grid=_grid(0.0, 3.0, 301),
        default_quad=QuadratureSpec(
            mode="tensor", nodes_per_dim=16, trunc={"xi": (-4.0, 4.0)}
        ),
        norm_grid=_grid(0.0, 40.0, 1201),
        norm_quad=QuadratureSpec(
            mode="tensor", nodes_per_dim=16, trunc={"xi": (-4.5, 4.5)}
        ),
        figure=FigureSpec(
            name="nog",
            grid=_grid(0.0, 3.0, 301),
            t=0.7,
            N=2,
            quad=QuadratureSpec(
                mode="tensor", nodes_per_dim=96, trunc={"xi": (-15.0, 15.0)}
            ),
            mode_window=(0.8, 2.2),
        ),
    ),
    "example3": ExampleDef(
        name="example3",
        summary="x0 ~ Beta(5,6), drift = -1 + (sqrt2/j) sin(j pi t) series with "
        "Uniform(-sqrt3, sqrt3) coefficients, no forcing",
        build=_build_ex3,
        table_t=0.3,
        ref_grid=_grid(0.0, 1.2, 241),
        default_quad=QuadratureSpec(mode="tensor", nodes_per_dim=16),
        norm_grid=_grid(0.0, 1.8, 181),
        norm_quad=QuadratureSpec(mode="tensor", nodes_per_dim=16),
        figure=FigureSpec(
            name="lip",
            grid=_grid(0.0, 1.2, 241),
            t=0.3,
            N=2,
            quad=QuadratureSpec(mode="tensor", nodes_per_dim=16),
            mode_window=(0.2, 0.5),
        ),
    ),
    "example4": ExampleDef(
        name="example4",
        summary="x0 ~ Normal(0,1), drift = Brownian motion, forcing = Brownian bridge",
        build=_build_ex4,
        table_t=0.5,
        ref_grid=_grid(-6.0, 6.0, 481),
        default_quad=QuadratureSpec(mode="tensor", nodes_per_dim=16, inner_time_nodes=64),
        norm_grid=_grid(-6.0, 6.0, 241),
        norm_quad=QuadratureSpec(mode="tensor", nodes_per_dim=16, tensor_cap=2e7),
        figure=FigureSpec(
            name="comp",
            grid=_grid(-4.0, 4.0, 201),
            t=0.5,
            N=1,
            quad=QuadratureSpec(mode="tensor", nodes_per_dim=32),
            mode_window=(-0.3, 0.3),
        ),
    ),
    "example5": ExampleDef(
        name="example5",
        summary="x0 ~ Gamma(4,9), drift series (sqrt2/j^3) sin with uniform coefficients, "
        "forcing series (sqrt2/(i^4+6)) sin with Gaussian coefficients",
        build=_build_ex5,
        table_t=0.4,
        ref_grid=_grid(-0.5, 2.0, 251),
        default_quad=QuadratureSpec(
            mode="tensor", nodes_per_dim=16, trunc={"x0": (0.0, 2.5)}
        ),
        norm_grid=_grid(-1.0, 3.0, 241),
        norm_quad=QuadratureSpec(
            mode="tensor", nodes_per_dim=16, tensor_cap=2e7, trunc={"x0": (0.0, 2.5)}
        ),
        figure=FigureSpec(
            name="comp2",
            grid=_grid(-0.25, 1.75, 201),
            t=0.4,
            N=2,
            quad=QuadratureSpec(mode="mc", n_samples=40000, seed=1),
            mode_window=(0.15, 0.6),
        ),
        default_mc=(40000, 1),
    ),
}


def example_names() -> list[str]:
    return sorted(EXAMPLES)


def get_example(name: str) -> ExampleDef:
    try:
        return EXAMPLES[name]
    except KeyError:
        raise KeyError(
            f"unknown example {name!r}; available: {', '.join(example_names())}"
        ) from None
