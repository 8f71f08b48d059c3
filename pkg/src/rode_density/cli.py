"""Command line experiment runner.

Subcommands: density | table | verify | paths.  A run is described by a JSON
config document, command line flags, or a named example; flags override
config fields.  Outputs are plot-ready CSV or JSON; no plotting here.

The RODE_THREADS environment variable caps BLAS/OpenMP parallelism; it is
applied before numpy is imported, which is why all heavy imports live inside
the run path.  With the default of 1 thread, identical (config, seed) pairs
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

__all__ = ["RunConfig", "main", "run"]


def _apply_thread_cap() -> None:
    n = os.environ.get("RODE_THREADS", "1")
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, n)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """A fully resolved run description; validate() reports every violation."""

    command: str
    example: Optional[str] = None
    problem: Optional[dict] = None  # JSON form: {"x0": .., "a": .., "b": ..}
    N: Optional[int] = None
    Ns: Optional[list] = None
    t: Optional[float] = None
    ts: Optional[list] = None
    xs: Optional[str] = None  # "lo:hi:n"
    quad: Optional[str] = None  # "tensor:<n>" | "mc:<samples>:<seed>" | JSON dict
    formula: str = "auto"
    oracle: str = "none"
    out: Optional[str] = None
    format: str = "csv"
    seed: Optional[int] = None
    theorem: Optional[str] = None
    n_paths: Optional[int] = None

    def validate(self) -> list:
        errs = []
        if self.command not in ("density", "table", "verify", "paths"):
            errs.append(f"unknown command {self.command!r}")
        if self.example is None and self.problem is None:
            errs.append("a problem is required: pass --example exampleK or a config with a "
                        "\"problem\" object")
        if self.example is not None and self.problem is not None:
            errs.append("pass either a named example or an inline problem, not both")
        if self.command == "density":
            if self.N is None:
                errs.append("density requires --N")
            if self.t is None and self.ts is None and self.example is None:
                errs.append("density requires --t or --ts")
            if self.xs is None and self.example is None:
                errs.append("density requires --xs lo:hi:n (no example grid to default to)")
        elif self.command == "table":
            if not self.Ns:
                errs.append("table requires --Ns as a comma list, e.g. 1,2,3")
            if self.t is None and self.example is None:
                errs.append("table requires --t (no example time to default to)")
            if self.xs is None and self.example is None:
                errs.append("table requires --xs lo:hi:n (no example grid to default to)")
        elif self.command == "verify":
            if self.N is None and self.t is not None:
                errs.append("verify with --t needs --N for the normalization audit")
        elif self.command == "paths":
            if self.N is None:
                errs.append("paths requires --N")
            if not self.n_paths:
                errs.append("paths requires --n-paths")
            if self.ts is None and self.xs is None:
                errs.append("paths requires a time grid via --ts lo:hi:n")
        if self.format not in ("csv", "json"):
            errs.append(f"unknown format {self.format!r}; expected csv or json")
        if self.oracle not in ("exact", "none"):
            errs.append(f"unknown oracle {self.oracle!r}; expected exact or none")
        if self.formula not in ("auto", "f1n", "f1homo", "eta1", "xi1"):
            errs.append(f"unknown formula {self.formula!r}")
        if self.quad is not None and isinstance(self.quad, str):
            try:
                _parse_quad_string(self.quad)
            except ValueError as e:
                errs.append(str(e))
        for name in ("N", "n_paths"):
            v = getattr(self, name)
            if v is not None and v < 1:
                errs.append(f"{name} must be >= 1, got {v}")
        if self.xs is not None:
            try:
                _parse_range(self.xs)
            except ValueError as e:
                errs.append(f"bad --xs: {e}")
        if self.ts is not None and isinstance(self.ts, str):
            try:
                _parse_times(self.ts)
            except ValueError as e:
                errs.append(f"bad --ts: {e}")
        if self.theorem is not None and self.theorem not in (
            "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9"):
            errs.append(f"unknown theorem {self.theorem!r}; expected T1..T9")
        return errs


def _parse_range(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec must be lo:hi:n, got {spec!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError(f"grid needs at least 1 point, got {n}")
    return lo, hi, n


def _parse_times(spec: str) -> list:
    if ":" in spec:
        lo, hi, n = _parse_range(spec)
        import numpy as np

        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(v) for v in spec.split(",") if v.strip()]


def _parse_quad_string(spec: str) -> dict:
    parts = spec.split(":")
    if parts[0] == "tensor":
        if len(parts) != 2:
            raise ValueError(f"tensor quad spec must be tensor:<nodes>, got {spec!r}")
        return {"mode": "tensor", "nodes_per_dim": int(parts[1])}
    if parts[0] == "mc":
        if len(parts) != 3:
            raise ValueError(f"mc quad spec must be mc:<samples>:<seed>, got {spec!r}")
        return {"mode": "mc", "n_samples": int(parts[1]), "seed": int(parts[2])}
    raise ValueError(f"unknown quad mode in {spec!r}; expected tensor:<n> or mc:<s>:<seed>")


def _load_config(path: str) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    return obj


def _merge(args: argparse.Namespace, cfg: dict) -> RunConfig:
    """Build the run config: file fields first, CLI flags override."""
    rc = RunConfig(command=args.command)
    for name in ("example", "problem", "N", "Ns", "t", "ts", "xs", "quad",
                 "formula", "oracle", "out", "format", "seed", "theorem", "n_paths"):
        if name in cfg:
            setattr(rc, name, cfg[name])
    for name in ("example", "N", "t", "xs", "quad", "formula", "oracle",
                 "out", "format", "seed", "theorem"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(rc, name, v)
    if getattr(args, "Ns", None):
        rc.Ns = [int(v) for v in args.Ns.split(",") if v.strip()]
    if getattr(args, "ts", None):
        rc.ts = args.ts
    if getattr(args, "n_paths", None):
        rc.n_paths = args.n_paths
    if isinstance(rc.Ns, str):
        rc.Ns = [int(v) for v in rc.Ns.split(",") if v.strip()]
    return rc


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _resolve(rc: RunConfig):
    """Instantiate the problem, grids and quadrature from the merged config."""
    import numpy as np

    from .distributions import dist_from_json
    from .kl import proc_from_json
    from .quadrature import QuadratureSpec
    from .solution import ProblemSpec
    from .examples import get_example

    exd = None
    if rc.example is not None:
        exd = get_example(rc.example)
        spec = exd.build()
    else:
        prob = rc.problem
        x0 = dist_from_json(prob["x0"])
        proc_a = proc_from_json(prob["a"])
        proc_b = proc_from_json(prob["b"]) if prob.get("b") else None
        spec = ProblemSpec(x0_dist=x0, proc_a=proc_a, proc_b=proc_b)

    if rc.quad is None:
        quad = exd.default_quad if exd is not None else QuadratureSpec(mode="tensor")
    elif isinstance(rc.quad, str):
        qd = _parse_quad_string(rc.quad)
        base = exd.default_quad if exd is not None else None
        if base is not None:
            qd.setdefault("trunc", dict(base.trunc))
            qd.setdefault("inner_time_nodes", base.inner_time_nodes)
        quad = QuadratureSpec.from_json(qd)
    else:
        quad = QuadratureSpec.from_json(rc.quad)
    if rc.seed is not None:
        quad = QuadratureSpec.from_json({**quad.to_json(), "seed": int(rc.seed)})

    if rc.xs is not None:
        lo, hi, n = _parse_range(rc.xs)
        xs = np.linspace(lo, hi, n)
    else:
        xs = exd.ref_grid if exd is not None else None

    if rc.ts is not None:
        ts = _parse_times(rc.ts) if isinstance(rc.ts, str) else [float(v) for v in rc.ts]
    elif rc.t is not None:
        ts = [float(rc.t)]
    elif exd is not None:
        ts = [exd.table_t]
    else:
        ts = None
    return spec, exd, quad, xs, ts


def _error_json(kind: str, **fields) -> str:
    return json.dumps({"error": kind, **fields}, sort_keys=True)


def _emit_text(text: str, rc: RunConfig, summary: str) -> None:
    if rc.out:
        try:
            with open(rc.out, "w") as fh:
                fh.write(text)
        except OSError as e:
            raise RuntimeError(f"cannot write {rc.out}: {e}") from e
        print(summary + f" -> {rc.out}")
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


def _report_csv(report) -> str:
    lines = ["N,error,kind"]
    for n, e, kind in report.rows:
        lines.append(f"{n},{e:.17g},{kind}")
    return "\n".join(lines) + "\n"


def run(rc: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    violations = rc.validate()
    if violations:
        print(_error_json("validation", violations=violations), file=sys.stderr)
        return 2

    import io

    import numpy as np

    from .density import PointEvaluationError, density_grid
    from .quadrature import NumericalQualityError, QuadratureCapError
    from .solution import ExponentOverflowError, sample_paths, paths_to_csv
    from .verify import convergence_table, hypothesis_report, normalization_audit

    try:
        spec, exd, quad, xs, ts = _resolve(rc)
    except (KeyError, ValueError) as e:
        print(_error_json("validation", violations=[str(e)]), file=sys.stderr)
        return 2

    try:
        if rc.command == "density":
            grid = density_grid(spec, rc.N, xs, ts, quad, rc.formula)
            if rc.format == "csv":
                buf = io.StringIO()
                grid.to_csv(buf)
                text = buf.getvalue()
            else:
                text = json.dumps(grid.to_json()) + "\n"
            label = rc.example or "problem"
            when = f"t={ts[0]:g}" if len(ts) == 1 else f"{len(ts)} times"
            _emit_text(text, rc, f"density {label} N={rc.N} {when} ({xs.size} points)")

        elif rc.command == "table":
            oracle = None
            if rc.oracle == "exact":
                if exd is None or exd.oracle is None:
                    print(_error_json("validation", violations=[
                        "no exact oracle is available for this problem"]), file=sys.stderr)
                    return 2
                oracle = exd.oracle
            t = float(ts[0])
            report = convergence_table(spec, rc.Ns, t, xs, oracle=oracle,
                                       quad=quad, formula=rc.formula)
            text = _report_csv(report) if rc.format == "csv" \
                else json.dumps(report.to_json()) + "\n"
            label = rc.example or "problem"
            _emit_text(text, rc, f"table {label} Ns={','.join(map(str, rc.Ns))} t={t:g}")

        elif rc.command == "verify":
            payload = {}
            n_val = rc.N if rc.N is not None else 2
            if exd is not None or (xs is not None and ts is not None):
                g_xs = xs if xs is not None else exd.norm_grid
                g_quad = quad if rc.quad is not None else (
                    exd.norm_quad if exd is not None else quad)
                grid = density_grid(spec, n_val, g_xs, ts, g_quad, rc.formula)
                integrals = normalization_audit(grid)
                payload["normalization"] = {
                    "t": [float(v) for v in grid.ts],
                    "integral": [float(v) for v in integrals],
                }
            payload["hypotheses"] = hypothesis_report(spec, rc.theorem).to_json()
            text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
            label = rc.example or "problem"
            _emit_text(text, rc, f"verify {label} N={n_val}")

        elif rc.command == "paths":
            t_grid = np.asarray(ts, dtype=float)
            paths = sample_paths(spec, rc.N, rc.N, rc.n_paths, t_grid,
                                 seed=rc.seed if rc.seed is not None else 0)
            buf = io.StringIO()
            paths_to_csv(paths, buf)
            label = rc.example or "problem"
            _emit_text(buf.getvalue(), rc,
                       f"paths {label} N={rc.N} n={rc.n_paths} ({t_grid.size} times)")

    except PointEvaluationError as e:
        print(_error_json("numerical", message=str(e),
                          location={"x": e.x, "t": e.t, "N": e.N}), file=sys.stderr)
        return 3
    except (QuadratureCapError, NumericalQualityError, ExponentOverflowError,
            FloatingPointError, ValueError) as e:
        print(_error_json("numerical", message=str(e), kind=type(e).__name__),
              file=sys.stderr)
        return 3
    except RuntimeError as e:
        print(_error_json("runtime", message=str(e)), file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rode-density",
        description="Density approximation toolkit for random linear ODEs",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("density", "evaluate a density grid"),
        ("table", "convergence table over truncation orders"),
        ("verify", "normalization audit and hypothesis checks"),
        ("paths", "sample solution trajectories"),
    ):
        sp = sub.add_parser(name, help=desc)
        sp.add_argument("--example", help="named example, example1..example5")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--N", type=int, help="truncation order")
        sp.add_argument("--Ns", help="comma list of truncation orders (table)")
        sp.add_argument("--t", type=float, help="evaluation time")
        sp.add_argument("--ts", help="time grid lo:hi:n or comma list")
        sp.add_argument("--xs", help="x grid as lo:hi:n")
        sp.add_argument("--quad", help="tensor:<nodes> or mc:<samples>:<seed>")
        sp.add_argument("--oracle", choices=("exact", "none"), help="table reference")
        sp.add_argument("--formula", choices=("auto", "f1n", "f1homo", "eta1", "xi1"))
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="artifact format")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--theorem", help="restrict verify to one theorem, T1..T9")
        sp.add_argument("--n-paths", dest="n_paths", type=int, help="trajectory count")
    return p


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    cfg = {}
    if args.config:
        try:
            cfg = _load_config(args.config)
        except (OSError, ValueError) as e:
            print(_error_json("validation", violations=[f"config: {e}"]), file=sys.stderr)
            return 2
    rc = _merge(args, cfg)
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
