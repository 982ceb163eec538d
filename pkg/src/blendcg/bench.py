"""Benchmark harness: seeded runs, CSV traces, summaries, sparsity tables, verification.

    bench run --family simplex --algo bcg,pcg --seed 0 --eps 1e-8 --out runs/
    bench verify --family simplex --seed 0 --out verify.jsonl
    bench sparsity-table --seeds 0-9 --size 20 --out table.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .core import InvariantViolation, SolverConfig, StepKind
from .objectives import (Instance, InstanceSpec, Lasso, SignalRecovery, SimplexQuadratic,
                         StructuredRegression, generate, save_instance)
from .regions import Simplex
from .solvers import RunResult, Variant, baseline, bcg, post_optimize, standalone_sigd

log = logging.getLogger("blendcg.bench")

CSV_HEADER = ("iter", "elapsed_s", "f_value", "phi", "dual_gap", "step_type", "active_size",
              "lmo_calls", "cache_hits")
ALGOS = ("bcg", "lpcg", "pcg", "acg", "cg", "sigd")
FAMILY_NAMES = ("lasso", "signal", "birkhoff", "dagpath", "simplex")
EXIT_VIOLATION = 2


@dataclass
class ExperimentSpec:
    instance: InstanceSpec
    algos: list[str]
    config: SolverConfig = field(default_factory=SolverConfig)
    out: Optional[Path] = None
    post_opt: bool = False
    sparsify: bool = False

    def __post_init__(self):
        if not self.algos:
            raise ValueError("at least one algorithm is required")
        unknown = [a for a in self.algos if a not in ALGOS]
        if unknown:
            raise ValueError(f"unknown algorithm(s): {', '.join(unknown)}")
        if "sigd" in self.algos and not isinstance(self.instance.family, SimplexQuadratic):
            raise ValueError("sigd runs only on the simplex family")


def family_from_args(name: str, size: Optional[int] = None, rows: Optional[int] = None,
                     nnz: Optional[int] = None, density: Optional[float] = None,
                     sigma: float = 0.01, scale: float = 1.0, layers: int = 4, width: int = 4):
    if name == "lasso":
        n = size or 200
        return Lasso(rows or n // 2, n, nnz or max(1, n // 20), scale)
    if name == "signal":
        n = size or 500
        return SignalRecovery(rows or n // 2, n, density or 0.05, sigma)
    if name == "birkhoff":
        return StructuredRegression("birkhoff", size or 10, rows)
    if name == "dagpath":
        return StructuredRegression("dagpath", 1, rows, layers=layers, width=width)
    if name == "simplex":
        return SimplexQuadratic(size or 20)
    raise ValueError(f"unknown family {name!r}")


def run_algo(algo: str, inst: Instance, config: SolverConfig) -> RunResult:
    obj, region, start = inst
    if algo == "bcg":
        return bcg(obj, region, start, config)
    if algo == "sigd":
        if not isinstance(region, Simplex):
            raise ValueError("sigd runs only on the simplex")
        return standalone_sigd(obj, region.k, config)
    return baseline(Variant(algo), obj, region, start, config)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def trace_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in result.trace:
        w.writerow([r.iter, f"{r.elapsed:.6f}", _fmt(r.f_value), _fmt(r.phi), _fmt(r.dual_gap),
                    r.step.value, r.active_size, r.lmo_calls, r.cache_hits])
    return buf.getvalue()


def summary(result: RunResult) -> dict:
    return {
        "algo": result.algo,
        "termination": result.termination.value,
        "iterations": len(result.trace),
        "final_f": result.f_value,
        "final_active_size": len(result.final_set),
        "final_phi": result.phi_final,
        "final_dual_gap": result.dual_gap,
        "initial_f": result.initial_f,
        "steps": result.step_counts(),
        "lmo_calls": result.counters.lmo_calls,
        "cache_hits": result.counters.cache_hits,
        "elapsed_s": result.trace[-1].elapsed if result.trace else 0.0,
    }


def gnuplot_script(names: Sequence[str]) -> str:
    """Four panels: log2 f and log2 phi, each against iterations and wall-clock time."""
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set terminal pngcairo size 1200,800", "set output 'trace.png'",
             "set multiplot layout 2,2"]
    panels = [("iter", "f_value", 1, 3), ("elapsed_s", "f_value", 2, 3),
              ("iter", "phi", 1, 4), ("elapsed_s", "phi", 2, 4)]
    for xl, yl, xc, yc in panels:
        plots = ", ".join(f"'{n}.csv' using {xc}:(log(${yc})/log(2)) with lines title '{n}'"
                          for n in names)
        lines += [f"set xlabel '{xl}'", f"set ylabel 'log2 {yl}'", f"plot {plots}"]
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def sparsity_row(inst: Instance, config: SolverConfig, eps0: float) -> dict:
    """Active set sizes of vanilla / drop promotion / promotion + post-optimization."""
    vanilla = bcg(*inst, config)
    promoted = bcg(*inst, replace(config, drop_promotion_eps0=eps0, check_invariants=False))
    post = post_optimize(inst.objective, promoted, replace(config, check_invariants=False))
    f0 = vanilla.f_value

    def pct(f):
        return 100.0 * (f - f0) / abs(f0) if f0 != 0 else 0.0

    return {"vanilla_size": len(vanilla.final_set), "promote_size": len(promoted.final_set),
            "promote_post_size": len(post.final_set), "vanilla_f": f0,
            "promote_df_pct": pct(promoted.f_value), "promote_post_df_pct": pct(post.f_value),
            "post_increase": post.f_value - promoted.f_value, "post_d0": promoted.dual_gap}


def run_experiment(spec: ExperimentSpec) -> dict[str, RunResult]:
    """Run every algorithm of ``spec`` and write traces, summaries and plot data."""
    inst = generate(spec.instance)
    out = spec.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_instance(inst, out / "instance")
    results: dict[str, RunResult] = {}
    for algo in spec.algos:
        log.info("running %s", algo)
        res = run_algo(algo, inst, spec.config)
        results[algo] = res
        if spec.post_opt and algo == "bcg":
            results["bcg_post"] = post_optimize(inst.objective, res, spec.config)
    if out is not None:
        for name, res in results.items():
            (out / f"{name}.csv").write_text(trace_csv(res))
            (out / f"{name}.json").write_text(json.dumps(summary(res), indent=2) + "\n")
        (out / "plot.gp").write_text(gnuplot_script(list(results)))
        if spec.sparsify:
            row = sparsity_row(inst, spec.config, spec.config.drop_promotion_eps0 or 1e-3)
            _write_table(out / "sparsity.csv", [{"seed": spec.instance.seed, **row}])
    return results


def _write_table(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# -- verification ----------------------------------------------------------------

def verify_reports(inst: Instance, samples: int = 200, seed: int = 0,
                   config: SolverConfig = SolverConfig(eps=1e-6)) -> list[dg.BoundReport]:
    obj, region, start = inst
    rng = np.random.default_rng(seed)
    reports = []
    pts = [region.random_vertex(rng).coords * 0.5 + region.random_vertex(rng).coords * 0.5
           for _ in range(3)]
    reports.append(dg.gradient_check(obj, pts))
    simp = dg.simplicial_curvature_estimate(obj, region, samples, seed)
    reports.extend(simp.reports)
    curv = dg.curvature_estimate(obj, region, samples, seed)
    reports.append(dg.BoundReport.compare("sampled_curvature_vs_2x_simplicial", curv,
                                          2 * simp.value, 1e-9 * max(1.0, simp.value)))
    res = bcg(obj, region, start, replace(config, exact_gap=True, check_invariants=True))
    reports.append(dg.BoundReport.compare("gap_certificate@0", dg.dual_gap(obj, region, start.coords),
                                          2 * res.initial_phi, 1e-12))
    for rec in res.trace:
        if rec.step is StepKind.GAP:
            reports.append(dg.BoundReport.compare(f"gap_certificate@{rec.iter}", rec.dual_gap,
                                                  2 * rec.phi, 1e-12 * (1 + rec.phi)))
    return reports


# -- command line ----------------------------------------------------------------

def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def _instance_args(p: argparse.ArgumentParser, default_family: str = "simplex") -> None:
    p.add_argument("--family", choices=FAMILY_NAMES, default=default_family)
    p.add_argument("--size", type=int, default=None, help="simplex k, matrix order, vector length")
    p.add_argument("--rows", type=int, default=None, help="measurement rows of A")
    p.add_argument("--nnz", type=int, default=None)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--width", type=int, default=4)


def _solver_args(p: argparse.ArgumentParser, eps: float = 1e-8, max_iter: int = 10_000) -> None:
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--time-limit", type=float, default=float("inf"))
    p.add_argument("--pairwise-blend", action="store_true")
    p.add_argument("--fixed-steps", action="store_true")
    p.add_argument("--no-checks", action="store_true", help="skip per-iteration invariant checks")


def _family(args):
    return family_from_args(args.family, args.size, args.rows, args.nnz, args.density,
                            args.sigma, args.scale, args.layers, args.width)


def _config(args, **extra) -> SolverConfig:
    return SolverConfig(K=args.K, eps=args.eps, max_iter=args.max_iter, time_limit=args.time_limit,
                        pairwise_blend=args.pairwise_blend, fixed_steps=args.fixed_steps,
                        check_invariants=not args.no_checks, seed=getattr(args, "seed", 0),
                        **extra)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run algorithms on one seeded instance")
    _instance_args(run)
    _solver_args(run)
    run.add_argument("--algo", default="bcg", help=f"comma separated subset of {','.join(ALGOS)}")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--exact-gap", action="store_true")
    run.add_argument("--promote-drops", type=float, default=None, metavar="EPS0")
    run.add_argument("--post-opt", action="store_true")
    run.add_argument("--sparsify", action="store_true",
                     help="also write the vanilla / promotion / post-optimization table")
    run.add_argument("--out", type=Path, required=True)

    ver = sub.add_parser("verify", help="run the diagnostics suite and write JSON lines")
    _instance_args(ver)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--samples", type=int, default=200)
    ver.add_argument("--eps", type=float, default=1e-6)
    ver.add_argument("--out", type=Path, default=None)

    tab = sub.add_parser("sparsity-table", help="active set sizes with and without sparsification")
    _instance_args(tab, default_family="birkhoff")
    _solver_args(tab, eps=1e-8, max_iter=500)
    tab.add_argument("--seeds", default="0-9")
    tab.add_argument("--eps0", type=float, default=1e-3, help="drop promotion cap")
    tab.add_argument("--jobs", type=int, default=1)
    tab.add_argument("--out", type=Path, default=None)
    return parser


def _table_row(args_tuple):
    family, seed, config, eps0 = args_tuple
    inst = generate(InstanceSpec(family, seed))
    pcg = baseline(Variant.PAIRWISE_FW, *inst, config)
    row = {"seed": seed, "pcg_size": len(pcg.final_set), "pcg_f": pcg.f_value}
    row.update(sparsity_row(inst, config, eps0))
    return row


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                InstanceSpec(_family(args), args.seed),
                [a.strip() for a in args.algo.split(",") if a.strip()],
                _config(args, exact_gap=args.exact_gap, drop_promotion_eps0=args.promote_drops),
                args.out, args.post_opt, args.sparsify)
            results = run_experiment(spec)
            for name, res in results.items():
                print(f"{name}: {res.termination.value} iters={len(res.trace)} "
                      f"f={res.f_value:.12g} |S|={len(res.final_set)}")
            return 0
        if args.command == "verify":
            inst = generate(InstanceSpec(_family(args), args.seed))
            reports = verify_reports(inst, args.samples, args.seed, SolverConfig(eps=args.eps))
            if args.out is not None:
                dg.write_reports(reports, args.out)
            else:
                for r in reports:
                    print(r.to_json())
            bad = [r for r in reports if not r.satisfied]
            print(f"{len(reports) - len(bad)}/{len(reports)} checks satisfied", file=sys.stderr)
            return EXIT_VIOLATION if bad else 0
        if args.command == "sparsity-table":
            family = _family(args)
            config = _config(args)
            jobs = [(family, s, config, args.eps0) for s in _parse_seeds(args.seeds)]
            if args.jobs > 1:
                with ProcessPoolExecutor(args.jobs) as pool:
                    rows = list(pool.map(_table_row, jobs))
            else:
                rows = [_table_row(j) for j in jobs]
            if args.out is not None:
                _write_table(args.out, rows)
            w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            med = {k: float(np.median([r[k] for r in rows]))
                   for k in ("pcg_size", "vanilla_size", "promote_size", "promote_post_size")}
            print("median " + " ".join(f"{k}={v:g}" for k, v in med.items()), file=sys.stderr)
            return 0
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
