"""Command-line front end.

Subcommands: `run` (method-comparison sweep), `tune` (transmission
coefficient grid search), `calibrate` (residual-versus-error curves) and
`mem` (memory estimates); each takes a config file and writes CSV outputs
to --out. Exit code is 0 only when every run completed.
"""

import argparse
import os
import sys

from . import bench
from .assembly import TransmissionParams
from .problems import build_problem, source_line
from .tuning import (calibrate_criterion, default_grid, optimize_params,
                     write_curve_csv, write_sweep_csv)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="helmdd",
        description="2D Helmholtz domain-decomposition laboratory")
    ap.add_argument("--out", default="out", help="output directory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, doc in (("run", "execute the experiment matrix"),
                      ("tune", "grid-search transmission coefficients"),
                      ("calibrate", "record residual-vs-error curves"),
                      ("mem", "report memory estimates")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("config", help="flat key = value configuration file")
    return ap


def _problems_of(cfg):
    model = bench.model_from_spec(cfg.model)
    positions = source_line(cfg.lx, cfg.ly, cfg.num_sources,
                            cfg.source_depth_frac, cfg.source_margin_frac)
    for f in cfg.frequencies:
        for nspec in cfg.subdomains:
            yield f, nspec, build_problem(model, cfg.lx, cfg.ly, f, cfg.order,
                                          cfg.ppw, cfg.partition, nspec,
                                          positions, dof_cap=cfg.dof_cap)


def cmd_run(cfg, out_dir: str) -> int:
    def progress(row):
        print(f"f={row.f:g} N={row.n_subdomains} {row.method} "
              f"batch={row.batch}: iters={row.iterations} "
              f"total={row.t_total:.2f}s [{row.status}]")

    report = bench.run_experiment(cfg, out_dir=out_dir, progress=progress)
    path = os.path.join(out_dir, "report.csv")
    bench.write_csv(report, path)
    print(f"wrote {path} ({len(report.rows)} rows)")
    return 0 if all(r.status == "ok" for r in report.rows) else 1


def cmd_tune(cfg, out_dir: str) -> int:
    failures = 0
    for f, nspec, problem in _problems_of(cfg):
        for method in cfg.methods:
            grid = default_grid(method, cfg.transmission_order)
            try:
                alpha, beta, table = optimize_params(problem, grid,
                                                     tol=cfg.tol,
                                                     restart=cfg.restart)
            except RuntimeError as err:
                print(f"f={f:g} {method}: {err}")
                failures += 1
                continue
            N = bench.subdomain_count(nspec)
            path = os.path.join(out_dir, f"tune_{method}_f{f:g}_N{N}.csv")
            write_sweep_csv(table, path)
            print(f"f={f:g} N={N} {method}: best alpha={alpha:.4g} "
                  f"beta={beta:.4g} -> {path}")
    return 0 if failures == 0 else 1


def cmd_calibrate(cfg, out_dir: str) -> int:
    failures = 0
    params = TransmissionParams(order=cfg.transmission_order,
                                alpha=cfg.alpha, beta=cfg.beta)
    for f, nspec, problem in _problems_of(cfg):
        for method in cfg.methods:
            try:
                curve = calibrate_criterion(problem, method, params,
                                            tol_floor=cfg.tol,
                                            restart=cfg.restart,
                                            max_iters=cfg.max_iters)
            except RuntimeError as err:
                print(f"f={f:g} {method}: {err}")
                failures += 1
                continue
            N = bench.subdomain_count(nspec)
            path = os.path.join(out_dir, f"calib_{method}_f{f:g}_N{N}.csv")
            write_curve_csv(curve, path)
            print(f"f={f:g} N={N} {method}: rank corr "
                  f"{curve.rank_correlation():.3f} -> {path}")
    return 0 if failures == 0 else 1


def cmd_mem(cfg, out_dir: str) -> int:
    params = TransmissionParams(order=cfg.transmission_order,
                                alpha=cfg.alpha, beta=cfg.beta)
    path = os.path.join(out_dir, "memory.csv")
    width = max(cfg.batch_sizes)
    with open(path, "w") as fh:
        fh.write("f,N,method,local_len_min,local_len_max,"
                 "krylov_mib_min,krylov_mib_max,factor_mib_mean,"
                 "factor_peak_mib_mean\n")
        for f, nspec, problem in _problems_of(cfg):
            N = bench.subdomain_count(nspec)
            for method in cfg.methods:
                ctx = problem.build_ctx(method, params)
                est = bench.estimate_memory(ctx, width, cfg.restart,
                                            cfg.precision)
                lengths = est.krylov_local_lengths
                kmib = [bench.mib(b) for b in est.krylov_bytes]
                fmib = [bench.mib(b) for b in est.factor_only_bytes]
                pmib = [bench.mib(b) for b in est.factor_peak_bytes]
                fh.write(f"{f:g},{N},{method},{min(lengths)},{max(lengths)},"
                         f"{round(min(kmib))},{round(max(kmib))},"
                         f"{sum(fmib)/len(fmib):.1f},"
                         f"{sum(pmib)/len(pmib):.1f}\n")
                print(f"f={f:g} N={N} {method}: krylov "
                      f"{round(min(kmib))}-{round(max(kmib))} MiB "
                      f"for width {width}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = bench.parse_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    handler = {"run": cmd_run, "tune": cmd_tune,
               "calibrate": cmd_calibrate, "mem": cmd_mem}[args.command]
    return handler(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
