"""Experiment runner: configuration parsing, method-comparison sweeps over
frequency/partition/batch matrices, memory estimates and CSV reports.

Config files are flat `key = value` text; list values are comma-separated.
Reports are written in full precision so that parse(write(report)) is an
identity; residual histories go to one semicolon-separated file per
(method, params, N) run.
"""

import time
from dataclasses import dataclass, field, fields

import numpy as np

from .assembly import TransmissionParams
from .krylov import KrylovConfig, write_history_csv
from .model import (HomogeneousModel, LayeredModel, VelocityModel,
                    mini_subduction_model, read_gridded_model)
from .oras import OrasContext
from .osm import OsmContext
from .problems import DEFAULT_DOF_CAP, ProblemSetup, build_problem, source_line
from .tuning import default_grid, optimize_params

BYTES_SINGLE = 8   # single-precision complex
BYTES_DOUBLE = 16


@dataclass
class ExperimentConfig:
    model: str = "mini_subduction"
    lx: float = 10200.0
    ly: float = 2800.0
    frequencies: list = field(default_factory=lambda: [10.0])
    order: int = 1
    ppw: int = 4
    partition: str = "strips_x"
    subdomains: list = field(default_factory=lambda: [8])
    methods: list = field(default_factory=lambda: ["oras", "osm"])
    transmission_order: int = 0
    alpha: complex = 1.0
    beta: complex = 0.0
    optimize: bool = False
    num_sources: int = 4
    source_depth_frac: float = 0.05
    source_margin_frac: float = 0.05
    batch_sizes: list = field(default_factory=lambda: [16])
    tol: float = 1e-4
    restart: int = 50
    max_iters: int = 1000
    precision: str = "double"
    dof_cap: int = DEFAULT_DOF_CAP

    def validate(self) -> None:
        for name in ("frequencies", "subdomains", "methods", "batch_sizes"):
            if not getattr(self, name):
                raise ValueError(f"config list {name} must be nonempty")
        for m in self.methods:
            if m not in ("oras", "osm"):
                raise ValueError(f"unknown method {m!r}")
        if self.precision not in ("single", "double"):
            raise ValueError("precision must be single or double")
        if not (0.0 <= self.source_depth_frac <= 1.0):
            raise ValueError("sources must lie inside the domain")
        if self.num_sources < 1:
            raise ValueError("need at least one source")


def _parse_value(name: str, raw: str, kind):
    raw = raw.strip()
    if kind is list:
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if name == "methods":
            return items
        if name == "subdomains":
            return [tuple(int(p) for p in s.split("x")) if "x" in s else int(s)
                    for s in items]
        if name == "batch_sizes":
            return [int(s) for s in items]
        return [float(s) for s in items]
    if kind is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    if kind is complex:
        return complex(raw.replace(" ", ""))
    return kind(raw)


def parse_config(path) -> ExperimentConfig:
    """Read a flat key = value file (comments start with #)."""
    defaults = ExperimentConfig()
    kinds = {f.name: type(getattr(defaults, f.name))
             for f in fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw, kinds[key])
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def model_from_spec(spec: str) -> VelocityModel:
    """mini_subduction | homogeneous:<c> | layered:<top:c,top:c,...> |
    grid:<path>"""
    if spec == "mini_subduction":
        return mini_subduction_model()
    if spec.startswith("homogeneous:"):
        return HomogeneousModel(float(spec.split(":", 1)[1]))
    if spec.startswith("layered:"):
        pairs = [p.split(":") for p in spec.split(":", 1)[1].split(",")]
        tops = [float(p[0]) for p in pairs]
        vels = [float(p[1]) for p in pairs]
        return LayeredModel(tops, vels)
    if spec.startswith("grid:"):
        return read_gridded_model(spec.split(":", 1)[1])
    raise ValueError(f"unknown model spec {spec!r}")


@dataclass
class MemoryEstimate:
    """Per-subdomain byte counts for the two memory drivers: factorization
    and the Krylov basis of a (width x restart) batch."""

    factor_peak_bytes: list
    factor_only_bytes: list
    krylov_local_lengths: list
    krylov_bytes: list

    @staticmethod
    def _stats(vals):
        return (min(vals), float(np.mean(vals)), max(vals)) if vals else (0, 0.0, 0)

    @property
    def krylov_bytes_total(self) -> int:
        return int(sum(self.krylov_bytes))

    @property
    def factor_bytes_total(self) -> int:
        return int(sum(self.factor_only_bytes))

    def summary(self) -> dict:
        out = {}
        for name in ("factor_peak_bytes", "factor_only_bytes", "krylov_bytes"):
            lo, mean, hi = self._stats(getattr(self, name))
            out[name] = {"min": lo, "mean": mean, "max": hi}
        return out


def bytes_per_scalar(precision: str) -> int:
    return BYTES_SINGLE if precision == "single" else BYTES_DOUBLE


def krylov_batch_bytes(length: int, width: int, restart: int,
                       precision: str = "single") -> int:
    """Exact storage of a full batch of Krylov vectors."""
    return length * width * restart * bytes_per_scalar(precision)


def mib(nbytes: int) -> float:
    return nbytes / 2.0**20


def estimate_memory(ctx: OrasContext | OsmContext, width: int, restart: int,
                    precision: str = "double") -> MemoryEstimate:
    """Memory model for a built context; factor bytes are rescaled from the
    factorization's nonzero counts when single precision is requested."""
    scale = bytes_per_scalar(precision) / BYTES_DOUBLE
    if isinstance(ctx, OrasContext):
        lengths = [len(R) for R in ctx.restrictions]
        factors = ctx.factors
    else:
        lengths = ctx.local_interface_lengths()
        factors = ctx.factors
    peak = [int(F.peak_bytes * scale) for F in factors]
    only = [int(F.factor_bytes * scale) for F in factors]
    kry = [krylov_batch_bytes(n, width, restart, precision) for n in lengths]
    return MemoryEstimate(peak, only, lengths, kry)


@dataclass
class RunRow:
    f: float
    dofs: int
    n_subdomains: int
    method: str
    batch: int
    transmission_order: int
    alpha: complex
    beta: complex
    iterations: int
    t_local_solve: float
    t_ortho: float
    t_spmm: float
    t_total: float
    core_seconds: float
    krylov_bytes_total: int
    factor_bytes_total: int
    factor_peak_bytes_max: int
    status: str


@dataclass
class RunReport:
    rows: list

    def __eq__(self, other):
        return isinstance(other, RunReport) and self.rows == other.rows


CSV_COLUMNS = [f.name for f in fields(RunRow)]


def write_csv(report: RunReport, path) -> None:
    """Stable column order, full-precision numbers, bit-identical for
    identical reports."""
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in report.rows:
            cells = []
            for name in CSV_COLUMNS:
                v = getattr(row, name)
                if isinstance(v, complex):
                    cells.append(f"{v.real!r}{v.imag:+}j")
                elif isinstance(v, float):
                    cells.append(repr(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def parse_report_csv(path) -> RunReport:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected report header in {path}")
        types = {f.name: f.type for f in fields(RunRow)}
        for line in fh:
            cells = line.rstrip("\n").split(",")
            kwargs = {}
            for name, cell in zip(CSV_COLUMNS, cells):
                t = types[name]
                if t is complex:
                    kwargs[name] = complex(cell)
                elif t is float:
                    kwargs[name] = float(cell)
                elif t is int:
                    kwargs[name] = int(cell)
                else:
                    kwargs[name] = cell
            rows.append(RunRow(**kwargs))
    return RunReport(rows)


def subdomain_count(spec) -> int:
    return spec[0] * spec[1] if isinstance(spec, tuple) else int(spec)


def run_experiment(cfg: ExperimentConfig, out_dir=None,
                   progress=None) -> RunReport:
    """Execute every (frequency, partition, method, batch) combination.

    Solver outputs are deterministic; timings vary. Failures are recorded in
    the row status and the sweep continues. When out_dir is given, residual
    histories are written there, one CSV per run.
    """
    cfg.validate()
    model = model_from_spec(cfg.model)
    rows = []
    for f in cfg.frequencies:
        for nspec in cfg.subdomains:
            kind = cfg.partition
            problem = build_problem(
                model, cfg.lx, cfg.ly, f, cfg.order, cfg.ppw, kind, nspec,
                source_line(cfg.lx, cfg.ly, cfg.num_sources,
                            cfg.source_depth_frac, cfg.source_margin_frac),
                dof_cap=cfg.dof_cap)
            N = subdomain_count(nspec)
            for method in cfg.methods:
                params = _choose_params(cfg, problem, method)
                for batch in cfg.batch_sizes:
                    row = _run_one(cfg, problem, method, params, batch, N,
                                   out_dir)
                    rows.append(row)
                    if progress is not None:
                        progress(row)
    return RunReport(rows)


def _choose_params(cfg: ExperimentConfig, problem: ProblemSetup,
                   method: str) -> TransmissionParams:
    if not cfg.optimize:
        return TransmissionParams(order=cfg.transmission_order,
                                  alpha=cfg.alpha, beta=cfg.beta)
    grid = default_grid(method, cfg.transmission_order)
    alpha, beta, _ = optimize_params(problem, grid, tol=cfg.tol,
                                     restart=cfg.restart)
    return TransmissionParams(order=0 if beta == 0 else 2,
                              alpha=alpha, beta=beta)


def _run_one(cfg: ExperimentConfig, problem: ProblemSetup, method: str,
             params: TransmissionParams, batch: int, N: int,
             out_dir) -> RunRow:
    kcfg = KrylovConfig(tol=cfg.tol, restart=cfg.restart,
                        max_iters=cfg.max_iters, batch=batch)
    t0 = time.perf_counter()
    try:
        ctx = problem.build_ctx(method, params)
        U, stats = problem.run(method, params, kcfg)
        status = "ok" if all(s == "converged" for s in stats.statuses) else \
            ";".join(sorted(set(stats.statuses)))
        iters = stats.max_iterations
        times = stats.times
    except (RuntimeError, ValueError) as err:
        reason = f"error: {err}".replace(",", ";").replace("\n", " ")
        return RunRow(problem.f, problem.n_dofs, N, method, batch,
                      params.order, params.alpha, params.beta, 0,
                      0.0, 0.0, 0.0, time.perf_counter() - t0, 0.0,
                      0, 0, 0, reason)
    t_total = time.perf_counter() - t0
    mem = estimate_memory(ctx, batch, cfg.restart, cfg.precision)
    if out_dir is not None:
        tag = (f"hist_{method}_oo{params.order}_f{problem.f:g}_N{N}"
               f"_b{batch}.csv")
        write_history_csv(stats, f"{out_dir}/{tag}")
    return RunRow(problem.f, problem.n_dofs, N, method, batch, params.order,
                  params.alpha, params.beta, iters,
                  times.get("local_solve", 0.0),
                  times.get("orthogonalization", 0.0),
                  times.get("spmm", 0.0), t_total,
                  t_total * N,
                  mem.krylov_bytes_total, mem.factor_bytes_total,
                  max(mem.factor_peak_bytes, default=0), status)
