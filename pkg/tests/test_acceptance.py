"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. The desk case is the heterogeneous layered+wedge
model on the 10200 x 2800 m box at 10 Hz with 8 strips.
"""

import cmath
import time

import numpy as np
import pytest

from helmdd.assembly import (TransmissionParams, assemble_global,
                             assemble_local_osm, assemble_point_sources,
                             build_dofmap)
from helmdd.bench import krylov_batch_bytes, mib
from helmdd.krylov import KrylovConfig, LinearOperator, richardson
from helmdd.linalg import (CsrMatrix, MultiVector, factorize,
                           relative_error, solve_batch, spmm)
from helmdd.mesh import (generate_rect_mesh, grow_overlap, partition_grid,
                         partition_strips)
from helmdd.model import LayeredModel, build_wavenumber, mini_subduction_model
from helmdd.oras import build_oras, solve_oras
from helmdd.osm import (InterfaceField, apply_IminusT, apply_T, build_osm,
                        compute_b, solve_osm, split_sources)
from helmdd.problems import build_problem, source_line
from helmdd.tuning import ParamGrid, calibrate_criterion, optimize_params

ORDER0 = TransmissionParams(order=0, alpha=1.0)


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def desk_p1():
    vm = mini_subduction_model()
    return build_problem(vm, 10200.0, 2800.0, 10.0, 1, 4, "strips_x", 8,
                         source_line(10200.0, 2800.0, 2))


@pytest.fixture(scope="module")
def desk_p3():
    vm = mini_subduction_model()
    return build_problem(vm, 10200.0, 2800.0, 10.0, 3, 4, "strips_x", 8,
                         source_line(10200.0, 2800.0, 2))


def test_criterion_1_oracle_equivalence(desk_p1, desk_p3):
    """Both solvers match the sparse-direct reference on the heterogeneous
    desk case at tol 1e-8 within a relative L2 error of 1e-6, in under 60 s
    per method."""
    cfg = KrylovConfig(tol=1e-8, restart=100, max_iters=800, batch=2)
    details = []
    ok = True
    for problem in (desk_p1, desk_p3):
        assert 20_000 <= problem.n_dofs <= 50_000
        U_ref = problem.direct_reference()
        for method in ("oras", "osm"):
            t0 = time.perf_counter()
            U, stats = problem.run(method, ORDER0, cfg)
            wall = time.perf_counter() - t0
            err = relative_error(U, U_ref, problem.problem.M).max()
            converged = all(s == "converged" for s in stats.statuses)
            details.append(f"p={problem.dofmap.order} {method}: "
                           f"err={err:.2e} t={wall:.1f}s "
                           f"iters={stats.max_iterations}")
            ok = ok and converged and err <= 1e-6 and wall <= 60.0
    report(1, ok, "; ".join(details))


def test_criterion_2_partition_of_unity():
    """sum(R^T D R) = I exactly (integer) for strips N in {2,4,8,16} and a
    2x2 grid."""
    m = generate_rect_mesh(16, 16, 1600.0, 1600.0)
    vm = LayeredModel([0.0, 800.0], [1500.0, 4000.0])
    kf = build_wavenumber(vm, m, 3.0)
    cases = [("strips", N, partition_strips(m, N, "x")) for N in (2, 4, 8, 16)]
    cases.append(("grid", 4, partition_grid(m, 2, 2)))
    ok = True
    for label, N, part in cases:
        dm = build_dofmap(m, part, order=2)
        prob = assemble_global(m, dm, kf)
        ctx = build_oras(m, grow_overlap(part), kf, ORDER0, dm, prob)
        counts = ctx.partition_of_unity_counts()
        ok = ok and counts.dtype.kind == "i" and bool(np.all(counts == 1))
    report(2, ok, "strips {2,4,8,16} and 2x2 grid all satisfy the exact "
                  "integer identity")


def _two_strip_problem(nx=24, ny=10, order=2):
    m = generate_rect_mesh(nx, ny, 2400.0, 1000.0)
    vm = LayeredModel([0.0, 500.0], [1500.0, 4000.0])
    kf = build_wavenumber(vm, m, 2.0)
    part = partition_strips(m, 2, "x")
    dm = build_dofmap(m, part, order=order)
    prob = assemble_global(m, dm, kf)
    src = assemble_point_sources(m, dm, [(600.0, 400.0)])
    return m, kf, part, dm, prob, src


def test_criterion_3_schur_equivalence():
    """The interface operator probed column by column equals the dense Schur
    complement of the monolithic coupled system to 1e-10."""
    m, kf, part, dm, prob, _ = _two_strip_problem()
    assert dm.n_dofs <= 2000
    params = TransmissionParams(order=2, alpha=1.0, beta=-0.35 + 0.15j)
    ctx = build_osm(m, part, kf, params, dm, prob)
    ops = ctx.ops_of(0, 1)
    _, A1c = assemble_local_osm(m, dm, part, 0, kf, params)
    _, A2c = assemble_local_osm(m, dm, part, 1, kf, params)
    A1, A2 = A1c.to_dense(), A2c.to_dense()
    S, Mm = ops.S.to_dense(), ops.M.to_dense()
    t = len(ops.trace)
    n1, n2 = len(A1), len(A2)
    C1 = np.zeros((t, n1)); C1[np.arange(t), ops.local_pos[0]] = 1.0
    C2 = np.zeros((t, n2)); C2[np.arange(t), ops.local_pos[1]] = 1.0
    Auu = np.block([[A1, np.zeros((n1, n2))], [np.zeros((n2, n1)), A2]])
    Aug = np.block([[np.zeros((n1, t)), -C1.T @ Mm],
                    [-C2.T @ Mm, np.zeros((n2, t))]])
    Agu = np.block([[2 * S @ C1, np.zeros((t, n2))],
                    [np.zeros((t, n1)), 2 * S @ C2]])
    Agg = np.block([[Mm, Mm], [Mm, Mm]])
    schur = Agg - Agu @ np.linalg.solve(Auu, Aug)
    oracle = np.linalg.solve(
        np.block([[Mm, np.zeros((t, t))], [np.zeros((t, t)), Mm]]), schur)
    nt = ctx.layout.total
    probe = np.zeros((nt, nt), dtype=complex)
    for c in range(nt):
        e = np.zeros((nt, 1), dtype=complex)
        e[c] = 1.0
        probe[:, c] = apply_IminusT(ctx, InterfaceField(ctx.layout, e)).data[:, 0]
    err = np.abs(probe - oracle).max() / np.abs(oracle).max()
    report(3, err <= 1e-10,
           f"{dm.n_dofs} DOFs, {nt} traces: max relative deviation {err:.2e}")


def test_criterion_4_richardson_equals_sweep():
    """20 fixed-point iterations equal the hand-coded interface sweep to
    1e-12 per iterate."""
    m, kf, part, dm, prob, src = _two_strip_problem()
    params = TransmissionParams(order=2, alpha=1.0, beta=-0.35 + 0.15j)
    ctx = build_osm(m, part, kf, params, dm, prob)
    b = compute_b(ctx, src)
    T_op = LinearOperator(ctx.layout.total, lambda X: MultiVector(
        apply_T(ctx, InterfaceField(ctx.layout, X.data)).data))
    hist = richardson(T_op, MultiVector(b.data), 20)

    ops = ctx.ops_of(0, 1)
    _, A1c = assemble_local_osm(m, dm, part, 0, kf, params)
    _, A2c = assemble_local_osm(m, dm, part, 1, kf, params)
    F1, F2 = factorize(A1c), factorize(A2c)
    Mm, S = ops.M.to_dense(), ops.S.to_dense()
    t = len(ops.trace)
    f1, f2 = split_sources(ctx, src)
    P1, P2 = ops.local_pos[0], ops.local_pos[1]
    g12 = np.zeros((t, 1), dtype=complex)
    g21 = np.zeros((t, 1), dtype=complex)
    worst = 0.0
    for it in range(1, 21):
        load1 = f1.copy(); load1[P1] += Mm @ g21
        load2 = f2.copy(); load2[P2] += Mm @ g12
        u1 = solve_batch(F1, MultiVector(load1)).data
        u2 = solve_batch(F2, MultiVector(load2)).data
        g12, g21 = (np.linalg.solve(Mm, -Mm @ g21 - 2 * (S @ u1[P1])),
                    np.linalg.solve(Mm, -Mm @ g12 - 2 * (S @ u2[P2])))
        rich = hist[it].data
        scale = max(np.abs(g12).max(), np.abs(g21).max())
        worst = max(worst,
                    np.abs(rich[:t] - g12).max() / scale,
                    np.abs(rich[t:] - g21).max() / scale)
    report(4, worst <= 1e-12, f"worst per-iterate deviation {worst:.2e}")


def test_criterion_5_transmission_trend(desk_p3):
    """Optimized order-2 conditions beat order-0 for both methods, and the
    OSM/ORAS iteration ratio shrinks (the order-2 gap is smaller)."""
    cfg = KrylovConfig(tol=1e-8, restart=150, max_iters=600, batch=2)
    base: dict[str, int] = {}
    best: dict[str, int] = {}
    for method in ("oras", "osm"):
        _, stats = desk_p3.run(method, ORDER0, cfg)
        assert all(s == "converged" for s in stats.statuses)
        base[method] = stats.max_iterations
        grid = ParamGrid(
            alphas=[1.0 + 0j, 1.1 + 0j],
            betas=[0.5 * cmath.exp(1j * 0.75 * np.pi),
                   0.35 * cmath.exp(1j * 0.8 * np.pi),
                   0.25 * cmath.exp(1j * 0.9 * np.pi)],
            method=method, budget=600)
        alpha, beta, table = optimize_params(desk_p3, grid, tol=1e-8,
                                             restart=150)
        best[method] = min(r[2] for r in table if r[2] is not None)
    ratio0 = base["osm"] / base["oras"]
    ratio2 = best["osm"] / best["oras"]
    ok = (best["oras"] < base["oras"] and best["osm"] < base["osm"]
          and ratio2 < ratio0)
    report(5, ok,
           f"oras {base['oras']}->{best['oras']}, osm {base['osm']}->"
           f"{best['osm']}, gap ratio {ratio0:.2f}->{ratio2:.2f}")


# Local GMRES-vector sizes and published MiB for a 64 x 50 single-precision
# batch: (method, N, local length, MiB), min and max rows of each partition.
MEMORY_TABLE = [
    ("oras", 256, 74_701, 1824), ("oras", 256, 88_621, 2164),
    ("oras", 512, 36_490, 891), ("oras", 512, 45_013, 1099),
    ("oras", 1024, 17_736, 433), ("oras", 1024, 23_296, 569),
    ("osm", 256, 4_923, 120), ("osm", 256, 15_129, 369),
    ("osm", 512, 3_226, 79), ("osm", 512, 10_413, 254),
    ("osm", 1024, 2_019, 49), ("osm", 1024, 6_832, 167),
]


def test_criterion_6_memory_model():
    """The Krylov-batch memory formula reproduces every published MiB cell
    for 64 RHSs at restart 50 with 8-byte complex scalars."""
    bad = [(row, round(mib(krylov_batch_bytes(row[2], 64, 50, "single"))))
           for row in MEMORY_TABLE
           if round(mib(krylov_batch_bytes(row[2], 64, 50, "single"))) != row[3]]
    report(6, not bad, f"all {len(MEMORY_TABLE)} cells reproduced exactly"
           if not bad else f"mismatches: {bad}")


def test_criterion_7_pseudo_block_consistency():
    """Batch-of-8 runs produce the same iteration counts and residual
    histories as eight single-RHS runs (1e-8 relative per iteration)."""
    m, kf, part, dm, prob, _ = _two_strip_problem()
    xs = np.linspace(200.0, 2200.0, 8)
    src = assemble_point_sources(m, dm, [(x, 300.0) for x in xs])
    octx = build_oras(m, grow_overlap(part), kf, ORDER0, dm, prob)
    sctx = build_osm(m, part, kf, ORDER0, dm, prob)
    worst = 0.0
    ok = True
    for label, runner in (
            ("oras", lambda s, c: solve_oras(octx, s, c)[1]),
            ("osm", lambda s, c: solve_osm(sctx, s, c)[2])):
        cfg8 = KrylovConfig(tol=1e-8, restart=80, max_iters=400, batch=8)
        batched = runner(src, cfg8)
        for j in range(8):
            cfg1 = KrylovConfig(tol=1e-8, restart=80, max_iters=400, batch=1)
            single = runner(MultiVector(src.data[:, j:j + 1]), cfg1)
            ok = ok and batched.iterations[j] == single.iterations[0]
            hb, hs = batched.histories[j], single.histories[0]
            ok = ok and len(hb) == len(hs)
            if len(hb) == len(hs):
                nz = np.maximum(np.abs(hs), 1e-300)
                worst = max(worst, float(np.abs(hb - hs).max() / nz.max()))
    report(7, ok and worst <= 1e-8,
           f"iteration counts identical, worst history deviation {worst:.2e}")


def test_criterion_8_substructured_size_advantage(desk_p1, desk_p3):
    """The OSM iteration space is smaller than the ORAS (global) one for
    every tested partition; ratios are logged, not asserted."""
    ok = True
    lines = []
    for problem in (desk_p1, desk_p3):
        n_int = problem.krylov_vector_length("osm")
        n_vol = problem.krylov_vector_length("oras")
        ok = ok and 0 < n_int < n_vol
        lines.append(f"p={problem.dofmap.order}: {n_vol}/{n_int} "
                     f"= {n_vol / n_int:.1f}x")
    m = generate_rect_mesh(64, 64, 6400.0, 6400.0)
    parts = [(f"strips N={N}", partition_strips(m, N, "x"))
             for N in (2, 4, 8, 16)]
    parts.append(("grid 2x2", partition_grid(m, 2, 2)))
    for label, part in parts:
        dm = build_dofmap(m, part, order=1)
        n_int = sum(len(d) for d in dm.trace_dofs.values())
        ok = ok and 0 < n_int < dm.n_dofs
        lines.append(f"{label}: {dm.n_dofs}/{n_int} "
                     f"= {dm.n_dofs / n_int:.1f}x")
    # observational: overlap growth on an 8-strip 16x16 mesh (not asserted)
    m = generate_rect_mesh(16, 16, 1600.0, 1600.0)
    part = partition_strips(m, 8, "x")
    dm = build_dofmap(m, part, order=1)
    ov = grow_overlap(part)
    fracs = []
    for i in range(8):
        owned = len(dm.dofs_of_elements(part.elements_of(i)))
        ext = len(dm.dofs_of_elements(ov.extended_elements[i]))
        fracs.append((ext - owned) / ext)
    lines.append(f"overlap DOF fraction (8 strips): "
                 f"{min(fracs):.0%}..{max(fracs):.0%}")
    report(8, ok, "; ".join(lines))


def random_indefinite_system(rng, n, density=0.05):
    """Random sparse complex-symmetric matrix with an indefinite real part
    and an imaginary diagonal shift (the absorbing-boundary Helmholtz
    signature). Conditioning is capped so the backward error measures
    pivoting stability rather than the conditioning of the draw."""
    mask = np.triu(rng.random((n, n)) < density, 1)
    Ad = np.zeros((n, n), dtype=complex)
    vals = rng.standard_normal(int(mask.sum())) \
        + 1j * rng.standard_normal(int(mask.sum()))
    Ad[mask] = vals
    Ad = Ad + Ad.T
    Ad[np.diag_indices(n)] = rng.standard_normal(n) * 2.0 + 4.0j
    return Ad


def test_criterion_9_kernels():
    """Backward error at most 1e-12 on 100 random complex-symmetric
    indefinite systems (n <= 500); spmm matches the dense product to
    1e-14."""
    rng = np.random.default_rng(42)
    worst_be = 0.0
    worst_sp = 0.0
    count = 0
    indefinite_checked = 0
    while count < 100:
        n = int(rng.integers(5, 501))
        Ad = random_indefinite_system(rng, n)
        if np.linalg.cond(Ad) > 1e3:
            continue
        ev = np.linalg.eigvalsh(Ad.real)
        if not (ev.min() < 0 < ev.max()):
            continue
        indefinite_checked += 1
        r, c = np.nonzero(Ad)
        A = CsrMatrix.from_coo((n, n), r, c, Ad[r, c], symmetric=True)
        b = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        X = solve_batch(factorize(A), MultiVector(b)).data
        worst_be = max(worst_be, float(
            np.linalg.norm(Ad @ X - b) / np.linalg.norm(b)))
        Y = spmm(A, MultiVector(b)).data
        ref = Ad @ b
        worst_sp = max(worst_sp, float(
            np.abs(Y - ref).max() / np.abs(ref).max()))
        count += 1
    ok = worst_be <= 1e-12 and worst_sp <= 1e-14
    report(9, ok, f"{count} systems (all with indefinite real part): worst "
                  f"backward error {worst_be:.2e}, worst spmm deviation "
                  f"{worst_sp:.2e}")


def test_criterion_10_calibration(desk_p1):
    """Residual tracks the true error (rank correlation >= 0.95 for both
    methods); the errors at residual 1e-4 agree within one order of
    magnitude (soft assertion, logged with the curves on failure)."""
    curves = {}
    for method in ("oras", "osm"):
        curves[method] = calibrate_criterion(desk_p1, method, ORDER0,
                                             tol_floor=1e-8, restart=150,
                                             max_iters=800)
    corr = {m: c.rank_correlation() for m, c in curves.items()}
    ok = all(v >= 0.95 for v in corr.values())

    def error_at(curve, res):
        hit = np.flatnonzero(curve.residuals <= res)
        return curve.errors[hit[0]] if len(hit) else np.inf

    e_oras = error_at(curves["oras"], 1e-4)
    e_osm = error_at(curves["osm"], 1e-4)
    ratio = max(e_oras, e_osm) / min(e_oras, e_osm)
    if ratio > 10.0:
        print(f"WARN criterion 10 (soft): errors at residual 1e-4 differ by "
              f"{ratio:.1f}x (oras {e_oras:.2e}, osm {e_osm:.2e})")
        for m, c in curves.items():
            print(f"  {m} curve residuals: {np.array2string(c.residuals)}")
            print(f"  {m} curve errors:    {np.array2string(c.errors)}")
    report(10, ok,
           f"rank corr oras {corr['oras']:.3f}, osm {corr['osm']:.3f}; "
           f"errors at 1e-4: oras {e_oras:.2e}, osm {e_osm:.2e} "
           f"(ratio {ratio:.1f}x, soft)")
