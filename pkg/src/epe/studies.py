"""Convergence studies, scheme benchmarking, and report emission.

Spatial studies measure errors against the exact manufactured solution at
the final time; temporal studies measure against a fine-step discrete
reference on the same mesh (the spatial error floor would otherwise mask
the O(tau) splitting error). Benchmarks run both schemes serially on a
shared mesh with identical tolerances and record per-phase wall times.

Reports are emitted as CSV (fixed schema), an aligned markdown table, and
a hand-rolled log-log SVG with slope-1 and slope-2 guide lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from epe.core import RunConfig, make_time_grid
from epe.fem.assembly import assemble_matrix
from epe.fem.dofs import make_layouts
from epe.mesh import build_unit_cube_mesh
from epe.mms import ErrorNorms, error_norms, example61
from epe.schemes import Discretization, RunResult, Sources, run

ERROR_FIELDS = ("E_L2", "H_L2", "u_L2", "u_H1", "p_L2")

CSV_HEADER = (
    "scheme,n,h,tau,"
    "err_E_L2,err_H_L2,err_u_L2,err_u_H1,err_p_L2,"
    "ord_E_L2,ord_H_L2,ord_u_L2,ord_u_H1,ord_p_L2,"
    "t_assemble_s,t_factor_s,t_loop_s,t_total_s"
)


class IoError(OSError):
    """Report files could not be written."""


@dataclass
class StudyRow:
    scheme: str
    n: int
    h: float
    tau: float
    errors: dict
    orders: dict          # empty on the first row of a scheme group
    timings: dict         # assemble / factorize / loop / total seconds


@dataclass
class StudyReport:
    kind: str             # spatial | temporal | benchmark
    rows: list
    x_field: str          # 'h' or 'tau': abscissa of orders and plots
    fingerprints: dict    # scheme -> configuration fingerprint

    def scheme_rows(self, scheme: str) -> list:
        return [r for r in self.rows if r.scheme == scheme]


def convergence_order(e_prev: float, e_curr: float, x_prev: float, x_curr: float) -> float:
    """Two-point order log(e_prev/e_curr) / log(x_prev/x_curr)."""
    return math.log(e_prev / e_curr) / math.log(x_prev / x_curr)


def _attach_orders(rows, x_field: str) -> None:
    by_scheme: dict = {}
    for row in rows:
        prev = by_scheme.get(row.scheme)
        if prev is not None:
            row.orders = {
                f: convergence_order(
                    prev.errors[f], row.errors[f], getattr(prev, x_field), getattr(row, x_field)
                )
                for f in ERROR_FIELDS
            }
        by_scheme[row.scheme] = row


def _timings(result: RunResult) -> dict:
    t = result.timings
    return {
        "assemble": t.assemble,
        "factorize": t.factorize,
        "loop": t.loop,
        "total": t.total,
    }


def spatial_convergence(n_values, config: RunConfig, scheme: str | None = None) -> StudyReport:
    """One run per mesh size at the fixed time grid of ``config``.

    Errors are measured against the exact solution at t = T; the reported
    mesh parameter h is 1/n (the customary labeling for this mesh family;
    the actual cell diameter is sqrt(3)/n, which changes no order).
    """
    scheme = scheme or config.scheme
    exact = example61(config.params)
    sources = Sources(j=exact.j, f=exact.f, g=exact.g)
    rows = []
    for n in n_values:
        cfg = replace(config, mesh_n=int(n), scheme=scheme)
        mesh = build_unit_cube_mesh(cfg.mesh_n)
        result = run(cfg, sources, exact, scheme=scheme, mesh=mesh)
        errs = error_norms(result.state, exact, cfg.grid.T, mesh, cfg.quad_error)
        rows.append(
            StudyRow(
                scheme=scheme,
                n=cfg.mesh_n,
                h=1.0 / cfg.mesh_n,
                tau=cfg.grid.tau,
                errors=errs.as_dict(),
                orders={},
                timings=_timings(result),
            )
        )
    _attach_orders(rows, "h")
    return StudyReport(
        kind="spatial", rows=rows, x_field="h", fingerprints={scheme: config.fingerprint()}
    )


def temporal_convergence(
    mesh_n: int,
    tau_values,
    config: RunConfig,
    tau_ref: float,
    scheme: str = "splitting",
) -> StudyReport:
    """Step-size study against a fine-step reference on the same mesh.

    The reference step must satisfy tau_ref <= min(tau)/8 so the reference
    is effectively converged in time relative to the coarser runs. Field
    differences are discrete L2 (and H1 for u) norms of coefficient
    differences via the assembled mass/stiffness matrices.
    """
    tau_values = sorted(float(t) for t in tau_values)
    if tau_ref > min(tau_values) / 8.0:
        raise ValueError(
            f"reference step {tau_ref!r} must be at most min(tau)/8 = {min(tau_values) / 8.0!r}"
        )
    exact = example61(config.params)
    sources = Sources(j=exact.j, f=exact.f, g=exact.g)
    mesh = build_unit_cube_mesh(mesh_n)
    layouts = make_layouts(mesh)
    disc = Discretization(mesh, layouts, config.params, config.quad_assembly)
    K_U = assemble_matrix(mesh, layouts.U, layouts.U, "ELASTICITY", (0.0, 1.0))

    T = config.grid.T

    def run_at(tau: float) -> RunResult:
        cfg = replace(config, mesh_n=mesh_n, grid=make_time_grid(T, round(T / tau)), scheme=scheme)
        return run(cfg, sources, exact, scheme=scheme, disc=disc)

    ref = run_at(tau_ref).state

    def mass_norm(M, d):
        return float(np.sqrt(max(d @ (M @ d), 0.0)))

    rows = []
    for tau in sorted(tau_values, reverse=True):
        state = run_at(tau).state
        dE, dH = state.E - ref.E, state.H - ref.H
        du, dp = state.u - ref.u, state.p - ref.p
        u_l2 = mass_norm(disc.M_U, du)
        errs = ErrorNorms(
            E_L2=mass_norm(disc.M_E, dE),
            H_L2=mass_norm(disc.M_H, dH),
            u_L2=u_l2,
            u_H1=float(np.sqrt(u_l2**2 + du @ (K_U @ du))),
            p_L2=mass_norm(disc.M_P, dp),
        )
        rows.append(
            StudyRow(
                scheme=scheme,
                n=mesh_n,
                h=1.0 / mesh_n,
                tau=tau,
                errors=errs.as_dict(),
                orders={},
                timings={"assemble": 0.0, "factorize": 0.0, "loop": 0.0, "total": 0.0},
            )
        )
    _attach_orders(rows, "tau")
    return StudyReport(
        kind="temporal", rows=rows, x_field="tau", fingerprints={scheme: config.fingerprint()}
    )


def benchmark(n_values, config: RunConfig) -> StudyReport:
    """Serial timing comparison of the two schemes on shared meshes.

    Rows run strictly serially (timing integrity); both schemes of one mesh
    share the mesh object, quadrature degrees, tolerances, and source
    evaluators, asserted by fingerprint equality in the report.
    """
    exact = example61(config.params)
    sources = Sources(j=exact.j, f=exact.f, g=exact.g)
    rows = []
    fingerprints = {}
    for n in n_values:
        mesh = build_unit_cube_mesh(int(n))
        for scheme in ("splitting", "monolithic"):
            cfg = replace(config, mesh_n=int(n), scheme=scheme)
            fingerprints[scheme] = cfg.fingerprint()
            result = run(cfg, sources, exact, scheme=scheme, mesh=mesh)
            errs = error_norms(result.state, exact, cfg.grid.T, mesh, cfg.quad_error)
            rows.append(
                StudyRow(
                    scheme=scheme,
                    n=cfg.mesh_n,
                    h=1.0 / cfg.mesh_n,
                    tau=cfg.grid.tau,
                    errors=errs.as_dict(),
                    orders={},
                    timings=_timings(result),
                )
            )
    rows.sort(key=lambda r: (r.scheme, r.n))
    return StudyReport(kind="benchmark", rows=rows, x_field="h", fingerprints=fingerprints)


def speedups(report: StudyReport) -> dict:
    """Benchmark ratio monolithic/splitting total time per mesh size."""
    split = {r.n: r.timings["total"] for r in report.scheme_rows("splitting")}
    mono = {r.n: r.timings["total"] for r in report.scheme_rows("monolithic")}
    return {n: mono[n] / split[n] for n in sorted(split) if n in mono and split[n] > 0}


# Report emission --------------------------------------------------------------


def report_csv(report: StudyReport) -> str:
    lines = [CSV_HEADER]
    for r in report.rows:
        cells = [r.scheme, str(r.n), f"{r.h:.15e}", f"{r.tau:.15e}"]
        cells += [f"{r.errors[f]:.15e}" for f in ERROR_FIELDS]
        cells += [f"{r.orders[f]:.6f}" if f in r.orders else "" for f in ERROR_FIELDS]
        cells += [
            f"{r.timings[k]:.6f}" for k in ("assemble", "factorize", "loop", "total")
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> list:
    """Re-parse an emitted CSV into StudyRow values (round-trip checks)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        errors = {f: float(c) for f, c in zip(ERROR_FIELDS, cells[4:9])}
        orders = {f: float(c) for f, c in zip(ERROR_FIELDS, cells[9:14]) if c != ""}
        timings = dict(zip(("assemble", "factorize", "loop", "total"), map(float, cells[14:18])))
        rows.append(
            StudyRow(
                scheme=cells[0],
                n=int(cells[1]),
                h=float(cells[2]),
                tau=float(cells[3]),
                errors=errors,
                orders=orders,
                timings=timings,
            )
        )
    return rows


def report_markdown(report: StudyReport) -> str:
    if report.kind == "benchmark":
        return _benchmark_markdown(report)
    head = ["h" if report.x_field == "h" else "tau"]
    for f in ERROR_FIELDS:
        head += [f"err {f}", "order"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in report.rows:
        x = getattr(r, report.x_field)
        cells = [f"{x:.6g}"]
        for f in ERROR_FIELDS:
            cells.append(f"{r.errors[f]:.4e}")
            cells.append(f"{r.orders[f]:.4f}" if f in r.orders else "-")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _benchmark_markdown(report: StudyReport) -> str:
    ratios = speedups(report)
    split = {r.n: r for r in report.scheme_rows("splitting")}
    mono = {r.n: r for r in report.scheme_rows("monolithic")}
    lines = [
        "| h | splitting total (s) | monolithic total (s) | speedup |",
        "|---|---|---|---|",
    ]
    for n in sorted(split):
        s, m = split[n], mono.get(n)
        mono_t = f"{m.timings['total']:.3f}" if m else "-"
        ratio = f"{ratios[n]:.2f}" if n in ratios else "-"
        lines.append(f"| 1/{n} | {s.timings['total']:.3f} | {mono_t} | {ratio} |")
    return "\n".join(lines) + "\n"


def report_svg(report: StudyReport, width: int = 640, height: int = 480) -> str:
    """Log-log error plot: one polyline per error field + 2 slope guides."""
    rows = report.rows
    xs = np.array([getattr(r, report.x_field) for r in rows], dtype=float)
    pad, legend_w = 50.0, 120.0
    x0, x1 = math.log10(xs.min()), math.log10(xs.max())
    all_errs = np.array([[r.errors[f] for f in ERROR_FIELDS] for r in rows])
    y0, y1 = math.log10(all_errs.min()), math.log10(all_errs.max())
    if x1 - x0 < 1e-12:
        x1 = x0 + 1.0
    if y1 - y0 < 1e-12:
        y1 = y0 + 1.0

    def to_px(lx, ly):
        px = pad + (lx - x0) / (x1 - x0) * (width - 2 * pad - legend_w)
        py = height - pad - (ly - y0) / (y1 - y0) * (height - 2 * pad)
        return px, py

    colors = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for fname, color in zip(ERROR_FIELDS, colors):
        pts = " ".join(
            "{:.2f},{:.2f}".format(*to_px(math.log10(getattr(r, report.x_field)),
                                          math.log10(r.errors[fname])))
            for r in rows
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
    # slope guides anchored near the data's lower-right corner
    for slope, dash in ((1, "6,3"), (2, "2,3")):
        ly_end = y0 + 0.15 * (y1 - y0)
        ly_start = ly_end - slope * (x1 - x0)
        pts = "{:.2f},{:.2f} {:.2f},{:.2f}".format(
            *to_px(x0, ly_start), *to_px(x1, ly_end)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#888888" '
            f'stroke-width="1" stroke-dasharray="{dash}"/>'
        )
    for i, (fname, color) in enumerate(zip(ERROR_FIELDS, colors)):
        ypix = pad + 16 * i
        parts.append(
            f'<text x="{width - legend_w}" y="{ypix}" fill="{color}" '
            f'font-size="12" font-family="sans-serif">{fname}</text>'
        )
    label = report.x_field
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 10}" fill="#000" font-size="12" '
        f'font-family="sans-serif">log10({label})</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: StudyReport, out_dir, formats=("csv", "md", "svg"), stem="report"):
    """Write the report files and return their paths."""
    if not report.rows:
        raise ValueError("cannot emit an empty report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        if "csv" in formats:
            paths["csv"] = out / f"{stem}.csv"
            paths["csv"].write_text(report_csv(report))
        if "md" in formats:
            paths["md"] = out / f"{stem}.md"
            paths["md"].write_text(report_markdown(report))
        if "svg" in formats and report.kind != "benchmark":
            paths["svg"] = out / f"{stem}.svg"
            paths["svg"].write_text(report_svg(report))
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return paths
