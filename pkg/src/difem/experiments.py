"""Convergence runs and the verification suites.

A level runs the full pipeline: mesh, classification, resolution checks, dof
layout, assembly, solve, error measurement.  ``run_convergence`` chains levels
and writes the CSV and plot files; the ``verify_*`` functions back the
``difem verify`` suites and the acceptance tests.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .assembly import assemble, estimate_infsup, solve
from .exceptions import AssumptionViolation, DifemError, InterfaceResolutionError
from .geometry import MINUS, PLUS, classify, verify_assumptions
from .interpolation import QuadraticField, build_patches, check_commuting, commuting_report, l2_project_p0
from .mesh import build_mesh
from .problems import ProblemSpec, catalog, patch_problem
from .quadrature import cut_side_rule, integrate_cut_side, integrate_segment, integrate_tri3, polygon_area
from .reporting import COLUMNS, compute_errors, convergence_rates, format_table, rate_table, write_plot_data
from .spaces import build_layout

log = logging.getLogger(__name__)

DEFAULT_C = 1e-8


@dataclass
class LevelResult:
    level: int
    mesh: object
    geometry: object
    report: object
    layout: object
    system: object
    solution: object
    record: object


@dataclass
class ConvergenceRun:
    problem: ProblemSpec
    levels: list
    records: list
    results: list = field(default_factory=list, repr=False)
    files: list = field(default_factory=list)

    def table(self) -> str:
        return format_table(self.records)

    def csv(self) -> str:
        return rate_table(self.records)


def _with_level(exc: DifemError, level: int) -> DifemError:
    new = type(exc)(f"level {level}: {exc}")
    new.level = level
    return new


def run_level(
    problem: ProblemSpec,
    level: int,
    reference_degree: int = 6,
    assumption_c: float = DEFAULT_C,
    strict: bool = False,
    normalization: str = "domain",
) -> LevelResult:
    """Run the whole pipeline on one level.

    Raises
    ------
    AssumptionViolation
        If the area bound fails, or any resolution check fails with ``strict``.
    """
    mesh = build_mesh(problem.domain, level)
    geometry = classify(mesh, problem.levelset)
    report = verify_assumptions(mesh, geometry, c=assumption_c)
    if report.fatal or (strict and not report.ok):
        where = report.small_elements[:5] if report.fatal else (report.bad_elements[:5] or report.bad_edges[:5])
        raise InterfaceResolutionError(f"{report.summary()}; first offending elements/edges {where}")
    if not report.ok:
        log.warning("level %d: %s", level, report.summary())
    layout = build_layout(mesh, geometry, problem)
    system = assemble(mesh, geometry, layout, problem)
    solution = solve(system)
    record = compute_errors(solution, problem, geometry, layout, reference_degree, normalization)
    return LevelResult(level, mesh, geometry, report, layout, system, solution, record)


def output_stem(problem: ProblemSpec) -> str:
    return f"{problem.name}_beta{problem.beta_minus / problem.beta_plus:g}"


def run_convergence(
    problem: ProblemSpec,
    levels,
    output_dir=None,
    reference_degree: int = 6,
    assumption_c: float = DEFAULT_C,
    strict: bool = False,
    normalization: str = "domain",
) -> ConvergenceRun:
    """Run ``levels`` in order; write CSV and plot data if ``output_dir`` is set."""
    levels = list(levels)
    results = []
    for level in levels:
        try:
            res = run_level(problem, level, reference_degree, assumption_c, strict, normalization)
        except DifemError as exc:
            raise _with_level(exc, level) from exc
        log.info("level %d: %s", level, " ".join(f"{k}={res.record.errors()[k]:.3e}" for k in COLUMNS))
        results.append(res)
    run = ConvergenceRun(problem, levels, convergence_rates([r.record for r in results]), results)
    if output_dir is not None:
        run.files = write_outputs(run, output_dir)
    return run


def diagnostics_csv(run: ConvergenceRun) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([
        "level", "h", "dofs", "relative_residual", "min_pivot_ratio",
        "min_area_ratio", "resolution_ok", "sigma_energy_error",
    ])
    for r in run.results:
        wr.writerow([
            r.level, f"{r.mesh.h:.6E}", r.layout.size, f"{r.solution.relative_residual:.2E}",
            f"{r.solution.min_pivot_ratio:.2E}", f"{r.report.min_area_ratio:.3E}",
            int(r.report.ok), f"{r.record.sigma_energy:.3E}",
        ])
    return buf.getvalue()


def write_outputs(run: ConvergenceRun, output_dir) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = output_stem(run.problem)
    files = [out / f"{stem}.csv", out / f"{stem}_diagnostics.csv"]
    files[0].write_text(run.csv())
    files[1].write_text(diagnostics_csv(run))
    files += write_plot_data(run.records, out, stem)
    return files


# -- patch test ---------------------------------------------------------------

def patch_errors(level: int, beta_minus: float = 2.0, **kwargs) -> dict:
    """Absolute errors of the affine-interface patch test.

    ``u^-`` is piecewise linear while ``u_h^-`` is piecewise constant, so the
    fourth entry compares ``u_h^-`` with the cut-cell mean of ``u^-``.
    """
    problem = patch_problem(beta_minus, **kwargs)
    res = run_level(problem, level)
    ab = dict(res.record.absolute)
    mean = l2_project_p0(problem.u_minus, res.layout, res.geometry)
    uh = res.solution.u_minus
    area = res.geometry.side_areas(MINUS)[res.layout.p0_tris]
    ab["e_u_minus"] = float(np.sqrt(np.sum(area * (mean - uh) ** 2)))
    ab["relative_residual"] = res.solution.relative_residual
    return ab


def verify_patch(levels=range(2, 6), betas=(2.0, 0.01, 100.0), tol: float = 1e-9):
    rows = []
    for beta in betas:
        for level in levels:
            ab = patch_errors(level, beta)
            rows.append((beta, level, max(ab[k] for k in COLUMNS)))
    ok = all(r[2] <= tol for r in rows)
    lines = [f"beta={b:g} level={lv} max_error={e:.3e}" for b, lv, e in rows]
    return ok, "\n".join(lines)


# -- inf-sup ------------------------------------------------------------------

def infsup_sequence(example: int = 2, beta_minus: float = 1.0, levels=range(2, 6), max_size: int = 6000) -> list:
    problem = catalog(example, beta_minus)
    values = []
    for level in levels:
        mesh = build_mesh(problem.domain, level)
        geometry = classify(mesh, problem.levelset)
        layout = build_layout(mesh, geometry, problem)
        system = assemble(mesh, geometry, layout, problem)
        values.append((level, estimate_infsup(system, max_size)))
    return values


def verify_infsup(example: int = 2, beta_minus: float = 1.0, levels=range(2, 6)):
    values = infsup_sequence(example, beta_minus, levels)
    first = values[0][1]
    ok = first > 0 and all(v >= 0.5 * first for _, v in values)
    lines = [f"level={lv} infsup={v:.6f} ratio={v / first:.3f}" for lv, v in values]
    return ok, "\n".join(lines)


# -- commuting ------------------------------------------------------------------

def commuting_rows(examples=(1, 2, 3, 4), levels=range(2, 6), n_fields: int = 50, seed: int = 20241016):
    rng = np.random.default_rng(seed)
    rows = []
    for ex in examples:
        problem = catalog(ex, 1.0)
        for level in levels:
            mesh = build_mesh(problem.domain, level)
            geometry = classify(mesh, problem.levelset)
            layout = build_layout(mesh, geometry, problem)
            patches = build_patches(mesh, geometry)
            worst, means = 0.0, []
            for _ in range(n_fields):
                f = QuadraticField.random(rng)
                mx, mean = check_commuting(f, f.div, layout, patches, geometry)
                worst = max(worst, mx)
                means.append(mean)
            rows.append((level, ex, worst, float(np.mean(means))))
    return rows


def verify_commuting(tol: float = 1e-10, seed: int = 20241016, **kwargs):
    rows = commuting_rows(seed=seed, **kwargs)
    ok = all(r[2] <= tol for r in rows)
    return ok, f"seed={seed}\n" + commuting_report(rows)


# -- quadrature ---------------------------------------------------------------

def _random_triangle(rng):
    while True:
        p = rng.uniform(-1.0, 1.0, (3, 2))
        if abs(polygon_area(p)) > 1e-2:
            return p


def _p2_exact(Q, L, c, tri) -> float:
    """Exact integral of ``x^T Q x + L.x + c`` over ``tri``.

    Uses the barycentric moments ``int l_i = |T|/3`` and
    ``int l_i l_j = |T| (1 + delta_ij) / 12``.
    """
    area = abs(polygon_area(tri))
    P = np.asarray(tri)
    # x = sum_i l_i P_i, so x^T Q x = sum_ij l_i l_j P_i^T Q P_j
    G = P @ Q @ P.T
    quad = area / 12.0 * (G.sum() + np.trace(G))
    lin = area / 3.0 * float(np.sum(P @ L))
    return quad + lin + c * area


def verify_quadrature(n: int = 1000, seed: int = 7, tol: float = 1e-12):
    """Midpoint rule on random P1 segment integrands, three-point and
    subtraction rules on random P2 triangle integrands."""
    rng = np.random.default_rng(seed)
    worst_seg = worst_tri = worst_cut = 0.0
    for _ in range(n):
        a, b = rng.uniform(-1.0, 1.0, (2, 2))
        g = rng.standard_normal(3)
        f = lambda x, y, g=g: g[0] + g[1] * x + g[2] * y  # noqa: E731
        exact = np.hypot(*(b - a)) * 0.5 * (f(*a) + f(*b))
        got = integrate_segment(f, (a, b))
        worst_seg = max(worst_seg, abs(got - exact) / max(abs(exact), 1e-300))
    for _ in range(n):
        tri = _random_triangle(rng)
        Q = rng.standard_normal((2, 2))
        Q = 0.5 * (Q + Q.T)
        L = rng.standard_normal(2)
        c = float(rng.standard_normal())

        def f(x, y, Q=Q, L=L, c=c):
            return Q[0, 0] * x * x + 2 * Q[0, 1] * x * y + Q[1, 1] * y * y + L[0] * x + L[1] * y + c

        exact = _p2_exact(Q, L, c, tri)
        scale = max(abs(exact), abs(polygon_area(tri)) * np.abs([*Q.ravel(), *L, c]).max())
        worst_tri = max(worst_tri, abs(integrate_tri3(f, tri) - exact) / scale)
        # subtraction rule on a random straight cut of the same triangle
        s, t = rng.uniform(0.05, 0.95, 2)
        p, q = tri[0] + s * (tri[1] - tri[0]), tri[0] + t * (tri[2] - tri[0])
        small = np.array([tri[0], p, q])
        large = np.array([p, tri[1], tri[2], q])

        # the small triangle plays the MINUS side, so PLUS is the subtraction rule
        cut = SimpleNamespace(rule=lambda side, tri=tri, small=small: cut_side_rule(tri, small, side == MINUS))
        got = integrate_cut_side(f, cut, PLUS)
        exact_large = _p2_exact(Q, L, c, large[[0, 1, 2]]) + _p2_exact(Q, L, c, large[[0, 2, 3]])
        worst_cut = max(worst_cut, abs(got - exact_large) / scale)
    ok = max(worst_seg, worst_tri, worst_cut) <= tol
    text = (
        f"seed={seed} n={n}\n"
        f"segment midpoint P1 max rel error {worst_seg:.2e}\n"
        f"three-point P2 max rel error {worst_tri:.2e}\n"
        f"subtraction rule P2 max rel error {worst_cut:.2e}"
    )
    return ok, text


SUITES = {
    "quadrature": verify_quadrature,
    "commuting": verify_commuting,
    "infsup": verify_infsup,
    "patch": verify_patch,
}


__all__ = [
    "AssumptionViolation", "ConvergenceRun", "LevelResult", "SUITES", "infsup_sequence",
    "output_stem", "patch_errors", "run_convergence", "run_level", "verify_commuting",
    "verify_infsup", "verify_patch", "verify_quadrature",
]
