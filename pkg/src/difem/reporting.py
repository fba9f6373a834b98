"""Error norms over the polygonal subdomains, rates, and table output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import MINUS, PLUS
from .quadrature import fan_triangles, reference_rule
from .spaces import all_p1_gradients, rt0_factors

COLUMNS = ("e_grad", "e_u_plus", "e_sigma", "e_u_minus")


@dataclass
class ErrorRecord:
    """Errors of one level.

    ``relative`` divides each error by the norm of the exact quantity over the
    same polygonal region.  ``scaled`` divides by whole-domain norms instead:
    ``||grad u||`` over both sides for ``e_grad``, ``||u||`` over both sides
    for the two L2 errors, and ``beta^- ||grad u||`` for ``e_sigma``.
    """

    level: int
    h: float
    absolute: dict
    relative: dict
    scaled: dict
    exact_norms: dict
    sigma_energy: float = float("nan")  # relative, including the divergence
    normalization: str = "domain"
    rates: dict = field(default_factory=dict)

    def errors(self) -> dict:
        return self.scaled if self.normalization == "domain" else self.relative

    def __getattr__(self, name):
        if name in COLUMNS:
            return self.errors()[name]
        raise AttributeError(name)


NORMALIZATIONS = ("domain", "region")


def subcell_triangles(geometry, side: int):
    """Fan triangles covering the ``side`` part of every relevant element.

    Returns ``(owner, tris)`` with ``tris`` of shape ``(m, 3, 2)``.
    """
    mesh = geometry.mesh
    elems = geometry.minus_tris if side == MINUS else geometry.plus_tris
    coords = mesh.tri_coords()
    owner, tris = [], []
    for t in elems:
        rec = geometry.cuts.get(int(t))
        if rec is None:
            owner.append(t)
            tris.append(coords[t])
        else:
            for tri in fan_triangles(rec.polygon(side)):
                owner.append(t)
                tris.append(tri)
    return np.array(owner, dtype=np.int64), np.array(tris).reshape(-1, 3, 2)


def compute_errors(
    solution, problem, geometry, layout, degree: int = 6, normalization: str = "domain"
) -> ErrorRecord:
    """Errors of the four reported quantities over the polygonal subdomains.

    Parameters
    ----------
    solution : SolutionFields or coefficient vector
    degree : exactness degree of the reference rule
    normalization : ``"domain"`` or ``"region"``, selects which normalized
        errors the record reports by default (both are stored)
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    mesh = layout.mesh
    sig, um, up = layout.split(solution.x if hasattr(solution, "x") else np.asarray(solution))
    ab, ex = {}, {}

    owner, tris = subcell_triangles(geometry, PLUS)
    if len(owner):
        pts, w = reference_rule(tris, degree)
        X, Y = pts[..., 0], pts[..., 1]
        g = all_p1_gradients(mesh)[owner]  # (m, 3, 2)
        nodal = up[layout.p1_index[mesh.triangles[owner]]]  # (m, 3)
        gh = np.einsum("mi,mid->md", nodal, g)
        corners = mesh.tri_coords()[owner]
        lam12 = np.einsum("mqd,mkd->mqk", pts - corners[:, None, 0, :], g[:, 1:, :])
        lam = np.concatenate([1.0 - lam12.sum(axis=2, keepdims=True), lam12], axis=2)
        uh = np.einsum("mqi,mi->mq", lam, nodal)
        gx, gy = problem.grad_plus(X, Y)
        u = problem.u_plus(X, Y)
        ab["e_grad"] = np.sum(w * ((gx - gh[:, None, 0]) ** 2 + (gy - gh[:, None, 1]) ** 2))
        ex["e_grad"] = np.sum(w * (gx**2 + gy**2))
        ab["e_u_plus"] = np.sum(w * (u - uh) ** 2)
        ex["e_u_plus"] = np.sum(w * u**2)
    else:
        for k in ("e_grad", "e_u_plus"):
            ab[k] = ex[k] = 0.0

    owner, tris = subcell_triangles(geometry, MINUS)
    div_err = div_ex = 0.0
    if len(owner):
        pts, w = reference_rule(tris, degree)
        X, Y = pts[..., 0], pts[..., 1]
        c = rt0_factors(mesh)[owner]
        dof = layout.rt_index[mesh.tri_edges[owner]]
        coef = sig[dof] * c  # (m, 3)
        corners = mesh.tri_coords()[owner]
        sh = np.einsum("mi,mqid->mqd", coef, pts[:, :, None, :] - corners[:, None, :, :])
        sx, sy = problem.sigma_minus(X, Y)
        u = problem.u_minus(X, Y)
        uh = um[layout.p0_index[owner]][:, None]
        ab["e_sigma"] = np.sum(w * ((sx - sh[..., 0]) ** 2 + (sy - sh[..., 1]) ** 2))
        ex["e_sigma"] = np.sum(w * (sx**2 + sy**2))
        ab["e_u_minus"] = np.sum(w * (u - uh) ** 2)
        ex["e_u_minus"] = np.sum(w * u**2)
        # div sigma^- = -f^-
        divh = 2.0 * coef.sum(axis=1)[:, None]
        fm = problem.f_minus(X, Y)
        div_err = np.sum(w * (divh + fm) ** 2)
        div_ex = np.sum(w * fm**2)
    else:
        for k in ("e_sigma", "e_u_minus"):
            ab[k] = ex[k] = 0.0

    absolute = {k: float(np.sqrt(ab[k])) for k in COLUMNS}
    norms = {k: float(np.sqrt(ex[k])) for k in COLUMNS}
    relative = {k: _ratio(absolute[k], norms[k]) for k in COLUMNS}
    grad_all = float(np.sqrt(ex["e_grad"] + ex["e_sigma"] / problem.beta_minus**2))
    u_all = float(np.sqrt(ex["e_u_plus"] + ex["e_u_minus"]))
    scaled = {
        "e_grad": _ratio(absolute["e_grad"], grad_all),
        "e_u_plus": _ratio(absolute["e_u_plus"], u_all),
        "e_sigma": _ratio(absolute["e_sigma"], problem.beta_minus * grad_all),
        "e_u_minus": _ratio(absolute["e_u_minus"], u_all),
    }
    norms.update(grad_domain=grad_all, u_domain=u_all)
    energy_ex = ex["e_sigma"] / problem.beta_minus + div_ex
    energy = ab["e_sigma"] / problem.beta_minus + div_err
    sigma_energy = _ratio(float(np.sqrt(energy)), float(np.sqrt(energy_ex)))
    return ErrorRecord(mesh.level, mesh.h, absolute, relative, scaled, norms, sigma_energy, normalization)


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else a


def convergence_rates(records: list[ErrorRecord]) -> list[ErrorRecord]:
    """Fill ``rates`` with ``log2(e_prev / e)`` between consecutive records."""
    for prev, cur in zip(records, records[1:]):
        cur.rates = {}
        for k in COLUMNS:
            a, b = prev.errors()[k], cur.errors()[k]
            ratio = prev.h / cur.h
            cur.rates[k] = math.log(a / b) / math.log(ratio) if a > 0 and b > 0 else float("nan")
    if records:
        records[0].rates = {}
    return records


def _fmt(v: float) -> str:
    return f"{v:.2E}"


def rate_table(records: list[ErrorRecord]) -> str:
    """CSV with the four relative errors and their rates (blank on row one)."""
    convergence_rates(records)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    header = ["level"]
    for k in COLUMNS:
        header += [k, f"rate_{k}"]
    wr.writerow(header)
    for rec in records:
        row = [rec.level]
        for k in COLUMNS:
            r = rec.rates.get(k)
            row += [_fmt(rec.errors()[k]), "" if r is None else f"{r:.2f}"]
        wr.writerow(row)
    return buf.getvalue()


def format_table(records: list[ErrorRecord]) -> str:
    """Fixed-width text version of :func:`rate_table`."""
    convergence_rates(records)
    head = f"{'level':>5} " + " ".join(f"{k:>10} {'rate':>5}" for k in COLUMNS)
    lines = [head]
    for rec in records:
        cells = []
        for k in COLUMNS:
            r = rec.rates.get(k)
            cells.append(f"{_fmt(rec.errors()[k]):>10} {'' if r is None else f'{r:5.2f}':>5}")
        lines.append(f"{rec.level:>5} " + " ".join(cells))
    return "\n".join(lines)


def write_plot_data(records: list[ErrorRecord], directory, stem: str) -> list[Path]:
    """One two-column ``h error`` file per series, for log-log plotting."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in COLUMNS:
        p = directory / f"{stem}_{k}.dat"
        p.write_text("".join(f"{rec.h:.17g} {rec.errors()[k]:.17g}\n" for rec in records))
        paths.append(p)
    return paths
