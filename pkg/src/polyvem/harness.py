"""Error norms, manufactured solutions and convergence studies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .dofs import build_dof_map, interpolate_dofs
from .forms import ProblemSpec, _beta_at, compute_beta_E, element_tau, stab_matrix
from .mesh import MESH_FAMILIES, PolyMesh, generate
from .projectors import ElementProjectors, mesh_projectors
from .system import SolverError, solve_problem

DEFAULT_LEVELS = {
    "quad": (8, 16, 32, 64),
    "tria": (8, 16, 32, 64),
    "voro": (64, 256, 1024, 4096),
    "rand": (64, 256, 1024, 4096),
}


# ------------------------------------------------------------------ problems


@dataclass
class ManufacturedCase:
    """Exact solution with its gradient and Laplacian, plus the data that produce it."""

    u: Callable
    grad: Callable
    lap: Callable
    beta: Callable
    epsilon: float

    def f(self, x, y):
        gx, gy = self.grad(x, y)
        bx, by = self.beta(x, y)
        return -self.epsilon * self.lap(x, y) + bx * gx + by * gy

    def spec(self, **kw) -> ProblemSpec:
        return ProblemSpec(self.epsilon, self.beta, self.f, self.u, **kw)


def default_beta(x, y):
    s = np.sin(np.pi * (x + 2 * y))
    return -2 * np.pi * s, np.pi * s


def sine_case(epsilon: float, beta: Callable = default_beta) -> ManufacturedCase:
    """u = sin(pi x) sin(pi y) on the unit square."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)

    def lap(x, y):
        return -2 * pi * pi * u(x, y)

    return ManufacturedCase(u, grad, lap, beta, epsilon)


def polynomial_case(alpha: tuple[int, int], epsilon: float, beta: Callable) -> ManufacturedCase:
    """u = x^a y^b."""
    a, b = alpha

    def mono(x, y, p, q, c=1.0):
        if p < 0 or q < 0 or c == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return c * np.asarray(x, dtype=float) ** p * np.asarray(y, dtype=float) ** q

    def u(x, y):
        return mono(x, y, a, b)

    def grad(x, y):
        return mono(x, y, a - 1, b, a), mono(x, y, a, b - 1, b)

    def lap(x, y):
        return mono(x, y, a - 2, b, a * (a - 1)) + mono(x, y, a, b - 2, b * (b - 1))

    return ManufacturedCase(u, grad, lap, beta, epsilon)


# --------------------------------------------------------------------- norms


@dataclass
class CellErrors:
    h1_sq: np.ndarray
    conv_sq: np.ndarray
    tau: np.ndarray

    @property
    def e_h1(self) -> float:
        return float(np.sqrt(self.h1_sq.sum()))

    @property
    def e_c(self) -> float:
        return float(np.sqrt(self.conv_sq.sum()))


def cell_errors(
    mesh: PolyMesh, k: int, dofs: np.ndarray, case: ManufacturedCase, spec: ProblemSpec, tau: np.ndarray | None = None
) -> CellErrors:
    """Per-cell squared H1 and convective errors of grad(u - Pi_nabla u_h).

    tau defaults to the nominal SUPG parameter of each cell, independent of
    ``spec.supg_enabled``, so runs with and without SUPG share one norm.
    """
    dm = build_dof_map(mesh, k)
    els = mesh_projectors(mesh, k)
    n = len(els)
    h1 = np.empty(n)
    conv = np.empty(n)
    taus = np.empty(n)
    for c, el in enumerate(els):
        coef = el.pi_nabla_star @ dofs[dm.cell_dofs[c]]
        ex, ey = case.grad(el.qp[:, 0], el.qp[:, 1])
        ex = ex - el.Vx @ coef
        ey = ey - el.Vy @ coef
        bx, by = _beta_at(case.beta, el.qp)
        t = element_tau(el, spec, nominal=True) if tau is None else float(tau[c])
        h1[c] = el.qw @ (ex * ex + ey * ey)
        conv[c] = spec.epsilon * h1[c] + t * (el.qw @ (bx * ex + by * ey) ** 2)
        taus[c] = t
    return CellErrors(h1, conv, taus)


def error_h1(mesh, k, dofs, case, spec=None) -> float:
    spec = spec or case.spec()
    return cell_errors(mesh, k, dofs, case, spec).e_h1


def error_convective(mesh, k, dofs, case, spec=None, tau=None) -> float:
    spec = spec or case.spec()
    return cell_errors(mesh, k, dofs, case, spec, tau).e_c


def supg_norm_local(el: ElementProjectors, v: np.ndarray, epsilon: float, tau: float, beta_E: float, bx, by) -> float:
    """Squared local supg norm with the computable first term.

    eps (|Pi0 grad v|^2 + |(I - Pi)v|^2) + tau |beta . Pi0 grad v|^2 + tau beta_E^2 |(I - Pi)v|^2,
    where Pi0 = Pi0_{k-1} and |.| on DoF vectors is the Euclidean norm.
    """
    v = np.asarray(v, dtype=float)
    d = el.pi0_grad[el.k - 1] @ v
    grad_sq = d @ el.grad_mass(el.k - 1) @ d
    r = v - el.pi_nabla_dof @ v
    stab = r @ r
    gx, gy = el.grad_at_quad(el.k - 1)
    bg = bx * (gx @ v) + by * (gy @ v)
    return float(epsilon * (grad_sq + stab) + tau * (el.qw @ bg**2) + tau * beta_E**2 * stab)


def supg_norm(mesh: PolyMesh, k: int, dofs: np.ndarray, spec: ProblemSpec) -> float:
    """Global supg norm of a discrete function, tau from the nominal SUPG formula."""
    dm = build_dof_map(mesh, k)
    total = 0.0
    for c, el in enumerate(mesh_projectors(mesh, k)):
        bx, by = _beta_at(spec.beta, el.qp)
        beta_E = compute_beta_E(el, spec.beta)
        tau = element_tau(el, spec, beta_E, nominal=True)
        total += supg_norm_local(el, dofs[dm.cell_dofs[c]], spec.epsilon, tau, beta_E, bx, by)
    return math.sqrt(total)


# ---------------------------------------------------------------- studies


@dataclass(frozen=True)
class StudyConfig:
    family: str = "quad"
    levels: tuple[int, ...] = ()
    k: int = 1
    epsilon: float = 1e-3
    form: str = "bounSkew"
    supg: bool = True
    stab: str = "dofiDofi"
    tau_safety: float = 0.5
    rng_seed: int = 0
    lloyd_iters: int | None = None
    tol: float = 1e-12

    def __post_init__(self):
        if self.family not in MESH_FAMILIES:
            raise ValueError(f"unknown mesh family {self.family!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        # validates epsilon, form, stab and tau_safety
        ProblemSpec(self.epsilon, default_beta, convection_form=self.form, stab_kind=self.stab, tau_safety=self.tau_safety)

    @property
    def ladder(self) -> tuple[int, ...]:
        return tuple(self.levels) if self.levels else DEFAULT_LEVELS[self.family]

    @property
    def name(self) -> str:
        return f"{self.family}_k{self.k}_eps{self.epsilon:g}_{self.form}_{'supg' if self.supg else 'none'}"


@dataclass
class ConvergenceRow:
    level: int
    h: float
    ndofs: int
    e_h1: float = float("nan")
    e_c: float = float("nan")
    supg_err: float = float("nan")
    assemble_ms: float = float("nan")
    solve_ms: float = float("nan")
    failure: str = ""


@dataclass
class StudyResult:
    config: StudyConfig
    rows: list[ConvergenceRow] = field(default_factory=list)

    def rate(self, column: str = "e_c", n_last: int = 3) -> float:
        return fitted_rate([r.h for r in self.rows], [getattr(r, column) for r in self.rows], n_last)


@lru_cache(maxsize=32)
def cached_mesh(family: str, level: int, rng_seed: int = 0, lloyd_iters: int | None = None) -> PolyMesh:
    return generate(family, level, rng_seed, lloyd_iters)


def fitted_rate(h, err, n_last: int = 3) -> float:
    """Least-squares slope of log(err) against log(h) over the last n_last points.

    Returns inf when every error is at round-off level (exact reproduction),
    nan when fewer than two usable points remain.
    """
    h = np.asarray(h, dtype=float)[-n_last:]
    e = np.asarray(err, dtype=float)[-n_last:]
    ok = np.isfinite(e) & np.isfinite(h)
    h, e = h[ok], e[ok]
    if len(e) and np.all(e <= 1e-13):
        return math.inf
    if len(e) < 2 or np.any(e <= 0):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def run_level(mesh: PolyMesh, cfg: StudyConfig, case: ManufacturedCase, level: int) -> ConvergenceRow:
    spec = case.spec(convection_form=cfg.form, supg_enabled=cfg.supg, stab_kind=cfg.stab, tau_safety=cfg.tau_safety)
    row = ConvergenceRow(level, mesh.h, build_dof_map(mesh, cfg.k).n_global)
    try:
        system = solve_problem(mesh, cfg.k, spec, cfg.tol)
    except SolverError as exc:
        row.failure = str(exc)
        return row
    errs = cell_errors(mesh, cfg.k, system.solution, case, spec)
    assert np.all(errs.conv_sq >= spec.epsilon * errs.h1_sq)
    u_i = interpolate_dofs(mesh, cfg.k, case.u)
    row.e_h1, row.e_c = errs.e_h1, errs.e_c
    row.supg_err = supg_norm(mesh, cfg.k, u_i - system.solution, spec)
    row.assemble_ms = 1e3 * system.assemble_seconds
    row.solve_ms = 1e3 * system.solve_seconds
    return row


def run_convergence(cfg: StudyConfig, case: ManufacturedCase | None = None, on_row=None) -> StudyResult:
    """Solve on every level of the ladder; ``on_row`` is called after each level."""
    case = case or sine_case(cfg.epsilon)
    if case.epsilon != cfg.epsilon:
        case = replace(case, epsilon=cfg.epsilon)
    result = StudyResult(cfg)
    for level in cfg.ladder:
        mesh = cached_mesh(cfg.family, level, cfg.rng_seed, cfg.lloyd_iters)
        result.rows.append(run_level(mesh, cfg, case, level))
        if on_row is not None:
            on_row(result.rows[-1])
    return result


# ------------------------------------------------------------------ output

CSV_HEADER = ("level", "h", "ndofs", "eH1", "eC", "assemble_ms", "solve_ms")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.level, f"{r.h:.17g}", r.ndofs, f"{r.e_h1:.17g}", f"{r.e_c:.17g}", f"{r.assemble_ms:.3f}", f"{r.solve_ms:.3f}"])
    return buf.getvalue()


def rows_to_svg(rows, title: str = "", width: int = 480, height: int = 360) -> str:
    """Log-log plot of eH1 and eC against h as two polylines."""
    pts = [(r.h, r.e_h1, r.e_c) for r in rows if r.e_h1 > 0 and r.e_c > 0]
    pad = 50
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
    if len(pts) < 2:
        return head + f'<text x="{pad}" y="{pad}">{title}: not enough data</text></svg>\n'
    lh = np.log10([p[0] for p in pts])
    le = np.log10([[p[1], p[2]] for p in pts])
    x0, x1 = lh.min(), lh.max()
    y0, y1 = le.min(), le.max()
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [head, f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="black"/>']
    for j, (name, color) in enumerate((("eH1", "blue"), ("eC", "red"))):
        poly = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(lh, le[:, j]))
        parts.append(f'<polyline points="{poly}" fill="none" stroke="{color}"/>')
        parts.append(f'<text x="{width - pad - 40}" y="{pad + 15 + 15 * j}" fill="{color}">{name}</text>')
    parts.append(f'<text x="{pad}" y="{pad - 10}">{title}</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 10}">log10 h [{x0:.2f}, {x1:.2f}]</text>')
    parts.append(f'<text x="5" y="{height / 2:.0f}">[{y0:.1f}, {y1:.1f}]</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)

