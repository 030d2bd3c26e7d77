"""Element matrices of the SUPG-stabilised virtual element discretisation.

Matrix convention: ``M[i, j] = form(u=phi_j, v=phi_i)`` for local shape
functions phi, so the discrete equation reads ``A @ u = F``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .basis import dim_poly
from .projectors import ElementProjectors

CONVECTION_FORMS = ("orig", "boun", "origSkew", "bounSkew")
STAB_KINDS = ("dofiDofi", "dRecipe")


def constant_field(bx: float, by: float) -> Callable:
    """Vector field returning (bx, by) at every point."""

    def beta(x, y):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, bx), np.full_like(x, by)

    return beta


def zero_scalar(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass
class ProblemSpec:
    """Data of -eps Lap u + beta . grad u = f with u = dirichlet on the boundary.

    ``beta(x, y)`` returns a pair of arrays, ``f`` and ``dirichlet`` return an
    array; all three must accept arrays of coordinates.
    """

    epsilon: float
    beta: Callable
    f: Callable = zero_scalar
    dirichlet: Callable = zero_scalar
    convection_form: str = "bounSkew"
    supg_enabled: bool = True
    stab_kind: str = "dofiDofi"
    tau_safety: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.convection_form not in CONVECTION_FORMS:
            raise ValueError(f"unknown convection form {self.convection_form!r}; expected one of {CONVECTION_FORMS}")
        if self.stab_kind not in STAB_KINDS:
            raise ValueError(f"unknown stabilization {self.stab_kind!r}; expected one of {STAB_KINDS}")
        if not 0.0 < self.tau_safety <= 1.0:
            raise ValueError(f"tau_safety must lie in (0, 1], got {self.tau_safety}")

    @property
    def skew(self) -> bool:
        return self.convection_form.endswith("Skew")

    @property
    def boundary_form(self) -> bool:
        return self.convection_form.startswith("boun")


@dataclass
class ElementForms:
    Ah: np.ndarray
    S: np.ndarray
    Bh: np.ndarray
    BsupgH: np.ndarray
    LsupgH: np.ndarray
    Asupg: np.ndarray
    Fsupg: np.ndarray
    tau: float
    beta_E: float
    h: float


def _beta_at(beta, pts):
    bx, by = beta(pts[:, 0], pts[:, 1])
    n = len(pts)
    return np.broadcast_to(np.asarray(bx, dtype=float), (n,)), np.broadcast_to(np.asarray(by, dtype=float), (n,))


def compute_beta_E(el: ElementProjectors, beta) -> float:
    """Sampled sup norm of beta over the volume and edge quadrature points."""
    pts = np.vstack([el.qp, el.bp])
    bx, by = _beta_at(beta, pts)
    return float(np.sqrt(bx * bx + by * by).max())


def compute_tau(h: float, epsilon: float, beta_E: float, tau_safety: float, gamma: float = 0.0) -> float:
    """SUPG parameter: safety * min(h / beta_E, h^2 / eps), clamped to h^2 / (eps gamma)."""
    tau = h * h / epsilon
    if beta_E > 0:
        tau = min(tau, h / beta_E)
    tau *= tau_safety
    if gamma > 0:
        tau = min(tau, h * h / (epsilon * gamma))
    return tau


def consistency_matrix(el: ElementProjectors) -> np.ndarray:
    """int Pi0_{k-1} grad u . Pi0_{k-1} grad v."""
    p = el.pi0_grad[el.k - 1]
    return p.T @ el.grad_mass(el.k - 1) @ p


def stab_matrix(el: ElementProjectors, kind: str = "dofiDofi", Ahc: np.ndarray | None = None) -> np.ndarray:
    """Stabilization (I - Pi)^T W (I - Pi) with Pi the DoF matrix of Pi_nabla.

    W is the identity for dofi-dofi and diag(max(Ahc_ii, 1e-12 tr Ahc)) for the
    D-recipe.
    """
    r = np.eye(el.n_dofs) - el.pi_nabla_dof
    if kind == "dofiDofi":
        return r.T @ r
    if kind == "dRecipe":
        if Ahc is None:
            Ahc = consistency_matrix(el)
        d = np.diag(Ahc)
        w = np.maximum(d, 1e-12 * d.sum())
        return r.T @ (w[:, None] * r)
    raise ValueError(f"unknown stabilization {kind!r}")


def diffusion_matrix(el: ElementProjectors, kind: str = "dofiDofi") -> tuple[np.ndarray, np.ndarray]:
    """(a_h matrix, stabilization part)."""
    Ahc = consistency_matrix(el)
    S = stab_matrix(el, kind, Ahc)
    A = Ahc + S
    return 0.5 * (A + A.T), S


def convection_orig(el: ElementProjectors, bx: np.ndarray, by: np.ndarray) -> np.ndarray:
    """int beta . Pi0_k grad u  Pi0_k v."""
    gx, gy = el.grad_at_quad(el.k)
    pv = el.V @ el.pi0_k
    return (pv * el.qw[:, None]).T @ (bx[:, None] * gx + by[:, None] * gy)


def convection_boun(el: ElementProjectors, bx: np.ndarray, by: np.ndarray, bbx: np.ndarray, bby: np.ndarray) -> np.ndarray:
    """int beta . grad Pi0_k u  Pi0_k v  +  int_dE (beta . n) (u - Pi0_k u) v.

    (bx, by) are beta at the volume points, (bbx, bby) at the edge points.
    """
    pv = el.V @ el.pi0_k
    gx = el.Vx @ el.pi0_k
    gy = el.Vy @ el.pi0_k
    vol = (pv * el.qw[:, None]).T @ (bx[:, None] * gx + by[:, None] * gy)
    bn = bbx * el.bn[:, 0] + bby * el.bn[:, 1]
    jump = el.T - el.Vb @ el.pi0_k
    return vol + (el.T * (el.bw * bn)[:, None]).T @ jump


def skew_symmetrize(B: np.ndarray) -> np.ndarray:
    return 0.5 * (B - B.T)


def supg_matrices(el: ElementProjectors, bx, by, tau: float, beta_E: float, epsilon: float, S: np.ndarray):
    """(B^E, L^E) for the given tau."""
    n = el.n_dofs
    if tau == 0.0:
        z = np.zeros((n, n))
        return z, z.copy()
    gx, gy = el.grad_at_quad(el.k - 1)
    bg = bx[:, None] * gx + by[:, None] * gy
    wbg = (bg * el.qw[:, None]).T
    B = tau * (wbg @ bg) + tau * beta_E**2 * S
    if el.k == 1:
        L = np.zeros((n, n))
    else:
        L = -tau * epsilon * (wbg @ el.div_grad_at_quad(el.k - 1))
    return B, L


def element_load(el: ElementProjectors, f, bx, by, tau: float) -> np.ndarray:
    """int f Pi0_k v + tau int f beta . Pi0_{k-1} grad v."""
    fw = np.broadcast_to(np.asarray(f(el.qp[:, 0], el.qp[:, 1]), dtype=float), el.qw.shape) * el.qw
    F = (el.V @ el.pi0_k).T @ fw
    if tau != 0.0:
        gx, gy = el.grad_at_quad(el.k - 1)
        F = F + tau * (bx[:, None] * gx + by[:, None] * gy).T @ fw
    return F


def element_tau(el: ElementProjectors, spec: ProblemSpec, beta_E: float | None = None, nominal: bool = False) -> float:
    """tau_E used in assembly; ``nominal`` ignores ``spec.supg_enabled``."""
    if not (spec.supg_enabled or nominal):
        return 0.0
    if beta_E is None:
        beta_E = compute_beta_E(el, spec.beta)
    return compute_tau(el.h, spec.epsilon, beta_E, spec.tau_safety, el.inverse_constant())


def element_supg(el: ElementProjectors, spec: ProblemSpec) -> ElementForms:
    """All element matrices and the load vector for one cell."""
    bx, by = _beta_at(spec.beta, el.qp)
    beta_E = compute_beta_E(el, spec.beta)
    tau = element_tau(el, spec, beta_E)
    Ah, S = diffusion_matrix(el, spec.stab_kind)
    if spec.boundary_form:
        bbx, bby = _beta_at(spec.beta, el.bp)
        Bh = convection_boun(el, bx, by, bbx, bby)
    else:
        Bh = convection_orig(el, bx, by)
    if spec.skew:
        Bh = skew_symmetrize(Bh)
    Bs, Ls = supg_matrices(el, bx, by, tau, beta_E, spec.epsilon, S)
    A = spec.epsilon * Ah + Bh + Bs + Ls
    F = element_load(el, spec.f, bx, by, tau)
    return ElementForms(Ah, S, Bh, Bs, Ls, A, F, tau, beta_E, el.h)


def stabilization_alpha(el: ElementProjectors, S: np.ndarray) -> float:
    """Smallest ratio S(v, v) / |(I - Pi)v|^2 over the complement of P_k."""
    r = np.eye(el.n_dofs) - el.pi_nabla_dof
    q, _ = np.linalg.qr(el.D, mode="complete")
    comp = q[:, dim_poly(el.k) :]
    if comp.shape[1] == 0:
        return 1.0
    rc = r @ comp
    lam = sla.eigh(comp.T @ S @ comp, rc.T @ rc, eigvals_only=True)
    return float(lam[0])
