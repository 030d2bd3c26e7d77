"""Scaled monomial bases m_a(x) = ((x - x_E) / h_E)^a1 ((y - y_E) / h_E)^a2.

Multi-indices are in graded lexicographic order, so the first dim P_n entries
of any P_k basis (n <= k) are exactly the P_n basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import QuadRule


def dim_poly(n: int) -> int:
    """Dimension of P_n in 2D; zero for n < 0."""
    return (n + 1) * (n + 2) // 2 if n >= 0 else 0


@lru_cache(maxsize=None)
def multi_indices(n: int) -> tuple[tuple[int, int], ...]:
    """(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ..."""
    return tuple((d - j, j) for d in range(n + 1) for j in range(d + 1))


def index_of(alpha: tuple[int, int]) -> int:
    a, b = alpha
    d = a + b
    return dim_poly(d - 1) + b


@lru_cache(maxsize=None)
def derivative_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dx, Dy with d/dx m_a = (1/h) sum_g Dx[a, g] m_g (same for y), in P_n."""
    idx = multi_indices(n)
    d = len(idx)
    dx = np.zeros((d, d))
    dy = np.zeros((d, d))
    for i, (a, b) in enumerate(idx):
        if a > 0:
            dx[i, index_of((a - 1, b))] = a
        if b > 0:
            dy[i, index_of((a, b - 1))] = b
    dx.flags.writeable = False
    dy.flags.writeable = False
    return dx, dy


@lru_cache(maxsize=None)
def laplacian_matrix(n: int) -> np.ndarray:
    """Lap with Delta m_a = (1/h^2) sum_g Lap[a, g] m_g."""
    dx, dy = derivative_matrices(n)
    lap = dx @ dx + dy @ dy
    lap.flags.writeable = False
    return lap


@dataclass(frozen=True)
class ScaledMonomialBasis:
    center: np.ndarray
    h: float
    degree: int
    alphas: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "alphas", multi_indices(self.degree))

    @property
    def dim(self) -> int:
        return dim_poly(self.degree)

    def _scaled(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts[:, 0] - self.center[0]) / self.h, (pts[:, 1] - self.center[1]) / self.h

    def eval(self, points) -> np.ndarray:
        """Matrix (n_points, dim) of basis values."""
        xi, eta = self._scaled(points)
        return _monomials(xi, eta, self.degree)

    def eval_grad(self, points) -> tuple[np.ndarray, np.ndarray]:
        xi, eta = self._scaled(points)
        vals = _monomials(xi, eta, self.degree)
        dx, dy = derivative_matrices(self.degree)
        return vals @ dx.T / self.h, vals @ dy.T / self.h

    def eval_lapl(self, points) -> np.ndarray:
        xi, eta = self._scaled(points)
        vals = _monomials(xi, eta, self.degree)
        return vals @ laplacian_matrix(self.degree).T / self.h**2

    def mass_matrix(self, rule: QuadRule) -> np.ndarray:
        """H[a, g] = int m_a m_g, with a rule exact to degree >= 2n."""
        v = self.eval(rule.points)
        return (v * rule.weights[:, None]).T @ v


def _monomials(xi: np.ndarray, eta: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((xi.size, dim_poly(n)))
    xp = [np.ones_like(xi)]
    yp = [np.ones_like(eta)]
    for _ in range(n):
        xp.append(xp[-1] * xi)
        yp.append(yp[-1] * eta)
    for i, (a, b) in enumerate(multi_indices(n)):
        out[:, i] = xp[a] * yp[b]
    return out
