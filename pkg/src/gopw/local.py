"""Spectral solves of the local impedance problems on fictitious discs.

On each disc ``D`` (center ``c``, radius ``R``) find ``u`` in the polynomial
space of degree ``m`` with

    int_D grad u . grad v - kappa^2 u v + (i / R) int_{dD} u v = int_D f v

for all test polynomials ``v``. The basis is the scaled monomials
``((x - cx) / R)^i ((y - cy) / R)^j``, which are real, so conjugation of the
test function is immaterial.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .coeff import CoefficientField
from .poly import derivative_matrix, monomial_matrix
from .quad import circle_rule, disc_rule

__all__ = [
    "LocalSolveError",
    "SpectralLocalSolution",
    "eval_grad_u1",
    "eval_lap_u1",
    "eval_u1",
    "local_points",
    "local_system",
    "solve_local",
    "solve_all_local",
]


class LocalSolveError(RuntimeError):
    """The local system could not be factorized."""


def local_points(omega: float, radius: float, m: int) -> tuple[int, int]:
    """Default radial and angular point counts for a disc rule."""
    n_r = int(math.ceil(omega * radius)) + m + 6
    return n_r, 2 * n_r + 2 * m + 4


def _basis(x, y, center, R, m):
    """Values and first/second derivatives of the scaled monomials at points."""
    sx = (np.asarray(x, dtype=float) - center[0]) / R
    sy = (np.asarray(y, dtype=float) - center[1]) / R
    M = monomial_matrix(sx, sy, m)
    Dx, Dy = derivative_matrix(m, 0), derivative_matrix(m, 1)
    M1 = monomial_matrix(sx, sy, max(m - 1, 0))
    Phi_x = M1 @ Dx / R
    Phi_y = M1 @ Dy / R
    if m >= 2:
        M2 = monomial_matrix(sx, sy, m - 2)
        L = derivative_matrix(m - 1, 0) @ Dx + derivative_matrix(m - 1, 1) @ Dy
        Phi_lap = M2 @ L / R**2
    else:
        Phi_lap = np.zeros_like(M)
    return M, Phi_x, Phi_y, Phi_lap


@dataclass(frozen=True)
class SpectralLocalSolution:
    element_id: int
    m: int
    coeffs: np.ndarray
    center: tuple
    radius: float
    residual: float = 0.0

    def value(self, x, y):
        M, _, _, _ = _basis(x, y, self.center, self.radius, self.m)
        return M @ self.coeffs

    def gradient(self, x, y):
        _, Px, Py, _ = _basis(x, y, self.center, self.radius, self.m)
        return Px @ self.coeffs, Py @ self.coeffs

    def laplacian(self, x, y):
        _, _, _, Pl = _basis(x, y, self.center, self.radius, self.m)
        return Pl @ self.coeffs

    def evaluate(self, x, y):
        """``(u, u_x, u_y, lap u)`` at points."""
        M, Px, Py, Pl = _basis(x, y, self.center, self.radius, self.m)
        c = self.coeffs
        return M @ c, Px @ c, Py @ c, Pl @ c


def local_system(field: CoefficientField, f: Callable, disc, m: int, omega: float,
                 n_r: Optional[int] = None, n_theta: Optional[int] = None,
                 g: Optional[Callable] = None):
    """Assembled ``(matrix, rhs)`` of the local problem.

    ``g(x, y, nx, ny)``, if given, adds the boundary functional
    ``int_{dD} g v`` (used for manufactured checks).
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    center, R = disc
    dn_r, dn_t = local_points(omega, R, m)
    n_r = n_r or dn_r
    n_theta = n_theta or dn_t
    x, y, w = disc_rule(center, R, n_r, n_theta)
    Phi, Px, Py, _ = _basis(x, y, center, R, m)
    k2 = omega**2 * field.value(x, y)
    A = (Px * w[:, None]).T @ Px + (Py * w[:, None]).T @ Py - (Phi * (w * k2)[:, None]).T @ Phi
    A = A.astype(complex)
    bx, by, bw, nx, ny = circle_rule(center, R, n_theta)
    Pb, _, _, _ = _basis(bx, by, center, R, m)
    A += (1j / R) * (Pb * bw[:, None]).T @ Pb
    b = (Phi * w[:, None]).T @ np.asarray(f(x, y), dtype=complex)
    if g is not None:
        b = b + (Pb * bw[:, None]).T @ np.asarray(g(bx, by, nx, ny), dtype=complex)
    return A, b


def solve_local(field: CoefficientField, f: Callable, disc, m: int, omega: float,
                element_id: int = 0, n_r: Optional[int] = None, n_theta: Optional[int] = None,
                g: Optional[Callable] = None) -> SpectralLocalSolution:
    """Particular solution on one fictitious disc by dense LU with partial pivoting."""
    A, b = local_system(field, f, disc, m, omega, n_r, n_theta, g)
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise LocalSolveError(f"local system on element {element_id} failed: {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise LocalSolveError(f"local system on element {element_id} is singular")
    c = scipy.linalg.lu_solve(lu, b)
    nb = np.linalg.norm(b)
    res = float(np.linalg.norm(A @ c - b) / nb) if nb > 0 else float(np.linalg.norm(A @ c))
    center, R = disc
    return SpectralLocalSolution(int(element_id), int(m), c, (float(center[0]), float(center[1])), float(R), res)


def solve_all_local(mesh, field: CoefficientField, f: Callable, m: int, omega: float,
                    threads: int = 1, n_r: Optional[int] = None,
                    n_theta: Optional[int] = None) -> list[SpectralLocalSolution]:
    """Local solves on every element's disc; results are ordered by element id."""

    def one(k):
        return solve_local(field, f, mesh.fictitious_disc(k), m, omega, k, n_r, n_theta)

    ids = range(mesh.n_elements)
    if threads <= 1:
        return [one(k) for k in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, ids))


def eval_u1(sol: SpectralLocalSolution, r) -> complex:
    return complex(sol.value([r[0]], [r[1]])[0])


def eval_grad_u1(sol: SpectralLocalSolution, r) -> tuple[complex, complex]:
    gx, gy = sol.gradient([r[0]], [r[1]])
    return complex(gx[0]), complex(gy[0])


def eval_lap_u1(sol: SpectralLocalSolution, r) -> complex:
    return complex(sol.laplacian([r[0]], [r[1]])[0])
