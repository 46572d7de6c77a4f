"""Local phase polynomials matching the eikonal equation |grad tau|^2 = xi to high order."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeff import CoefficientField
from .poly import CenteredPolynomial, index, m

__all__ = [
    "DegenerateDirectionError",
    "InvalidMediumError",
    "PhasePolynomial",
    "build_phase",
    "eikonal_residual",
    "phase_degree",
    "sample_grid",
]


class InvalidMediumError(ValueError):
    """xi is not strictly positive at the expansion point."""


class DegenerateDirectionError(ValueError):
    """A level system lost full row rank (zero seed gradient)."""


def phase_degree(q: int) -> int:
    """Degree of tau: q + 2 for q <= 2, q + 3 for larger q."""
    return q + 2 if q <= 2 else q + 3


@dataclass(frozen=True)
class PhasePolynomial:
    tau: CenteredPolynomial
    direction_angle: float
    q: int
    m_tau: int
    # gradient and Laplacian polynomials, cached at construction
    tau_x: CenteredPolynomial = field(repr=False, compare=False, default=None)
    tau_y: CenteredPolynomial = field(repr=False, compare=False, default=None)
    tau_lap: CenteredPolynomial = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.tau_x is None:
            object.__setattr__(self, "tau_x", self.tau.diff(0))
            object.__setattr__(self, "tau_y", self.tau.diff(1))
            object.__setattr__(self, "tau_lap", self.tau.laplacian())

    @property
    def center(self):
        return self.tau.center

    @property
    def matched_degree(self) -> int:
        """Highest degree through which |grad tau|^2 equals the xi jet."""
        return self.m_tau - 1

    def grad_sq(self) -> CenteredPolynomial:
        return self.tau_x * self.tau_x + self.tau_y * self.tau_y


def build_phase(field: CoefficientField, r0, theta: float, q: int) -> PhasePolynomial:
    """Phase polynomial for direction angle ``theta`` at expansion point ``r0``.

    The linear part is ``sqrt(xi(r0)) (cos theta, sin theta)``. Each higher
    level ``k`` solves the underdetermined ``k x (k+1)`` system equating the
    degree ``k-1`` coefficients of ``|grad tau|^2`` with those of the xi jet;
    the minimum-norm solution is taken.
    """
    if q < 1:
        raise ValueError(f"matching order q must be >= 1, got {q}")
    r0 = (float(r0[0]), float(r0[1]))
    m_tau = phase_degree(q)
    xi = field.jet(r0, m_tau - 1)
    xi0 = float(np.real(xi.coeffs[0]))
    if not xi0 > 0.0:
        raise InvalidMediumError(f"xi(r0) = {xi0} is not positive at {r0}")

    lam = np.zeros(m(m_tau))
    s = math.sqrt(xi0)
    l10 = s * math.cos(theta)
    l01 = s * math.sin(theta)
    lam[index(1, 0)] = l10
    lam[index(0, 1)] = l01

    for k in range(2, m_tau + 1):
        tau = CenteredPolynomial(r0, lam[: m(k)])
        tx, ty = tau.diff(0), tau.diff(1)
        g = tx * tx + ty * ty
        rhs = xi.homogeneous_part(k - 1) - g.homogeneous_part(k - 1)
        L = np.zeros((k, k + 1))
        for i in range(k + 1):
            # unknown lambda_{k-i, i}
            if k - i > 0:
                L[i, i] += 2.0 * l10 * (k - i)
            if i > 0:
                L[i - 1, i] += 2.0 * l01 * i
        u, sv, vt = np.linalg.svd(L, full_matrices=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1.0):
            raise DegenerateDirectionError(f"level {k} system is rank deficient at {r0}")
        lam[m(k - 1) : m(k)] = vt.T @ ((u.T @ rhs) / sv)

    return PhasePolynomial(CenteredPolynomial(r0, lam), float(theta), int(q), m_tau)


def sample_grid(K, samples: int):
    """``samples x samples`` uniform grid (endpoints included) over the box of ``K``."""
    xmin, xmax, ymin, ymax = _bbox(K)
    xs = np.linspace(xmin, xmax, samples)
    ys = np.linspace(ymin, ymax, samples)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X.ravel(), Y.ravel()


def _bbox(K):
    if hasattr(K, "bbox"):
        return tuple(float(v) for v in K.bbox)
    xmin, xmax, ymin, ymax = K
    return float(xmin), float(xmax), float(ymin), float(ymax)


def eikonal_residual(phase: PhasePolynomial, field: CoefficientField, K, samples: int = 33) -> float:
    """Max of ``|xi - |grad tau|^2|`` over a uniform grid on ``K``."""
    x, y = sample_grid(K, samples)
    gx = phase.tau_x(x, y)
    gy = phase.tau_y(x, y)
    return float(np.max(np.abs(field.value(x, y) - (gx * gx + gy * gy))))
