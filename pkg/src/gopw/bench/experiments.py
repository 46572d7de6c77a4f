"""Manufactured test problems with analytic sources and boundary data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..coeff import CoefficientField, ConstantField, GaussianLensField, GradientField

__all__ = [
    "Example2Geometry",
    "Experiment",
    "constant_sanity",
    "example1",
    "example2",
    "example2_phases",
    "make_experiment",
]


@dataclass(frozen=True)
class Experiment:
    """Exact solution ``u`` of ``-(lap + omega^2 xi) u = f`` with ``(d_n + i eta) u = g`` on the boundary.

    ``value``, ``gradient`` and ``laplacian`` are vectorized in ``(x, y)``;
    ``gradient`` returns a pair. ``eta`` is the boundary impedance weight that
    ``g`` was built with.
    """

    name: str
    omega: float
    field: CoefficientField
    value: Callable
    gradient: Callable
    laplacian: Callable
    eta: Callable

    def f(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -self.laplacian(x, y) - self.omega**2 * self.field.value(x, y) * self.value(x, y)

    def g(self, x, y, nx, ny):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ux, uy = self.gradient(x, y)
        return ux * nx + uy * ny + 1j * self.eta(x, y) * self.value(x, y)


def _wave(amp, amp_grad, amp_lap, phase, phase_grad, phase_lap, omega):
    """Value, gradient and Laplacian closures for ``A exp(i omega phi)``."""

    def value(x, y):
        return amp(x, y) * np.exp(1j * omega * phase(x, y))

    def gradient(x, y):
        e = np.exp(1j * omega * phase(x, y))
        a = amp(x, y)
        ax, ay = amp_grad(x, y)
        px, py = phase_grad(x, y)
        return (ax + 1j * omega * a * px) * e, (ay + 1j * omega * a * py) * e

    def laplacian(x, y):
        e = np.exp(1j * omega * phase(x, y))
        a = amp(x, y)
        ax, ay = amp_grad(x, y)
        px, py = phase_grad(x, y)
        return (amp_lap(x, y) + 2j * omega * (ax * px + ay * py) + 1j * omega * a * phase_lap(x, y)
                - omega**2 * a * (px * px + py * py)) * e

    return value, gradient, laplacian


def _constant_eta(omega):
    return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(omega))


def example1(omega: float) -> Experiment:
    """Gaussian converging lens with ``u = c(x, y) exp(i omega x y)``."""
    lens = GaussianLensField()
    cx, cy = lens.lens_center
    k = lens.c_inf * lens.amplitude * 2.0 * lens.width  # = 32/3

    def gauss(x, y):
        return np.exp(-lens.width * ((x - cx) ** 2 + (y - cy) ** 2))

    def c_grad(x, y):
        e = gauss(x, y)
        return k * e * (x - cx), k * e * (y - cy)

    def c_lap(x, y):
        s = (x - cx) ** 2 + (y - cy) ** 2
        return k * gauss(x, y) * (2.0 - 2.0 * lens.width * s)

    value, gradient, laplacian = _wave(
        lens.speed, c_grad, c_lap,
        lambda x, y: x * y, lambda x, y: (y, x), lambda x, y: np.zeros_like(x * y),
        omega,
    )
    return Experiment("example1", float(omega), lens, value, gradient, laplacian, _constant_eta(omega))


@dataclass(frozen=True)
class Example2Geometry:
    c0: float = 1.0
    G0: tuple = (0.1, -0.2)
    r0: tuple = (-0.1, -0.1)

    @property
    def g2(self) -> float:
        return self.G0[0] ** 2 + self.G0[1] ** 2


def _example2_parts(x, y, j: int, geo: Example2Geometry):
    """``phi_j`` with gradient and Laplacian by the chain rule."""
    Gx, Gy = geo.G0
    g2 = geo.g2
    g = math.sqrt(g2)
    rx = np.asarray(x, dtype=float) - geo.r0[0]
    ry = np.asarray(y, dtype=float) - geo.r0[1]
    cbar = geo.c0 + Gx * rx + Gy * ry
    D = cbar * cbar - g2 * (rx * rx + ry * ry)
    if np.any(D < 0):
        raise ValueError("negative discriminant in the Example 2 phases")
    S = np.sqrt(D)
    Dx = 2.0 * cbar * Gx - 2.0 * g2 * rx
    Dy = 2.0 * cbar * Gy - 2.0 * g2 * ry
    Sx, Sy = Dx / (2.0 * S), Dy / (2.0 * S)
    S_lap = -2.0 * g2 / (2.0 * S) - (Dx * Dx + Dy * Dy) / (4.0 * S**3)
    eps = (-1.0) ** j
    P = 2.0 * (cbar + eps * S)
    Px, Py = 2.0 * (Gx + eps * Sx), 2.0 * (Gy + eps * Sy)
    P_lap = 2.0 * eps * S_lap
    sqP = np.sqrt(P)
    sigma = sqP / g
    sx, sy = Px / (2.0 * g * sqP), Py / (2.0 * g * sqP)
    s_lap = P_lap / (2.0 * g * sqP) - (Px * Px + Py * Py) / (4.0 * g * P * sqP)
    phi = cbar * sigma - g2 / 6.0 * sigma**3
    w = cbar - 0.5 * g2 * sigma**2
    phx = sigma * Gx + w * sx
    phy = sigma * Gy + w * sy
    ph_lap = 2.0 * (Gx * sx + Gy * sy) + w * s_lap - g2 * sigma * (sx * sx + sy * sy)
    return phi, (phx, phy), ph_lap


def example2_phases(r, geo: Example2Geometry = Example2Geometry()):
    """The two crossing-ray phases ``(phi_1, phi_2)`` at point(s) ``r = (x, y)``."""
    return tuple(_example2_parts(r[0], r[1], j, geo)[0] for j in (1, 2))


def example2(omega: float, geo: Example2Geometry = Example2Geometry()) -> Experiment:
    """Constant-gradient medium with two crossing waves."""
    field = GradientField(geo.c0, geo.G0, geo.r0)

    def phase_fns(j):
        return (lambda x, y: _example2_parts(x, y, j, geo)[0],
                lambda x, y: _example2_parts(x, y, j, geo)[1],
                lambda x, y: _example2_parts(x, y, j, geo)[2])

    # amplitudes 1 / (x y + i) and 1 / (x^2 + y^2 + i)
    def a1(x, y):
        return 1.0 / (x * y + 1j)

    def a1_grad(x, y):
        d = -1.0 / (x * y + 1j) ** 2
        return d * y, d * x

    def a1_lap(x, y):
        return 2.0 * (x * x + y * y) / (x * y + 1j) ** 3

    def a2(x, y):
        return 1.0 / (x * x + y * y + 1j)

    def a2_grad(x, y):
        d = -1.0 / (x * x + y * y + 1j) ** 2
        return 2.0 * x * d, 2.0 * y * d

    def a2_lap(x, y):
        t = x * x + y * y + 1j
        return -4.0 / t**2 + 8.0 * (x * x + y * y) / t**3

    w1 = _wave(a1, a1_grad, a1_lap, *phase_fns(1), omega)
    w2 = _wave(a2, a2_grad, a2_lap, *phase_fns(2), omega)

    def value(x, y):
        return w1[0](x, y) + w2[0](x, y)

    def gradient(x, y):
        g1, g2_ = w1[1](x, y), w2[1](x, y)
        return g1[0] + g2_[0], g1[1] + g2_[1]

    def laplacian(x, y):
        return w1[2](x, y) + w2[2](x, y)

    return Experiment("example2", float(omega), field, value, gradient, laplacian, _constant_eta(omega))


def constant_sanity(omega: float, theta: float = 2.0 * math.pi / 5.0, xi0: float = 1.0) -> Experiment:
    """Homogeneous plane wave ``exp(i omega sqrt(xi0) d . r)`` in a constant medium (f = 0)."""
    k = omega * math.sqrt(xi0)
    dx, dy = math.cos(theta), math.sin(theta)

    def value(x, y):
        return np.exp(1j * k * (dx * np.asarray(x) + dy * np.asarray(y)))

    def gradient(x, y):
        v = value(x, y)
        return 1j * k * dx * v, 1j * k * dy * v

    def laplacian(x, y):
        return -(k * k) * value(x, y)

    return Experiment("constant_sanity", float(omega), ConstantField(xi0), value, gradient, laplacian,
                      _constant_eta(k))


def make_experiment(name, omega: float, **kwargs) -> Experiment:
    """Look up an experiment by CLI name (``1``, ``2``, ``constant`` or the full names)."""
    key = str(name).lower()
    if key in ("1", "example1"):
        return example1(omega)
    if key in ("2", "example2"):
        return example2(omega, **kwargs)
    if key in ("constant", "constant_sanity"):
        return constant_sanity(omega, **kwargs)
    raise ValueError(f"unknown example {name!r}")
