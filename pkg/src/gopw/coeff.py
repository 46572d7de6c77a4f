"""Squared-slowness fields xi(r) = 1 / c(r)**2 and their Taylor jets."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .poly import CenteredPolynomial, exponents, m

__all__ = [
    "CoefficientField",
    "ConstantField",
    "FiniteDifferenceField",
    "GaussianLensField",
    "GradientField",
    "UnsupportedOrderError",
    "field_from_name",
    "jet",
]

_ANALYTIC_ORDER = 64


class UnsupportedOrderError(ValueError):
    """Requested a Taylor jet beyond the field's smoothness order."""


class CoefficientField:
    """Contract for xi(r).

    Subclasses implement :meth:`value` (vectorized over arrays) and, when they
    can, :meth:`_jet` returning exact Taylor coefficients
    ``d_x^r d_y^j xi(r0) / (r! j!)`` in packed order.
    """

    smoothness_order: int = _ANALYTIC_ORDER

    def value(self, x, y):
        raise NotImplementedError

    def jet(self, r0, n: int) -> CenteredPolynomial:
        if n < 0:
            raise ValueError("jet order must be >= 0")
        if n > self.smoothness_order:
            raise UnsupportedOrderError(
                f"{type(self).__name__} supports jets up to order {self.smoothness_order}, got {n}"
            )
        return self._jet((float(r0[0]), float(r0[1])), n)

    def _jet(self, r0, n: int) -> CenteredPolynomial:
        raise NotImplementedError

    def kappa(self, x, y, omega: float):
        return omega * np.sqrt(self.value(x, y))


def jet(field: CoefficientField, r0, n: int) -> CenteredPolynomial:
    """Degree-``n`` Taylor polynomial of ``field`` at ``r0``."""
    return field.jet(r0, n)


class ConstantField(CoefficientField):
    def __init__(self, xi0: float = 1.0):
        if xi0 <= 0:
            raise ValueError("xi0 must be positive")
        self.xi0 = float(xi0)

    def value(self, x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self.xi0)

    def _jet(self, r0, n):
        return CenteredPolynomial.constant(r0, self.xi0, degree=n)

    def __repr__(self):
        return f"ConstantField({self.xi0})"


class GradientField(CoefficientField):
    """Constant-gradient medium ``xi = c0**2 + 2 G0 . (r - r0)``."""

    def __init__(self, c0: float = 1.0, G0=(0.1, -0.2), origin=(-0.1, -0.1)):
        self.c0 = float(c0)
        self.G0 = (float(G0[0]), float(G0[1]))
        self.origin = (float(origin[0]), float(origin[1]))

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx, gy = self.G0
        return self.c0**2 + 2.0 * (gx * (x - self.origin[0]) + gy * (y - self.origin[1]))

    def _jet(self, r0, n):
        c = np.zeros(m(n))
        c[0] = float(self.value(r0[0], r0[1]))
        if n >= 1:
            c[1] = 2.0 * self.G0[0]
            c[2] = 2.0 * self.G0[1]
        return CenteredPolynomial(r0, c)

    def __repr__(self):
        return f"GradientField(c0={self.c0}, G0={self.G0}, origin={self.origin})"


def _series(coeffs, delta: CenteredPolynomial, n: int) -> CenteredPolynomial:
    """``sum_k coeffs[k] * delta**k`` truncated to degree ``n`` (``delta(r0) == 0``)."""
    out = CenteredPolynomial.constant(delta.center, coeffs[-1], degree=n)
    for c in reversed(coeffs[:-1]):
        out = (out * delta).truncate(n) + c
    return out.with_degree(n)


class GaussianLensField(CoefficientField):
    """Converging lens ``c = 4/3 (1 - 1/8 exp(-32 |r - r_c|^2))``, ``xi = 1/c^2``.

    Jets are produced by truncated Taylor arithmetic on the composition
    (exp of a quadratic, then ``c**-2``), so no derivative tables are coded.
    """

    def __init__(self, lens_center=(0.5, 0.5), amplitude: float = 1.0 / 8.0, width: float = 32.0,
                 c_inf: float = 4.0 / 3.0):
        self.lens_center = (float(lens_center[0]), float(lens_center[1]))
        self.amplitude = float(amplitude)
        self.width = float(width)
        self.c_inf = float(c_inf)

    def speed(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s = (x - self.lens_center[0]) ** 2 + (y - self.lens_center[1]) ** 2
        return self.c_inf * (1.0 - self.amplitude * np.exp(-self.width * s))

    def value(self, x, y):
        return 1.0 / self.speed(x, y) ** 2

    def _speed_jet(self, r0, n) -> CenteredPolynomial:
        dx0 = r0[0] - self.lens_center[0]
        dy0 = r0[1] - self.lens_center[1]
        s0 = dx0 * dx0 + dy0 * dy0
        delta = CenteredPolynomial.from_dict(
            r0, {(1, 0): 2 * dx0, (0, 1): 2 * dy0, (2, 0): 1.0, (0, 2): 1.0}
        )
        e0 = math.exp(-self.width * s0)
        exp_coeffs = [e0 * (-self.width) ** k / math.factorial(k) for k in range(n + 1)]
        gauss = _series(exp_coeffs, delta, n)
        return (self.c_inf - self.c_inf * self.amplitude * gauss).with_degree(n)

    def _jet(self, r0, n):
        c = self._speed_jet(r0, n)
        c0 = c.coeffs[0]
        eps = (c - c0) / c0
        inv_sq = [(-1) ** k * (k + 1) / c0**2 for k in range(n + 1)]
        return _series(inv_sq, eps, n)

    def __repr__(self):
        return f"GaussianLensField(lens_center={self.lens_center})"


@lru_cache(maxsize=None)
def _central_weights(order: int, half_width: int) -> np.ndarray:
    """Central finite-difference weights for the ``order``-th derivative on 2*half_width+1 points."""
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    n = offsets.size
    A = np.vander(offsets, n, increasing=True).T
    b = np.zeros(n)
    b[order] = math.factorial(order)
    return np.linalg.solve(A, b)


class FiniteDifferenceField(CoefficientField):
    """Field known only through point values; jets by Richardson-extrapolated
    tensor central differences.

    Accuracy degrades with order (roundoff grows like ``eps / step**order``),
    hence the cap ``smoothness_order = 4``.
    """

    smoothness_order = 4

    def __init__(self, value_fn, step: float = 1e-2, half_width: int = 4):
        self._fn = value_fn
        self.step = float(step)
        self.half_width = int(half_width)

    def value(self, x, y):
        return np.asarray(self._fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    def _mixed(self, r0, r: int, j: int, step: float) -> float:
        K = self.half_width
        off = np.arange(-K, K + 1) * step
        wx = _central_weights(r, K) / step**r
        wy = _central_weights(j, K) / step**j
        X, Y = np.meshgrid(r0[0] + off, r0[1] + off, indexing="ij")
        vals = self.value(X, Y)
        return float(wx @ vals @ wy)

    def _accuracy(self, order: int) -> int:
        # leading error power of a (2K+1)-point central stencil
        if order == 0:
            return 64
        n = 2 * self.half_width + 1 - order
        return n + (n % 2)

    def _jet(self, r0, n):
        rs, js = exponents(n)
        c = np.zeros(m(n))
        for k, (r, j) in enumerate(zip(rs, js)):
            d1 = self._mixed(r0, int(r), int(j), self.step)
            d2 = self._mixed(r0, int(r), int(j), self.step / 2)
            p = min(self._accuracy(int(r)), self._accuracy(int(j)))
            d = d2 if p >= 64 else (2.0**p * d2 - d1) / (2.0**p - 1.0)
            c[k] = d / (math.factorial(int(r)) * math.factorial(int(j)))
        return CenteredPolynomial(r0, c)


def field_from_name(name: str, params=None) -> CoefficientField:
    """Construct a built-in field from a CLI/config name and optional parameters."""
    params = dict(params or {})
    key = name.lower().replace("-", "_")
    if key in ("constant", "constant_field"):
        return ConstantField(float(params.get("xi0", 1.0)))
    if key in ("gaussian_lens", "lens", "gaussian"):
        return GaussianLensField(**params)
    if key in ("gradient", "constant_gradient"):
        return GradientField(**params)
    raise ValueError(f"unknown field {name!r}")
