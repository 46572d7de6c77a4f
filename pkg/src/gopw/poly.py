"""Bivariate polynomials centered at a point, stored in triangle-packed order.

Coefficients are kept dense in the ordering

    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ..., (n,0), (n-1,1), ..., (0,n)

where the pair ``(r, j)`` labels the monomial ``(x - x0)**r * (y - y0)**j``.
The 1-based position of ``(r, j)`` is ``F(r, j) = m(r + j - 1) + j + 1`` with
``m(k) = (k + 1)(k + 2) / 2``; all array indexing in this package uses the
0-based ``index(r, j) = F(r, j) - 1``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "CenterMismatchError",
    "CenteredPolynomial",
    "F",
    "F_inv",
    "add",
    "derivative_matrix",
    "differentiate",
    "evaluate",
    "exponents",
    "index",
    "m",
    "monomial_matrix",
    "multiplication_matrix",
    "multiply",
    "scale",
    "truncate",
]


class CenterMismatchError(ValueError):
    """Two polynomials with different expansion points were combined."""


def m(k: int) -> int:
    """Number of monomials of total degree <= k (0 for k < 0)."""
    if k < 0:
        return 0
    return (k + 1) * (k + 2) // 2


def F(r: int, j: int) -> int:
    """1-based position of the multi-index (r, j)."""
    if r < 0 or j < 0:
        raise ValueError(f"negative multi-index ({r}, {j})")
    if r + j == 0:
        return 1
    return m(r + j - 1) + j + 1


def F_inv(k: int) -> tuple[int, int]:
    """Inverse of :func:`F`."""
    if k < 1:
        raise ValueError(f"position must be >= 1, got {k}")
    if k == 1:
        return (0, 0)
    level = 1
    while m(level) < k:
        level += 1
    return (m(level) - k, k - (m(level - 1) + 1))


def index(r: int, j: int) -> int:
    return F(r, j) - 1


@lru_cache(maxsize=None)
def exponents(deg: int) -> tuple[np.ndarray, np.ndarray]:
    """Exponent arrays ``(r, j)`` for all monomials up to ``deg`` in packed order."""
    rs, js = [], []
    for d in range(deg + 1):
        for j in range(d + 1):
            rs.append(d - j)
            js.append(j)
    r = np.array(rs, dtype=np.int64)
    jj = np.array(js, dtype=np.int64)
    r.setflags(write=False)
    jj.setflags(write=False)
    return r, jj


def _degree_from_length(n: int) -> int:
    d = 0
    while m(d) < n:
        d += 1
    if m(d) != n:
        raise ValueError(f"coefficient length {n} is not triangular")
    return d


@lru_cache(maxsize=None)
def _product_tables(dp: int, dq: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rp, jp = exponents(dp)
    rq, jq = exponents(dq)
    ia, ib = np.meshgrid(np.arange(m(dp)), np.arange(m(dq)), indexing="ij")
    ia = ia.ravel()
    ib = ib.ravel()
    r = rp[ia] + rq[ib]
    j = jp[ia] + jq[ib]
    d = r + j
    out = d * (d + 1) // 2 + j
    for arr in (ia, ib, out):
        arr.setflags(write=False)
    return ia, ib, out


@lru_cache(maxsize=None)
def derivative_matrix(deg: int, axis: int) -> np.ndarray:
    """Matrix of d/dx (axis 0) or d/dy (axis 1) from degree ``deg`` to ``max(deg-1, 0)``."""
    out_deg = max(deg - 1, 0)
    D = np.zeros((m(out_deg), m(deg)))
    r, j = exponents(deg)
    for k in range(m(deg)):
        if axis == 0 and r[k] > 0:
            D[index(r[k] - 1, j[k]), k] = r[k]
        elif axis == 1 and j[k] > 0:
            D[index(r[k], j[k] - 1), k] = j[k]
    D.setflags(write=False)
    return D


def multiplication_matrix(coeffs: np.ndarray, deg_in: int) -> np.ndarray:
    """Matrix of ``a -> p * a`` for ``a`` of degree ``deg_in``, ``p`` given by ``coeffs``."""
    coeffs = np.asarray(coeffs)
    dp = _degree_from_length(coeffs.size)
    ia, ib, out = _product_tables(dp, deg_in)
    M = np.zeros((m(dp + deg_in), m(deg_in)), dtype=np.result_type(coeffs, float))
    np.add.at(M, (out, ib), coeffs[ia])
    return M


def monomial_matrix(dx: np.ndarray, dy: np.ndarray, deg: int) -> np.ndarray:
    """Rows of all monomials ``dx**r * dy**j`` up to ``deg`` at the given offsets."""
    dx = np.asarray(dx, dtype=float).ravel()
    dy = np.asarray(dy, dtype=float).ravel()
    px = np.ones((dx.size, deg + 1))
    py = np.ones((dy.size, deg + 1))
    for k in range(1, deg + 1):
        px[:, k] = px[:, k - 1] * dx
        py[:, k] = py[:, k - 1] * dy
    r, j = exponents(deg)
    return px[:, r] * py[:, j]


class CenteredPolynomial:
    """Polynomial in ``(x - x0, y - y0)`` with dense packed coefficients.

    Instances are immutable; arithmetic returns new objects. Scalars may be
    real or complex.
    """

    __slots__ = ("_center", "_coeffs")

    def __init__(self, center, coeffs):
        c = np.array(coeffs, copy=True)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D array")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        _degree_from_length(c.size)
        c.setflags(write=False)
        self._center = (float(center[0]), float(center[1]))
        self._coeffs = c

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, center, degree: int = 0, dtype=float) -> "CenteredPolynomial":
        return cls(center, np.zeros(m(degree), dtype=dtype))

    @classmethod
    def constant(cls, center, value, degree: int = 0) -> "CenteredPolynomial":
        c = np.zeros(m(degree), dtype=np.result_type(value, float))
        c[0] = value
        return cls(center, c)

    @classmethod
    def monomial(cls, center, r: int, j: int, coeff=1.0) -> "CenteredPolynomial":
        c = np.zeros(m(r + j), dtype=np.result_type(coeff, float))
        c[index(r, j)] = coeff
        return cls(center, c)

    @classmethod
    def from_dict(cls, center, terms: dict, degree: int | None = None) -> "CenteredPolynomial":
        """Build from ``{(r, j): coeff}``."""
        deg = max((r + j for r, j in terms), default=0)
        if degree is not None:
            deg = max(deg, degree)
        dtype = np.result_type(*terms.values(), float) if terms else float
        c = np.zeros(m(deg), dtype=dtype)
        for (r, j), v in terms.items():
            c[index(r, j)] += v
        return cls(center, c)

    # basic properties -----------------------------------------------------
    @property
    def center(self) -> tuple[float, float]:
        return self._center

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def degree(self) -> int:
        return _degree_from_length(self._coeffs.size)

    def coeff(self, r: int, j: int):
        if r + j > self.degree:
            return self._coeffs.dtype.type(0)
        return self._coeffs[index(r, j)]

    def __repr__(self) -> str:
        return f"CenteredPolynomial(center={self._center}, degree={self.degree}, coeffs={self._coeffs!r})"

    def _check(self, other: "CenteredPolynomial") -> None:
        if self._center != other._center:
            raise CenterMismatchError(f"centers differ: {self._center} vs {other._center}")

    def with_degree(self, degree: int) -> "CenteredPolynomial":
        """Pad with zeros (or truncate) to the given nominal degree."""
        n = m(degree)
        c = np.zeros(n, dtype=self._coeffs.dtype)
        k = min(n, self._coeffs.size)
        c[:k] = self._coeffs[:k]
        return CenteredPolynomial(self._center, c)

    # evaluation -----------------------------------------------------------
    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        x, y = np.broadcast_arrays(x, y)
        V = monomial_matrix(x - self._center[0], y - self._center[1], self.degree)
        return (V @ self._coeffs).reshape(shape)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, CenteredPolynomial):
            self._check(other)
            deg = max(self.degree, other.degree)
            a = self.with_degree(deg)._coeffs
            b = other.with_degree(deg)._coeffs
            return CenteredPolynomial(self._center, a + b)
        c = self._coeffs.astype(np.result_type(self._coeffs, other), copy=True)
        c[0] += other
        return CenteredPolynomial(self._center, c)

    __radd__ = __add__

    def __neg__(self):
        return CenteredPolynomial(self._center, -self._coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CenteredPolynomial):
            self._check(other)
            ia, ib, out = _product_tables(self.degree, other.degree)
            dtype = np.result_type(self._coeffs, other._coeffs)
            c = np.zeros(m(self.degree + other.degree), dtype=dtype)
            np.add.at(c, out, self._coeffs[ia] * other._coeffs[ib])
            return CenteredPolynomial(self._center, c)
        return CenteredPolynomial(self._center, self._coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return CenteredPolynomial(self._center, self._coeffs / other)

    def __eq__(self, other):
        if not isinstance(other, CenteredPolynomial):
            return NotImplemented
        if self._center != other._center:
            return False
        deg = max(self.degree, other.degree)
        return bool(np.array_equal(self.with_degree(deg)._coeffs, other.with_degree(deg)._coeffs))

    __hash__ = None

    # calculus -------------------------------------------------------------
    def diff(self, axis) -> "CenteredPolynomial":
        ax = _axis(axis)
        return CenteredPolynomial(self._center, derivative_matrix(self.degree, ax) @ self._coeffs)

    def gradient(self) -> tuple["CenteredPolynomial", "CenteredPolynomial"]:
        return self.diff(0), self.diff(1)

    def laplacian(self) -> "CenteredPolynomial":
        return self.diff(0).diff(0) + self.diff(1).diff(1)

    def truncate(self, n: int) -> "CenteredPolynomial":
        if n < 0:
            raise ValueError("truncation degree must be >= 0")
        return self.with_degree(min(n, self.degree))

    def homogeneous_part(self, k: int) -> np.ndarray:
        """Coefficients of total degree exactly ``k``, ordered (k,0), (k-1,1), ..., (0,k)."""
        if k > self.degree:
            return np.zeros(k + 1, dtype=self._coeffs.dtype)
        return self._coeffs[m(k - 1) : m(k)].copy()

    def conj(self) -> "CenteredPolynomial":
        return CenteredPolynomial(self._center, np.conj(self._coeffs))

    @property
    def real(self) -> "CenteredPolynomial":
        return CenteredPolynomial(self._center, self._coeffs.real)

    @property
    def imag(self) -> "CenteredPolynomial":
        return CenteredPolynomial(self._center, self._coeffs.imag)


def _axis(axis) -> int:
    if axis in (0, "x"):
        return 0
    if axis in (1, "y"):
        return 1
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


# functional forms -----------------------------------------------------------

def evaluate(p: CenteredPolynomial, r):
    """Value of ``p`` at the point ``r = (x, y)`` (arrays broadcast)."""
    return p(r[0], r[1])


def add(p: CenteredPolynomial, q: CenteredPolynomial) -> CenteredPolynomial:
    return p + q


def scale(p: CenteredPolynomial, s) -> CenteredPolynomial:
    return p * s


def multiply(p: CenteredPolynomial, q: CenteredPolynomial) -> CenteredPolynomial:
    return p * q


def differentiate(p: CenteredPolynomial, axis) -> CenteredPolynomial:
    return p.diff(axis)


def truncate(p: CenteredPolynomial, n: int) -> CenteredPolynomial:
    return p.truncate(n)
