"""Gauss-Legendre based quadrature on rectangles, segments and discs."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "circle_rule",
    "default_points",
    "disc_rule",
    "face_rule",
    "gauss_legendre",
    "rect_rule",
    "segment_rule",
]


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(P_n(x), P_n'(x))`` from the three-term recurrence."""
    p0, p1 = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    if n == 1:
        p0 = np.ones_like(x)
    return p1, n * (x * p1 - p0) / (x * x - 1.0)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-1, 1]`` by Newton iteration, cached per count."""
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def segment_rule(a, b, n: int):
    """Points ``(x, y)`` and weights on the segment from ``a`` to ``b``."""
    t, w = gauss_legendre(n)
    s = 0.5 * (t + 1.0)
    x = a[0] + s * (b[0] - a[0])
    y = a[1] + s * (b[1] - a[1])
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    return x, y, 0.5 * length * w


def face_rule(face, n: int):
    """Gauss-Legendre rule on a face (anything with endpoints ``a`` and ``b``)."""
    return segment_rule(face.a, face.b, n)


def rect_rule(K, n_1d: int):
    """Tensor Gauss-Legendre rule on the box ``K`` (or an object with ``bbox``)."""
    xmin, xmax, ymin, ymax = K.bbox if hasattr(K, "bbox") else K
    t, w = gauss_legendre(n_1d)
    xs = xmin + 0.5 * (t + 1.0) * (xmax - xmin)
    ys = ymin + 0.5 * (t + 1.0) * (ymax - ymin)
    wx = 0.5 * (xmax - xmin) * w
    wy = 0.5 * (ymax - ymin) * w
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(wx, wy)
    return X.ravel(), Y.ravel(), W.ravel()


def disc_rule(center, radius: float, n_r: int, n_theta: int):
    """Polar rule: radial Gauss-Legendre (Jacobian ``r`` in the weights) times uniform angles."""
    t, w = gauss_legendre(n_r)
    r = 0.5 * radius * (t + 1.0)
    wr = 0.5 * radius * w * r
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    R, TH = np.meshgrid(r, th, indexing="ij")
    W = np.outer(wr, np.full(n_theta, 2.0 * np.pi / n_theta))
    return center[0] + (R * np.cos(TH)).ravel(), center[1] + (R * np.sin(TH)).ravel(), W.ravel()


def circle_rule(center, radius: float, n_theta: int):
    """Uniform rule on the circle of the disc (arc-length weights)."""
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    x = center[0] + radius * np.cos(th)
    y = center[1] + radius * np.sin(th)
    return x, y, np.full(n_theta, 2.0 * np.pi * radius / n_theta), np.cos(th), np.sin(th)


def default_points(omega: float, h: float, q: int, m: int) -> int:
    """Points per direction: ``ceil(omega h / 2) + q + m + 6``."""
    return int(math.ceil(omega * h / 2.0)) + int(q) + int(m) + 6

