"""Per-element GOPW spaces: construction, vectorized evaluation, q selection,
and a least-squares approximation oracle."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .amplitude import AmplitudePolynomial, build_amplitude
from .coeff import CoefficientField
from .phase import PhasePolynomial, build_phase, sample_grid
from .poly import derivative_matrix, m, monomial_matrix

__all__ = [
    "DEFAULT_C0",
    "GopwBasisSet",
    "ResolutionError",
    "approximation_oracle",
    "build_space",
    "direction_angles",
    "element_box",
    "eval_gradient",
    "eval_laplacian",
    "eval_value",
    "oracle_samples",
    "residual_ratios",
    "select_q",
]

logger = logging.getLogger(__name__)

DEFAULT_C0 = 4.0


class ResolutionError(ValueError):
    """omega * h exceeds the admissible bound C0."""


def select_q(n: int, omega: float, h: float, case: int, mode: str = "approximation",
             s: Optional[int] = None, C0: float = DEFAULT_C0) -> int:
    """Matching order ``q`` from the approximation or DG error estimates.

    ``mode="approximation"``: ``max{2, [(n-4) L / ln w]}`` (Case 1) or
    ``max{1, [(2n-4) L / ln w]}`` (Case 2) with ``L = ln (w h)^{-1}``.
    ``mode="dg"``: ``max{q_min, [(s-5) L / ln w], [(s+1/2) L / ln h^{-1}]}``.
    Brackets are floors.
    """
    if omega <= 1.0:
        raise ValueError(f"omega must exceed 1, got {omega}")
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    if omega * h > C0:
        raise ResolutionError(f"omega*h = {omega * h:g} exceeds C0 = {C0:g}")
    if case not in (1, 2):
        raise ValueError(f"case must be 1 or 2, got {case}")
    L = math.log(1.0 / (omega * h))
    q_min = 2 if case == 1 else 1
    if mode == "approximation":
        mult = (n - 4) if case == 1 else (2 * n - 4)
        return max(q_min, math.floor(mult * L / math.log(omega)))
    if mode == "dg":
        if s is None:
            raise ValueError("mode='dg' needs the regularity index s")
        cands = [q_min, math.floor((s - 5) * L / math.log(omega))]
        if h < 1.0:
            cands.append(math.floor((s + 0.5) * L / math.log(1.0 / h)))
        return max(cands)
    raise ValueError(f"unknown mode {mode!r}")


def direction_angles(p: int) -> np.ndarray:
    """``theta_l = 2 pi (l-1) / p``."""
    return 2.0 * np.pi * np.arange(p) / p


def element_box(K) -> tuple[float, float, float, float]:
    if hasattr(K, "bbox"):
        return tuple(float(v) for v in K.bbox)
    xmin, xmax, ymin, ymax = K
    return float(xmin), float(xmax), float(ymin), float(ymax)


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.result_type(c, float))
    out[: c.size] = c
    return out


@dataclass(frozen=True)
class GopwBasisSet:
    """Local space ``V^(1)_{p,q}`` (Case 1, p members) or ``V^(2)_{p,q}`` (2p members).

    Members are ``a(r) exp(i omega tau(r))`` with ``tau`` real and ``a``
    the amplitude collapsed at ``omega``. Member ``2l + j`` (Case 2) is the
    ``j``-th amplitude of direction ``l``.
    """

    element_id: int
    case: int
    p: int
    q: int
    omega: float
    center: tuple
    bbox: tuple
    functions: tuple
    # stacked coefficient tables for vectorized evaluation
    _tau: np.ndarray = field(repr=False, compare=False, default=None)
    _amp: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        dt = max(ph.tau.degree for ph, _ in self.functions)
        da = self.q + 1
        T = np.array([_pad(ph.tau.coeffs, m(dt)) for ph, _ in self.functions])
        A = np.array([_pad(a.collapse(self.omega).coeffs, m(da)) for _, a in self.functions])

        def d(M, deg, axis):
            return M @ derivative_matrix(deg, axis).T

        def pad_cols(M, n):
            out = np.zeros((M.shape[0], n), dtype=M.dtype)
            out[:, : M.shape[1]] = M
            return out

        Tx, Ty = d(T, dt, 0), d(T, dt, 1)
        Tlap = d(Tx, dt - 1, 0) + d(Ty, dt - 1, 1)
        Ax, Ay = d(A, da, 0), d(A, da, 1)
        Alap = d(Ax, da - 1, 0) + d(Ay, da - 1, 1) if da >= 2 else np.zeros_like(A[:, :1])
        tau = np.stack([T, pad_cols(Tx, m(dt)), pad_cols(Ty, m(dt)), pad_cols(Tlap, m(dt))])
        amp = np.stack([A, pad_cols(Ax, m(da)), pad_cols(Ay, m(da)), pad_cols(Alap, m(da))])
        object.__setattr__(self, "_tau", tau)
        object.__setattr__(self, "_amp", amp)

    @property
    def dim(self) -> int:
        return len(self.functions)

    @property
    def h(self) -> float:
        xmin, xmax, ymin, ymax = self.bbox
        return max(xmax - xmin, ymax - ymin)

    def _tables(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        dt = _degree(self._tau.shape[2])
        M = monomial_matrix(x - self.center[0], y - self.center[1], dt)
        Ma = M[:, : self._amp.shape[2]]
        tau = M @ self._tau.reshape(-1, self._tau.shape[2]).T
        amp = Ma @ self._amp.reshape(-1, self._amp.shape[2]).T
        n = self.dim
        return [tau[:, k * n:(k + 1) * n] for k in range(4)], [amp[:, k * n:(k + 1) * n] for k in range(4)]

    def evaluate(self, x, y, derivatives: bool = True):
        """Values, gradients and Laplacians of all members at points ``(x, y)``.

        Returns arrays of shape ``(npts, dim)``: ``(v, v_x, v_y, lap v)`` or
        only ``v`` when ``derivatives`` is false.
        """
        (t, tx, ty, tl), (a, ax, ay, al) = self._tables(x, y)
        w = self.omega
        e = np.exp(1j * w * t)
        v = a * e
        if not derivatives:
            return v
        vx = (ax + 1j * w * a * tx) * e
        vy = (ay + 1j * w * a * ty) * e
        lap = (al + 2j * w * (ax * tx + ay * ty) + 1j * w * a * tl - w * w * a * (tx * tx + ty * ty)) * e
        return v, vx, vy, lap


def _degree(n_coeffs: int) -> int:
    d = int(round((math.sqrt(8 * n_coeffs + 1) - 3) / 2))
    assert m(d) == n_coeffs
    return d


def build_space(field: CoefficientField, K, p: int, q: int, case: int, omega: float,
                element_id: int = 0, h: Optional[float] = None) -> GopwBasisSet:
    """GOPW space on element ``K`` with ``p`` equispaced directions.

    The expansion point is the barycenter of ``K``; ``h`` (default: longest
    edge of ``K``) feeds the transport truncation orders.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    box = element_box(K)
    center = (0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3]))
    if h is None:
        h = max(box[1] - box[0], box[3] - box[2])
    funcs = []
    for theta in direction_angles(p):
        ph = build_phase(field, center, float(theta), q)
        for a in build_amplitude(ph, case, omega=omega, h=h):
            funcs.append((ph, a))
    return GopwBasisSet(int(element_id), int(case), int(p), int(q), float(omega), center, box, tuple(funcs))


def _check_idx(bs: GopwBasisSet, idx: int) -> int:
    if not 0 <= idx < bs.dim:
        raise IndexError(f"member index {idx} out of range for dimension {bs.dim}")
    return idx


def eval_value(bs: GopwBasisSet, idx: int, r):
    i = _check_idx(bs, idx)
    v = bs.evaluate([r[0]], [r[1]], derivatives=False)
    return complex(v[0, i])


def eval_gradient(bs: GopwBasisSet, idx: int, r):
    i = _check_idx(bs, idx)
    _, vx, vy, _ = bs.evaluate([r[0]], [r[1]])
    return complex(vx[0, i]), complex(vy[0, i])


def eval_laplacian(bs: GopwBasisSet, idx: int, r):
    i = _check_idx(bs, idx)
    _, _, _, lap = bs.evaluate([r[0]], [r[1]])
    return complex(lap[0, i])


def oracle_samples(q: int) -> int:
    """Points per axis for residual and oracle sampling: ``4q + 12``."""
    return 4 * q + 12


def residual_ratios(bs: GopwBasisSet, field: CoefficientField, samples: Optional[int] = None) -> np.ndarray:
    """Per member: ``max |lap v + omega^2 xi v| / max |v|`` over a uniform grid on the element."""
    samples = samples or oracle_samples(bs.q)
    x, y = sample_grid(bs.bbox, samples)
    v, _, _, lap = bs.evaluate(x, y)
    xi = field.value(x, y)[:, None]
    res = np.abs(lap + bs.omega**2 * xi * v).max(axis=0)
    return res / np.abs(v).max(axis=0)


def approximation_oracle(field: CoefficientField, K, exact: Callable, p: int, q: int, case: int,
                         omega: float, samples: Optional[int] = None, space: Optional[GopwBasisSet] = None,
                         cond_warn: float = 1e12) -> dict:
    """Least-squares best fit of ``exact`` by the GOPW space on ``K``.

    ``exact(x, y)`` is vectorized. Returns a dict with sampled ``linf_error``
    and ``l2_error`` (root mean square), their values relative to the sampled
    norms of ``exact``, ``coeffs`` and the condition number ``cond`` of the
    column-scaled sample matrix. Ill-conditioning only warns.
    """
    bs = space or build_space(field, K, p, q, case, omega)
    samples = samples or oracle_samples(q)
    x, y = sample_grid(bs.bbox, samples)
    V = bs.evaluate(x, y, derivatives=False)
    u = np.asarray(exact(x, y), dtype=complex).ravel()
    scale = np.linalg.norm(V, axis=0)
    Vs = V / scale
    c_s, _, rank, sv = scipy.linalg.lstsq(Vs, u, cond=1e-14)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > cond_warn:
        warnings.warn(f"oracle sample matrix is ill-conditioned (cond = {cond:.2e})", RuntimeWarning,
                      stacklevel=2)
    coeffs = c_s / scale
    err = u - V @ coeffs
    linf = float(np.max(np.abs(err)))
    l2 = float(np.sqrt(np.mean(np.abs(err) ** 2)))
    return {
        "linf_error": linf,
        "l2_error": l2,
        "rel_linf_error": linf / float(np.max(np.abs(u))),
        "rel_l2_error": l2 / float(np.sqrt(np.mean(np.abs(u) ** 2))),
        "coeffs": coeffs,
        "cond": cond,
        "rank": int(rank),
    }
