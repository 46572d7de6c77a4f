"""Amplitude polynomials solving the truncated transport recursion.

For a phase ``tau`` the amplitude is ``a = sum_s a_s / (i omega)**s``,
``s = 0..n_q``, with ``a_s`` real of degree ``q + 1 - s``. Level ``s`` asks
that all terms of degree ``< q_s`` of

    2 grad a_s . grad tau + a_s lap tau + lap a_{s-1}

vanish (``a_{-1} = 0``, ``q_0 = q + 1``). Non-terminal levels also carry the
harmonicity side constraints on ``lap a_s`` at the expansion point; the
terminal level requires ``lap a_{n_q} = 0`` identically.

Normalization and residual freedom:

* level 0 is normalized by ``a_0(r0) = 1``;
* levels ``s >= 1`` are pinned by ``a_s(r0) = 0`` (so ``a(r0) = 1`` for every
  omega) and otherwise minimum-norm;
* Case 2 keeps one extra direction at the terminal level: the unit-norm null
  vector ``v`` with ``v(r0) = 0`` and ``grad v(r0) . d_perp > 0``; the two
  returned amplitudes differ by ``v`` in their last part.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .phase import PhasePolynomial, sample_grid
from .poly import CenteredPolynomial, derivative_matrix, m, multiplication_matrix

__all__ = [
    "AmplitudeConstructionError",
    "AmplitudePolynomial",
    "build_amplitude",
    "build_amplitude_recursive",
    "build_amplitude_smallq",
    "parts_gram",
    "terminal_index",
    "transport_orders",
    "transport_residual",
]

logger = logging.getLogger(__name__)

NULL_RTOL = 1e-10


class AmplitudeConstructionError(RuntimeError):
    """A level system turned out inconsistent."""

    def __init__(self, msg: str, *, level: int, residual: float, singular_values=None):
        super().__init__(f"{msg} (level {level}, residual {residual:.3e})")
        self.level = level
        self.residual = residual
        self.singular_values = singular_values


@dataclass(frozen=True)
class AmplitudePolynomial:
    parts: tuple
    n_q: int
    q: int
    case: int
    branch_index: Optional[int] = None
    omega: Optional[float] = None
    null_dim: int = 0

    def collapse(self, omega: Optional[float] = None) -> CenteredPolynomial:
        """``sum_s a_s / (i omega)**s`` as one complex polynomial of degree q + 1."""
        w = self.omega if omega is None else omega
        deg = self.q + 1
        out = self.parts[0].with_degree(deg) * (1.0 + 0j)
        if len(self.parts) > 1:
            if w is None:
                raise ValueError("omega is required to collapse a multi-part amplitude")
            for s, a_s in enumerate(self.parts[1:], start=1):
                out = out + a_s.with_degree(deg) * (1.0 / (1j * w) ** s)
        return out

    def value_at_center(self, omega: Optional[float] = None) -> complex:
        return complex(self.collapse(omega).coeffs[0])


def terminal_index(q: int, case: int) -> int:
    """``n_q``: q - 2 for Case 1, q - 1 for Case 2."""
    if case == 1:
        if q < 2:
            raise ValueError("Case 1 needs q >= 2")
        return q - 2
    if case == 2:
        if q < 1:
            raise ValueError("Case 2 needs q >= 1")
        return q - 1
    raise ValueError(f"case must be 1 or 2, got {case}")


def transport_orders(q: int, n_q: int, omega: Optional[float] = None,
                     h: Optional[float] = None) -> tuple[list[int], int]:
    """Orders ``[q_1, ..., q_{n_q}]`` and ``q*`` of the level truncations.

    ``q_s`` is the smallest positive integer with ``q^2 h^{q_s} <= h^q omega^{s-1}``
    and ``q*`` the smallest with ``q^2 h^{q*} <= h^q omega^{n_q}``. Without a
    usable ``(omega, h)`` pair the fallback ``q_s = q + 1 - s``, ``q* = q - n_q``
    is returned.
    """
    if omega is None or h is None or not (0.0 < h < 1.0) or omega <= 0.0:
        return [q + 1 - s for s in range(1, n_q + 1)], q - n_q

    def smallest(power_of_omega: int) -> int:
        # h < 1, so h**t is decreasing in t
        bound = (q * math.log(h) + power_of_omega * math.log(omega) - 2.0 * math.log(q)) / math.log(h)
        return max(1, math.ceil(bound - 1e-12))

    return [smallest(s - 1) for s in range(1, n_q + 1)], smallest(n_q)


def _pad_rows(M: np.ndarray, rows: int) -> np.ndarray:
    if M.shape[0] >= rows:
        return M
    out = np.zeros((rows, M.shape[1]), dtype=M.dtype)
    out[: M.shape[0]] = M
    return out


def _laplacian_matrix(deg: int) -> np.ndarray:
    """Matrix of lap from degree ``deg`` to ``max(deg - 2, 0)``."""
    if deg < 2:
        return np.zeros((1, m(deg)))
    Dx1 = derivative_matrix(deg, 0)
    Dy1 = derivative_matrix(deg, 1)
    return derivative_matrix(deg - 1, 0) @ Dx1 + derivative_matrix(deg - 1, 1) @ Dy1


def _transport_matrix(phase: PhasePolynomial, deg: int) -> np.ndarray:
    """Matrix of ``a -> 2 grad a . grad tau + a lap tau`` for ``a`` of degree ``deg``."""
    tx, ty, lap = phase.tau_x.coeffs, phase.tau_y.coeffs, phase.tau_lap.coeffs
    M_lap = multiplication_matrix(lap, deg)
    if deg == 0:
        return M_lap
    A = 2.0 * (multiplication_matrix(tx, deg - 1) @ derivative_matrix(deg, 0)
               + multiplication_matrix(ty, deg - 1) @ derivative_matrix(deg, 1))
    rows = max(A.shape[0], M_lap.shape[0])
    return _pad_rows(A, rows) + _pad_rows(M_lap, rows)


def _lstsq(A: np.ndarray, b: np.ndarray):
    """Minimum-norm least squares with relative singular-value cutoff ``NULL_RTOL``."""
    U, sv, Vt = np.linalg.svd(A, full_matrices=True)
    tol = NULL_RTOL * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > tol))
    x = Vt[:rank].T @ ((U[:, :rank].T @ b) / sv[:rank])
    null = Vt[rank:].T
    res = float(np.linalg.norm(A @ x - b))
    return x, null, rank, sv, res


def _check_consistent(A, x, b, res, level, sv):
    scale = np.linalg.norm(b) + np.linalg.norm(A, 2) * np.linalg.norm(x) + 1e-300
    if res > 1e-8 * scale:
        raise AmplitudeConstructionError(
            "inconsistent transport constraints", level=level, residual=res, singular_values=sv
        )


def _build(phase: PhasePolynomial, q: int, n_q: int, case: int,
           omega: Optional[float], h: Optional[float]) -> list[AmplitudePolynomial]:
    r0 = phase.center
    orders, _ = transport_orders(q, n_q, omega, h)
    level_orders = [q + 1]
    for s, qs in enumerate(orders, start=1):
        eff = min(qs, q + 1 - s)
        if eff != qs:
            logger.debug("level %d: q_s=%d clamped to %d (available degree)", s, qs, eff)
        level_orders.append(eff)

    parts: list[np.ndarray] = []
    prev_lap: Optional[np.ndarray] = None
    null_dim = 0
    extra: Optional[np.ndarray] = None

    for s in range(n_q + 1):
        deg = q + 1 - s
        qs = level_orders[s]
        n_eq = m(qs - 1)
        T = _pad_rows(_transport_matrix(phase, deg), n_eq)[:n_eq]
        rhs = np.zeros(n_eq)
        if prev_lap is not None:
            k = min(n_eq, prev_lap.size)
            rhs[:k] -= prev_lap[:k]
        L = _laplacian_matrix(deg)
        blocks = [T]
        rhs_blocks = [rhs]
        if s < n_q:
            rows = [L[0:1]]
            lap_deg = max(deg - 2, 0)
            if qs > 2 and qs - 2 <= lap_deg:
                rows.append(L[m(qs - 3) : m(qs - 2)])
            H = np.vstack(rows)
            blocks.append(H)
            rhs_blocks.append(np.zeros(H.shape[0]))
        elif deg >= 2:
            blocks.append(L)
            rhs_blocks.append(np.zeros(L.shape[0]))
        A = np.vstack(blocks)
        b = np.concatenate(rhs_blocks)

        if s == n_q:
            # nullity of the terminal system before normalization/pinning
            _, null0, _, _, _ = _lstsq(A, b)
            null_dim = null0.shape[1]

        pin = np.zeros((1, m(deg)))
        pin[0, 0] = 1.0
        A_n = np.vstack([A, pin])
        b_n = np.concatenate([b, [1.0 if s == 0 else 0.0]])
        x, null, rank, sv, res = _lstsq(A_n, b_n)
        _check_consistent(A_n, x, b_n, res, s, sv)
        x[0] = b_n[-1]  # pins hold exactly; the solve leaves roundoff there
        parts.append(x)

        if s == n_q and case == 2:
            if null.shape[1] == 0:
                raise AmplitudeConstructionError(
                    "terminal level has no free direction for the second amplitude",
                    level=s, residual=res, singular_values=sv,
                )
            d_perp = np.array([-math.sin(phase.direction_angle), math.cos(phase.direction_angle)])
            v = null[:, 0]
            if null.shape[1] > 1:
                logger.debug("terminal null space has dimension %d", null.shape[1])
                # direction of largest gradient along d_perp keeps the choice deterministic
                v = null @ (null[1:3].T @ d_perp)
                v = v / np.linalg.norm(v)
            sgn = float(v[1:3] @ d_perp) if v.size >= 3 else 0.0
            if sgn == 0.0:
                nz = np.flatnonzero(np.abs(v) > 1e-14)
                sgn = float(v[nz[0]]) if nz.size else 1.0
            extra = v if sgn > 0 else -v

        a_poly = CenteredPolynomial(r0, x)
        prev_lap = a_poly.laplacian().coeffs

    polys = tuple(CenteredPolynomial(r0, c) for c in parts)
    out = [AmplitudePolynomial(polys, n_q, q, case, 1 if case == 2 else None, omega, null_dim)]
    if case == 2:
        last = CenteredPolynomial(r0, parts[-1] + extra)
        out.append(AmplitudePolynomial(polys[:-1] + (last,), n_q, q, case, 2, omega, null_dim))
    return out


def build_amplitude_smallq(phase: PhasePolynomial, q: int, case: int,
                           omega: Optional[float] = None) -> list[AmplitudePolynomial]:
    """Single-level construction (``m_a = q + 1``): Case 1 with q = 2 or Case 2 with q = 1."""
    if (case, q) not in ((1, 2), (2, 1)):
        raise ValueError(f"small-q branch covers (case=1, q=2) and (case=2, q=1); got case={case}, q={q}")
    if phase.q != q:
        raise ValueError(f"phase was built for q={phase.q}, not {q}")
    return _build(phase, q, 0, case, omega, None)


def build_amplitude_recursive(phase: PhasePolynomial, q: int, n_q: int,
                              omega: Optional[float] = None,
                              h: Optional[float] = None) -> list[AmplitudePolynomial]:
    """Recursive construction with terminal index ``n_q`` in ``{q - 2, q - 1}``.

    Returns one amplitude for ``n_q = q - 2`` and two for ``n_q = q - 1``.
    """
    if phase.q != q:
        raise ValueError(f"phase was built for q={phase.q}, not {q}")
    if n_q == q - 2:
        case = 1
    elif n_q == q - 1:
        case = 2
    else:
        raise ValueError(f"n_q must be q-2 or q-1, got {n_q} for q={q}")
    if n_q < 1:
        raise ValueError("recursive branch needs n_q >= 1; use build_amplitude_smallq")
    return _build(phase, q, n_q, case, omega, h)


def build_amplitude(phase: PhasePolynomial, case: int, omega: Optional[float] = None,
                    h: Optional[float] = None) -> list[AmplitudePolynomial]:
    """Dispatch to the small-q or recursive branch for the phase's ``q``."""
    q = phase.q
    n_q = terminal_index(q, case)
    if n_q == 0:
        return build_amplitude_smallq(phase, q, case, omega)
    return build_amplitude_recursive(phase, q, n_q, omega, h)


def transport_residual(phase: PhasePolynomial, amp: AmplitudePolynomial, omega: float,
                       K, samples: int = 33) -> float:
    """Max over a grid on ``K`` of ``|lap a + i omega (2 grad a . grad tau + a lap tau)|``."""
    a = amp.collapse(omega)
    x, y = sample_grid(K, samples)
    ax, ay = a.diff(0), a.diff(1)
    val = (a.laplacian()(x, y)
           + 1j * omega * (2.0 * (ax(x, y) * phase.tau_x(x, y) + ay(x, y) * phase.tau_y(x, y))
                           + a(x, y) * phase.tau_lap(x, y)))
    return float(np.max(np.abs(val)))


def parts_gram(amps: Sequence[AmplitudePolynomial]) -> np.ndarray:
    """Gram matrix of the stacked part coefficient vectors."""
    vecs = [np.concatenate([p.coeffs for p in a.parts]) for a in amps]
    V = np.array(vecs)
    return V @ V.T
