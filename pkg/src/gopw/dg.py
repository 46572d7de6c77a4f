"""Stabilized Trefftz-DG assembly and solve for the homogeneous part ``u^(2)``.

Unknowns are ordered element-major; within an element block they follow the
member order of its :class:`~gopw.basis.GopwBasisSet`. Matrix entries are
``M[j, k] = B_h(phi_k, phi_j)`` (trial column, test row), so the discrete
problem reads ``M c = b`` with ``b_j = l_h(phi_j)``.

Interior faces carry the unit normal ``n`` of the left element; with
``s_left = +1``, ``s_right = -1`` the jumps are ``[[u]]_N = n (u_l - u_r)``
and ``[[grad u]]_N = d_n u_l - d_n u_r``.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .basis import GopwBasisSet
from .coeff import CoefficientField
from .quad import default_points, face_rule, rect_rule

__all__ = [
    "ALL_TERMS",
    "ConfigurationError",
    "DgParameters",
    "DgSolution",
    "DgSystem",
    "SolverError",
    "assemble",
    "assemble_rhs",
    "evaluate_solution",
    "solve",
    "solve_linear",
]

logger = logging.getLogger(__name__)

ALL_TERMS = frozenset({"volume", "interior", "boundary", "stabilization"})
DENSE_LIMIT = 600


class ConfigurationError(ValueError):
    """Inconsistent inputs to the assembly (e.g. spaces built for different omega)."""


class SolverError(RuntimeError):
    """Factorization failed; ``diagnostics`` carries what is known about the matrix."""

    def __init__(self, msg: str, diagnostics: dict):
        super().__init__(f"{msg}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class DgParameters:
    alpha: float = 0.5
    beta: float = 0.5
    delta: float = 0.5
    gamma: float = 0.5


@dataclass
class DgSystem:
    matrix: scipy.sparse.csr_matrix
    rhs: Optional[np.ndarray]
    offsets: np.ndarray
    omega: float
    params: DgParameters
    n_1d: int
    eta: Optional[Callable] = field(default=None, repr=False)
    stats: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return int(self.offsets[-1])

    def block(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))


@dataclass
class DgSolution:
    coeffs: list
    residual: float
    stats: dict


def _check_spaces(mesh, spaces: Sequence[GopwBasisSet], omega: float):
    if len(spaces) != mesh.n_elements:
        raise ConfigurationError(f"{len(spaces)} spaces for {mesh.n_elements} elements")
    for k, bs in enumerate(spaces):
        if not math.isclose(bs.omega, omega, rel_tol=0.0, abs_tol=0.0):
            raise ConfigurationError(f"space {k} was built for omega={bs.omega}, not {omega}")
        if bs.element_id != k:
            raise ConfigurationError(f"space {k} carries element id {bs.element_id}")


def _points(spaces, mesh, omega, n_1d, m):
    if n_1d is not None:
        return int(n_1d)
    q = max(bs.q for bs in spaces)
    return default_points(omega, mesh.h, q, m)


def _eta_values(eta, field_, omega, x, y):
    if eta is None:
        return omega * np.sqrt(field_.value(x, y))
    return np.broadcast_to(np.asarray(eta(x, y), dtype=float), np.shape(x))


# Each kernel returns conj(test)^T W (trial) combinations. Trial arrays may be
# basis tables (npts x d) or a single field (npts x 1).

def _volume(test, trial, k2, w, omega, params, terms):
    v, vx, vy, vl = test
    u, ux, uy, ul = trial
    out = 0.0
    if "volume" in terms:
        out = (np.conj(vx) * w[:, None]).T @ ux + (np.conj(vy) * w[:, None]).T @ uy \
            - (np.conj(v) * (w * k2)[:, None]).T @ u
    if "stabilization" in terms and params.gamma != 0.0:
        rv = vl + k2[:, None] * v
        ru = ul + k2[:, None] * u
        out = out + (1j * params.gamma / omega**2) * (np.conj(rv) * w[:, None]).T @ ru
    return out


def _interior(test, trial, s_t, s_s, w, omega, params):
    v, vn = test
    u, un = trial
    W = w[:, None]
    return (-0.5 * s_s * (np.conj(vn) * W).T @ u
            - 0.5 * s_t * (np.conj(v) * W).T @ un
            + (1j * params.beta / omega) * s_s * s_t * (np.conj(vn) * W).T @ un
            + (1j * omega * params.alpha) * s_s * s_t * (np.conj(v) * W).T @ u)


def _boundary(test, trial, eta, w, omega, params):
    v, vn = test
    u, un = trial
    W = w[:, None]
    d = params.delta
    return (-(d / omega) * (np.conj(vn) * (w * eta)[:, None]).T @ u
            - d * (np.conj(v) * W).T @ un
            + (1j * d / omega) * (np.conj(vn) * W).T @ un
            + 1j * (1.0 - d) * (np.conj(v) * (w * eta)[:, None]).T @ u)


def _trace(bs: GopwBasisSet, x, y, normal):
    v, vx, vy, _ = bs.evaluate(x, y)
    return v, vx * normal[0] + vy * normal[1]


def _u1_trace(sol, x, y, normal):
    u, ux, uy, _ = sol.evaluate(x, y)
    return u[:, None], (ux * normal[0] + uy * normal[1])[:, None]


def _u1_tables(sol, x, y):
    return tuple(a[:, None] for a in sol.evaluate(x, y))


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def assemble(mesh, spaces: Sequence[GopwBasisSet], field_: CoefficientField, omega: float,
             params: DgParameters = DgParameters(), eta: Optional[Callable] = None,
             n_1d: Optional[int] = None, m: int = 0, threads: int = 1,
             terms=ALL_TERMS) -> DgSystem:
    """Matrix of ``B_h`` on the product of the local GOPW spaces.

    ``eta(x, y)`` is the boundary impedance weight; ``None`` means
    ``kappa = omega sqrt(xi)``. ``n_1d`` overrides the points per direction
    (default from :func:`gopw.quad.default_points` with local order ``m``).
    ``terms`` restricts the assembly to a subset of ``ALL_TERMS``.
    """
    terms = frozenset(terms)
    unknown = terms - ALL_TERMS
    if unknown:
        raise ValueError(f"unknown terms {sorted(unknown)}")
    _check_spaces(mesh, spaces, omega)
    t0 = time.perf_counter()
    n = _points(spaces, mesh, omega, n_1d, m)
    dims = np.array([bs.dim for bs in spaces])
    offsets = np.concatenate([[0], np.cumsum(dims)])

    def element_block(k):
        bs = spaces[k]
        block = np.zeros((bs.dim, bs.dim), dtype=complex)
        if terms & {"volume", "stabilization"}:
            x, y, w = rect_rule(mesh.elements[k], n)
            tab = bs.evaluate(x, y)
            k2 = omega**2 * field_.value(x, y)
            block += _volume(tab, tab, k2, w, omega, params, terms)
        return block

    def interior_blocks(face):
        x, y, w = face_rule(face, n)
        sides = [(spaces[face.left], 1.0), (spaces[face.right], -1.0)]
        traces = [_trace(bs, x, y, face.normal) for bs, _ in sides]
        return [[_interior(traces[t], traces[s], sides[t][1], sides[s][1], w, omega, params)
                 for s in range(2)] for t in range(2)]

    def boundary_block(face):
        x, y, w = face_rule(face, n)
        tr = _trace(spaces[face.element], x, y, face.normal)
        return _boundary(tr, tr, _eta_values(eta, field_, omega, x, y), w, omega, params)

    diag = _map(element_block, range(mesh.n_elements), threads)
    inner = _map(interior_blocks, mesh.interior_faces, threads) if "interior" in terms else []
    outer = _map(boundary_block, mesh.boundary_faces, threads) if "boundary" in terms else []

    # deterministic accumulation: elements, then interior faces, then boundary faces
    off_blocks = []
    for face, blk in zip(mesh.interior_faces, inner):
        diag[face.left] = diag[face.left] + blk[0][0]
        diag[face.right] = diag[face.right] + blk[1][1]
        off_blocks.append((face.left, face.right, blk[0][1]))
        off_blocks.append((face.right, face.left, blk[1][0]))
    for face, blk in zip(mesh.boundary_faces, outer):
        diag[face.element] = diag[face.element] + blk

    rows, cols, vals = [], [], []

    def put(t, s, blk):
        r = np.arange(offsets[t], offsets[t + 1])
        c = np.arange(offsets[s], offsets[s + 1])
        R, C = np.meshgrid(r, c, indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
        vals.append(np.asarray(blk).ravel())

    for k, blk in enumerate(diag):
        put(k, k, blk)
    for t, s, blk in off_blocks:
        put(t, s, blk)
    N = int(offsets[-1])
    A = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()
    A.sort_indices()
    stats = {"assembly_s": time.perf_counter() - t0, "nnz": int(A.nnz), "n_1d": n}
    return DgSystem(A, None, offsets, float(omega), params, n, eta, stats)


def assemble_rhs(mesh, spaces: Sequence[GopwBasisSet], u1, f: Optional[Callable], g: Optional[Callable],
                 field_: CoefficientField, omega: float, params: DgParameters = DgParameters(),
                 eta: Optional[Callable] = None, n_1d: Optional[int] = None, m: int = 0,
                 threads: int = 1, stabilize_u1: bool = False) -> np.ndarray:
    """Load vector ``l_h(phi_j)``.

    ``u1`` is the list of per-element local solutions (``None`` for zero).
    ``g(x, y, nx, ny)`` is the boundary datum. The ``-A_h(u1, v)`` term uses
    the piecewise ``u1``, so its interior jumps contribute;
    ``stabilize_u1=True`` subtracts ``B_h(u1, v)`` instead (adds the
    stabilization term on ``u1``).
    """
    _check_spaces(mesh, spaces, omega)
    n = _points(spaces, mesh, omega, n_1d, m)
    dims = np.array([bs.dim for bs in spaces])
    offsets = np.concatenate([[0], np.cumsum(dims)])
    vol_terms = {"volume", "stabilization"} if stabilize_u1 else {"volume"}

    def element_part(k):
        bs = spaces[k]
        x, y, w = rect_rule(mesh.elements[k], n)
        tab = bs.evaluate(x, y)
        out = np.zeros(bs.dim, dtype=complex)
        if f is not None:
            out += (np.conj(tab[0]) * w[:, None]).T @ np.asarray(f(x, y), dtype=complex)
        if u1 is not None:
            k2 = omega**2 * field_.value(x, y)
            out -= _volume(tab, _u1_tables(u1[k], x, y), k2, w, omega, params, vol_terms)[:, 0]
        return out

    def interior_part(face):
        if u1 is None:
            return None
        x, y, w = face_rule(face, n)
        ids = (face.left, face.right)
        signs = (1.0, -1.0)
        tests = [_trace(spaces[i], x, y, face.normal) for i in ids]
        trials = [_u1_trace(u1[i], x, y, face.normal) for i in ids]
        return [-sum(_interior(tests[t], trials[s], signs[t], signs[s], w, omega, params)[:, 0]
                     for s in range(2)) for t in range(2)]

    def boundary_part(face):
        x, y, w = face_rule(face, n)
        v, vn = _trace(spaces[face.element], x, y, face.normal)
        W = w[:, None]
        out = np.zeros(v.shape[1], dtype=complex)
        if g is not None:
            gv = np.asarray(g(x, y, face.normal[0], face.normal[1]), dtype=complex)
            d = params.delta
            out += (1j * d / omega) * (np.conj(vn) * W).T @ gv + (1.0 - d) * (np.conj(v) * W).T @ gv
        if u1 is not None:
            tr = _u1_trace(u1[face.element], x, y, face.normal)
            out -= _boundary((v, vn), tr, _eta_values(eta, field_, omega, x, y), w, omega, params)[:, 0]
        return out

    b = np.zeros(int(offsets[-1]), dtype=complex)
    for k, part in enumerate(_map(element_part, range(mesh.n_elements), threads)):
        b[offsets[k]:offsets[k + 1]] += part
    for face, part in zip(mesh.interior_faces, _map(interior_part, mesh.interior_faces, threads)):
        if part is None:
            continue
        b[offsets[face.left]:offsets[face.left + 1]] += part[0]
        b[offsets[face.right]:offsets[face.right + 1]] += part[1]
    for face, part in zip(mesh.boundary_faces, _map(boundary_part, mesh.boundary_faces, threads)):
        b[offsets[face.element]:offsets[face.element + 1]] += part
    return b


def solve_linear(A, b: np.ndarray, method: str = "auto"):
    """Solve ``A x = b`` by sparse LU (SuperLU) or dense LU; returns ``(x, stats)``."""
    N = A.shape[0]
    if method == "auto":
        method = "dense" if N <= DENSE_LIMIT else "sparse"
    t0 = time.perf_counter()
    stats = {"method": method, "n": int(N)}
    if method == "dense":
        M = A.toarray() if scipy.sparse.issparse(A) else np.asarray(A)
        try:
            with warnings.catch_warnings():
                # a zero pivot is reported below as SolverError
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(M)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError("dense factorization failed", {"n": N, "error": str(exc)}) from exc
        pivots = np.abs(np.diag(lu))
        if pivots.min() == 0.0:
            raise SolverError("matrix is singular", {"n": N, "min_pivot": 0.0})
        x = scipy.linalg.lu_solve((lu, piv), b)
        stats["pivot_ratio"] = float(pivots.min() / pivots.max())
    elif method == "sparse":
        Acsc = scipy.sparse.csc_matrix(A)
        try:
            lu = scipy.sparse.linalg.splu(Acsc, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolverError("sparse factorization failed", {"n": N, "nnz": int(Acsc.nnz), "error": str(exc)}) from exc
        x = lu.solve(b)
        pivots = np.abs(lu.U.diagonal())
        stats["fill_nnz"] = int(lu.L.nnz + lu.U.nnz)
        stats["fill_ratio"] = stats["fill_nnz"] / max(int(Acsc.nnz), 1)
        stats["pivot_ratio"] = float(pivots.min() / pivots.max())
    else:
        raise ValueError(f"unknown method {method!r}")
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    stats["residual"] = float(r / nb) if nb > 0 else float(r)
    stats["solve_s"] = time.perf_counter() - t0
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite solution", stats)
    return x, stats


def solve(sys: DgSystem, method: str = "auto") -> DgSolution:
    """Solve the assembled system; coefficients are split per element."""
    if sys.rhs is None:
        raise ValueError("system has no right-hand side; call assemble_rhs first")
    x, stats = solve_linear(sys.matrix, sys.rhs, method)
    coeffs = [x[sys.block(k)] for k in range(len(sys.offsets) - 1)]
    return DgSolution(coeffs, stats["residual"], stats)


def evaluate_solution(bs: GopwBasisSet, coeffs: np.ndarray, u1, x, y) -> np.ndarray:
    """``u_h = u1 + sum_j c_j phi_j`` on one element at points ``(x, y)``."""
    out = bs.evaluate(x, y, derivatives=False) @ coeffs
    if u1 is not None:
        out = out + u1.value(x, y)
    return out
