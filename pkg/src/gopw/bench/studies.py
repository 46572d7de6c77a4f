"""Full-pipeline runs, convergence and pollution studies, CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..basis import approximation_oracle, build_space, select_q
from ..dg import DgParameters, assemble, assemble_rhs, evaluate_solution, solve
from ..local import solve_all_local
from ..mesh import build_mesh
from ..quad import default_points, rect_rule
from .experiments import Experiment, example2_phases, make_experiment

__all__ = [
    "CSV_COLUMNS",
    "RunResult",
    "airy_wave",
    "example2_wave",
    "StudyResult",
    "StudyRow",
    "default_q",
    "fitted_order",
    "pollution_index",
    "relative_l2_error",
    "run_h_study",
    "run_oracle_study",
    "run_pollution_study",
    "run_row",
    "run_single",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("omega", "h", "p", "q", "m", "case", "dofs", "err", "order", "delta", "wall_time_s")


@dataclass
class StudyRow:
    omega: float
    h: float
    p: int
    q: int
    m: Optional[int]
    case: int
    dofs: Optional[int] = None
    err: Optional[float] = None
    order: Optional[float] = None
    delta: Optional[float] = None
    wall_time_s: Optional[float] = None
    failure: Optional[str] = None  # not written to CSV

    def csv_fields(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, (bool, np.bool_)):
                out.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(f"{float(v):.5e}")
        return out


@dataclass
class StudyResult:
    rows: list = field(default_factory=list)

    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.err is None else r.err for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class _CsvStream:
    """Writes the header once and each row as it completes."""

    def __init__(self, path):
        self.fh = open(path, "w", newline="") if path else None
        if self.fh:
            self.writer = csv.writer(self.fh, lineterminator="\n")
            self.writer.writerow(CSV_COLUMNS)
            self.fh.flush()

    def write(self, row: StudyRow):
        if self.fh:
            self.writer.writerow(row.csv_fields())
            self.fh.flush()

    def close(self):
        if self.fh:
            self.fh.close()


def fitted_order(hs: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    return float(np.polyfit(np.log(np.asarray(hs, float)), np.log(np.asarray(errs, float)), 1)[0])


def pollution_index(err1: float, err2: float, omega1: float, omega2: float) -> float:
    """``delta = log(err2 / err1) / log(omega2 / omega1)``."""
    return math.log(err2 / err1) / math.log(omega2 / omega1)


def default_q(p: int, m: int, omega: float, h: float, case: int) -> int:
    """q from the DG estimate with the largest admissible regularity index s."""
    n = (p - 1) // 2
    s = min(m + 1, n + 1) if case == 1 else min(m + 1, 2 * n + 1)
    return select_q(n, omega, h, case, mode="dg", s=s)


@dataclass
class RunResult:
    err: float
    dofs: int
    q: int
    n_1d: int
    stats: dict
    mesh: object = field(repr=False, default=None)
    spaces: list = field(repr=False, default=None)
    u1: list = field(repr=False, default=None)
    coeffs: list = field(repr=False, default=None)


def relative_l2_error(mesh, spaces, coeffs, u1, exact: Callable, n_1d: int) -> float:
    """``||u_ex - (u1 + u2)||_{L2} / ||u_ex||_{L2}`` by element-wise tensor quadrature.

    ``coeffs`` may be ``None`` (``u2 = 0``) and ``u1`` may be ``None``.
    """
    num = den = 0.0
    for k, el in enumerate(mesh.elements):
        x, y, w = rect_rule(el, n_1d)
        ue = exact(x, y)
        uh = np.zeros_like(ue, dtype=complex)
        if coeffs is not None:
            uh = evaluate_solution(spaces[k], coeffs[k], None, x, y)
        if u1 is not None and u1[k] is not None:
            uh = uh + u1[k].value(x, y)
        num += float(np.sum(w * np.abs(ue - uh) ** 2))
        den += float(np.sum(w * np.abs(ue) ** 2))
    return math.sqrt(num / den)


def run_single(example, omega: float, nx: int, p: int, m: int, case: int, q: Optional[int] = None,
               quad_points: Optional[int] = None, threads: int = 1,
               params: DgParameters = DgParameters()) -> RunResult:
    """Mesh, local solves, GOPW spaces, DG solve and relative L2 error for one configuration."""
    ex = example if isinstance(example, Experiment) else make_experiment(example, omega)
    mesh = build_mesh(nx)
    h = mesh.h
    if q is None:
        q = default_q(p, m, omega, h, case)
    t0 = time.perf_counter()
    spaces = [build_space(ex.field, el, p, q, case, omega, element_id=el.id) for el in mesh.elements]
    t1 = time.perf_counter()
    u1 = solve_all_local(mesh, ex.field, ex.f, m, omega, threads)
    t2 = time.perf_counter()
    n_1d = quad_points or default_points(omega, h, q, m)
    system = assemble(mesh, spaces, ex.field, omega, params, eta=ex.eta, n_1d=n_1d, threads=threads)
    system.rhs = assemble_rhs(mesh, spaces, u1, ex.f, ex.g, ex.field, omega, params, eta=ex.eta,
                              n_1d=n_1d, threads=threads)
    t3 = time.perf_counter()
    sol = solve(system)
    t4 = time.perf_counter()
    err = relative_l2_error(mesh, spaces, sol.coeffs, u1, ex.value, n_1d)
    stats = dict(sol.stats)
    stats.update(spaces_s=t1 - t0, local_s=t2 - t1, assembly_s=t3 - t2, solve_s=t4 - t3,
                 local_residual=max(s.residual for s in u1))
    return RunResult(err, system.n_dofs, q, n_1d, stats, mesh, spaces, u1, sol.coeffs)


def run_row(cfg: dict, omega: float, nx: int, timing: bool) -> StudyRow:
    h = 1.0 / nx
    row = StudyRow(omega, h, cfg["p"], cfg.get("q"), cfg["m"], cfg["case"])
    t0 = time.perf_counter()
    try:
        res = run_single(cfg["example"], omega, nx, cfg["p"], cfg["m"], cfg["case"], cfg.get("q"),
                         cfg.get("quad_points"), cfg.get("threads", 1))
        row.q, row.dofs, row.err = res.q, res.dofs, res.err
        if res.stats["residual"] > 1e-9:
            logger.warning("solver residual %.2e at omega=%g, h=%g", res.stats["residual"], omega, h)
    except Exception as exc:  # recorded per row; the study carries on
        logger.error("row omega=%g h=%g failed: %s", omega, h, exc)
        row.failure = f"{type(exc).__name__}: {exc}"
        row.err = math.nan
    if timing:
        row.wall_time_s = time.perf_counter() - t0
    return row


def _nx_from_h(h: float) -> int:
    nx = round(1.0 / h)
    if not math.isclose(nx * h, 1.0, rel_tol=1e-9):
        raise ValueError(f"h = {h} does not divide the unit square")
    return int(nx)


def run_h_study(cfg: dict, out=None) -> StudyResult:
    """Fixed omega, decreasing h. ``cfg`` keys: example, omega, hs (or nxs), p, m, case, q, quad_points, threads, timing."""
    nxs = cfg.get("nxs") or [_nx_from_h(h) for h in cfg["hs"]]
    omega = float(cfg["omega"])
    result = StudyResult()
    stream = _CsvStream(out)
    try:
        for nx in nxs:
            row = run_row(cfg, omega, nx, cfg.get("timing", True))
            if result.rows:
                prev = result.rows[-1]
                if _finite(prev.err) and _finite(row.err) and row.err > 0 and prev.err > 0:
                    row.order = math.log(prev.err / row.err) / math.log(prev.h / row.h)
            result.rows.append(row)
            stream.write(row)
    finally:
        stream.close()
    return result


def run_pollution_study(cfg: dict, out=None) -> StudyResult:
    """Fixed ``omega h``, increasing omega. ``cfg`` keys as for :func:`run_h_study` plus omegas, omega_h."""
    omega_h = float(cfg.get("omega_h", 1.0))
    result = StudyResult()
    stream = _CsvStream(out)
    try:
        for omega in cfg["omegas"]:
            nx = _nx_from_h(omega_h / float(omega))
            row = run_row(cfg, float(omega), nx, cfg.get("timing", True))
            if result.rows:
                prev = result.rows[-1]
                if _finite(prev.err) and _finite(row.err) and row.err > 0 and prev.err > 0:
                    row.delta = pollution_index(prev.err, row.err, prev.omega, row.omega)
            result.rows.append(row)
            stream.write(row)
    finally:
        stream.close()
    return result


def _finite(v) -> bool:
    return v is not None and math.isfinite(v)


def example2_wave(omega: float) -> Callable:
    """``exp(i omega phi_1)`` of Example 2 (vectorized)."""
    return lambda x, y: np.exp(1j * omega * example2_phases((x, y))[0])


def airy_wave(omega: float, beta: float = 0.6) -> Callable:
    """Homogeneous solution of the Example 2 medium: an Airy profile along G0 times a plane wave across it.

    With ``xi = c0^2 + 2 |G0| t`` (``t`` the coordinate along ``G0``), the
    function ``Ai(-(2|G0| omega^2)^{1/3} (t + (c0^2 - beta^2) / (2|G0|))) exp(i omega beta s)``
    solves ``lap u + omega^2 xi u = 0`` exactly.
    """
    from scipy.special import airy

    G = np.array([0.1, -0.2])
    r0 = np.array([-0.1, -0.1])
    g = float(np.linalg.norm(G))
    gh = G / g
    gp = np.array([-gh[1], gh[0]])

    def u(x, y):
        t = gh[0] * (x - r0[0]) + gh[1] * (y - r0[1])
        s = gp[0] * (x - r0[0]) + gp[1] * (y - r0[1])
        z = -((2.0 * g * omega**2) ** (1.0 / 3.0)) * (t + (1.0 - beta**2) / (2.0 * g))
        return airy(z)[0] * np.exp(1j * omega * beta * s)

    return u


def run_oracle_study(cfg: dict, out=None) -> StudyResult:
    """Single-element least-squares fits on the element centred at ``center`` (default (1/2, 1/2)).

    ``cfg`` keys: omegas and omega_h (fixed omega h) or omega and hs (fixed
    omega); p, q, case; target ``phi1`` (exp(i omega phi_1), default) or
    ``airy``. ``err`` is the sampled relative L-infinity error, ``order``
    the slope against the previous row's h.
    """
    from ..coeff import GradientField

    field_ = GradientField()
    cx, cy = cfg.get("center", (0.5, 0.5))
    target = cfg.get("target", "phi1")
    if "omegas" in cfg and cfg["omegas"]:
        pairs = [(float(w), float(cfg.get("omega_h", 1.0)) / float(w)) for w in cfg["omegas"]]
    else:
        pairs = [(float(cfg["omega"]), float(h)) for h in cfg["hs"]]
    result = StudyResult()
    stream = _CsvStream(out)
    try:
        for omega, h in pairs:
            t0 = time.perf_counter()
            q = cfg.get("q") or select_q((cfg["p"] - 1) // 2, omega, h, cfg["case"])
            row = StudyRow(omega, h, cfg["p"], q, None, cfg["case"])
            K = (cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2)
            u = airy_wave(omega) if target == "airy" else example2_wave(omega)
            res = approximation_oracle(field_, K, u, cfg["p"], q, cfg["case"], omega)
            row.dofs = len(res["coeffs"])
            row.err = res["rel_linf_error"]
            if result.rows and result.rows[-1].err:
                prev = result.rows[-1]
                row.order = math.log(prev.err / row.err) / math.log(prev.h / row.h)
            if cfg.get("timing", True):
                row.wall_time_s = time.perf_counter() - t0
            result.rows.append(row)
            stream.write(row)
    finally:
        stream.close()
    return result

