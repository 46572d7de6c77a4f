import csv
import io
import math

import numpy as np
import pytest

from gopw.bench import cli
from gopw.bench.experiments import (
    Example2Geometry,
    constant_sanity,
    example1,
    example2,
    example2_phases,
    make_experiment,
)
from gopw.bench.studies import (
    CSV_COLUMNS,
    StudyResult,
    StudyRow,
    airy_wave,
    default_q,
    fitted_order,
    pollution_index,
    relative_l2_error,
    run_h_study,
    run_oracle_study,
    run_pollution_study,
    run_single,
)
from gopw.coeff import GradientField
from gopw.mesh import build_mesh

sp = pytest.importorskip("sympy")
X, Y = sp.symbols("x y", real=True)


def symbolic_u(name, omega):
    """Exact solutions written out independently in sympy."""
    I = sp.I
    if name == "example1":
        c = sp.Rational(4, 3) * (1 - sp.Rational(1, 8) * sp.exp(-32 * ((X - sp.Rational(1, 2)) ** 2
                                                                         + (Y - sp.Rational(1, 2)) ** 2)))
        return c * sp.exp(I * omega * X * Y), 1 / c**2
    G = (sp.Rational(1, 10), -sp.Rational(2, 10))
    r0 = (-sp.Rational(1, 10), -sp.Rational(1, 10))
    g2 = G[0] ** 2 + G[1] ** 2
    rx, ry = X - r0[0], Y - r0[1]
    cbar = 1 + G[0] * rx + G[1] * ry
    phis = []
    for j in (1, 2):
        sigma = sp.sqrt(2 * (cbar + (-1) ** j * sp.sqrt(cbar**2 - g2 * (rx**2 + ry**2)))) / sp.sqrt(g2)
        phis.append(cbar * sigma - g2 / 6 * sigma**3)
    u = sp.exp(I * omega * phis[0]) / (X * Y + I) + sp.exp(I * omega * phis[1]) / (X**2 + Y**2 + I)
    return u, 1 + 2 * (G[0] * rx + G[1] * ry)


@pytest.mark.parametrize("name,make", [("example1", example1), ("example2", example2)])
@pytest.mark.parametrize("omega", [16.0, 64.0])
def test_experiment_self_consistency(name, make, omega):
    exp = make(omega)
    u, xi = symbolic_u(name, omega)
    ux, uy = sp.diff(u, X), sp.diff(u, Y)
    f = -(sp.diff(u, X, 2) + sp.diff(u, Y, 2)) - omega**2 * xi * u
    fns = {k: sp.lambdify((X, Y), e, "numpy") for k, e in
           {"u": u, "ux": ux, "uy": uy, "f": f, "xi": xi}.items()}
    rng = np.random.default_rng(11)
    x, y = rng.uniform(0, 1, (2, 100))
    assert np.allclose(exp.field.value(x, y), fns["xi"](x, y), rtol=1e-14)

    def rel(a, b):
        return np.max(np.abs(a - b)) / np.max(np.abs(b))

    assert rel(exp.value(x, y), fns["u"](x, y)) <= 1e-12
    gx, gy = exp.gradient(x, y)
    assert rel(gx, fns["ux"](x, y)) <= 1e-10 and rel(gy, fns["uy"](x, y)) <= 1e-10
    assert rel(exp.f(x, y), fns["f"](x, y)) <= 1e-8
    nx, ny = np.cos(2 * np.pi * x), np.sin(2 * np.pi * x)
    g_ref = fns["ux"](x, y) * nx + fns["uy"](x, y) * ny + 1j * omega * fns["u"](x, y)
    assert rel(exp.g(x, y, nx, ny), g_ref) <= 1e-8


def test_constant_sanity_is_homogeneous():
    exp = constant_sanity(8.0)
    x, y = np.random.default_rng(0).uniform(0, 1, (2, 50))
    assert np.max(np.abs(exp.f(x, y))) <= 1e-12 * 64
    assert make_experiment("constant", 8.0).name == "constant_sanity"
    with pytest.raises(ValueError):
        make_experiment("3", 8.0)


def test_example2_geometry_values():
    geo = Example2Geometry()
    assert geo.g2 == pytest.approx(0.05, abs=1e-17)
    G, r0 = np.array(geo.G0), np.array(geo.r0)
    assert geo.c0 + G @ (np.zeros(2) - r0) == pytest.approx(0.99, abs=1e-15)
    phi1, phi2 = example2_phases((0.0, 0.0))
    assert phi1 == pytest.approx(0.14070, abs=5e-5)
    assert phi2 == pytest.approx(2.9379, abs=5e-4)


def test_example2_phases_solve_eikonal():
    field = GradientField()
    exp_parts = example2(1.0)
    x, y = np.random.default_rng(3).uniform(0, 1, (2, 100))
    from gopw.bench.experiments import _example2_parts

    for j in (1, 2):
        _, (px, py), _ = _example2_parts(x, y, j, Example2Geometry())
        assert np.max(np.abs(px**2 + py**2 - field.value(x, y)) / field.value(x, y)) <= 1e-8
    assert exp_parts.field.value(0.0, 0.0) == pytest.approx(0.98)


def test_example2_negative_discriminant():
    with pytest.raises(ValueError):
        example2_phases((5.9, 2.9))


def test_airy_wave_is_homogeneous_solution():
    omega, h = 16.0, 1e-4
    u = airy_wave(omega)
    field = GradientField()
    x, y = np.random.default_rng(5).uniform(0.2, 0.8, (2, 20))
    lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / h**2
    res = lap + omega**2 * field.value(x, y) * u(x, y)
    assert np.max(np.abs(res)) <= 1e-4 * omega**2 * np.max(np.abs(u(x, y)))


# metrics ----------------------------------------------------------------------

def test_relative_l2_error_trivial_cases():
    mesh = build_mesh(3)
    exp = example1(8.0)

    class Exact:
        def __init__(self, fn):
            self.value = fn

    u1 = [Exact(exp.value) for _ in mesh.elements]
    assert relative_l2_error(mesh, None, None, u1, exp.value, 10) <= 1e-15
    assert relative_l2_error(mesh, None, None, None, exp.value, 10) == pytest.approx(1.0, abs=1e-15)


def test_constant_sanity_end_to_end_error():
    res = run_single("constant", 8.0, 4, 5, 3, 2, q=1)
    assert res.err <= 1e-8


def test_order_and_delta_helpers():
    hs = [1 / 8, 1 / 16, 1 / 32]
    errs = [3e-2 * h**5 / hs[0] ** 5 for h in hs]
    assert fitted_order(hs, errs) == pytest.approx(5.0, abs=1e-12)
    assert pollution_index(1e-3, 2e-3, 16.0, 32.0) == pytest.approx(1.0, abs=1e-15)


def test_default_q():
    assert default_q(5, 5, 32.0, 1 / 32, 2) == 1
    assert default_q(9, 4, 32.0, 1 / 32, 1) == 2


# CSV --------------------------------------------------------------------------

def test_csv_format():
    rows = [StudyRow(32.0, 1 / 8, 5, 1, 5, 2, 640, 2.0123456789e-2, None, None, None),
            StudyRow(32.0, 1 / 16, 5, 1, 5, 2, 2560, 6.38e-4, 4.97895, None, 1.5)]
    text = StudyResult(rows).to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "3.20000e+01,1.25000e-01,5,1,5,2,640,2.01235e-02,,,"
    assert lines[2] == "3.20000e+01,6.25000e-02,5,1,5,2,2560,6.38000e-04,4.97895e+00,,1.50000e+00"


def test_h_study_order_column_and_stream(tmp_path):
    out = tmp_path / "h.csv"
    cfg = dict(example="constant", omega=8.0, nxs=[2, 4], p=5, m=3, case=2, q=1, timing=False)
    res = run_h_study(cfg, out)
    assert out.read_text() == res.to_csv()
    r0, r1 = res.rows
    assert r0.order is None
    expect = math.log(r0.err / r1.err) / math.log(r0.h / r1.h)
    assert abs(r1.order - expect) <= 1e-12 * abs(expect)
    assert all(r.wall_time_s is None for r in res.rows)


def test_pollution_study_delta_and_failures(tmp_path):
    cfg = dict(example="constant", omegas=[4.0, 8.0], omega_h=1.0, p=5, m=3, case=2, q=1, timing=True)
    res = run_pollution_study(cfg)
    assert [r.h for r in res.rows] == [1 / 4, 1 / 8]
    a, b = res.rows
    assert b.delta == pytest.approx(pollution_index(a.err, b.err, 4.0, 8.0), rel=1e-12)
    assert a.wall_time_s > 0
    # a failing row is recorded and the study continues
    bad = dict(cfg, example="1", q=None, m=-1)
    res = run_pollution_study(bad)
    assert all(r.failure for r in res.rows) and all(math.isnan(r.err) for r in res.rows)


def test_oracle_study_rows():
    cfg = dict(omegas=[8.0, 16.0], omega_h=1.0, p=5, q=1, case=2, timing=False, target="airy")
    res = run_oracle_study(cfg)
    assert len(res.rows) == 2 and res.rows[1].order is not None and res.rows[0].dofs == 10


# CLI --------------------------------------------------------------------------

def test_parse_number_and_config(tmp_path):
    assert cli.parse_number("1/8") == 0.125
    assert cli.parse_number(" 2e-3 ") == 0.002
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# study\nexample = 2\nomega = 32\nh = 1/8, 1/16 1/32\np = 5\nno-timing = yes\n")
    out = cli.parse_config(cfg)
    assert out == {"example": "2", "omega": [32.0], "h": [0.125, 0.0625, 0.03125], "p": 5, "no_timing": True}
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(ValueError):
        cli.parse_config(bad)
    bad.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        cli.parse_config(bad)


def test_cli_single_run_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("example = constant\nomega = 8\nnx = 2\np = 5\nq = 1\nm = 3\nno_timing = true\n")
    out = tmp_path / "single.csv"
    assert cli.main(["single-run", "--config", str(cfg), "--nx", "4", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1
    assert float(rows[0]["h"]) == 0.25 and rows[0]["wall_time_s"] == "" and rows[0]["dofs"] == "160"
    assert float(rows[0]["err"]) < 1e-8
    assert cli.main(["h-study", "--example", "constant", "--omega", "8", "--h", "1/2", "1/4",
                     "--q", "1", "--m", "3", "--no-timing"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS) and len(text.splitlines()) == 3


def test_cli_errors(capsys):
    with pytest.raises(SystemExit):
        cli.main(["h-study", "--example", "constant", "--h", "1/2"])
    with pytest.raises(SystemExit):
        cli.main(["h-study", "--example", "constant", "--omega", "8"])
    with pytest.raises(SystemExit):
        cli.main(["bogus"])


def test_cli_reports_failed_rows(capsys):
    code = cli.main(["pollution-study", "--example", "1", "--omega", "4", "--m", "-1", "--no-timing"])
    assert code == 1
    assert "failed" in capsys.readouterr().err


def test_cli_oracle_study(capsys):
    assert cli.main(["oracle-study", "--omega", "16", "--h", "1/16", "1/32", "--p", "5", "--q", "1",
                     "--target", "airy", "--no-timing"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and float(lines[2].split(",")[8]) > 4.0
