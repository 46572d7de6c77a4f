import math

import numpy as np
import pytest

from gopw.amplitude import (
    AmplitudeConstructionError,
    build_amplitude,
    build_amplitude_recursive,
    build_amplitude_smallq,
    parts_gram,
    terminal_index,
    transport_orders,
    transport_residual,
)
from gopw.coeff import ConstantField, GaussianLensField, GradientField
from gopw.phase import build_phase, sample_grid
from gopw.poly import m

HS = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
R0 = (0.3, 0.6)
FIELDS = [GradientField(), GaussianLensField()]
FIELD_IDS = ["gradient", "lens"]


def box(r0, h):
    return (r0[0] - h / 2, r0[0] + h / 2, r0[1] - h / 2, r0[1] + h / 2)


def slope(hs, vals):
    return float(np.polyfit(np.log(hs), np.log(vals), 1)[0])


def first_order_transport(phase, a, K):
    """max |2 grad a . grad tau + a lap tau| for a real single-part amplitude."""
    x, y = sample_grid(K, 33)
    ax, ay = a.diff(0), a.diff(1)
    v = 2 * (ax(x, y) * phase.tau_x(x, y) + ay(x, y) * phase.tau_y(x, y)) + a(x, y) * phase.tau_lap(x, y)
    return float(np.max(np.abs(v)))


def test_terminal_index_and_orders():
    assert terminal_index(3, 1) == 1 and terminal_index(3, 2) == 2
    with pytest.raises(ValueError):
        terminal_index(1, 1)
    assert transport_orders(4, 2) == ([4, 3], 2)
    # at omega h = 1 the q^2 factor pushes each order one above q + 1 - s;
    # the construction clamps to the available degree
    assert transport_orders(4, 2, omega=32.0, h=1 / 32) == ([5, 4], 3)


def test_constant_field_smallq_case2_closed_form():
    theta = 0.7
    ph = build_phase(ConstantField(1.0), R0, theta, 1)
    a1, a2 = build_amplitude(ph, 2)
    assert np.allclose(a1.parts[0].coeffs, [1, 0, 0, 0, 0, 0], atol=1e-14)
    d_perp = np.array([-math.sin(theta), math.cos(theta)])
    diff = a2.parts[0].coeffs - a1.parts[0].coeffs
    # second member is 1 + c d_perp . (r - r0) with c > 0
    c = diff[1:3] @ d_perp
    assert c > 0
    assert np.allclose(diff[1:3], c * d_perp, atol=1e-14)
    assert np.allclose(diff[3:], 0, atol=1e-14) and abs(diff[0]) <= 1e-15


@pytest.mark.parametrize("q", [3, 4, 5])
def test_constant_field_recursive_case1(q):
    ph = build_phase(ConstantField(2.0), R0, 1.3, q)
    (a,) = build_amplitude(ph, 1, omega=20.0, h=0.05)
    assert np.allclose(a.parts[0].coeffs, np.eye(m(q + 1))[0], atol=1e-13)
    for part in a.parts[1:]:
        assert np.allclose(part.coeffs, 0, atol=1e-13)


@pytest.mark.parametrize("field", FIELDS, ids=FIELD_IDS)
@pytest.mark.parametrize("case,q", [(2, 1), (1, 2), (2, 2), (1, 3), (2, 3), (1, 4)])
def test_structure_invariants(field, case, q):
    rng = np.random.default_rng(10 * case + q)
    for _ in range(5):
        r0 = rng.uniform(0, 1, 2)
        ph = build_phase(field, r0, rng.uniform(0, 2 * math.pi), q)
        omega = 24.0
        amps = build_amplitude(ph, case, omega=omega, h=1 / omega)
        assert len(amps) == case
        n_q = terminal_index(q, case)
        for a in amps:
            assert len(a.parts) == n_q + 1
            for s, part in enumerate(a.parts):
                assert part.degree == q + 1 - s
                assert np.isrealobj(part.coeffs)
            assert a.value_at_center() == pytest.approx(1.0, abs=1e-12)
            lap = a.parts[-1].laplacian().coeffs
            assert np.max(np.abs(lap)) <= 1e-10 * max(1.0, np.max(np.abs(a.parts[-1].coeffs)))


@pytest.mark.parametrize("field", FIELDS, ids=FIELD_IDS)
@pytest.mark.parametrize("case,q", [(2, 1), (1, 2), (2, 2), (1, 3), (2, 3)])
def test_nullity_at_random_barycenters(field, case, q):
    rng = np.random.default_rng(7)
    for _ in range(20):
        r0 = rng.uniform(0, 1, 2)
        ph = build_phase(field, r0, rng.uniform(0, 2 * math.pi), q)
        amps = build_amplitude(ph, case)
        assert amps[0].null_dim == case


@pytest.mark.parametrize("field", FIELDS, ids=FIELD_IDS)
@pytest.mark.parametrize("q", [1, 2])
def test_case2_gram_condition(field, q):
    rng = np.random.default_rng(3)
    for _ in range(20):
        r0 = rng.uniform(0, 1, 2)
        ph = build_phase(field, r0, rng.uniform(0, 2 * math.pi), q)
        assert np.linalg.cond(parts_gram(build_amplitude(ph, 2))) < 1e6


@pytest.mark.xfail(strict=True, reason="lens q=3 amplitudes are ill-conditioned where grad xi is small; see notes")
def test_case2_gram_condition_lens_q3():
    rng = np.random.default_rng(3)
    conds = []
    for _ in range(20):
        r0 = rng.uniform(0, 1, 2)
        ph = build_phase(GaussianLensField(), r0, rng.uniform(0, 2 * math.pi), 3)
        conds.append(np.linalg.cond(parts_gram(build_amplitude(ph, 2))))
    assert max(conds) < 1e6


def test_gradient_field_case2_q1_transport_slope():
    field = GradientField()
    ph = build_phase(field, R0, 0.4, 1)
    amps = build_amplitude(ph, 2)
    for a in amps:
        res = [first_order_transport(ph, a.parts[0], box(R0, h)) for h in HS]
        assert slope(HS, res) >= 1.7


@pytest.mark.parametrize("field", FIELDS, ids=FIELD_IDS)
@pytest.mark.parametrize("case,q", [(2, 1), (1, 2), (2, 2), (1, 3), (2, 3)])
def test_full_transport_residual_slope(field, case, q):
    # fixed omega h = 1
    res = []
    for h in HS:
        omega = 1.0 / h
        ph = build_phase(field, R0, 0.4, q)
        amps = build_amplitude(ph, case, omega=omega, h=h)
        res.append(max(transport_residual(ph, a, omega, box(R0, h)) for a in amps))
    assert slope(HS, res) >= q - 0.3


def test_branch_preconditions():
    ph = build_phase(GradientField(), R0, 0.0, 2)
    with pytest.raises(ValueError):
        build_amplitude_smallq(ph, 1, 2)
    with pytest.raises(ValueError):
        build_amplitude_recursive(ph, 2, 0)


def test_lens_center_case1_q3_reports_inconsistency():
    # grad xi vanishes at the lens center and the harmonic side constraints
    # become incompatible with a(r0) = 1
    ph = build_phase(GaussianLensField(), (0.5, 0.5), 0.4, 3)
    with pytest.raises(AmplitudeConstructionError) as info:
        build_amplitude(ph, 1, omega=16.0, h=1 / 16)
    assert info.value.level == 0
    assert info.value.residual > 0
