import json

import numpy as np
import pytest
import scipy.linalg

from trisplit.duhamel import (
    ConditionViolated,
    ErrorReport,
    Propagator,
    QuadratureSpec,
    ToleranceNotReached,
    build_error_report,
    duhamel_error,
    error_bound,
    w_integral,
    z_integral,
)
from trisplit.matrix_core import (
    commutator,
    expm,
    op_norm,
    random_skew_hermitian,
    solve_second_order_constraint,
)
from trisplit.splitting import triple_splitting_error


def constrained_triple(dim, seed):
    p1 = random_skew_hermitian(dim, seed=seed)
    p2 = random_skew_hermitian(dim, seed=seed + 1000)
    return p1, p2, solve_second_order_constraint(p1, p2)


def direct_bracket(p, q, t):
    """[e^{tP}, Q] evaluated directly, no quadrature."""
    u = expm(p, t)
    return u @ q - q @ u


# --- quadrature plumbing ------------------------------------------------------


def test_quadrature_spec_validation():
    QuadratureSpec()  # defaults are legal
    with pytest.raises(ValueError):
        QuadratureSpec(gauss_order=1)
    with pytest.raises(ValueError):
        QuadratureSpec(panels=0)
    with pytest.raises(ValueError):
        QuadratureSpec(target_tol=0.0)


def test_propagator_skew_path_matches_scipy():
    m = random_skew_hermitian(6, seed=40)
    prop = Propagator(m)
    for s in (0.0, 0.3, -1.7):
        assert op_norm(prop(s) - scipy.linalg.expm(s * m)) <= 1e-12


def test_propagator_general_path():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])  # nilpotent, not skew-Hermitian
    prop = Propagator(m)
    assert np.allclose(prop(2.0), np.array([[1.0, 2.0], [0.0, 1.0]]), atol=1e-14)
    # repeated calls hit the cache and return the same object
    assert prop(2.0) is prop(2.0)


# --- the commutator-with-exponential integral ---------------------------------


def test_z_integral_matches_direct_commutator():
    p = random_skew_hermitian(4, seed=50)
    q = random_skew_hermitian(4, seed=51)
    for t in (0.1, 1.0):
        direct = direct_bracket(p, q, t)
        for side in ("left", "right"):
            z = z_integral(p, q, t, side=side)
            assert op_norm(z - direct) <= 1e-12 * max(1.0, op_norm(direct))


def test_z_integral_zero_cases():
    p = random_skew_hermitian(4, seed=52)
    q = random_skew_hermitian(4, seed=53)
    assert op_norm(z_integral(p, q, 0.0)) == 0.0
    # commuting pair: the bracket kernel vanishes identically
    d1 = np.diag([1j, 2j, -1j])
    d2 = np.diag([0.5j, 0.5j, 1j])
    assert op_norm(z_integral(d1, d2, 0.7)) <= 1e-14


def test_z_integral_side_validation():
    p = random_skew_hermitian(2, seed=54)
    with pytest.raises(ValueError):
        z_integral(p, p, 0.5, side="middle")


def test_z_integral_unconverged_quadrature_raises():
    p = random_skew_hermitian(4, seed=55) * 3.0
    q = random_skew_hermitian(4, seed=56)
    with pytest.raises(ToleranceNotReached):
        z_integral(p, q, 1.0, quad=QuadratureSpec(gauss_order=2, target_tol=1e-30))


# --- the W kernel ---------------------------------------------------------------


def test_w_integral_forms_agree_for_any_triple():
    # the two forms are an unconditional identity; use an unconstrained triple
    p1, p2, p3 = (random_skew_hermitian(4, seed=s) for s in (60, 61, 62))
    for tau in (0.2, 0.9):
        a = w_integral(p1, p2, p3, tau, form="double_integral")
        b = w_integral(p1, p2, p3, tau, form="defining")
        assert op_norm(a - b) <= 1e-10 * max(1.0, op_norm(a))


def test_w_integral_zero_cases():
    p1, p2, p3 = (random_skew_hermitian(3, seed=s) for s in (63, 64, 65))
    assert op_norm(w_integral(p1, p2, p3, 0.0)) == 0.0
    # [P2,P3] = 0 kills both kernels
    d2 = np.diag([1j, -1j, 2j])
    d3 = np.diag([2j, 1j, 1j])
    for form in ("double_integral", "defining"):
        assert op_norm(w_integral(p1, d2, d3, 0.5, form=form)) <= 1e-13


def test_w_integral_form_validation():
    p = random_skew_hermitian(2, seed=66)
    with pytest.raises(ValueError):
        w_integral(p, p, p, 0.5, form="triple_integral")


# --- the exact error representation ---------------------------------------------


def test_duhamel_error_requires_the_condition():
    p1, p2, p3 = (random_skew_hermitian(4, seed=s) for s in (70, 71, 72))
    with pytest.raises(ConditionViolated):
        duhamel_error(p1, p2, p3, 0.5)


def test_duhamel_error_reproduces_measured_error():
    p1, p2, p3 = constrained_triple(4, seed=73)
    for t in (0.25, 0.5):
        represented = duhamel_error(p1, p2, p3, t)
        measured = triple_splitting_error(p1, p2, p3, t)
        assert op_norm(represented - measured) <= 1e-8


def test_duhamel_error_cubic_scaling():
    p1, p2, p3 = constrained_triple(4, seed=74)
    norms = [op_norm(duhamel_error(p1, p2, p3, t)) for t in (0.2, 0.1, 0.05)]
    assert norms[0] / norms[1] == pytest.approx(8.0, rel=0.1)
    assert norms[1] / norms[2] == pytest.approx(8.0, rel=0.1)


def test_panel_doubling_reduces_discrepancy():
    # with refinement disabled, a deliberately coarse rule improves as the
    # panel count is doubled by hand
    p1, p2, p3 = constrained_triple(4, seed=75)
    t = 0.5
    measured = triple_splitting_error(p1, p2, p3, t)
    gaps = []
    for panels in (1, 2, 4):
        quad = QuadratureSpec(gauss_order=2, panels=panels)
        rep = duhamel_error(p1, p2, p3, t, quad=quad, refine=False)
        gaps.append(op_norm(rep - measured))
    assert gaps[1] < gaps[0] or gaps[0] <= 1e-11
    assert gaps[2] < gaps[1] or gaps[1] <= 1e-11


# --- the a-priori bound -----------------------------------------------------------


def test_error_bound_value():
    p1, p2, p3 = (random_skew_hermitian(5, seed=s) for s in (80, 81, 82))
    t = 0.7
    k1 = commutator(p1, commutator(p2, p3))
    k2 = commutator(p2, commutator(p2, p3))
    expected = abs(t) ** 3 / 6.0 * (op_norm(k1) + op_norm(k2))
    assert error_bound(p1, p2, p3, t) == pytest.approx(expected, rel=1e-12)
    # doubling t scales the bound by exactly 8
    assert error_bound(p1, p2, p3, 2 * t) == pytest.approx(8 * expected, rel=1e-12)


def test_error_bound_zero_for_commuting_family():
    d = [np.diag([1j, 2j]), np.diag([-1j, 1j]), np.diag([0.5j, 0.5j])]
    assert error_bound(*d, 1.0) == 0.0


def test_bound_dominates_measured_error():
    for seed in (83, 84, 85):
        p1, p2, p3 = constrained_triple(5, seed=seed)
        for t in (0.1, 0.5):
            measured = op_norm(triple_splitting_error(p1, p2, p3, t))
            assert measured <= error_bound(p1, p2, p3, t) + 1e-9


# --- report objects -----------------------------------------------------------------


def test_error_report_json_roundtrip():
    report = ErrorReport(
        measured_error_norm=0.25,
        duhamel_norm=0.2500001,
        bound_value=0.5,
        sign_factor=1,
        discrepancy=1e-7,
    )
    payload = json.loads(report.to_json())
    assert set(payload) == {
        "measured_error_norm",
        "duhamel_norm",
        "bound_value",
        "sign_factor",
        "discrepancy",
    }
    assert ErrorReport.from_json(report.to_json()) == report


def test_error_report_sign_validation():
    with pytest.raises(ValueError):
        ErrorReport(0.1, 0.1, 0.2, sign_factor=0, discrepancy=0.0)


def test_build_error_report_end_to_end():
    p1, p2, p3 = constrained_triple(4, seed=86)
    report = build_error_report(p1, p2, p3, 0.25)
    assert report.sign_factor in (1, -1)
    assert report.discrepancy <= 1e-8
    assert report.measured_error_norm <= report.bound_value + 1e-9
    # re-using the calibrated sign must reproduce the same discrepancy
    again = build_error_report(p1, p2, p3, 0.25, sign_factor=report.sign_factor)
    assert again.discrepancy == pytest.approx(report.discrepancy, abs=1e-15)
