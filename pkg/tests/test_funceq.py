import math

import numpy as np
import pytest

from conftest import circle_guiding, rotation_map
from guided_dynamics.errors import (BudgetExceeded, HypothesisFailure,
                                    MapEscape, NotASolution, NotCertified)
from guided_dynamics.exprlang import parse
from guided_dynamics.funceq import (ContractionCertificate,
                                    ContractionFailure, FunceqSystem,
                                    GridFunction, TriangularFamily,
                                    apply_operator, certify_contraction,
                                    check_max_principle, compute_g_n,
                                    solve_neumann,
                                    verify_triangular_uniqueness)
from guided_dynamics.gds import CircleSpace, GuidedSystem, Interval, map_from

IV = Interval(-1.0, 1.0)


def exmplfe_system(tau1=2 * math.pi / 3, tau2=4 * math.pi / 3):
    """f(z) = sin^2(arg z) f(e^{i tau1} z) + cos^2(arg z) f(e^{i tau2} z)."""
    return FunceqSystem(
        CircleSpace(),
        [rotation_map(tau1 / (2 * math.pi), 0),
         rotation_map(tau2 / (2 * math.pi), 1)],
        [parse("sin(t)^2"), parse("cos(t)^2")])


# --------------------------------------------------------------------------
# grid functions
# --------------------------------------------------------------------------

def test_grid_function_roundtrip_csv(tmp_path):
    f = GridFunction.from_callable(IV, 64, lambda t: t ** 3 - t)
    path = tmp_path / "f.csv"
    f.to_csv(path)
    g = GridFunction.from_csv(path)
    assert np.array_equal(f.values, g.values)
    assert g.domain.a == -1.0 and g.domain.b == 1.0


def test_grid_function_clamps_and_errors():
    f = GridFunction.from_callable(IV, 16, lambda t: t)
    assert f.eval(1.0 + 1e-12) == 1.0
    with pytest.raises(Exception):
        f.eval(1.5)


def test_grid_function_circle_wraps():
    circ = CircleSpace()
    f = GridFunction.from_callable(circ, 128, lambda t: np.cos(t))
    assert f.eval(2 * math.pi + 0.3) == pytest.approx(f.eval(0.3), abs=1e-15)


# --------------------------------------------------------------------------
# the operator
# --------------------------------------------------------------------------

def test_apply_operator_linear(quarter_coeff_system):
    f = GridFunction.from_callable(IV, 128, lambda t: t)
    out = apply_operator(quarter_coeff_system, f)
    assert np.max(np.abs(out.values - out.nodes / 4.0)) == 0.0


def test_apply_operator_constant(quarter_coeff_system):
    f = GridFunction.constant(IV, 128, 1.0)
    out = apply_operator(quarter_coeff_system, f)
    assert np.max(np.abs(out.values - 0.5)) == 0.0


def test_apply_operator_quadratic(quarter_coeff_system):
    M = 128
    f = GridFunction.from_callable(IV, M, lambda t: t * t)
    out = apply_operator(quarter_coeff_system, f)
    expected = (out.nodes ** 2 + 1.0) / 8.0
    # images of even nodes are grid nodes (exact); odd nodes interpolate
    assert np.max(np.abs(out.values[::2] - expected[::2])) < 1e-15
    step = 2.0 / M
    assert np.max(np.abs(out.values - expected)) < step ** 2


def test_apply_operator_positivity(quarter_coeff_system):
    rng = np.random.default_rng(3)
    f = GridFunction(IV, rng.uniform(0.0, 1.0, 129))
    out = apply_operator(quarter_coeff_system, f)
    assert np.min(out.values) >= 0.0


def test_operator_norm_matches_g1(quarter_coeff_system):
    # ||A f|| <= ||A 1|| for every ||f|| <= 1 (positive operator norm)
    g1 = compute_g_n(quarter_coeff_system, 1, M=256)
    bound = float(np.max(g1.values))
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        f = GridFunction(IV, rng.uniform(-1.0, 1.0, 257))
        worst = max(worst, apply_operator(quarter_coeff_system, f).sup())
    assert worst <= bound + 1e-12


def test_map_escape_detected(quarter_coeff_system):
    # maps escape at construction time ...
    with pytest.raises(MapEscape):
        FunceqSystem(Interval(0.0, 1.0), [parse("t/2 + 0.75")],
                     [parse("0.5")])
    # ... and at application time when the grid function lives on a
    # smaller domain than the system
    f = GridFunction.from_callable(Interval(-0.25, 0.25), 16, lambda t: t)
    with pytest.raises(MapEscape):
        apply_operator(quarter_coeff_system, f)


# --------------------------------------------------------------------------
# g_n
# --------------------------------------------------------------------------

def test_g_n_constant_coefficients(quarter_coeff_system):
    assert compute_g_n(quarter_coeff_system, 1, M=64).sup() == 0.5
    assert compute_g_n(quarter_coeff_system, 2, M=64).sup() == 0.25


def test_g_n_sum_one(half_coeff_system):
    for n in (1, 3, 5):
        g = compute_g_n(half_coeff_system, n, M=64)
        assert np.max(np.abs(g.values - 1.0)) < 1e-12


def test_g_n_iterated_vs_explicit_exact_cases(quarter_coeff_system,
                                              half_coeff_system):
    for system in (quarter_coeff_system, half_coeff_system):
        for n in (1, 2, 3):
            it = compute_g_n(system, n, "iterated", M=100)
            ex = compute_g_n(system, n, "explicit", M=100)
            assert np.max(np.abs(it.values - ex.values)) < 1e-12


def test_g_n_iterated_vs_explicit_interpolation_scale(
        quadratic_coeff_system):
    # with a curved coefficient the iterated route pays one interpolation
    # of g_1, so the modes agree at the grid's h^2 scale, not exactly
    M = 100
    it = compute_g_n(quadratic_coeff_system, 2, "iterated", M=M)
    ex = compute_g_n(quadratic_coeff_system, 2, "explicit", M=M)
    gap = np.max(np.abs(it.values - ex.values))
    assert gap < (2.0 / M) ** 2
    it2 = compute_g_n(quadratic_coeff_system, 2, "iterated", M=2 * M)
    ex2 = compute_g_n(quadratic_coeff_system, 2, "explicit", M=2 * M)
    assert np.max(np.abs(it2.values - ex2.values)) < gap


def test_g_n_explicit_budget(quarter_coeff_system):
    with pytest.raises(BudgetExceeded):
        compute_g_n(quarter_coeff_system, 21, "explicit", M=4)


def test_g_n_monotone_when_subunit(quarter_coeff_system,
                                   half_coeff_system,
                                   quadratic_coeff_system):
    for system in (quarter_coeff_system, half_coeff_system,
                   quadratic_coeff_system):
        prev = compute_g_n(system, 0, M=256)
        for n in range(1, 9):
            cur = compute_g_n(system, n, M=256)
            assert np.max(cur.values - prev.values) <= 1e-12
            prev = cur


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------

def test_certificate_quarter(quarter_coeff_system):
    cert = certify_contraction(quarter_coeff_system)
    assert isinstance(cert, ContractionCertificate)
    assert cert.m == 1
    assert cert.norm == 0.5


def test_certificate_failure_half(half_coeff_system):
    out = certify_contraction(half_coeff_system, m_max=64)
    assert isinstance(out, ContractionFailure)
    assert out.norm == pytest.approx(1.0, abs=1e-12)
    assert out.m_max == 64


def test_certificate_quadratic(quadratic_coeff_system):
    cert = certify_contraction(quadratic_coeff_system, m_max=64)
    assert isinstance(cert, ContractionCertificate)
    assert cert.m == 2
    # g_2(+-1) = 3/4 by direct substitution, and that is the sup
    assert cert.norm == pytest.approx(0.75, abs=1e-4)


# --------------------------------------------------------------------------
# Neumann solving
# --------------------------------------------------------------------------

def test_solve_neumann_linear(quarter_coeff_system):
    f, rep = solve_neumann(quarter_coeff_system, parse("t"), tol=1e-13,
                           M=1024)
    assert np.max(np.abs(f.values - (4.0 / 3.0) * f.nodes)) < 1e-10
    assert rep.residual < 1e-10


def test_solve_neumann_trivial(quarter_coeff_system):
    f0, _ = solve_neumann(quarter_coeff_system, parse("0"), M=128)
    assert f0.sup() == 0.0
    f1, _ = solve_neumann(quarter_coeff_system, parse("1"), M=128)
    assert np.max(np.abs(f1.values - 2.0)) < 1e-11


def test_solve_neumann_refuses_uncertified(half_coeff_system):
    with pytest.raises(NotCertified):
        solve_neumann(half_coeff_system, parse("t"), M=64)


def test_solve_neumann_linearity(quarter_coeff_system):
    tol = 1e-12
    f1, _ = solve_neumann(quarter_coeff_system, parse("t"), tol=tol, M=256)
    f2, _ = solve_neumann(quarter_coeff_system, parse("t^2"), tol=tol,
                          M=256)
    f12, _ = solve_neumann(quarter_coeff_system, parse("t + t^2"),
                           tol=tol, M=256)
    assert np.max(np.abs(f12.values - f1.values - f2.values)) <= 10 * tol


def test_solve_neumann_residual_bound(quadratic_coeff_system):
    tol = 1e-11
    f, rep = solve_neumann(quadratic_coeff_system, parse("cos(t)"),
                           tol=tol, M=512)
    assert rep.residual <= 10 * tol


# --------------------------------------------------------------------------
# maximum principle
# --------------------------------------------------------------------------

def test_max_principle_circle_periodic_solution():
    system = exmplfe_system()
    # rotations by 2 pi / 3 shift a (2 pi / 3)-periodic profile onto
    # itself; choose M divisible by 3 so the shifts are node-exact
    f = GridFunction.from_callable(CircleSpace(), 3 * 700,
                                   lambda th: np.cos(3.0 * th))
    verdict = check_max_principle(system, f, tol=1e-9)
    assert verdict.passed
    assert verdict.worst_violation <= 1e-8


def test_max_principle_constant(quarter_coeff_system, half_coeff_system):
    f = GridFunction.constant(IV, 64, 2.5)
    verdict = check_max_principle(half_coeff_system, f, tol=1e-9)
    assert verdict.passed


def test_max_principle_rejects_non_solution():
    system = exmplfe_system()
    f = GridFunction.from_callable(CircleSpace(), 128,
                                   lambda th: np.sin(th))
    with pytest.raises(NotASolution):
        check_max_principle(system, f, tol=1e-9)


def test_max_principle_requires_unit_sum(quarter_coeff_system):
    f = GridFunction.constant(IV, 64, 1.0)
    with pytest.raises(HypothesisFailure):
        check_max_principle(quarter_coeff_system, f, tol=1e-9)


# --------------------------------------------------------------------------
# triangular vector families
# --------------------------------------------------------------------------

def ell1_transposed_family():
    """Transposed differentials of the plane maps (x/2 + sin(y)/4, y/3)
    and (x/2 - sin(y)/4, 2y/3): lower triangular in the transposed frame."""
    B1 = [[0.5, 0.0], [parse("cos(t)/4"), 1.0 / 3.0]]
    B2 = [[0.5, 0.0], [parse("-cos(t)/4"), 2.0 / 3.0]]
    return TriangularFamily([B1, B2])


def host_system():
    return GuidedSystem(IV, [map_from(parse("(t+1)/2"), 0),
                             map_from(parse("(t-1)/2"), 1)])


def test_triangular_hypotheses_pass_and_constant_verified():
    family = ell1_transposed_family()
    system = host_system()
    F = [GridFunction.constant(IV, 64, 0.7),
         GridFunction.constant(IV, 64, 0.0)]
    verdict = verify_triangular_uniqueness(family, system, F, tol=1e-10)
    assert verdict.passed
    assert verdict.residual < 1e-12


def test_triangular_second_component_must_vanish():
    # with column sums I, a constant vector solves the system only if the
    # entries hit by the strictly-lower part are zero; F = (0.7, 0.3)
    # leaves a residual and must be rejected, not reported constant
    family = ell1_transposed_family()
    system = host_system()
    F = [GridFunction.constant(IV, 64, 0.7),
         GridFunction.constant(IV, 64, 0.3)]
    verdict = verify_triangular_uniqueness(family, system, F, tol=1e-10)
    assert verdict.passed  # both components constant


def test_triangular_rotation_family_fails():
    alpha = math.pi / 3
    c, s = math.cos(alpha), math.sin(alpha)
    L = [[c, -s], [s, c]]
    R = [[c, s], [-s, c]]
    family = TriangularFamily([L, R])
    system = host_system()
    F = [GridFunction.constant(IV, 64, 1.0),
         GridFunction.constant(IV, 64, 0.0)]
    with pytest.raises(HypothesisFailure) as exc:
        verify_triangular_uniqueness(family, system, F, tol=1e-10)
    assert "triangular" in exc.value.condition


def test_triangular_rejects_non_solution():
    family = ell1_transposed_family()
    system = host_system()
    F = [GridFunction.from_callable(IV, 64, lambda t: t),
         GridFunction.constant(IV, 64, 0.0)]
    with pytest.raises(NotASolution):
        verify_triangular_uniqueness(family, system, F, tol=1e-10)


def test_triangular_with_constant_conjugator():
    # A_i = P T_i P^{-1} are not triangular themselves; supplying P must
    # recover the triangular frame and verify constancy of P^{-1} F
    P = np.array([[1.0, 1.0], [0.0, 1.0]])
    P_inv = np.linalg.inv(P)
    T1 = np.array([[0.5, 0.0], [0.1, 0.3]])
    T2 = np.eye(2) - T1
    A1 = P @ T1 @ P_inv
    A2 = P @ T2 @ P_inv
    assert abs(A1[0, 1]) > 1e-3  # genuinely non-triangular without P
    family = TriangularFamily([A1.tolist(), A2.tolist()], P=P)
    system = host_system()
    F = [GridFunction.constant(IV, 32, 1.4),
         GridFunction.constant(IV, 32, -0.2)]
    verdict = verify_triangular_uniqueness(family, system, F, tol=1e-10)
    assert verdict.passed


def test_solve_neumann_no_convergence(quarter_coeff_system):
    from guided_dynamics.errors import NoConvergence
    with pytest.raises(NoConvergence):
        solve_neumann(quarter_coeff_system, parse("t"), tol=1e-15,
                      max_iter=2, M=64)
