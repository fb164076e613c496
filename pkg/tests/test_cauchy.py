import numpy as np
import pytest

from guided_dynamics.cauchy import (OverdetProblem, PropagationRule,
                                    analyze_affine, check_consistency,
                                    orbit_convergence_rates,
                                    propagate_values,
                                    verify_linear_solution)
from guided_dynamics.errors import HypothesisFailure


def additive_problem(B=0.3):
    """f((x+y)/2) = f(x) + f(y) on [1, 2] with A = f(1) = 1: already
    contradictory at the fixed point alpha(1) = 1."""
    rules = (
        PropagationRule(map=lambda t: (1.0 + np.asarray(t, float)) / 2.0,
                        c_A=1.0, c_v=1.0, label=0),
        PropagationRule(map=lambda t: (np.asarray(t, float) + 2.0) / 2.0,
                        c_B=1.0, c_v=1.0, label=1),
    )
    return OverdetProblem((1.0, 2.0), 1.0, B, rules, name="additive")


# --------------------------------------------------------------------------
# propagation
# --------------------------------------------------------------------------

def test_jensen_dyadic_values():
    prob = OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0)
    cloud = propagate_values(prob, 12, 2.0 ** -12)
    assert len(cloud) >= 2 ** 12 + 1
    assert np.max(np.abs(cloud.values - cloud.points)) == 0.0


def test_cauchy_boundary_values():
    prob = OverdetProblem.cauchy_boundary(0.5)
    cloud = propagate_values(prob, 14, 2.0 ** -12)
    assert np.max(np.abs(cloud.values - 0.5 * cloud.points)) < 1e-12


def test_geometric_mean_log_values():
    prob = OverdetProblem.geometric_mean((1.0, 4.0), 0.0, 2.0)
    cloud = propagate_values(prob, 30, 1e-4)
    assert np.max(np.abs(cloud.values - np.log2(cloud.points))) < 1e-9


def test_propagation_path_replays_bitwise():
    prob = OverdetProblem.geometric_mean((1.0, 4.0), 0.0, 2.0)
    cloud = propagate_values(prob, 12, 1e-3)
    rng = np.random.default_rng(0)
    for idx in rng.integers(0, len(cloud), 25):
        t, v = cloud.recompute(int(idx))
        assert t == cloud.points[idx]
        assert v == cloud.values[idx]


def test_cloud_affine_in_seeds():
    # doubling B doubles the deviation from the A-part at every point
    c1 = propagate_values(OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0),
                          10, 2.0 ** -10)
    c2 = propagate_values(OverdetProblem.jensen((0.0, 1.0), 0.0, 2.0),
                          10, 2.0 ** -10)
    o1, o2 = c1.order(), c2.order()
    assert np.array_equal(c1.points[o1], c2.points[o2])
    assert np.max(np.abs(c2.values[o2] - 2.0 * c1.values[o1])) < 1e-12


def test_equal_seeds_agree_on_common_points():
    p = OverdetProblem.jensen((0.0, 1.0), 0.25, 0.75)
    shallow = propagate_values(p, 8, 2.0 ** -10)
    deep = propagate_values(p, 12, 2.0 ** -10)
    common = {float(pt): float(v)
              for pt, v in zip(deep.points, deep.values)}
    for pt, v in zip(shallow.points, shallow.values):
        if float(pt) in common:
            assert abs(common[float(pt)] - v) < 1e-12


def test_different_seeds_differ_interior():
    a = propagate_values(OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0),
                         8, 2.0 ** -8)
    b = propagate_values(OverdetProblem.jensen((0.0, 1.0), 0.0, 0.5),
                         8, 2.0 ** -8)
    oa, ob = a.order(), b.order()
    interior = (a.points[oa] > 0.1) & (a.points[oa] < 0.9)
    assert np.max(np.abs(a.values[oa][interior] -
                         b.values[ob][interior])) > 0.1


def test_hypothesis_gate_rejects_expanding_map():
    rules = (PropagationRule(map=lambda t: np.asarray(t, float),
                             c_v=1.0, label=0),)
    with pytest.raises(HypothesisFailure):
        OverdetProblem((0.0, 1.0), 0.0, 1.0, rules)


# --------------------------------------------------------------------------
# consistency
# --------------------------------------------------------------------------

def test_consistency_jensen():
    prob = OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0)
    cloud = propagate_values(prob, 14, 2.0 ** -12)
    report = check_consistency(cloud, 2.0 ** -12, 1e-10)
    assert report.consistent


def test_inconsistency_detected_at_seed():
    cloud = propagate_values(additive_problem(), 1, 1e-3)
    report = check_consistency(cloud, 1e-3, 1e-9)
    assert not report.consistent
    assert report.max_collision_gap >= 1.0
    assert max(cloud.depths) <= 1


def test_truncated_cloud_vacuously_consistent():
    prob = OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0)
    cloud = propagate_values(prob, 1, 2.0 ** -12)
    assert check_consistency(cloud, 2.0 ** -12, 1e-10).consistent


# --------------------------------------------------------------------------
# affine analysis
# --------------------------------------------------------------------------

def test_affine_scalar_case():
    analysis = analyze_affine([[1.0]], [[1.0]], [0.0], [1.0])
    assert analysis.B1[0, 0] == 0.5
    assert analysis.d1[0] == -0.5
    assert analysis.d2[0] == 0.5
    assert analysis.d_tilde1[0] == pytest.approx(-1.0, abs=1e-10)
    assert analysis.d_tilde2[0] == pytest.approx(1.0, abs=1e-10)
    assert analysis.gamma == 0.5
    assert analysis.radius == 5


def test_affine_identity_case():
    analysis = analyze_affine(np.eye(2), np.eye(2), np.zeros(2),
                              np.zeros(2))
    assert np.allclose(analysis.d_tilde1, 0.0)
    assert analysis.gamma == 0.5
    assert analysis.radius == 1


def test_affine_symmetric_2x2():
    A1 = np.array([[2.0, 0.5], [0.5, 1.5]])
    A2 = 2.0 * A1  # commutes with A1 by construction
    b1 = np.array([1.0, -1.0])
    b2 = np.array([0.0, 2.0])
    analysis = analyze_affine(A1, A2, b1, b2)
    assert np.max(np.abs(analysis.B1 + analysis.B2 - np.eye(2))) < 1e-12
    for B, d, dt in ((analysis.B1, analysis.d1, analysis.d_tilde1),
                     (analysis.B2, analysis.d2, analysis.d_tilde2)):
        assert np.max(np.abs(B @ dt + d - dt)) < 1e-10
    assert 0.0 < analysis.gamma < 1.0


def test_affine_gate_failures():
    with pytest.raises(HypothesisFailure) as exc:
        analyze_affine([[1, 0], [0, 2]], [[0, 1], [1, 0]], [0, 0], [0, 0])
    assert exc.value.condition == "commutation"
    with pytest.raises(HypothesisFailure) as exc:
        analyze_affine([[1, 2], [0, 1]], [[1, 0], [0, 1]], [0, 0], [0, 0])
    assert exc.value.condition == "symmetry"
    with pytest.raises(HypothesisFailure) as exc:
        analyze_affine([[-1.0]], [[2.0]], [0.0], [0.0])
    assert exc.value.condition == "positive definiteness"


def test_orbit_convergence_rates():
    analysis = analyze_affine([[1.0]], [[1.0]], [0.0], [1.0])
    for which in (1, 2):
        rates = orbit_convergence_rates(analysis, which, np.array([3.0]),
                                        steps=20)
        assert all(abs(r - analysis.gamma) <= 0.1 * analysis.gamma
                   for r in rates)


# --------------------------------------------------------------------------
# linear solution verification
# --------------------------------------------------------------------------

def test_verify_linear_affine_maps():
    analysis = analyze_affine([[1.0]], [[1.0]], [0.0], [1.0])
    maps = (lambda x: analysis.A1 @ x + analysis.b1,
            lambda x: analysis.A2 @ x + analysis.b2)
    assert verify_linear_solution(maps, c=(1.0,)) < 1e-12


def test_verify_linear_ell1_ball_maps():
    # the plane maps of the unit-ball example sum to the identity, so any
    # linear functional solves exactly
    a1 = lambda x: np.array([0.5 * x[0] + 0.25 * np.sin(x[1]),
                             x[1] / 3.0])
    a2 = lambda x: np.array([0.5 * x[0] - 0.25 * np.sin(x[1]),
                             2.0 * x[1] / 3.0])
    sampler = lambda rng: rng.uniform(-0.5, 0.5, 2)
    resid = verify_linear_solution((a1, a2), c=(2.0, -1.0), samples=100,
                                   sampler=sampler)
    assert resid < 1e-12


def test_ring_counterexample_nonlinear_solution():
    # rotations by +-pi/3 fail the positive-eigenvalue hypothesis, and a
    # genuinely nonlinear solution exists on the ring
    alpha = np.pi / 3.0
    L = np.array([[np.cos(alpha), -np.sin(alpha)],
                  [np.sin(alpha), np.cos(alpha)]])
    R = L.T

    def f(x):
        r2 = float(x[0] ** 2 + x[1] ** 2)
        theta = float(np.arctan2(x[1], x[0]))
        c1 = np.cos(6.0 * theta) * r2
        c2 = np.sin(6.0 * theta) + r2
        return c1 * float(x[0]) + c2 * float(x[1])

    def sampler(rng):
        r = np.sqrt(rng.uniform(0.5, 1.0))
        th = rng.uniform(0.0, 2.0 * np.pi)
        return np.array([r * np.cos(th), r * np.sin(th)])

    resid = verify_linear_solution((lambda x: L @ x, lambda x: R @ x),
                                   f=f, samples=100, sampler=sampler)
    assert resid < 1e-9


def test_propagation_budget_flagged():
    prob = OverdetProblem.jensen((0.0, 1.0), 0.0, 1.0)
    cloud = propagate_values(prob, 14, 2.0 ** -12, cell_cap=40)
    assert cloud.partial
