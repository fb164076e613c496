import numpy as np
import pytest

from guided_dynamics.errors import DataMismatch, PConfigViolation
from guided_dynamics.exprlang import parse
from guided_dynamics.gds import Interval
from guided_dynamics.pconf import (IvpProblem, extract_guiding_sets,
                                   interior_point_off_guiding,
                                   probe_pconf_minimality, solve_ivp,
                                   validate_pconfiguration)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def test_validate_standard_pair(standard_pconf):
    assert standard_pconf.anchors == (-1.0, 0.0, 1.0)
    assert standard_pconf.anchor_shift == 0.0


def test_validate_three_map_affine(three_map_pconf):
    assert three_map_pconf.n_maps == 3
    assert three_map_pconf.anchor_shift == 3.0


def test_validate_rejects_wrong_order():
    # spec orders the standard pair left-to-right; the swapped order
    # violates the endpoint-image condition
    with pytest.raises(PConfigViolation) as exc:
        validate_pconfiguration([parse("(t+1)/2"), parse("(t-1)/2")],
                                Interval(-1.0, 1.0), (-1.0, 0.0, 1.0))
    assert exc.value.condition == "endpoint_images"


def test_validate_rejects_duplicate_halves():
    with pytest.raises(PConfigViolation) as exc:
        validate_pconfiguration([parse("t/2"), parse("t/2")],
                                Interval(0.0, 1.0), (0.0, 0.5, 1.0))
    assert exc.value.condition == "endpoint_images"


def test_validate_rejects_bad_derivative_sum():
    with pytest.raises(PConfigViolation) as exc:
        validate_pconfiguration([parse("(t-1)/3"), parse("(t+1)/2")],
                                Interval(-1.0, 1.0), (-1.0, 0.0, 1.0))
    assert exc.value.condition in ("derivative_sum", "endpoint_images")


def test_validate_requires_increasing_anchors():
    with pytest.raises(PConfigViolation) as exc:
        validate_pconfiguration([parse("(t-1)/2"), parse("(t+1)/2")],
                                Interval(-1.0, 1.0), (-1.0, 1.0, 0.0))
    assert exc.value.condition == "anchors_increasing"


# --------------------------------------------------------------------------
# guiding extraction
# --------------------------------------------------------------------------

def test_guiding_affine_empty(standard_pconf, three_map_pconf):
    for pc in (standard_pconf, three_map_pconf):
        assert all(g.is_empty for g in extract_guiding_sets(pc))


def test_guiding_quadratic_endpoints(quadratic_pconf):
    g_left, g_right = quadratic_pconf.guiding
    # left map derivative (1-t)/2 vanishes at t = 1; right map derivative
    # (t+1)/2 vanishes at t = -1
    assert len(g_left.intervals) == 1
    assert g_left.intervals[0][1] == pytest.approx(1.0, abs=1e-8)
    assert len(g_right.intervals) == 1
    assert g_right.intervals[0][0] == pytest.approx(-1.0, abs=1e-8)


def test_sum_rule_on_validated_configs(standard_pconf, quadratic_pconf,
                                       three_map_pconf):
    for pc in (standard_pconf, quadratic_pconf, three_map_pconf):
        ts = pc.interval.grid(1001)
        total = sum(np.asarray(g.derivative(ts), dtype=float)
                    * np.ones_like(ts) for g in pc.maps)
        assert np.max(np.abs(total - 1.0)) < 1e-10


# --------------------------------------------------------------------------
# the initial value problem
# --------------------------------------------------------------------------

def test_solve_ivp_linear_exact(standard_pconf):
    sol = solve_ivp(IvpProblem(standard_pconf, parse("0"), 0.0, 1.0), 256)
    assert np.max(np.abs(sol.f.values - sol.f.nodes)) < 1e-8
    assert sol.diagnostics.residual < 1e-12


def test_solve_ivp_quadratic(standard_pconf):
    sol = solve_ivp(IvpProblem(standard_pconf, parse("(t*t-1)/2"),
                               0.0, 0.0), 1024)
    assert np.max(np.abs(sol.f.values - sol.f.nodes ** 2)) < 1e-6


def test_solve_ivp_data_mismatch(standard_pconf):
    with pytest.raises(DataMismatch):
        solve_ivp(IvpProblem(standard_pconf, parse("t"), 0.0, 0.0), 64)


def test_solve_ivp_homogeneous_uniqueness(standard_pconf,
                                          quadratic_pconf):
    for pc in (standard_pconf, quadratic_pconf):
        sol = solve_ivp(IvpProblem(pc, parse("0"), 0.0, 0.0), 256)
        assert sol.f.sup() <= 10 * max(sol.diagnostics.residual, 1e-12)


def _random_poly_with_slope(rng, c, mu, scale=1.0):
    coef = rng.uniform(-scale, scale, 6)
    poly = np.polynomial.Polynomial(coef)
    coef = coef.copy()
    coef[1] += mu - poly.deriv()(c)
    return np.polynomial.Polynomial(coef)


def test_roundtrip_rate_and_constant(standard_pconf):
    # h built by forward application of random degree-5 polynomials;
    # recovery at the piecewise-linear rate with C <= 50
    rng = np.random.default_rng(2024)
    maps = [m.fn for m in standard_pconf.maps]
    worst_c = 0.0
    for _ in range(20):
        poly = _random_poly_with_slope(rng, 0.0, 0.0)

        def h(t, poly=poly):
            return poly(t) - poly(maps[0](t)) - poly(maps[1](t))

        assert abs(h(np.array([-1.0]))[0] - h(np.array([1.0]))[0]) < 1e-10
        errs = {}
        for M in (256, 512):
            sol = solve_ivp(IvpProblem(standard_pconf, h, 0.0, 0.0), M)
            errs[M] = float(np.max(np.abs(sol.f.values - poly(sol.f.nodes))))
        worst_c = max(worst_c, errs[512] * 512 ** 2)
        assert 3.0 < errs[256] / errs[512] < 5.0
    assert worst_c <= 50.0


def test_anchor_identity(standard_pconf, three_map_pconf):
    rng = np.random.default_rng(5)
    for pc in (standard_pconf, three_map_pconf):
        maps = [m.fn for m in pc.maps]
        c = 0.5 * (pc.interval.a + pc.interval.b)
        poly = _random_poly_with_slope(rng, c, 0.3)

        def h(t, poly=poly):
            out = poly(np.asarray(t, dtype=float))
            for mp in maps:
                out = out - poly(mp(t))
            return out

        sol = solve_ivp(IvpProblem(pc, h, c, 0.3), 512)
        anchor_sum = sum(sol.f.eval(a) for a in pc.anchors[1:-1])
        h0 = float(h(np.array([pc.interval.a]))[0])
        assert abs(anchor_sum + h0) <= \
            10 * max(sol.diagnostics.residual, 1e-12)
        assert sol.diagnostics.anchor_identity_defect <= \
            10 * max(sol.diagnostics.residual, 1e-12)


def test_solve_ivp_curved_configuration(quadratic_pconf):
    rng = np.random.default_rng(9)
    maps = [m.fn for m in quadratic_pconf.maps]
    poly = _random_poly_with_slope(rng, 0.3, 0.7)

    def h(t, poly=poly):
        return poly(t) - poly(maps[0](t)) - poly(maps[1](t))

    errs = {}
    for M in (512, 1024):
        sol = solve_ivp(IvpProblem(quadratic_pconf, h, 0.3, 0.7), M)
        errs[M] = float(np.max(np.abs(sol.f.values - poly(sol.f.nodes))))
    # curved maps converge a touch below the clean quadratic rate of the
    # affine corpus; the ratio climbs toward 4 under refinement
    assert 2.3 < errs[512] / errs[1024] < 5.0
    assert errs[1024] < 1e-3


def test_ivp_well_conditioned(standard_pconf):
    sol = solve_ivp(IvpProblem(standard_pconf, parse("(t*t-1)/2"),
                               0.0, 0.0), 512)
    assert sol.diagnostics.condition_estimate < 1e6


# --------------------------------------------------------------------------
# minimality probing
# --------------------------------------------------------------------------

def test_probe_standard_via_certificate(standard_pconf):
    report = probe_pconf_minimality(standard_pconf, 0.01, 10 ** 4)
    assert report.via == "contraction_certificate"
    assert report.minimality.kind == "minimal_evidence"
    assert report.weak_attractor.kind == "yes"
    assert report.agree is True


def test_probe_three_map_certificate(three_map_pconf):
    report = probe_pconf_minimality(three_map_pconf, 0.01, 10 ** 4)
    assert report.via == "contraction_certificate"
    assert report.certificate.lipschitz == pytest.approx((1 / 3,) * 3)


def test_probe_quadratic_agrees(quadratic_pconf):
    # the endpoint anchors are fixed points reachable only through exact
    # guiding exclusions: not minimal, and the weak-attractor probe
    # agrees through a saturated endpoint seed
    report = probe_pconf_minimality(quadratic_pconf, 0.01, 10 ** 4)
    assert report.minimality.kind == "not_minimal"
    assert report.weak_attractor.kind == "no"
    assert report.agree is True


def test_interior_point_avoids_guiding(quadratic_pconf):
    x0 = interior_point_off_guiding(quadratic_pconf)
    for g in quadratic_pconf.guiding:
        assert g.distance(x0, quadratic_pconf.interval)[0] > 1e-3


def test_solve_ivp_ill_conditioned_gate(standard_pconf):
    from guided_dynamics.errors import IllConditioned
    with pytest.raises(IllConditioned):
        solve_ivp(IvpProblem(standard_pconf, parse("0"), 0.0, 0.0), 64,
                  cond_cap=1.0)
