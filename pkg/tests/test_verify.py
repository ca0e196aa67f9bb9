import math

import numpy as np
import pytest

from regnewt import (Exponential, InsufficientDataError, IteratedTikhonov, Landweber, Lardy,
                     QualificationError, ScheduleCompatibilityError, family_constants)
from regnewt.problems import diagonal_problem, elliptic_benchmark
from regnewt.solver import ArithReciprocalInt, ArithReciprocalReal, Geometric
from regnewt.verify import (HEURISTIC, CheckReport, check_commutators, check_derived_bounds,
                            check_filter_bounds, check_interpolation_lemma,
                            check_log_qualification, check_qualification, check_ratio_bound,
                            check_strengthened_commutators, estimate_constants,
                            estimate_nonlinearity, sample_ball, scalar_commutator_ratios)


def test_report_pass_logic():
    assert CheckReport.make("x", 1.0, 1.0).passed
    assert CheckReport.make("x", 1.0 + 1e-10, 1.0).passed
    assert not CheckReport.make("x", 1.01, 1.0).passed
    assert CheckReport.make("x", 5.0).passed
    assert not CheckReport.make("x", math.inf).passed
    assert "FAIL" in CheckReport.make("x", 2.0, 1.0, "here").row()


def test_report_normalizes_negative_zero():
    assert math.copysign(1.0, CheckReport.make("x", -0.0, 0.0).measured) == 1.0


def test_filter_bounds_all_pass(family):
    reports = check_filter_bounds(family)
    assert len(reports) == 7
    assert all(r.passed for r in reports), [r.row() for r in reports if not r.passed]


def test_filter_bounds_landweber_constants():
    reports = check_filter_bounds(Landweber())
    assert [r.bound for r in reports] == [0.0, 1.0, 0.5, 0.0, 2.0, 1.0, 1.0]


def test_filter_bounds_tikhonov_three_uses_sqrt_three():
    reports = check_filter_bounds(IteratedTikhonov(3))
    assert reports[-1].bound == pytest.approx(math.sqrt(3))
    assert reports[-1].passed


def test_filter_bounds_single_point_grid():
    reports = check_filter_bounds(Landweber(), lambda_grid=[0.0])
    assert reports[2].measured == 0.0
    assert all(r.passed for r in reports)


def test_filter_bounds_literal_lardy_fails_positivity():
    reports = check_filter_bounds(Lardy(literal=True))
    positivity = reports[0]
    assert not positivity.passed
    assert positivity.measured > 0
    assert "alpha=" in positivity.worst_case and "lambda=" in positivity.worst_case


def test_derived_bounds_pass(family):
    assert all(r.passed for r in check_derived_bounds(family))


def test_derived_bounds_from_square_roots(family):
    const = family_constants(family)
    reports = check_derived_bounds(family, c3=math.sqrt(const.c0), c4=math.sqrt(const.c1))
    assert all(r.passed for r in reports)


@pytest.mark.parametrize("family, schedule, bound", [
    (Landweber(), ArithReciprocalInt(1, 2), 4.0),
    (Exponential(), ArithReciprocalReal(1, 0.5), math.exp(0.5)),
    (IteratedTikhonov(1), Geometric(1, 2), 2.0),
])
def test_ratio_bound_examples(family, schedule, bound):
    rep = check_ratio_bound(family, schedule)
    assert rep.passed and rep.bound == pytest.approx(bound)


def test_ratio_bound_constant_schedule():
    assert check_ratio_bound(Landweber(), ArithReciprocalInt(3, 0)).measured == 1.0


def test_ratio_bound_incompatible():
    with pytest.raises(ScheduleCompatibilityError):
        check_ratio_bound(Lardy(), Geometric())


def test_qualification_examples():
    lw = check_qualification(Landweber(), [0.0, 1.0])
    assert all(r.passed for r in lw)
    ex = check_qualification(Exponential(), [2.0])[0]
    assert ex.bound == pytest.approx((2 / math.e) ** 2) and ex.passed


def test_qualification_over_limit():
    with pytest.raises(QualificationError):
        check_qualification(IteratedTikhonov(2), [3.0])


def test_log_qualification_regression():
    rep = check_log_qualification(Exponential(), [1.0], alpha0=1.0)[0]
    assert rep.passed
    assert rep.measured == pytest.approx(0.7791056087050224, rel=1e-12)


def test_log_qualification_skips_zero_and_handles_endpoint():
    rep = check_log_qualification(Landweber(), [1.0], alpha_grid=[1.0],
                                  lambda_grid=[0.0, 0.5])[0]
    assert math.isfinite(rep.measured)


def test_log_qualification_small_lambda_contribution_vanishes():
    reps = [check_log_qualification(IteratedTikhonov(1), [1.0], alpha_grid=[1.0],
                                    lambda_grid=[lam])[0].measured
            for lam in (1e-10, 1e-100, 1e-300)]
    assert reps[0] > reps[1] > reps[2]


def test_interpolation_lemma_all_families(family):
    rep = check_interpolation_lemma(family, trials=300, seed=1)
    assert rep.passed, rep.row()


def test_interpolation_lemma_is_deterministic():
    a = check_interpolation_lemma(Landweber(), trials=50, seed=3)
    b = check_interpolation_lemma(Landweber(), trials=50, seed=3)
    assert a == b


@pytest.mark.parametrize("family", [IteratedTikhonov(1), Landweber()], ids=lambda f: f.name)
def test_commutators_bounded(family):
    reports = check_commutators(family, trials=40, seed=2)
    assert len(reports) == 8
    assert all(r.passed for r in reports), [r.row() for r in reports if not r.passed]


def test_commutators_identical_operators_excluded():
    from regnewt.verify import _commutator_ratios
    a = np.eye(3) * 0.5
    assert _commutator_ratios(IteratedTikhonov(1), 0.1, a, a) is None


def test_commutator_small_perturbation_stable():
    from regnewt.verify import _commutator_ratios
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 8))
    a *= 0.6 / np.linalg.norm(a, 2)
    e = rng.standard_normal((8, 8))
    b = a + 1e-6 * e / np.linalg.norm(e, 2)
    vals = np.array([_commutator_ratios(IteratedTikhonov(1), alpha, a, b)
                     for alpha in np.geomspace(1e-3, 1, 7)])
    assert np.all(np.isfinite(vals))
    assert np.all(vals.max(axis=0) <= 10 * vals.max(axis=0).min())


def test_commutators_match_scalar_case():
    family = IteratedTikhonov(1)
    sampled = check_commutators(family, trials=300, seed=5, dim=1)
    c6_sampled = np.array([r.measured for r in sampled[::2]])
    grid = np.linspace(1e-3, 1 / math.sqrt(2), 300)
    c6_scalar = np.zeros(4)
    for alpha in np.geomspace(1e-3, 1, 7):
        for a in grid:
            for b in grid[::7]:
                if a != b:
                    c6_scalar = np.maximum(c6_scalar,
                                           scalar_commutator_ratios(family, alpha, a, b))
    ratio = c6_sampled / c6_scalar
    assert np.all(ratio <= 2.0) and np.all(ratio >= 0.5)


def test_scalar_commutator_direct():
    fam = IteratedTikhonov(1)
    a, b, alpha = 0.5, 0.3, 0.1
    ratios = scalar_commutator_ratios(fam, alpha, a, b)
    dr = alpha / (alpha + a * a) - alpha / (alpha + b * b)
    assert ratios[1] == pytest.approx(abs(dr * b) / 0.2)


def test_nonlinearity_linear_problem_is_zero():
    prob = diagonal_problem([0.5, 0.25, 0.1], x_true=np.zeros(3))
    est = estimate_constants(prob, sample_ball(prob, 6, 0.5, seed=1))
    assert est.L == 0.0 and est.K1 == 0.0 and est.K2 == 0.0
    assert est.K0 == 0.0
    reports = estimate_nonlinearity(prob, sample_ball(prob, 6, 0.5, seed=1))
    assert all(r.note.startswith(HEURISTIC) for r in reports)


def test_nonlinearity_excludes_identical_points():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    x = prob.x_true
    with pytest.raises(InsufficientDataError):
        estimate_constants(prob, [x, x])
    with pytest.raises(InsufficientDataError):
        estimate_constants(prob, [x])


def test_strengthened_commutators_linear_problem_vanish():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    pts = sample_ball(prob, 6, 0.5, seed=0)
    reports = check_strengthened_commutators(prob, Landweber(), list(zip(pts[::2], pts[1::2])))
    assert [r.measured for r in reports] == [0.0, 0.0]


def test_strengthened_commutators_need_distinct_pairs():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    with pytest.raises(InsufficientDataError):
        check_strengthened_commutators(prob, Landweber(), [(prob.x_true, prob.x_true)])


@pytest.fixture(scope="module")
def elliptic32():
    return elliptic_benchmark(32)


def test_elliptic_nonlinearity_and_taylor_cross_check(elliptic32):
    prob = elliptic32
    est = estimate_constants(prob, sample_ball(prob, 50, 0.1, seed=0))
    assert 0 < est.L < math.inf
    assert est.rank_residual < 1e-12
    fresh = sample_ball(prob, 30, 0.1, seed=99)
    for x, z in zip(fresh[::2], fresh[1::2]):
        d = x - z
        rem = (prob.forward(x) - prob.forward(z) - prob.derivative(z).apply(d)).norm()
        assert rem <= est.L / 2 * d.norm() ** 2


def test_elliptic_strengthened_commutator_regression(elliptic32):
    pts = sample_ball(elliptic32, 40, 0.1, seed=0)
    c7, c8 = check_strengthened_commutators(elliptic32, IteratedTikhonov(1),
                                            list(zip(pts[::2], pts[1::2])))
    assert c7.passed and c8.passed
    assert c7.measured == pytest.approx(0.36164559083774667, rel=1e-8)
    assert c8.measured == pytest.approx(0.25812156831755434, rel=1e-8)
