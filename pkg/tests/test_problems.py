import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regnewt import (ConfigurationError, DegenerateProblemError, DimensionError,
                     Exponential, IllPosedInstanceError, IteratedTikhonov, Landweber,
                     ScalingError, Vector, adjoint_mismatch, beta0, family_constants,
                     operator_norm)
from regnewt.problems import (NoiseSpec, SourceSpec, construct_initial_guess,
                              construct_source, diagonal_problem, elliptic_benchmark,
                              elliptic_problem, log_tail_omega, make_noisy, power_omega,
                              power_sigma, rescale_problem)
from regnewt.verify import sample_ball


def test_diagonal_forward_example():
    prob = diagonal_problem([0.5, 0.25])
    np.testing.assert_array_equal(prob.forward(Vector([1.0, 2.0])).entries, [0.5, 0.5])


def test_diagonal_rejects_large_sigma():
    with pytest.raises(ScalingError):
        diagonal_problem([0.8, 0.1])


def test_diagonal_derivative_is_constant():
    prob = diagonal_problem([0.5, 0.25])
    assert prob.derivative(Vector([1.0, 1.0])) is prob.derivative(Vector([3.0, -1.0]))


def test_power_sigma_is_capped():
    s = power_sigma(64)
    assert s[0] == 0.7 and s[1] == pytest.approx(0.35) and s[-1] == pytest.approx(0.7 / 64)
    assert power_sigma(3, scale=1.0)[0] == pytest.approx(1 / math.sqrt(2))


def test_power_omega():
    np.testing.assert_allclose(power_omega(4, 2.0, 1.0), [2.0, 1.0, 2 / 3, 0.5])


def test_log_tail_omega_head_profile():
    om = log_tail_omega(16, scale=0.02)
    i = np.arange(1, 16)
    np.testing.assert_allclose(om[:-1], 0.02 / np.sqrt(i * -np.log((0.7 / i) ** 2)))
    assert om[-1] > om[-2]


def _fd_sine(n):
    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)
    prob = elliptic_problem(n, np.pi ** 2 * np.sin(np.pi * x), 0.0, 0.0)
    return prob, x


def test_elliptic_forward_poisson_sine():
    prob, x = _fd_sine(64)
    u = prob.forward(prob.vector_x(np.zeros(64)))
    assert np.max(np.abs(u.entries - np.sin(np.pi * x))) <= 1e-3


def test_elliptic_discretization_error_is_second_order():
    errors = []
    for n in (31, 63):
        prob, x = _fd_sine(n)
        u = prob.forward(prob.vector_x(np.zeros(n)))
        errors.append(np.max(np.abs(u.entries - np.sin(np.pi * x))))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)


def test_elliptic_benchmark_reproduces_manufactured_solution():
    prob = elliptic_benchmark(64)
    h = 1 / 65
    x = h * np.arange(1, 65)
    np.testing.assert_allclose(prob.forward(prob.x_true).entries, 1 + np.sin(np.pi * x),
                               atol=1e-12)


def test_elliptic_adjoint():
    prob = elliptic_benchmark(64)
    assert adjoint_mismatch(prob.derivative(prob.x_true), trials=100) <= 1e-10


def test_elliptic_dense_matches_matrix_free(rng):
    op = elliptic_benchmark(32).derivative(elliptic_benchmark(32).x_true)
    v = rng.standard_normal(32)
    np.testing.assert_allclose(op.dense @ v, op.matvec(v), rtol=1e-12)


def test_elliptic_taylor_remainder_is_quadratic(rng):
    prob = elliptic_benchmark(64)
    c = prob.x_true
    d = prob.vector_x(rng.standard_normal(64))
    a = prob.derivative(c)
    rem = []
    for t in (1e-2, 1e-3, 1e-4):
        diff = prob.forward(c + t * d) - prob.forward(c) - t * a.apply(d)
        rem.append(diff.norm() / t ** 2)
    assert max(rem) / min(rem) <= 1.5


def test_elliptic_rejects_indefinite_coefficient():
    prob = elliptic_benchmark(16)
    with pytest.raises(IllPosedInstanceError):
        prob.forward(prob.vector_x(np.full(16, -1e4)))


@pytest.mark.parametrize("kwargs", [{"n": 4}, {"n": 16, "f": np.ones(5)}])
def test_elliptic_rejects_bad_shapes(kwargs):
    n = kwargs.get("n")
    f = kwargs.get("f", np.ones(n))
    with pytest.raises((ConfigurationError, DimensionError)):
        elliptic_problem(n, f, 0.0, 0.0)


def test_source_holder_diagonal():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    x0 = construct_initial_guess(prob, SourceSpec("holder", 1.0, [1.0, 1.0]))
    np.testing.assert_allclose(x0.entries, [0.25, 0.0625], rtol=1e-14)


def test_source_nu_zero_is_projection():
    prob = diagonal_problem([0.5, 0.25], x_true=np.array([1.0, 2.0]))
    x0 = construct_initial_guess(prob, SourceSpec("holder", 0.0, [0.3, -0.4]))
    np.testing.assert_allclose(x0.entries, [1.3, 1.6], rtol=1e-14)


def test_source_logarithmic_diagonal():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    x0 = construct_initial_guess(prob, SourceSpec("logarithmic", 1.0, [1.0, 0.0]))
    np.testing.assert_allclose(x0.entries, [1 / -math.log(0.25), 0.0], rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(nu=st.floats(0.0, 3.0), seed=st.integers(0, 1000))
def test_source_matches_per_mode_closed_form(nu, seed):
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.01, 0.7, 6)
    omega = rng.standard_normal(6)
    x_true = rng.standard_normal(6)
    prob = diagonal_problem(sigma, x_true=x_true)
    x0 = construct_initial_guess(prob, SourceSpec("holder", nu, omega))
    np.testing.assert_allclose(x0.entries - x_true, sigma ** (2 * nu) * omega,
                               rtol=1e-12, atol=1e-14)


def test_source_reports_dropped_kernel_component():
    prob = diagonal_problem([0.5, 1e-14], x_true=np.zeros(2))
    out = construct_source(prob, SourceSpec("holder", 1.0, [1.0, 2.0]))
    assert out.dropped_norm == pytest.approx(2.0)
    assert out.omega_norm == pytest.approx(math.sqrt(5))
    np.testing.assert_allclose(out.x0.entries, [0.25, 0.0])


def test_source_needs_truth():
    with pytest.raises(ConfigurationError):
        construct_source(diagonal_problem([0.5]), SourceSpec("holder", 1.0, [1.0]))


def test_source_rejects_bad_kind():
    with pytest.raises(ConfigurationError):
        SourceSpec("gaussian", 1.0, [1.0])


@pytest.mark.parametrize("family", [IteratedTikhonov(1), Landweber(), Exponential()],
                         ids=lambda f: f.name)
def test_rescale_meets_bound(family):
    prob = elliptic_benchmark(32)
    pts = sample_ball(prob, 5, 0.1, seed=2)
    scaled, s = rescale_problem(prob, family, 1.0, pts)
    bound = min(family_constants(family).c3, math.sqrt(beta0(family, 1.0)))
    assert 0 < s <= 1
    for x in pts:
        assert operator_norm(scaled.derivative(x)) <= bound + 1e-12


def test_rescale_identity_when_already_small():
    prob = diagonal_problem([0.01, 0.001], x_true=np.zeros(2))
    scaled, s = rescale_problem(prob, IteratedTikhonov(1), 1.0, [prob.x_true])
    assert s == 1.0 and scaled is prob


def test_rescale_tikhonov_diagonal_factor():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    _, s = rescale_problem(prob, IteratedTikhonov(1), 1.0, [prob.x_true])
    c3 = family_constants(IteratedTikhonov(1)).c3
    assert s * 0.5 == pytest.approx(min(c3, math.sqrt(1 / 3)), rel=1e-12)


def test_rescale_scales_forward_and_derivative_together():
    prob = diagonal_problem([0.5, 0.25], x_true=np.zeros(2))
    scaled, s = rescale_problem(prob, Landweber(), 1.0, [prob.x_true])
    x = Vector([1.0, 1.0])
    np.testing.assert_allclose(scaled.forward(x).entries, s * prob.forward(x).entries)
    np.testing.assert_allclose(scaled.derivative(x).apply(x).entries,
                               s * prob.derivative(x).apply(x).entries)


def test_rescale_zero_operator_is_degenerate():
    prob = elliptic_benchmark(16)
    from dataclasses import replace
    from regnewt import LinearOperator
    zero = LinearOperator.from_matrix(np.zeros((16, 16)), prob.weights_x, prob.weights_y)
    degenerate = replace(prob, derivative=lambda x: zero)
    with pytest.raises(DegenerateProblemError):
        rescale_problem(degenerate, Landweber(), 1.0, [prob.x_true])


def test_noise_zero_delta():
    y = Vector([1.0, 2.0])
    assert make_noisy(y, NoiseSpec(0.0, 1)) is y


@pytest.mark.parametrize("seed", [0, 1, 12345])
def test_noise_exact_norm(seed):
    y = Vector(np.linspace(0, 1, 50), np.full(50, 0.02))
    assert (make_noisy(y, NoiseSpec(1e-3, seed)) - y).norm() == pytest.approx(1e-3, abs=1e-15)


def test_noise_is_deterministic():
    y = Vector(np.ones(10))
    a, b = make_noisy(y, NoiseSpec(1e-2, 7)), make_noisy(y, NoiseSpec(1e-2, 7))
    np.testing.assert_array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, make_noisy(y, NoiseSpec(1e-2, 8)).entries)


def test_noise_rejects_negative_delta():
    with pytest.raises(ConfigurationError):
        NoiseSpec(-1.0)
