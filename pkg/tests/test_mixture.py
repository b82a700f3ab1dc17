import numpy as np
import pytest
from scipy import integrate

from exocause.errors import NonPositiveVariance
from exocause.mixture import (MixtureParams, joint_backward, joint_forward, max_density_gap,
                              reparam, sample_mixture_pair, select_variant, x_marginal)


def random_params(rng):
    beta = 0.0
    while abs(beta) < 1e-3:
        beta = rng.uniform(-2, 2)
    w = rng.uniform(0.1, 0.9)
    return MixtureParams(weights=(w, 1 - w), means=tuple(rng.uniform(-3, 3, 2)),
                         variances=tuple(rng.uniform(0.25, 4, 2)), intercept=rng.uniform(-1, 1),
                         slope=beta, noise_var=rng.uniform(0.25, 4))


def test_canonical_case_variants_agree():
    p = MixtureParams(weights=(1.0,), means=(0.0,), variances=(1.0,), slope=1.0, noise_var=1.0)
    for v in ("conjugate", "literal"):
        bp = reparam(p, v)
        assert bp.means[0] == 0.0 and bp.variances[0] == 2.0
        assert bp.intercepts[0] == 0.0 and bp.slopes[0] == 0.5 and bp.cond_vars[0] == 0.5
        assert joint_backward(p, 0.0, 0.0, v) == pytest.approx(joint_forward(p, 0.0, 0.0), abs=1e-12)


def test_zero_slope_degenerates_to_marginals():
    p = MixtureParams(slope=0.0, intercept=0.7, noise_var=1.5)
    bp = reparam(p)
    np.testing.assert_array_equal(bp.slopes, 0.0)
    np.testing.assert_allclose(bp.cond_vars, p.variances)
    np.testing.assert_allclose(bp.variances, p.noise_var)
    x, y = 0.3, -0.4
    expected = x_marginal(p, x) * np.exp(-0.5 * (y - 0.7) ** 2 / 1.5) / np.sqrt(2 * np.pi * 1.5)
    assert joint_backward(p, x, y) == pytest.approx(expected, rel=1e-12)


def test_slope_two_denominators():
    p = MixtureParams(weights=(1.0,), means=(0.0,), variances=(1.0,), slope=2.0, noise_var=1.0)
    assert reparam(p, "literal").slopes[0] == pytest.approx(2 / 3)
    assert reparam(p, "conjugate").slopes[0] == pytest.approx(2 / 5)
    assert max_density_gap(p, "conjugate") < 1e-8
    assert max_density_gap(p, "literal") > 1e-4


def test_oracle_selects_conjugate():
    rng = np.random.default_rng(0)
    params = [random_params(rng) for _ in range(20)]
    assert select_variant(params) == "conjugate"
    for p in params:
        assert max_density_gap(p, "conjugate") < 1e-8


def test_literal_can_lose_positivity():
    p = MixtureParams(weights=(1.0,), means=(0.0,), variances=(2.0,), slope=-1.0, noise_var=1.0)
    with pytest.raises(NonPositiveVariance):
        reparam(p, "literal")


def test_forward_independent_case():
    p = MixtureParams(weights=(1.0,), means=(0.5,), variances=(2.0,), slope=0.0, noise_var=0.5)
    x, y = 1.1, -0.3
    px = np.exp(-0.5 * (x - 0.5) ** 2 / 2.0) / np.sqrt(2 * np.pi * 2.0)
    py = np.exp(-0.5 * y ** 2 / 0.5) / np.sqrt(2 * np.pi * 0.5)
    assert joint_forward(p, x, y) == pytest.approx(px * py, rel=1e-12)


def test_forward_normalizes():
    p = MixtureParams()
    gx = np.linspace(-9, 9, 721)
    gy = np.linspace(-11, 11, 881)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    total = np.trapezoid(np.trapezoid(joint_forward(p, X, Y), gy, axis=1), gx)
    assert abs(total - 1) < 1e-3


def test_forward_symmetry():
    p = MixtureParams(means=(-1.5, 1.5), variances=(0.7, 0.7), intercept=0.0, slope=0.8)
    rng = np.random.default_rng(2)
    for x, y in rng.normal(0, 2, (10, 2)):
        assert joint_forward(p, x, y) == pytest.approx(joint_forward(p, -x, -y), rel=1e-12)


def test_forward_marginal_recovers_mixture():
    p = MixtureParams(slope=1.3, intercept=0.4, noise_var=0.8)
    for x in np.linspace(-4, 4, 9):
        val, _ = integrate.quad(lambda y: float(joint_forward(p, x, y)), -np.inf, np.inf,
                                epsabs=1e-12)
        assert abs(val - x_marginal(p, x)) < 1e-6


def test_sampler_moments_and_proportions():
    p = MixtureParams(weights=(0.3, 0.7), means=(-2.0, 1.0), variances=(1.0, 0.5),
                      intercept=0.5, slope=1.5, noise_var=1.0)
    n = 20000
    s = sample_mixture_pair(p, n, seed=3)
    mean_y = 0.5 + 1.5 * (0.3 * -2.0 + 0.7 * 1.0)
    assert abs(s.y.mean() - mean_y) < 4 * s.y.std() / np.sqrt(n)
    frac_left = np.mean(s.x < -0.5)  # components are well separated at -0.5
    assert abs(frac_left - 0.3) < 4 * np.sqrt(0.3 * 0.7 / n) + 0.01

    tight = sample_mixture_pair(MixtureParams(noise_var=1e-12, intercept=1.0, slope=2.0), 100, 4)
    np.testing.assert_allclose(tight.y, 1.0 + 2.0 * tight.x, atol=1e-5)
    again = sample_mixture_pair(p, n, seed=3)
    np.testing.assert_array_equal(again.x, s.x)


def test_component_labels_binomial():
    p = MixtureParams(weights=(0.25, 0.75), means=(-10.0, 10.0), variances=(1.0, 1.0))
    n = 5000
    s = sample_mixture_pair(p, n, seed=8)
    assert abs(np.mean(s.x < 0) - 0.25) < 4 * np.sqrt(0.25 * 0.75 / n)


def test_param_validation():
    with pytest.raises(ValueError):
        MixtureParams(weights=(0.6, 0.6))
    with pytest.raises(ValueError):
        MixtureParams(variances=(1.0, -1.0))
