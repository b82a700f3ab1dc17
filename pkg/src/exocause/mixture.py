"""Closed-form Gaussian-mixture cause with a linear-Gaussian mechanism.

Forward model: ``X ~ sum_i pi_i N(mu_i, s_i^2)``, ``Y = c + beta X + E``,
``E ~ N(0, sigma^2)``. The same joint can be written backward, component by
component, as ``Y ~ N(mu~_i, s~_i^2)`` and ``X | Y ~ N(c~_i + beta~_i Y, gamma_i^2)``.

Two denominators for the backward coefficients are available:

* ``"conjugate"`` uses ``beta^2 s_i^2 + sigma^2`` (Gaussian conditioning).
* ``"literal"`` uses ``beta s_i^2 + sigma^2``.

Only the conjugate form reproduces the forward joint density for
``beta != 1`` (the two coincide at ``beta == 1``), so it is the default;
``select_variant`` re-derives that choice numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dataset import PairedSample
from .errors import NonPositiveVariance

Variant = Literal["conjugate", "literal"]
VARIANTS = ("conjugate", "literal")


@dataclass(frozen=True)
class MixtureParams:
    weights: tuple = (0.5, 0.5)
    means: tuple = (-2.0, 2.0)
    variances: tuple = (1.0, 1.0)
    intercept: float = 0.0
    slope: float = 1.0
    noise_var: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not (len(self.weights) == len(self.means) == len(self.variances)):
            raise ValueError("weights, means and variances must have equal length")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if np.any(np.asarray(self.variances, dtype=float) <= 0) or not self.noise_var > 0:
            raise ValueError("variances must be positive")


@dataclass(frozen=True)
class BackwardParams:
    means: np.ndarray       # mu~_i
    variances: np.ndarray   # s~_i^2
    intercepts: np.ndarray  # c~_i
    slopes: np.ndarray      # beta~_i
    cond_vars: np.ndarray   # gamma_i^2


def _normal_pdf(v, mean, var):
    return np.exp(-0.5 * (v - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def reparam(p: MixtureParams, variant: Variant = "conjugate") -> BackwardParams:
    mu = np.asarray(p.means, dtype=float)
    s2 = np.asarray(p.variances, dtype=float)
    c, beta, sig2 = p.intercept, p.slope, p.noise_var
    if variant == "conjugate":
        denom = beta ** 2 * s2 + sig2
    elif variant == "literal":
        denom = beta * s2 + sig2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    gamma2 = sig2 * s2 / denom
    if np.any(gamma2 <= 0) or np.any(~np.isfinite(gamma2)):
        raise NonPositiveVariance(f"{variant} reparameterization gives gamma^2 = {gamma2}")
    return BackwardParams(
        means=c + beta * mu,
        variances=beta ** 2 * s2 + sig2,
        intercepts=(mu * sig2 - c * beta * s2) / denom,
        slopes=beta * s2 / denom,
        cond_vars=gamma2,
    )


def x_marginal(p: MixtureParams, x):
    x = np.asarray(x, dtype=float)[..., None]
    return np.sum(np.asarray(p.weights) * _normal_pdf(x, np.asarray(p.means), np.asarray(p.variances)),
                  axis=-1)


def joint_forward(p: MixtureParams, x, y):
    """``sum_i pi_i N(x; mu_i, s_i^2) N(y; c + beta x, sigma^2)``; broadcasts."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x_marginal(p, x) * _normal_pdf(y, p.intercept + p.slope * x, p.noise_var)


def joint_backward(p: MixtureParams, x, y, variant: Variant = "conjugate"):
    """``sum_i pi_i N(y; mu~_i, s~_i^2) N(x; c~_i + beta~_i y, gamma_i^2)``; broadcasts."""
    bp = reparam(p, variant)
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    terms = (np.asarray(p.weights) * _normal_pdf(y, bp.means, bp.variances)
             * _normal_pdf(x, bp.intercepts + bp.slopes * y, bp.cond_vars))
    return np.sum(terms, axis=-1)


def marginal_sd(p: MixtureParams) -> tuple[float, float]:
    w = np.asarray(p.weights)
    mu = np.asarray(p.means)
    s2 = np.asarray(p.variances)
    mean_x = w @ mu
    var_x = w @ (s2 + mu ** 2) - mean_x ** 2
    var_y = p.slope ** 2 * var_x + p.noise_var
    return float(np.sqrt(var_x)), float(np.sqrt(var_y))


def max_density_gap(p: MixtureParams, variant: Variant, points: int = 50, width: float = 4.0) -> float:
    """Largest |backward - forward| on a grid spanning +-width marginal sds."""
    w = np.asarray(p.weights)
    mean_x = float(w @ np.asarray(p.means))
    mean_y = p.intercept + p.slope * mean_x
    sx, sy = marginal_sd(p)
    gx = np.linspace(mean_x - width * sx, mean_x + width * sx, points)
    gy = np.linspace(mean_y - width * sy, mean_y + width * sy, points)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    try:
        back = joint_backward(p, X, Y, variant)
    except NonPositiveVariance:
        return float("inf")
    return float(np.max(np.abs(back - joint_forward(p, X, Y))))


def select_variant(params, tol: float = 1e-8) -> Variant:
    """The one variant whose backward density matches the forward one for
    every parameter set in ``params``."""
    ok = [v for v in VARIANTS if all(max_density_gap(p, v) < tol for p in params)]
    if len(ok) != 1:
        raise RuntimeError(f"density-equality check is not decisive: {ok}")
    return ok[0]


def sample_mixture_pair(p: MixtureParams, n: int, seed: int) -> PairedSample:
    if n < 20:
        raise ValueError("n must be at least 20")
    rng = np.random.default_rng(seed)
    comp = rng.choice(len(p.weights), size=n, p=np.asarray(p.weights, dtype=float))
    mu = np.asarray(p.means, dtype=float)[comp]
    sd = np.sqrt(np.asarray(p.variances, dtype=float))[comp]
    x = mu + sd * rng.standard_normal(n)
    y = p.intercept + p.slope * x + np.sqrt(p.noise_var) * rng.standard_normal(n)
    return PairedSample(x, y)
