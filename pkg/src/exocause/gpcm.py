"""Latent-noise Gaussian-process conditional model ``y = f(x, e)``, ``e ~ N(0, 1)``.

``f`` has a zero-mean GP prior with a Gaussian (ARD) kernel over the joint
input ``(x, e)``. The latent values ``e_i`` and the log-hyperparameters are
fitted jointly by maximizing the GP log marginal likelihood (small fixed
jitter noise) plus the standard-normal log prior on the latents plus weak
log-normal hyperpriors, minus a kernel dependence penalty between the
latents and ``x``. The fitted function then gives the conditional density
by change of variables, ``p(y | x) = phi(e) / |df/de|``.

The latents are parameterized to have weighted mean 0, variance 1 and no
linear correlation with ``x``. The Gaussian prior alone only sees their
second moment, so without these constraints the optimum drifts to latents
that shrink or that encode ``x`` (a near-linear fit with heteroscedastic
"noise"), and the conditional density it implies is wrong.

Repeated rows (as produced by bootstrap resampling) are collapsed into one
input carrying a multiplicity ``m_i``; its jitter becomes ``jitter / m_i``
and its latent prior is counted ``m_i`` times. That gives the same
objective, up to a constant, as keeping the copies with tied latents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, optimize

from .dataset import EvalGrid, PairedSample
from .errors import OptimizationFailure, RootNotFound

LOG_2PI = float(np.log(2.0 * np.pi))
# box on log lengthscales / log signal variance
LOG_HYP_BOUNDS = (-4.0, 5.0)


@dataclass(frozen=True)
class GpConfig:
    max_iters: int = 500
    tol: float = 1e-6
    restarts: int = 1
    jitter: float = 1e-2
    mc_samples: int = 100
    deriv_floor: float = 1e-8
    hyperprior_sd: float = 2.0
    # weight of the kernel dependence (HSIC) penalty between latents and x
    indep_weight: float = 5.0
    # iteration cap for bootstrap fits warm-started from the full-sample fit
    warm_iters: int = 500

    def __post_init__(self):
        for name in ("max_iters", "mc_samples", "warm_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("tol", "jitter", "deriv_floor", "hyperprior_sd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")
        if self.indep_weight < 0:
            raise ValueError("indep_weight must be non-negative")

    def as_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "tol": self.tol,
            "restarts": self.restarts,
            "jitter": self.jitter,
            "mc_samples": self.mc_samples,
            "deriv_floor": self.deriv_floor,
            "hyperprior_sd": self.hyperprior_sd,
            "indep_weight": self.indep_weight,
            "warm_iters": self.warm_iters,
        }


@dataclass(frozen=True)
class GpCondModel:
    train_x: np.ndarray
    latent_e: np.ndarray
    log_lengthscale_x: float
    log_lengthscale_e: float
    log_signal_var: float
    weights: np.ndarray
    objective: float
    deriv_floor: float = 1e-8
    train_y: np.ndarray | None = field(default=None, repr=False)
    init_objective: float = float("nan")
    multiplicity: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (len(self.train_x) == len(self.latent_e) == len(self.weights)):
            raise ValueError("train_x, latent_e and weights must have equal length")
        for v in (self.log_lengthscale_x, self.log_lengthscale_e, self.log_signal_var):
            if not np.isfinite(np.exp(v)):
                raise ValueError("non-finite hyperparameter")

    def predict(self, x, e) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float).ravel()
        e = np.asarray(e, dtype=float).ravel()
        lx2 = np.exp(2 * self.log_lengthscale_x)
        le2 = np.exp(2 * self.log_lengthscale_e)
        dx = x[:, None] - self.train_x[None, :]
        de = e[:, None] - self.latent_e[None, :]
        k = np.exp(self.log_signal_var - 0.5 * dx * dx / lx2 - 0.5 * de * de / le2)
        return k @ self.weights, -(k * de) @ self.weights / le2


@dataclass(frozen=True)
class FunctionalModel:
    """A conditional model given directly by ``f`` and ``df/de``.

    Shares the interface of :class:`GpCondModel` so closed-form mechanisms
    can be pushed through the density and entropy code.
    """

    f: Callable
    df_de: Callable
    deriv_floor: float = 1e-8

    def predict(self, x, e) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float).ravel()
        e = np.asarray(e, dtype=float).ravel()
        x, e = np.broadcast_arrays(x, e)
        return (np.asarray(self.f(x, e), dtype=float) * np.ones_like(x),
                np.asarray(self.df_de(x, e), dtype=float) * np.ones_like(x))


@dataclass(frozen=True)
class GpRegression:
    """Plain 1-D GP regression (Gaussian kernel plus learned noise)."""

    train_x: np.ndarray
    log_lengthscale: float
    log_signal_var: float
    log_noise_var: float
    weights: np.ndarray
    log_marginal_likelihood: float

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.reshape(-1, 1) - self.train_x[None, :]
        k = np.exp(self.log_signal_var - 0.5 * d * d / np.exp(2 * self.log_lengthscale))
        return (k @ self.weights).reshape(x.shape)


def _collapse(x: np.ndarray, y: np.ndarray):
    """Unique (x, y) rows, their multiplicities, and the map back to rows."""
    rows = np.column_stack([x, y])
    uniq, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    return uniq[:, 0], uniq[:, 1], counts.astype(float), inverse.ravel()


# --------------------------------------------------------------------------
# plain GP regression: latent initialization and the ANM baseline
# --------------------------------------------------------------------------

def _gpr_neg_lml(params, x, y, d2):
    log_l, log_sf2, log_sn2 = params
    l2 = np.exp(2 * log_l)
    k0 = np.exp(log_sf2 - 0.5 * d2 / l2)
    sn2 = np.exp(log_sn2) + 1e-8
    k = k0 + sn2 * np.eye(x.size)
    try:
        c = linalg.cho_factor(k, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return np.inf, np.zeros(3)
    alpha = linalg.cho_solve(c, y, check_finite=False)
    kinv = linalg.cho_solve(c, np.eye(x.size), check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(c[0])))
    lml = -0.5 * y @ alpha - 0.5 * logdet - 0.5 * x.size * LOG_2PI
    w = np.outer(alpha, alpha) - kinv
    g = np.array([
        0.5 * np.sum(w * k0 * d2 / l2),
        0.5 * np.sum(w * k0),
        0.5 * np.trace(w) * np.exp(log_sn2),
    ])
    return -lml, -g


def fit_gp_regression(x, y, max_iters: int = 200) -> GpRegression:
    """Type-II maximum likelihood GP regression of ``y`` on ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    d2 = (x[:, None] - x[None, :]) ** 2
    sd_x = float(np.std(x)) or 1.0
    var_y = float(np.var(y)) or 1.0
    p0 = np.array([np.log(sd_x), np.log(var_y), np.log(0.1 * var_y)])
    bounds = [(-6.0, 6.0), (-8.0, 8.0), (-12.0, 6.0)]
    res = optimize.minimize(_gpr_neg_lml, p0, args=(x, y, d2), jac=True,
                            method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": max_iters})
    params = res.x if np.isfinite(res.fun) else p0
    f, _ = _gpr_neg_lml(params, x, y, d2)
    if not np.isfinite(f):
        raise OptimizationFailure("GP regression: covariance not positive definite")
    log_l, log_sf2, log_sn2 = params
    k = np.exp(log_sf2 - 0.5 * d2 / np.exp(2 * log_l)) + (np.exp(log_sn2) + 1e-8) * np.eye(x.size)
    weights = linalg.cho_solve(linalg.cho_factor(k, lower=True), y)
    return GpRegression(x, float(log_l), float(log_sf2), float(log_sn2), weights, float(-f))


# --------------------------------------------------------------------------
# latent-noise model
# --------------------------------------------------------------------------

class _Objective:
    """Negative penalized log-likelihood and its gradient.

    Parameter vector layout: ``[u_1..u_n, log_lx, log_le, log_sf2]``; the
    latents are ``latents(u)``.
    """

    def __init__(self, x, y, mult, jitter, hyperprior_sd, indep_weight=0.0):
        self.x = x
        self.y = y
        self.mult = mult
        self.n = x.size
        self.noise = jitter / mult
        self.dx2 = (x[:, None] - x[None, :]) ** 2
        self.prior_var = hyperprior_sd ** 2
        self.w = mult / mult.sum()
        xc = x - self.w @ x
        self.xc = xc / np.sqrt(self.w @ (xc * xc))
        self.indep_weight = indep_weight
        if indep_weight > 0:
            kx = np.exp(-0.5 * self.dx2)
            kx = kx - self.w @ kx
            kx = kx - (kx @ self.w)[:, None]
            self.dep_a = np.outer(self.w, self.w) * kx * mult.sum()
        self.evals = 0

    def latents(self, u):
        """Map free variables to latents with weighted mean 0, variance 1 and
        zero weighted correlation with x."""
        w = self.w
        c = u - w @ u
        c = c - (w @ (c * self.xc)) * self.xc
        sd = np.sqrt(w @ (c * c))
        return c / sd, sd

    def __call__(self, p):
        self.evals += 1
        n = self.n
        e, sd_u = self.latents(p[:n])
        log_lx, log_le, log_sf2 = p[n:]
        lx2, le2 = np.exp(2 * log_lx), np.exp(2 * log_le)
        de = e[:, None] - e[None, :]
        de2 = de * de
        k0 = np.exp(log_sf2 - 0.5 * self.dx2 / lx2 - 0.5 * de2 / le2)
        k = k0.copy()
        k[np.diag_indices(n)] += self.noise
        try:
            c = linalg.cho_factor(k, lower=True, check_finite=False)
        except linalg.LinAlgError:
            return np.inf, np.zeros_like(p)
        alpha = linalg.cho_solve(c, self.y, check_finite=False)
        kinv = linalg.cho_solve(c, np.eye(n), check_finite=False)
        logdet = 2.0 * np.sum(np.log(np.diag(c[0])))

        lml = -0.5 * self.y @ alpha - 0.5 * logdet - 0.5 * n * LOG_2PI
        latent_prior = -0.5 * np.sum(self.mult * (e * e + LOG_2PI))
        hyp = np.array([log_lx, log_le, log_sf2])
        hyp_prior = -0.5 * np.sum(hyp * hyp) / self.prior_var
        obj = lml + latent_prior + hyp_prior

        a = (np.outer(alpha, alpha) - kinv) * k0
        grad_e = -(e * a.sum(axis=1) - a @ e) / le2 - self.mult * e
        if self.indep_weight > 0:
            # weighted HSIC between e and x, unit-width Gaussian kernels
            b = self.dep_a * np.exp(-0.5 * de2)
            obj -= self.indep_weight * np.sum(b)
            grad_e += 2.0 * self.indep_weight * (e * b.sum(axis=1) - b @ e)
        # chain rule through the projection and scaling u -> e
        w = self.w
        grad_u = (grad_e - np.sum(grad_e) * w - (grad_e @ self.xc) * w * self.xc
                  - (grad_e @ e) * w * e) / sd_u
        grad_h = np.array([
            0.5 * np.sum(a * self.dx2) / lx2,
            0.5 * np.sum(a * de2) / le2,
            0.5 * np.sum(a),
        ]) - hyp / self.prior_var
        if not np.isfinite(obj):
            return np.inf, np.zeros_like(p)
        return -obj, -np.concatenate([grad_u, grad_h])


def _standardized(v):
    v = v - np.mean(v)
    sd = np.std(v)
    return v / sd if sd > 0 else v


def _optimize(obj: _Objective, p0: np.ndarray, max_iters: int, tol: float):
    """L-BFGS-B on the negative objective; never returns a worse point than ``p0``."""
    n = obj.n
    bounds = [(None, None)] * n + [LOG_HYP_BOUNDS] * 3
    f0, _ = obj(p0)
    if not np.isfinite(f0):
        return p0, f0, f0
    res = optimize.minimize(obj, p0, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": max_iters, "ftol": tol, "gtol": 1e-9,
                                     "maxcor": 20})
    if np.isfinite(res.fun) and res.fun <= f0:
        return res.x, float(res.fun), float(f0)
    return p0, float(f0), float(f0)


def _build_model(obj: _Objective, p: np.ndarray, neg_obj: float, deriv_floor: float,
                 neg_init: float = float("nan")) -> GpCondModel:
    n = obj.n
    e = obj.latents(p[:n])[0]
    log_lx, log_le, log_sf2 = (float(v) for v in p[n:])
    de2 = (e[:, None] - e[None, :]) ** 2
    k = np.exp(log_sf2 - 0.5 * obj.dx2 / np.exp(2 * log_lx) - 0.5 * de2 / np.exp(2 * log_le))
    k[np.diag_indices(n)] += obj.noise
    weights = linalg.cho_solve(linalg.cho_factor(k, lower=True), obj.y)
    return GpCondModel(obj.x.copy(), e.copy(), log_lx, log_le, log_sf2, weights,
                       -float(neg_obj), deriv_floor, obj.y.copy(), -float(neg_init),
                       obj.mult.copy())


def fit_gpcm(s: PairedSample, cfg: GpConfig = GpConfig(), seed: int = 0,
             init: GpCondModel | None = None) -> GpCondModel:
    """MAP fit of the latent-noise model on ``s`` (expected standardized).

    Without ``init`` the latents start at the standardized residuals of a
    plain GP regression of y on x; ``cfg.restarts`` extra starts perturb
    that initialization with seeded noise and the best objective wins.
    With ``init`` (a model fitted on a superset of the rows) the fit is
    warm-started from its latents and hyperparameters for at most
    ``cfg.warm_iters`` iterations.
    """
    x, y, mult, _ = _collapse(s.x, s.y)
    obj = _Objective(x, y, mult, cfg.jitter, cfg.hyperprior_sd, cfg.indep_weight)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6770]))

    starts = []
    if init is not None:
        e0 = init_latents_from(init, x, y)
        h0 = np.array([init.log_lengthscale_x, init.log_lengthscale_e, init.log_signal_var])
        starts.append((np.concatenate([e0, h0]), cfg.warm_iters))
    else:
        reg = fit_gp_regression(x, y)
        e0 = _standardized(y - reg.predict(x))
        h0 = np.array([reg.log_lengthscale, 0.0, reg.log_signal_var])
        h0 = np.clip(h0, *LOG_HYP_BOUNDS)
        starts.append((np.concatenate([e0, h0]), cfg.max_iters))
        for _ in range(cfg.restarts):
            e_r = _standardized(e0 + 0.3 * rng.standard_normal(e0.size))
            h_r = np.clip(h0 + 0.3 * rng.standard_normal(3), *LOG_HYP_BOUNDS)
            starts.append((np.concatenate([e_r, h_r]), cfg.max_iters))

    best_p, best_f, init_f = None, np.inf, None
    for p0, iters in starts:
        p, f, f0 = _optimize(obj, p0, iters, cfg.tol)
        if init_f is None:
            init_f = f0
        if np.isfinite(f) and f < best_f:
            best_p, best_f = p, f
    if best_p is None:
        raise OptimizationFailure("no start produced a finite objective")
    return _build_model(obj, best_p, best_f, cfg.deriv_floor, init_f)


def init_latents_from(model: GpCondModel, x, y) -> np.ndarray:
    """Latents of ``model`` carried over to rows ``(x, y)``.

    Rows seen by ``model`` keep their fitted latent; unseen rows get the
    latent solving ``f(x, e) = y`` nearest to zero, or 0 if no root exists.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lookup = {}
    if model.train_y is not None:
        for xi, yi, ei in zip(model.train_x, model.train_y, model.latent_e):
            lookup[(float(xi), float(yi))] = float(ei)
    out = np.empty(x.size)
    for i, (xi, yi) in enumerate(zip(x, y)):
        e = lookup.get((float(xi), float(yi)))
        if e is None:
            roots = _roots(model, float(xi), float(yi))
            e = min(roots, key=abs) if roots else 0.0
        out[i] = e
    return out


def predict_f_batch(model, x, e) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``predict_f`` over paired arrays ``x`` and ``e``."""
    return model.predict(x, e)


def predict_f(model, x: float, e: float) -> tuple[float, float]:
    """Posterior-mean ``f(x, e)`` and its analytic partial derivative in ``e``."""
    f, d = predict_f_batch(model, [x], [e])
    return float(f[0]), float(d[0])


def _roots(model, x: float, y: float, lo=-6.0, hi=6.0, pieces=200) -> list[float]:
    grid = np.linspace(lo, hi, pieces + 1)
    vals = predict_f_batch(model, np.full(grid.size, x), grid)[0] - y
    roots = []
    for j in range(pieces):
        a, b = vals[j], vals[j + 1]
        if a == 0.0:
            roots.append(float(grid[j]))
        elif a * b < 0:
            roots.append(optimize.brentq(lambda t: predict_f(model, x, t)[0] - y,
                                         grid[j], grid[j + 1], xtol=1e-13, rtol=1e-15))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _log_phi(e):
    return -0.5 * (np.asarray(e) ** 2 + LOG_2PI)


def cond_log_density(model, x: float, y: float) -> float:
    """``log p(y | x)`` summed over every preimage ``e`` of ``y`` under ``f(x, .)``."""
    roots = _roots(model, x, y)
    if not roots:
        roots = _roots(model, x, y, -10.0, 10.0, 334)
    if not roots:
        raise RootNotFound(f"no latent value maps x={x} to y={y}")
    roots = np.array(roots)
    _, d = predict_f_batch(model, np.full(roots.size, x), roots)
    terms = _log_phi(roots) - np.log(np.maximum(np.abs(d), model.deriv_floor))
    return float(np.logaddexp.reduce(terms))


def mc_draws(m: int, seed: int) -> np.ndarray:
    """Standard-normal draws shared by every replicate and grid point of one test."""
    return np.random.default_rng(np.random.SeedSequence([seed, 0x4D43])).standard_normal(m)


def neg_entropy_grid(model, grid, cfg: GpConfig = GpConfig(), seed: int = 0,
                     draws: np.ndarray | None = None) -> np.ndarray:
    """Monte-Carlo estimate of ``E[log p(Y | X = x)]`` at every grid point."""
    pts = grid.points if isinstance(grid, EvalGrid) else np.asarray(grid, dtype=float).ravel()
    if draws is None:
        draws = mc_draws(cfg.mc_samples, seed)
    xs = np.repeat(pts, draws.size)
    es = np.tile(draws, pts.size)
    _, d = predict_f_batch(model, xs, es)
    floor = model.deriv_floor
    terms = _log_phi(es) - np.log(np.maximum(np.abs(d), floor))
    return terms.reshape(pts.size, draws.size).mean(axis=1)
