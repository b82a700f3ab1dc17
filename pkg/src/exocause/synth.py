"""Synthetic cause-effect generators (with and without a hidden confounder)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import PairedSample


@dataclass(frozen=True)
class SynthConfig:
    n: int = 500
    q: float = 1.0
    b: float = 0.0
    alpha_mix: float = 0.0
    beta_conf: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise ValueError("alpha_mix must lie in [0, 1]")
        if not 0.0 <= self.beta_conf <= 1.0:
            raise ValueError("beta_conf must lie in [0, 1]")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, stream]))


def power_nongaussian(n: int, q: float, seed: int) -> np.ndarray:
    """Standard normal draws raised to the power ``q``, signs kept."""
    z = np.random.default_rng(seed).standard_normal(n)
    if q == 1.0:
        return z
    return np.sign(z) * np.abs(z) ** q


def _stream(cfg: SynthConfig, k: int) -> np.ndarray:
    seed = int(np.random.SeedSequence([cfg.seed & 0xFFFFFFFF, k]).generate_state(1)[0])
    return power_nongaussian(cfg.n, cfg.q, seed)


def mechanism(x, e, b: float, alpha_mix: float) -> np.ndarray:
    return (x + b * x ** 3) * np.exp(alpha_mix * e) + (1.0 - alpha_mix) * e


def gen_pair(cfg: SynthConfig) -> PairedSample:
    """``Y = (X + b X^3) exp(alpha E) + (1 - alpha) E`` with X, E independent."""
    x = _stream(cfg, 1)
    e = _stream(cfg, 2)
    return PairedSample(x, mechanism(x, e, cfg.b, cfg.alpha_mix))


def gen_confounded(cfg: SynthConfig) -> PairedSample:
    """Hidden common cause Z acting linearly on X and Y with strength ``beta_conf``."""
    beta = cfg.beta_conf
    ex = _stream(cfg, 1)
    e = _stream(cfg, 2)
    z = _stream(cfg, 3)
    x = (2.0 - beta) * ex + beta * z
    y = 0.3 * (2.0 - beta) * mechanism(x, e, cfg.b, cfg.alpha_mix) + beta * z
    return PairedSample(x, y)
