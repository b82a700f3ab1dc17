"""Run the exogeneity test both ways and map the two p-values to a verdict."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Literal

from threadpoolctl import threadpool_limits

from .bootstrap import build_stat_matrices, plan_replicates
from .dataset import PairedSample, make_grid, require_rows, standardize, subsample
from .gpcm import GpConfig, fit_gpcm
from .indeptest import ExogeneityTestResult, permutation_pvalue


class Outcome(str, enum.Enum):
    X_CAUSES_Y = "XcausesY"
    Y_CAUSES_X = "YcausesX"
    NON_IDENTIFIABLE = "NonIdentifiable"
    CONFOUNDER_SUSPECTED = "ConfounderSuspected"


@dataclass(frozen=True)
class InferenceConfig:
    B: int = 1000
    grid_count: int = 80
    permutations: int = 1000
    alpha: float = 0.01
    subsample_cap: int = 500
    gp: GpConfig = field(default_factory=GpConfig)
    seed: int = 0

    def __post_init__(self):
        if self.B < 10:
            raise ValueError("B must be at least 10")
        if self.grid_count < 2:
            raise ValueError("grid_count must be at least 2")
        if self.permutations < 100:
            raise ValueError("permutations must be at least 100")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.subsample_cap < 20:
            raise ValueError("subsample_cap must be at least 20")

    @classmethod
    def fast(cls, **overrides) -> "InferenceConfig":
        """Desk-scale preset: B=200, 500 permutations."""
        return cls(**{"B": 200, "permutations": 500, **overrides})

    def as_dict(self) -> dict:
        return {
            "b": self.B,
            "grid_count": self.grid_count,
            "permutations": self.permutations,
            "alpha": self.alpha,
            "subsample_cap": self.subsample_cap,
            "seed": self.seed,
            "gp": self.gp.as_dict(),
        }


@dataclass(frozen=True)
class DirectionDecision:
    outcome: Outcome
    test_xy: ExogeneityTestResult
    test_yx: ExogeneityTestResult
    config_echo: InferenceConfig | None = None


def if_exogeneity(s: PairedSample, direction: Literal["x-to-y", "y-to-x"],
                  cfg: InferenceConfig = InferenceConfig(), workers: int = 1,
                  progress=None) -> ExogeneityTestResult:
    """Test whether the putative cause is exogenous for the conditional of
    the putative effect. ``y-to-x`` runs the same pipeline on swapped columns.
    """
    if direction not in ("x-to-y", "y-to-x"):
        raise ValueError(f"unknown direction {direction!r}")
    require_rows(s)
    s = subsample(s, cfg.subsample_cap, cfg.seed)
    if direction == "y-to-x":
        s = s.swapped()
    s, _ = standardize(s)
    grid = make_grid(s, "x", cfg.grid_count)
    plan = plan_replicates(s.n, cfg.B, cfg.seed)
    with threadpool_limits(limits=1):
        base = fit_gpcm(s, cfg.gp, cfg.seed)
    mats = build_stat_matrices(s, grid, plan, cfg.gp, cfg.seed, workers=workers,
                               base=base, progress=progress)
    return permutation_pvalue(mats, cfg.permutations, cfg.seed)


def decide(xy: ExogeneityTestResult, yx: ExogeneityTestResult, alpha: float = 0.01,
           config: InferenceConfig | None = None) -> DirectionDecision:
    """Exogeneity "holds" in a direction when its p-value is strictly above alpha."""
    for r in (xy, yx):
        if not 0.0 <= r.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {r.p_value}")
    holds_xy = xy.p_value > alpha
    holds_yx = yx.p_value > alpha
    if holds_xy and not holds_yx:
        outcome = Outcome.X_CAUSES_Y
    elif holds_yx and not holds_xy:
        outcome = Outcome.Y_CAUSES_X
    elif holds_xy:
        outcome = Outcome.NON_IDENTIFIABLE
    else:
        outcome = Outcome.CONFOUNDER_SUSPECTED
    return DirectionDecision(outcome, xy, yx, config)


def infer_direction(s: PairedSample, cfg: InferenceConfig = InferenceConfig(),
                    workers: int = 1, progress=None) -> DirectionDecision:
    xy = if_exogeneity(s, "x-to-y", cfg, workers, progress)
    yx = if_exogeneity(s, "y-to-x", cfg, workers, progress)
    return decide(xy, yx, cfg.alpha, cfg)
