"""Comparator methods: slope-based IGCI and the additive-noise model (ANM)."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import PairedSample, standardize
from .errors import DegenerateVariable
from .gpcm import GpConfig, fit_gp_regression


class BaselineMethod(str, enum.Enum):
    IGCI = "IGCI"
    ANM = "ANM"


class BaselineOutcome(str, enum.Enum):
    X_CAUSES_Y = "XcausesY"
    Y_CAUSES_X = "YcausesX"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class BaselineDecision:
    method: BaselineMethod
    outcome: BaselineOutcome
    score_xy: float
    score_yx: float

    def as_dict(self) -> dict:
        return {"method": self.method.value, "outcome": self.outcome.value,
                "score_xy": self.score_xy, "score_yx": self.score_yx}


def _unit_rescale(v: np.ndarray, name: str) -> np.ndarray:
    lo, hi = float(np.min(v)), float(np.max(v))
    if not hi > lo:
        raise DegenerateVariable(f"{name} is constant")
    return (v - lo) / (hi - lo)


def _slope_score(a: np.ndarray, b: np.ndarray) -> float:
    order = np.argsort(a, kind="stable")
    da = np.diff(a[order])
    db = np.diff(b[order])
    ok = (da != 0) & (db != 0)
    if not np.any(ok):
        return 0.0
    return float(np.mean(np.log(np.abs(db[ok] / da[ok]))))


def igci_decide(s: PairedSample, tol: float = 1e-9) -> BaselineDecision:
    """Slope-based IGCI with a uniform reference measure.

    Both variables are rescaled to [0, 1]; the direction with the smaller
    mean log-slope is taken as causal.
    """
    x = _unit_rescale(s.x, "x")
    y = _unit_rescale(s.y, "y")
    sxy = _slope_score(x, y)
    syx = _slope_score(y, x)
    if abs(sxy - syx) < tol:
        outcome = BaselineOutcome.UNDECIDED
    elif sxy < syx:
        outcome = BaselineOutcome.X_CAUSES_Y
    else:
        outcome = BaselineOutcome.Y_CAUSES_X
    return BaselineDecision(BaselineMethod.IGCI, outcome, sxy, syx)


def _median_width(v: np.ndarray) -> float:
    d = np.abs(v[:, None] - v[None, :])
    med = np.median(d[np.triu_indices(v.size, 1)])
    return float(med) if med > 0 else 1.0


def _centered_gram(v: np.ndarray) -> np.ndarray:
    w = _median_width(v)
    k = np.exp(-0.5 * (v[:, None] - v[None, :]) ** 2 / w ** 2)
    return k - k.mean(axis=0) - k.mean(axis=1)[:, None] + k.mean()


def hsic_gaussian_pvalue(a, b, permutations: int = 500, seed: int = 0) -> tuple[float, float]:
    """Gaussian-kernel HSIC (median-heuristic widths) with a permutation p-value."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    ka = _centered_gram(a)
    kb = _centered_gram(b)
    n = a.size
    stat = float(np.sum(ka * kb)) / n ** 2
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x4853]))
    exceed = 0
    for _ in range(permutations):
        p = rng.permutation(n)
        if np.sum(ka * kb[np.ix_(p, p)]) / n ** 2 >= stat * (1 - 1e-12):
            exceed += 1
    return stat, (1 + exceed) / (permutations + 1)


def _residual_pvalue(cause, effect, permutations, seed):
    reg = fit_gp_regression(cause, effect)
    resid = effect - reg.predict(cause)
    return hsic_gaussian_pvalue(cause, resid, permutations, seed)[1]


def anm_decide(s: PairedSample, cfg: GpConfig = GpConfig(), permutations: int = 500,
               alpha: float = 0.05, seed: int = 0) -> BaselineDecision:
    """Additive-noise model: regress each way, test residual independence.

    Scores are the HSIC p-values of the residual-versus-input test; a
    direction is accepted when its p-value exceeds ``alpha``.
    """
    del cfg  # the plain regression carries its own fixed optimizer settings
    z, _ = standardize(s)
    p_xy = _residual_pvalue(z.x, z.y, permutations, seed)
    p_yx = _residual_pvalue(z.y, z.x, permutations, seed)
    if p_xy > alpha and p_yx <= alpha:
        outcome = BaselineOutcome.X_CAUSES_Y
    elif p_yx > alpha and p_xy <= alpha:
        outcome = BaselineOutcome.Y_CAUSES_X
    else:
        outcome = BaselineOutcome.UNDECIDED
    return BaselineDecision(BaselineMethod.ANM, outcome, p_xy, p_yx)
