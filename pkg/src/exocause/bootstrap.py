"""Paired bootstrap replicates and the centered R / S matrices."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from threadpoolctl import threadpool_limits

from .dataset import EvalGrid, PairedSample, MIN_ROWS
from .errors import OptimizationFailure, ReplicateFailure, ShapeMismatch, TooManyFailures
from .gpcm import GpCondModel, GpConfig, fit_gpcm, mc_draws, neg_entropy_grid
from .kde import kde_log_density, silverman_bandwidth

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class ReplicatePlan:
    b_count: int
    index_sets: np.ndarray  # (B, n) row indices
    seed: int


@dataclass(frozen=True)
class StatMatrices:
    R: np.ndarray
    S: np.ndarray
    R_raw: np.ndarray | None = field(default=None, repr=False)
    S_raw: np.ndarray | None = field(default=None, repr=False)
    kept: tuple = ()
    failed: tuple = ()

    def __post_init__(self):
        if self.R.shape != self.S.shape or self.R.ndim != 2:
            raise ShapeMismatch(f"R {self.R.shape} and S {self.S.shape} must be equal 2-d shapes")
        if not (np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.S))):
            raise ValueError("R and S must be finite")
        if self.R.shape[1] and max(np.abs(self.R.mean(axis=1)).max(),
                                   np.abs(self.S.mean(axis=1)).max()) > 1e-9:
            raise ValueError("R and S rows must be centered")

    @property
    def b_effective(self) -> int:
        return int(self.R.shape[1])

    def dump_raw(self, path) -> None:
        """Write the uncentered matrices as JSON (row-major floats)."""
        payload = {
            "n_grid": int(self.R_raw.shape[0]),
            "B": int(self.R_raw.shape[1]),
            "R_raw": self.R_raw.ravel().tolist(),
            "S_raw": self.S_raw.ravel().tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)


def child_seed(seed: int, b: int, salt: int = 0) -> int:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, b, salt])
    return int(ss.generate_state(1)[0])


def plan_replicates(n: int, B: int, seed: int) -> ReplicatePlan:
    if n < MIN_ROWS:
        raise ValueError(f"n must be >= {MIN_ROWS}, got {n}")
    if B < 2:
        raise ValueError(f"B must be >= 2, got {B}")
    sets = np.empty((B, n), dtype=np.int64)
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, b]))
        sets[b] = rng.integers(0, n, size=n)
    sets.flags.writeable = False
    return ReplicatePlan(B, sets, seed)


def center_rows(m: np.ndarray) -> np.ndarray:
    return m - m.mean(axis=1, keepdims=True)


def replicate_columns(s: PairedSample, grid: EvalGrid, idx, cfg: GpConfig, draws: np.ndarray,
                      seed: int, base: GpCondModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Raw R and S columns for one resample ``s[idx]``.

    The fit is warm-started from ``base`` when given. A failed fit is
    retried once from a cold start with a different seed.
    """
    rs = s.take(idx)
    h = silverman_bandwidth(rs.x)
    r_col = kde_log_density(rs.x, h, grid)
    try:
        model = fit_gpcm(rs, cfg, seed, init=base)
    except (OptimizationFailure, linalg.LinAlgError, FloatingPointError) as exc:
        log.debug("replicate fit failed (%s); retrying cold", exc)
        model = fit_gpcm(rs, cfg, seed ^ 0x5A5A5A5A)
    s_col = neg_entropy_grid(model, grid, cfg, draws=draws)
    if not (np.all(np.isfinite(r_col)) and np.all(np.isfinite(s_col))):
        raise OptimizationFailure("non-finite replicate summary")
    return r_col, s_col


def _run_chunk(args):
    s, grid, plan_sets, bs, cfg, draws, seed, base = args
    out = []
    with threadpool_limits(limits=1):
        for b in bs:
            try:
                cols = replicate_columns(s, grid, plan_sets[b], cfg, draws,
                                         child_seed(seed, b, 1), base)
                out.append((b, cols, None))
            except Exception as exc:  # noqa: BLE001 - recorded as ReplicateFailure
                out.append((b, None, repr(exc)))
    return out


def build_stat_matrices(s: PairedSample, grid: EvalGrid, plan: ReplicatePlan,
                        gp_cfg: GpConfig = GpConfig(), seed: int = 0, workers: int = 1,
                        base: GpCondModel | None = None, progress=None) -> StatMatrices:
    """Assemble centered R (log marginal density) and S (conditional
    negative entropy) across the replicates of ``plan``.

    ``base`` is the full-sample conditional model used to warm-start each
    replicate fit; it is fitted here when not supplied. Results do not
    depend on ``workers``.
    """
    B = plan.b_count
    n_grid = grid.count
    draws = mc_draws(gp_cfg.mc_samples, seed)
    if base is None:
        with threadpool_limits(limits=1):
            base = fit_gpcm(s, gp_cfg, seed)

    chunks = [list(range(i, B, max(workers, 1))) for i in range(max(workers, 1))]
    jobs = [(s, grid, plan.index_sets, bs, gp_cfg, draws, seed, base) for bs in chunks if bs]
    results = []
    if workers <= 1:
        for b in range(B):
            results.extend(_run_chunk((s, grid, plan.index_sets, [b], gp_cfg, draws, seed, base)))
            if progress is not None:
                progress(b + 1, B)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_chunk, jobs):
                results.extend(chunk)
                if progress is not None:
                    progress(len(results), B)

    R_raw = np.full((n_grid, B), np.nan)
    S_raw = np.full((n_grid, B), np.nan)
    failed = []
    for b, cols, err in results:
        if cols is None:
            failed.append(b)
            log.warning("%s", ReplicateFailure(b, err))
            continue
        R_raw[:, b], S_raw[:, b] = cols
    if len(failed) > MAX_FAILURE_FRACTION * B:
        raise TooManyFailures(f"{len(failed)} of {B} replicates failed")
    kept = tuple(b for b in range(B) if b not in set(failed))
    R_raw = R_raw[:, list(kept)]
    S_raw = S_raw[:, list(kept)]
    return StatMatrices(center_rows(R_raw), center_rows(S_raw), R_raw, S_raw,
                        kept, tuple(sorted(failed)))
