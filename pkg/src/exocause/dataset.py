"""Pair ingestion, subsampling, standardization and the fixed evaluation grid."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DegenerateVariable, ParseError, TooFewRows

MIN_ROWS = 20


@dataclass(frozen=True)
class PairedSample:
    """Observed (x, y) pairs. Arrays are copied and made read-only."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        y = np.array(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError(f"x and y differ in length ({x.size} vs {y.size})")
        if x.size < 2:
            raise TooFewRows(f"need at least 2 rows, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample contains NaN or Inf")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def swapped(self) -> "PairedSample":
        return PairedSample(self.y, self.x)

    def take(self, idx) -> "PairedSample":
        idx = np.asarray(idx)
        return PairedSample(self.x[idx], self.y[idx])


@dataclass(frozen=True)
class EvalGrid:
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).ravel()
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    @property
    def count(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True)
class StandardizeTransform:
    mean_x: float
    std_x: float
    mean_y: float
    std_y: float

    def as_dict(self) -> dict:
        return {"mean_x": self.mean_x, "std_x": self.std_x,
                "mean_y": self.mean_y, "std_y": self.std_y}


def require_rows(s: PairedSample, minimum: int = MIN_ROWS) -> None:
    if s.n < minimum:
        raise TooFewRows(f"need at least {minimum} rows, got {s.n}")


def _split(line: str) -> list[str]:
    return line.replace(",", " ").split()


def _is_numeric(fields) -> bool:
    try:
        [float(f) for f in fields]
    except ValueError:
        return False
    return True


def load_pair(path, format: Literal["auto", "whitespace", "csv"] = "auto") -> PairedSample:
    """Read a two-column pair file.

    Blank lines and lines starting with ``#`` are skipped. For CSV input a
    non-numeric first data row is taken as a header. Columns beyond the
    second are dropped with a warning.
    """
    path = Path(path)
    if format == "auto":
        format = "csv" if path.suffix.lower() == ".csv" else "whitespace"
    if format not in ("whitespace", "csv"):
        raise ValueError(f"unknown pair file format {format!r}")

    xs, ys = [], []
    extra_cols = False
    first_data_row = True
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if format == "csv":
                fields = [f.strip() for f in stripped.split(",")]
                fields = [f for f in fields if f]
            else:
                fields = _split(stripped)
            if first_data_row and format == "csv" and not _is_numeric(fields[:2]):
                first_data_row = False
                continue
            first_data_row = False
            if len(fields) < 2:
                raise ParseError(path, line_no, line)
            try:
                xv, yv = float(fields[0]), float(fields[1])
            except ValueError:
                raise ParseError(path, line_no, line) from None
            if not (np.isfinite(xv) and np.isfinite(yv)):
                raise ParseError(path, line_no, line)
            extra_cols = extra_cols or len(fields) > 2
            xs.append(xv)
            ys.append(yv)

    if extra_cols:
        warnings.warn(f"{path}: columns beyond the second were ignored", stacklevel=2)
    if len(xs) < MIN_ROWS:
        raise TooFewRows(f"{path}: {len(xs)} rows parsed, need at least {MIN_ROWS}")
    return PairedSample(np.array(xs), np.array(ys))


def save_pair(s: PairedSample, path) -> None:
    np.savetxt(path, np.column_stack([s.x, s.y]), fmt="%.17g")


def subsample(s: PairedSample, cap: int, seed: int) -> PairedSample:
    """Draw at most ``cap`` rows without replacement; file order is kept."""
    if cap < MIN_ROWS:
        raise ValueError(f"cap must be >= {MIN_ROWS}, got {cap}")
    if s.n <= cap:
        return s
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(s.n, size=cap, replace=False))
    return s.take(idx)


def standardize(s: PairedSample) -> tuple[PairedSample, StandardizeTransform]:
    mx, my = float(np.mean(s.x)), float(np.mean(s.y))
    sx, sy = float(np.std(s.x, ddof=1)), float(np.std(s.y, ddof=1))
    if not sx > 0:
        raise DegenerateVariable("x is constant")
    if not sy > 0:
        raise DegenerateVariable("y is constant")
    out = PairedSample((s.x - mx) / sx, (s.y - my) / sy)
    return out, StandardizeTransform(mx, sx, my, sy)


def make_grid(s: PairedSample, on: Literal["x", "y"] = "x", count: int = 80) -> EvalGrid:
    """Evenly spaced grid from min to max of the chosen variable."""
    if count < 2:
        raise ValueError("grid needs at least 2 points")
    v = s.x if on in ("x", "x-axis") else s.y
    lo, hi = float(np.min(v)), float(np.max(v))
    if not lo < hi:
        raise DegenerateVariable(f"{on} has no spread (min == max == {lo})")
    return EvalGrid(np.linspace(lo, hi, count))
