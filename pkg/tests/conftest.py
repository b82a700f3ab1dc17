import numpy as np
import pytest

from exocause.dataset import PairedSample, standardize


@pytest.fixture
def linear_gaussian():
    """Y = X + 0.5 eps, n=300, standardized."""
    rng = np.random.default_rng(11)
    x = rng.standard_normal(300)
    y = x + 0.5 * rng.standard_normal(300)
    s, t = standardize(PairedSample(x, y))
    return s, t


@pytest.fixture(scope="session")
def fitted_linear():
    from exocause.gpcm import GpConfig, fit_gpcm

    rng = np.random.default_rng(5)
    x = rng.standard_normal(200)
    y = x + 0.5 * rng.standard_normal(200)
    s, t = standardize(PairedSample(x, y))
    return s, t, fit_gpcm(s, GpConfig(restarts=0), seed=3)


def write_rows(path, rows):
    path.write_text("\n".join(" ".join(str(v) for v in r) for r in rows) + "\n")
    return path
