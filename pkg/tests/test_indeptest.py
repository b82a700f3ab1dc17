import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exocause.bootstrap import StatMatrices, center_rows
from exocause.errors import ShapeMismatch
from exocause.indeptest import hsic_linear_stat, permutation_pvalue


def naive_stat(R, S):
    """Four-index loop: sum over grid pairs (i, j) of (sum_b R_ib S_jb)^2."""
    n, b = R.shape
    total = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(b):
                acc += R[i, k] * S[j, k]
            total += acc * acc
    return total


def test_hand_computed():
    R = np.array([[1.0, -1.0]])
    assert hsic_linear_stat(R, R) == 4.0
    assert hsic_linear_stat(R, np.zeros_like(R)) == 0.0


def test_accepts_stat_matrices():
    R = center_rows(np.random.default_rng(0).standard_normal((4, 6)))
    m = StatMatrices(R, 2 * R)
    assert hsic_linear_stat(m) == pytest.approx(hsic_linear_stat(R, 2 * R))


@pytest.mark.parametrize("shape", [(5, 8), (8, 5), (3, 3), (1, 12)])
def test_matches_naive_loop(shape):
    rng = np.random.default_rng(sum(shape))
    R = center_rows(rng.standard_normal(shape))
    S = center_rows(rng.standard_normal(shape))
    assert hsic_linear_stat(R, S) == pytest.approx(naive_stat(R, S), rel=1e-10)


def test_both_paths_agree():
    rng = np.random.default_rng(3)
    R = center_rows(rng.standard_normal((30, 30)))
    S = center_rows(rng.standard_normal((30, 30)))
    gram = np.sum((R.T @ R) * (S.T @ S))
    frob = np.sum((R @ S.T) ** 2)
    assert gram == pytest.approx(frob, rel=1e-10)
    # one column more flips which path is used
    R2, S2 = R[:, :29], S[:, :29]
    assert hsic_linear_stat(R2, S2) == pytest.approx(np.sum((R2 @ S2.T) ** 2), rel=1e-10)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        hsic_linear_stat(np.zeros((2, 3)), np.zeros((3, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(2, 9), st.integers(0, 2 ** 31 - 1))
def test_joint_permutation_invariance_and_nonnegativity(n, b, seed):
    rng = np.random.default_rng(seed)
    R = center_rows(rng.standard_normal((n, b)))
    S = center_rows(rng.standard_normal((n, b)))
    perm = rng.permutation(b)
    c = hsic_linear_stat(R, S)
    assert c >= 0
    assert hsic_linear_stat(R[:, perm], S[:, perm]) == pytest.approx(c, rel=1e-10, abs=1e-300)


def test_degree_two_homogeneity():
    rng = np.random.default_rng(4)
    R = center_rows(rng.standard_normal((1, 10)))
    S = center_rows(rng.standard_normal((1, 10)))
    assert hsic_linear_stat(3.0 * R, S) == pytest.approx(9.0 * hsic_linear_stat(R, S))
    assert hsic_linear_stat(R, -2.0 * S) == pytest.approx(4.0 * hsic_linear_stat(R, S))


def test_self_dependence_rejects():
    R = center_rows(np.random.default_rng(5).standard_normal((10, 50)))
    res = permutation_pvalue(StatMatrices(R, R.copy()), permutations=500, seed=1)
    assert res.p_value <= 0.01
    assert res.b_effective == 50


def test_pvalue_smoothing_and_determinism():
    rng = np.random.default_rng(6)
    m = StatMatrices(center_rows(rng.standard_normal((6, 20))),
                     center_rows(rng.standard_normal((6, 20))))
    a = permutation_pvalue(m, 200, seed=9)
    b = permutation_pvalue(m, 200, seed=9)
    assert a == b
    assert 1 / 201 <= a.p_value <= 1.0
    zero = StatMatrices(np.zeros((3, 12)), np.zeros((3, 12)))
    assert permutation_pvalue(zero, 100, 0).p_value == 1.0


@pytest.mark.parametrize("kwargs", [{"permutations": 0}, {"permutations": 99}])
def test_preconditions(kwargs):
    m = StatMatrices(np.zeros((3, 12)), np.zeros((3, 12)))
    with pytest.raises(ValueError):
        permutation_pvalue(m, seed=0, **kwargs)
    with pytest.raises(ValueError):
        permutation_pvalue(StatMatrices(np.zeros((3, 9)), np.zeros((3, 9))), 100, 0)


@pytest.mark.slow
def test_calibration_small():
    rng = np.random.default_rng(7)
    rejections = 0
    for t in range(200):
        m = StatMatrices(center_rows(rng.standard_normal((10, 30))),
                         center_rows(rng.standard_normal((10, 30))))
        rejections += permutation_pvalue(m, 500, seed=t).p_value <= 0.05
    assert 0.02 <= rejections / 200 <= 0.09
