import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pcmap.combine import LOG_FLOOR, conditional_pc, fisher_pc_pvalue, pc_field
from pcmap.core import new_pvalue_matrix


def df4_closed(x):
    return math.exp(-x / 2) * (1 + x / 2)


def test_single_pvalue_is_identity():
    assert fisher_pc_pvalue([0.2], 1) == pytest.approx(0.2, abs=1e-15)


def test_two_pvalues_global_null():
    expected = df4_closed(-2 * math.log(0.02))
    assert fisher_pc_pvalue([0.1, 0.2], 1) == pytest.approx(expected, abs=1e-14)
    assert fisher_pc_pvalue([0.1, 0.2], 1) == pytest.approx(0.0982405, abs=1e-7)


def test_smallest_pvalue_dropped():
    expected = df4_closed(-2 * math.log(0.25))
    assert fisher_pc_pvalue([0.01, 0.5, 0.5], 2) == pytest.approx(expected, abs=1e-14)
    assert fisher_pc_pvalue([0.5, 0.01, 0.5], 2) == pytest.approx(0.5965736, abs=1e-7)


@pytest.mark.parametrize("gamma", [1, 2, 3, 4])
def test_all_ones(gamma):
    assert fisher_pc_pvalue([1.0] * 4, gamma) == 1.0


def test_zero_is_clamped():
    v = fisher_pc_pvalue([0.0, 0.3], 1)
    assert 0.0 <= v < 1e-290
    assert fisher_pc_pvalue([0.0], 1) == pytest.approx(LOG_FLOOR, rel=1e-9)


def test_input_validation():
    with pytest.raises(ValueError):
        fisher_pc_pvalue([0.2, 1.1], 1)
    with pytest.raises(ValueError):
        fisher_pc_pvalue([0.2, 0.3], 3)


@given(st.floats(min_value=LOG_FLOOR, max_value=1.0))
def test_identity_for_one_subject(p):
    assert fisher_pc_pvalue([p], 1) == pytest.approx(p, abs=1e-12)


pvecs = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8)


@given(pvecs, st.data())
def test_permutation_invariance(p, data):
    gamma = data.draw(st.integers(1, len(p)))
    perm = data.draw(st.permutations(p))
    assert fisher_pc_pvalue(perm, gamma) == fisher_pc_pvalue(p, gamma)


@given(pvecs, st.data())
def test_monotone_in_each_input(p, data):
    gamma = data.draw(st.integers(1, len(p)))
    i = data.draw(st.integers(0, len(p) - 1))
    bigger = list(p)
    bigger[i] = data.draw(st.floats(min_value=p[i], max_value=1.0))
    assert fisher_pc_pvalue(bigger, gamma) >= fisher_pc_pvalue(p, gamma)


def test_pc_field_matches_scalar():
    vals = np.random.default_rng(5).uniform(size=(5, 4)) ** 2
    f = pc_field(new_pvalue_matrix(vals))
    for j in range(5):
        for g in range(1, 5):
            assert f.pc[j, g - 1] == fisher_pc_pvalue(vals[j], g)


def test_pc_field_small_cases():
    assert pc_field(new_pvalue_matrix([[0.3]])).pc.tolist() == [[pytest.approx(0.3, abs=1e-15)]]
    f = pc_field(new_pvalue_matrix([[1.0, 1.0, 1.0], [0.1, 0.2, 0.3]]))
    assert f.pc[0].tolist() == [1.0, 1.0, 1.0]


@pytest.mark.slow
def test_null_super_uniformity():
    # three non-null subjects with p = 0 and seven nulls; gamma = 4 is a true PC null
    rng = np.random.default_rng(99)
    vals = np.concatenate([np.zeros((100_000, 3)), rng.uniform(size=(100_000, 7))], axis=1)
    pc = pc_field(new_pvalue_matrix(vals)).pc[:, 3]
    # H0: empirical CDF <= uniform CDF
    assert stats.kstest(pc, "uniform", alternative="greater").pvalue > 0.01


def test_conditional_pc():
    assert conditional_pc(0.05, 0.1) == pytest.approx(0.5)
    assert conditional_pc(0.1, 0.1) == 1.0
    assert conditional_pc(0.0, 0.5) == 0.0
    with pytest.raises(ValueError):
        conditional_pc(0.2, 0.1)
    with pytest.raises(ValueError):
        conditional_pc(0.0, 0.0)
