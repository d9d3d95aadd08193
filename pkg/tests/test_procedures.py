import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adafilter_t0_grid, bh_quadratic, benjamini_heller_loop
from pcmap.combine import fisher_pc_pvalue, pc_field
from pcmap.core import RejectionSet, new_pvalue_matrix
from pcmap.procedures import (Procedure, adafilter, adafilter_stats, adafilter_threshold, analyze,
                              benjamini_heller, bh, cofilter_adaptive, cofilter_fixed, default_tau_grid,
                              lower_bounds_from_rejections, run_granularities, superimpose)

probs = st.floats(min_value=0.0, max_value=1.0)


def mixed_pvalues(rng, n):
    signal = rng.uniform(size=n) < 0.3
    return np.where(signal, rng.beta(0.1, 5.0, n), rng.uniform(size=n))


# --- BH -----------------------------------------------------------------

def test_bh_nothing_significant():
    assert bh([1, 1, 1], 0.05).size == 0


def test_bh_hand_trace():
    assert bh([0.01, 0.02, 0.04, 0.5], 0.05).tolist() == [0, 1]


def test_bh_step_up_from_top():
    assert bh([0.049, 0.049], 0.05).tolist() == [0, 1]


def test_bh_empty_and_errors():
    assert bh([], 0.05).size == 0
    with pytest.raises(ValueError):
        bh([0.1], 0.0)
    with pytest.raises(ValueError):
        bh([1.5], 0.05)


def test_bh_matches_quadratic_oracle():
    rng = np.random.default_rng(1)
    for _ in range(300):
        p = mixed_pvalues(rng, int(rng.integers(1, 60)))
        assert bh(p, 0.1).tolist() == bh_quadratic(p, 0.1)


@given(st.lists(probs, max_size=40), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_bh_monotone_in_alpha(p, a1, a2):
    lo, hi = sorted((a1, a2))
    assert set(bh(p, lo)) <= set(bh(p, hi))


# --- Benjamini-Heller -----------------------------------------------------

def test_bh_selective_all_ones():
    m = new_pvalue_matrix(np.ones((4, 3)))
    assert benjamini_heller(m, 0.05).d.tolist() == [0, 0, 0, 0]


def test_bh_selective_single_voxel():
    assert benjamini_heller(new_pvalue_matrix([[0.01]]), 0.05).d.tolist() == [1]


def test_bh_selective_two_voxels():
    rows = [[1e-6, 1e-6], [0.9, 0.9]]
    p11 = fisher_pc_pvalue(rows[0], 1)
    p12 = fisher_pc_pvalue(rows[0], 2)
    assert p11 <= 0.025 and p12 == pytest.approx(1e-6)
    d = benjamini_heller(new_pvalue_matrix(rows), 0.05).d
    assert d.tolist() == [2 if p12 <= 0.025 else 1, 0]


def test_bh_selective_matches_loop():
    rng = np.random.default_rng(2)
    for _ in range(20):
        vals = mixed_pvalues(rng, 40 * 4).reshape(40, 4) ** 2
        assert benjamini_heller(new_pvalue_matrix(vals), 0.05).d.tolist() == benjamini_heller_loop(vals, 0.05)


def test_bh_selective_stops_at_first_failure():
    # p^{2/3} > theta >= p^{3/3}: the scan must stop at gamma = 2
    vals = np.array([[1e-3, 0.9, 0.9]])
    pc = pc_field(new_pvalue_matrix(vals)).pc[0]
    theta = 0.9
    assert pc[0] <= theta < pc[1] and pc[2] <= theta
    assert benjamini_heller(new_pvalue_matrix(vals), 0.9).d.tolist() == [1]
    assert benjamini_heller_loop(vals, 0.9) == [1]


# --- CoFilter -----------------------------------------------------------

PC4 = [0.001, 0.02, 0.2, 0.9]


def test_cofilter_fixed_hand_trace():
    rs = cofilter_fixed(PC4, 0.05, 0.1)
    assert rs.indices.tolist() == [0] and rs.tau_used == 0.1


def test_cofilter_fixed_tau_one_is_bh():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p = mixed_pvalues(rng, int(rng.integers(1, 80)))
        assert cofilter_fixed(p, 0.05, 1.0).indices.tolist() == bh(p, 0.05).tolist()


def test_cofilter_fixed_empty_selection():
    assert len(cofilter_fixed([0.5, 0.9], 0.05, 0.1)) == 0


def test_cofilter_adaptive_trace():
    for tau, expected in [(0.05, [0]), (0.1, [0]), (1.0, [0, 1])]:
        assert cofilter_fixed(PC4, 0.05, tau).indices.tolist() == expected
    rs = cofilter_adaptive(PC4, 0.05, [0.05, 0.1, 1.0])
    assert rs.indices.tolist() == [0, 1] and rs.tau_used == 1.0


def test_cofilter_adaptive_nothing_rejected():
    rs = cofilter_adaptive([0.8, 0.9], 0.05, [0.1, 0.5, 0.7])
    assert len(rs) == 0 and rs.tau_used == 0.7


def test_cofilter_adaptive_single_point_grid():
    p = mixed_pvalues(np.random.default_rng(4), 50)
    a = cofilter_adaptive(p, 0.05, [0.3])
    f = cofilter_fixed(p, 0.05, 0.3)
    assert a.indices.tolist() == f.indices.tolist() and a.tau_used == f.tau_used


def test_cofilter_adaptive_ties_go_to_largest_tau():
    # every tau in the grid rejects exactly the first voxel
    rs = cofilter_adaptive([1e-6, 0.95], 0.05, [0.01, 0.5, 0.9])
    assert rs.indices.tolist() == [0] and rs.tau_used == 0.9


def test_cofilter_adaptive_matches_fixed_loop():
    rng = np.random.default_rng(5)
    grid = default_tau_grid()
    for _ in range(30):
        p = mixed_pvalues(rng, int(rng.integers(1, 200)))
        best, best_tau = [], None
        for tau in grid:
            rs = cofilter_fixed(p, 0.05, tau)
            if len(rs) >= len(best):
                best, best_tau = rs.indices.tolist(), tau
        got = cofilter_adaptive(p, 0.05)
        assert got.indices.tolist() == best and got.tau_used == best_tau
        for tau in grid[::10]:
            assert len(got) >= len(cofilter_fixed(p, 0.05, tau))


@given(st.lists(probs, min_size=1, max_size=40), st.floats(0.01, 1.0), st.floats(0.001, 0.3), st.floats(0.001, 0.3))
def test_cofilter_fixed_monotone_in_alpha(p, tau, a1, a2):
    lo, hi = sorted((a1, a2))
    assert set(cofilter_fixed(p, lo, tau).indices) <= set(cofilter_fixed(p, hi, tau).indices)


def test_grid_validation():
    with pytest.raises(ValueError):
        cofilter_adaptive([0.1], 0.05, [])
    with pytest.raises(ValueError):
        cofilter_adaptive([0.1], 0.05, [0.5, 0.2])
    with pytest.raises(ValueError):
        cofilter_adaptive([0.1], 0.05, [0.0, 0.2])
    g = default_tau_grid()
    assert len(g) == 100 and g[0] == 0.01 and g[-1] == 1.0 and g[6] == 0.07


# --- AdaFilter ------------------------------------------------------------

@pytest.mark.parametrize("indexing", ["standard", "literal"])
def test_adafilter_all_ones(indexing):
    m = new_pvalue_matrix(np.ones((10, 3)))
    for g in (1, 2, 3):
        assert len(adafilter(m, g, 0.05, indexing)) == 0


@pytest.mark.parametrize("v", [0.001, 0.03, 0.049, 0.05, 0.2])
def test_adafilter_single_hypothesis(v):
    if v < 0.05:
        assert adafilter_threshold([v], [v], 0.05) == 0.05
    rejected = len(adafilter(new_pvalue_matrix([[v]]), 1, 0.05)) == 1
    assert rejected == (v < 0.05)


def test_adafilter_statistics():
    vals = new_pvalue_matrix([[0.3, 0.01, 0.2, 0.5]])
    st_ = adafilter_stats(vals, 2, 0.05)
    assert st_.f[0] == pytest.approx(3 * 0.01) and st_.sel[0] == pytest.approx(3 * 0.2)
    lit = adafilter_stats(vals, 2, 0.05, "literal")
    assert lit.f[0] == pytest.approx(min(3 * 0.3, 1)) and lit.sel[0] == 1.0
    assert adafilter_stats(vals, 1, 0.05).f[0] == 0.0
    assert (st_.f <= st_.sel).all() and 0 <= st_.t0 <= 0.05


def test_adafilter_spec_instance_vs_dense_grid():
    rng = np.random.default_rng(6)
    vals = np.vstack([[0.001, 0.01], rng.uniform(size=(200, 2))])
    st_ = adafilter_stats(new_pvalue_matrix(vals), 2, 0.05)
    t_grid = adafilter_t0_grid(st_.f, st_.sel, 0.05)
    assert np.array_equal(st_.sel < st_.t0, st_.sel < t_grid)


def test_adafilter_threshold_vs_dense_grid():
    rng = np.random.default_rng(7)
    for _ in range(40):
        m = int(rng.integers(20, 300))
        s = int(rng.integers(2, 6))
        g = int(rng.integers(1, s + 1))
        vals = mixed_pvalues(rng, m * s).reshape(m, s)
        st_ = adafilter_stats(new_pvalue_matrix(vals), g, 0.05)
        t_grid = adafilter_t0_grid(st_.f, st_.sel, 0.05)
        assert t_grid <= st_.t0 + 1e-15
        assert np.array_equal(st_.sel < st_.t0, st_.sel < t_grid)


# --- superimposition --------------------------------------------------------

def test_superimpose_all_ones():
    m = new_pvalue_matrix(np.ones((6, 3)))
    for proc in (Procedure("cofilter-fixed", tau=0.5), Procedure("cofilter-adaptive"), Procedure("adafilter"),
                 Procedure("bh-selective")):
        assert superimpose(m, proc).d.tolist() == [0] * 6


def test_lower_bound_is_max_not_prefix():
    sets = [RejectionSet(1, [0]), RejectionSet(2, []), RejectionSet(3, [0])]
    assert lower_bounds_from_rejections(sets, 1, 3).d.tolist() == [3]


@pytest.mark.parametrize("proc", [Procedure("cofilter-fixed", tau=0.2), Procedure("cofilter-adaptive"),
                                  Procedure("adafilter"), Procedure("adafilter", indexing="literal")])
def test_superimpose_matches_single_gamma_loop(proc):
    rng = np.random.default_rng(8)
    vals = mixed_pvalues(rng, 80).reshape(20, 4) ** 3
    matrix = new_pvalue_matrix(vals)
    pc = pc_field(matrix).pc
    d = np.zeros(20, dtype=int)
    for g in range(1, 5):
        if proc.method == "adafilter":
            rs = adafilter(matrix, g, proc.alpha, proc.indexing)
        elif proc.method == "cofilter-fixed":
            rs = cofilter_fixed(pc[:, g - 1], proc.alpha, proc.tau)
        else:
            rs = cofilter_adaptive(pc[:, g - 1], proc.alpha)
        d[rs.indices] = g
    assert superimpose(matrix, proc).d.tolist() == d.tolist()


def test_analyze_bh_selective_sets_nest():
    vals = mixed_pvalues(np.random.default_rng(9), 300).reshape(60, 5) ** 3
    matrix = new_pvalue_matrix(vals)
    d, sets = analyze(matrix, Procedure("bh-selective"))
    assert d.d.tolist() == benjamini_heller(matrix, 0.05).d.tolist()
    for a, b in zip(sets, sets[1:]):
        assert set(b.indices) <= set(a.indices)


def test_cofilter_sets_record_tau():
    vals = mixed_pvalues(np.random.default_rng(10), 200).reshape(50, 4)
    sets = run_granularities(new_pvalue_matrix(vals), Procedure("cofilter-adaptive"))
    assert [s.gamma for s in sets] == [1, 2, 3, 4]
    assert all(s.tau_used in default_tau_grid() for s in sets)


def test_procedure_validation():
    with pytest.raises(ValueError):
        Procedure("cofilter-fixed")
    with pytest.raises(ValueError):
        Procedure("nope")
    with pytest.raises(ValueError):
        Procedure("adafilter", indexing="other")
    assert Procedure("cofilter-adaptive").tau_grid == default_tau_grid()
    assert Procedure("cofilter-fixed", tau=0.1).label == "cofilter-fixed(tau=0.1)"
