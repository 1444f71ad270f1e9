import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treemimic import (
    CountMatrix,
    build_ensemble,
    empirical_variance,
    load_blocked_counts,
    load_counts,
    theoretical_covariance,
    theoretical_variance,
    to_proportions,
)
from treemimic.errors import (
    CellValueError,
    DuplicateLabelError,
    HeaderError,
    RaggedRowError,
    ZeroRowError,
)
from treemimic.matrix import render_blocked_counts, render_counts

from conftest import random_counts


class TestLoadCounts:
    def test_two_by_two(self):
        cm = load_counts("population,x,y\na,3,1\nb,0,4\n")
        assert cm.population_ids == ("a", "b")
        assert cm.category_names == ("x", "y")
        assert cm.counts.tolist() == [[3, 1], [0, 4]]
        assert cm.row_sums.tolist() == [4, 4]

    def test_zero_total_row(self):
        with pytest.raises(ZeroRowError, match="zero-total population 'b'"):
            load_counts("population,x,y\na,3,1\nb,0,0\n")

    def test_pitcher_shaped_file(self):
        rng = np.random.default_rng(2017)
        k, m = 747, 15
        counts = rng.integers(0, 40, size=(k, m))
        counts[:, 0] += 1
        labels = [f"pitcher{i}" for i in range(k)]
        text = render_counts(CountMatrix(labels, [f"pitch{j}" for j in range(m)], counts))
        cm = load_counts(text)
        assert cm.n_populations == 747
        assert cm.n_categories == 15

    def test_crlf_accepted(self):
        cm = load_counts("population,x,y\r\na,3,1\r\nb,0,4\r\n")
        assert cm.row_sums.tolist() == [4, 4]

    def test_duplicate_population(self):
        with pytest.raises(DuplicateLabelError, match="'a'"):
            load_counts("population,x,y\na,3,1\na,0,4\n")

    def test_duplicate_category(self):
        with pytest.raises(DuplicateLabelError, match="category"):
            load_counts("population,x,x\na,3,1\nb,0,4\n")

    def test_negative_cell_names_row_and_column(self):
        with pytest.raises(CellValueError, match=r"row 3 'b', column 'y'"):
            load_counts("population,x,y\na,3,1\nb,2,-4\n")

    def test_non_integer_cell(self):
        with pytest.raises(CellValueError, match="not an integer"):
            load_counts("population,x,y\na,3,1\nb,2.5,4\n")

    def test_ragged_row(self):
        with pytest.raises(RaggedRowError, match="row 3"):
            load_counts("population,x,y\na,3,1\nb,2\n")

    def test_bad_header(self):
        with pytest.raises(HeaderError):
            load_counts("pop,x,y\na,3,1\n")

    def test_labels_trimmed(self):
        cm = load_counts("population, x ,y\n a ,3,1\nb,0,4\n")
        assert cm.population_ids[0] == "a"
        assert cm.category_names[0] == "x"

    def test_row_order_preserved(self):
        cm = load_counts("population,x,y\nzed,3,1\nalpha,0,4\n")
        assert cm.population_ids == ("zed", "alpha")


class TestRoundTrip:
    def test_simple(self, small_counts):
        assert load_counts(render_counts(small_counts)) == small_counts

    def test_awkward_labels(self):
        cm = CountMatrix(
            ('with,comma', 'with "quote"'),
            ("a b", "c,d"),
            np.array([[1, 2], [3, 4]]),
        )
        assert load_counts(render_counts(cm)) == cm

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_random_matrices(self, seed):
        rng = np.random.default_rng(seed)
        cm = random_counts(rng, int(rng.integers(2, 9)), int(rng.integers(2, 7)))
        assert load_counts(render_counts(cm)) == cm


class TestBlocked:
    TEXT = (
        "population,block,x,y\n"
        "a,t1,3,1\n"
        "a,t2,0,2\n"
        "b,t1,5,5\n"
    )

    def test_load_and_aggregate(self):
        bcm = load_blocked_counts(self.TEXT)
        assert bcm.block_ids == ("t1", "t2")
        agg = bcm.aggregate()
        assert agg.counts.tolist() == [[3, 3], [5, 5]]

    def test_missing_pair_is_zero_block(self):
        bcm = load_blocked_counts(self.TEXT)
        assert bcm.counts[1, 1].tolist() == [0, 0]

    def test_duplicate_pair(self):
        with pytest.raises(DuplicateLabelError):
            load_blocked_counts(self.TEXT + "a,t1,1,1\n")

    def test_round_trip(self):
        bcm = load_blocked_counts(self.TEXT)
        again = load_blocked_counts(render_blocked_counts(bcm))
        assert again.population_ids == bcm.population_ids
        assert np.array_equal(again.counts, bcm.counts)

    def test_zero_population_rejected(self):
        text = "population,block,x,y\na,t1,0,0\nb,t1,1,1\n"
        with pytest.raises(ZeroRowError):
            load_blocked_counts(text)


class TestProportions:
    def test_basic_rows(self):
        cm = load_counts("population,x,y,z\na,2,2,0\nb,1,0,0\n")
        pm = to_proportions(cm)
        assert pm.props[0].tolist() == [0.5, 0.5, 0.0]
        assert pm.props[1].tolist() == [1.0, 0.0, 0.0]

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_rows_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        cm = random_counts(rng, int(rng.integers(2, 12)), int(rng.integers(2, 9)))
        pm = to_proportions(cm)
        assert np.all(np.abs(pm.props.sum(axis=1) - 1.0) <= 1e-12)

    def test_exact_division(self, small_counts):
        pm = to_proportions(small_counts)
        assert pm.props[0, 0] == 5 / 10
        assert pm.row_sums.tolist() == small_counts.row_sums.tolist()


class TestTheoreticalMoments:
    def test_variance_half(self):
        cm = load_counts("population,x,y\na,50,50\nb,1,1\n")
        v = theoretical_variance(to_proportions(cm))
        assert v.vars[0, 0] == pytest.approx(0.0025, abs=1e-15)
        assert v.source == "theoretical"

    def test_variance_boundary_zero(self):
        cm = load_counts("population,x,y\na,7,0\nb,1,1\n")
        v = theoretical_variance(to_proportions(cm))
        assert v.vars[0, 0] == 0.0
        assert v.vars[0, 1] == 0.0

    def test_variance_formula(self):
        # 0.2 * 0.8 / 50
        cm = load_counts("population,x,y\na,10,40\nb,1,1\n")
        v = theoretical_variance(to_proportions(cm))
        assert v.vars[0, 0] == pytest.approx(0.0032, rel=1e-12)

    def test_covariance_values(self):
        cm = load_counts("population,x,y\na,5,5\nb,1,1\n")
        pm = to_proportions(cm)
        assert theoretical_covariance(pm, 0, 0, 1) == pytest.approx(-0.025, rel=1e-12)

    def test_covariance_zero_when_prop_zero(self):
        cm = load_counts("population,x,y,z\na,5,5,0\nb,1,1,1\n")
        pm = to_proportions(cm)
        assert theoretical_covariance(pm, 0, 0, 2) == 0.0

    def test_covariance_derived_example(self):
        # -0.3 * 0.2 / 60 = -0.001
        cm = load_counts("population,x,y,z\na,18,12,30\nb,1,1,1\n")
        pm = to_proportions(cm)
        assert theoretical_covariance(pm, 0, 0, 1) == pytest.approx(-0.001, rel=1e-12)

    def test_covariance_diagonal_rejected(self):
        cm = load_counts("population,x,y\na,5,5\nb,1,1\n")
        with pytest.raises(ValueError, match="theoretical_variance"):
            theoretical_covariance(to_proportions(cm), 0, 1, 1)

    def test_covariance_never_positive(self):
        rng = np.random.default_rng(5)
        pm = to_proportions(random_counts(rng, 6, 5))
        for k in range(6):
            for m in range(5):
                for m2 in range(m + 1, 5):
                    assert theoretical_covariance(pm, k, m, m2) <= 0.0


class TestEmpiricalVariance:
    def test_degenerate_rows_give_zero(self):
        # one-hot rows: every mimicry reproduces the observed matrix
        cm = load_counts("population,x,y\na,4,0\nb,0,9\n")
        pm = to_proportions(cm)
        ens = build_ensemble(cm, "homogeneous", 50, master_seed=1, build_trees=False)
        v = empirical_variance(pm, ens)
        assert np.all(v.vars == 0.0)
        assert v.source == "empirical"

    def test_zero_cell_stays_zero(self):
        cm = load_counts("population,x,y,z\na,4,6,0\nb,1,1,1\n")
        pm = to_proportions(cm)
        ens = build_ensemble(cm, "homogeneous", 200, master_seed=2, build_trees=False)
        assert empirical_variance(pm, ens).vars[0, 2] == 0.0

    def test_matches_theory_at_half(self):
        cm = load_counts("population,x,y\na,50,50\nb,25,75\n")
        pm = to_proportions(cm)
        ens = build_ensemble(cm, "homogeneous", 2000, master_seed=3, build_trees=False)
        v = empirical_variance(pm, ens)
        assert abs(v.vars[0, 0] - 0.0025) < 0.2 * 0.0025

    def test_moment_agreement_five_se(self):
        rng = np.random.default_rng(11)
        counts = rng.integers(5, 40, size=(4, 5))
        cm = CountMatrix([f"p{i}" for i in range(4)], [f"c{j}" for j in range(5)], counts)
        pm = to_proportions(cm)
        b = 2000
        ens = build_ensemble(cm, "homogeneous", b, master_seed=4,
                             build_trees=False, retain_matrices=True)
        props = np.array([r.props for r in ens.replicates])
        theo = theoretical_variance(pm).vars
        emp = empirical_variance(pm, ens).vars
        for k in range(4):
            for m in range(5):
                p = pm.props[k, m]
                if p in (0.0, 1.0) or pm.row_sums[k] < 20:
                    continue
                dev2 = (pm.props[k, m] - props[:, k, m]) ** 2
                se = np.sqrt(max(dev2.var(ddof=1), 1e-30) / b)
                assert abs(emp[k, m] - theo[k, m]) <= 5 * se

    def test_mismatched_ensemble_rejected(self, small_counts):
        other = load_counts("population,x,y\na,3,1\nb,0,4\n")
        ens = build_ensemble(other, "homogeneous", 10, master_seed=0, build_trees=False)
        with pytest.raises(ValueError, match="not built from"):
            empirical_variance(to_proportions(small_counts), ens)


class TestInvariants:
    def test_counts_must_be_integers(self):
        with pytest.raises(ValueError, match="integer"):
            CountMatrix(("a", "b"), ("x", "y"), np.array([[0.5, 1.0], [1.0, 1.0]]))

    def test_immutable(self, small_counts):
        with pytest.raises(ValueError):
            small_counts.counts[0, 0] = 99

    def test_minimum_shape(self):
        with pytest.raises(ValueError, match="at least 2"):
            CountMatrix(("a",), ("x", "y"), np.array([[1, 2]]))
