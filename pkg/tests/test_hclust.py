import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treemimic import CountMatrix, cut, distance_matrix, leaf_order, to_proportions, ward_d2
from treemimic.hclust import Dendrogram, backend
from treemimic import _ward_cy, _ward_py

from conftest import random_counts
from reference_ward import reference_ward


def random_distance(rng, k):
    pts = rng.random((k, 3))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, 0.0)
    return d


def line_tree():
    pts = np.array([0.0, 1.0, 10.0, 11.0])
    return ward_d2(np.abs(pts[:, None] - pts[None, :]), assume_squared=False)


class TestWardD2:
    def test_two_leaves(self):
        d = ward_d2(np.array([[0.0, 3.0], [3.0, 0.0]]), assume_squared=False)
        assert d.left.tolist() == [0]
        assert d.right.tolist() == [1]
        assert d.heights[0] == pytest.approx(3.0)
        assert d.sizes.tolist() == [2]

    def test_two_leaves_squared_scale(self):
        d = ward_d2(np.array([[0.0, 9.0], [9.0, 0.0]]), assume_squared=True)
        assert d.heights[0] == pytest.approx(9.0)

    def test_line_example(self):
        # points at 0, 1, 10, 11: tight pairs first, then the two pairs
        # at the hand-derived Lance-Williams value sqrt(200)
        d = line_tree()
        assert d.left.tolist() == [0, 2, 4]
        assert d.right.tolist() == [1, 3, 5]
        assert d.heights[0] == pytest.approx(1.0)
        assert d.heights[1] == pytest.approx(1.0)
        assert d.heights[2] == pytest.approx(math.sqrt(200.0), rel=1e-12)
        assert d.sizes.tolist() == [2, 2, 4]

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(42)
        for trial in range(60):
            k = int(rng.integers(2, 13))
            dist = random_distance(rng, k)
            squared = bool(trial % 2)
            dend = ward_d2(dist, assume_squared=squared)
            ref = reference_ward(dist.tolist(), squared)
            assert dend.left.tolist() == [r[0] for r in ref]
            assert dend.right.tolist() == [r[1] for r in ref]
            assert dend.sizes.tolist() == [r[3] for r in ref]
            for got, (_, _, h, _) in zip(dend.heights, ref):
                assert got == pytest.approx(h, rel=1e-9)

    def test_oracle_equivalence_with_exact_ties(self):
        # integer-count data produces exact ties; the deterministic
        # tie-break must agree between kernel and reference
        rng = np.random.default_rng(99)
        for _ in range(40):
            k = int(rng.integers(3, 10))
            pm = to_proportions(random_counts(rng, k, 3, n_max=4))
            dist = distance_matrix(pm, "d0").values
            dend = ward_d2(dist, assume_squared=False)
            ref = reference_ward(dist.tolist(), False)
            assert dend.left.tolist() == [r[0] for r in ref]
            assert dend.right.tolist() == [r[1] for r in ref]

    def test_centroid_formula_oracle(self):
        # for Euclidean input, the merged pair's height equals
        # sqrt(2 * n_i n_j / (n_i + n_j) * ||centroid_i - centroid_j||^2)
        rng = np.random.default_rng(7)
        pts = rng.random((9, 4))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, 0.0)
        dend = ward_d2(d, assume_squared=False)
        members = {i: [i] for i in range(9)}
        for t in range(8):
            a, b = int(dend.left[t]), int(dend.right[t])
            ca = pts[members[a]].mean(axis=0)
            cb = pts[members[b]].mean(axis=0)
            na, nb = len(members[a]), len(members[b])
            expect = math.sqrt(2.0 * na * nb / (na + nb) * ((ca - cb) ** 2).sum())
            assert dend.heights[t] == pytest.approx(expect, rel=1e-9)
            members[9 + t] = members[a] + members[b]

    def test_left_child_holds_smaller_min_leaf(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            k = int(rng.integers(2, 12))
            dend = ward_d2(random_distance(rng, k), assume_squared=False)
            min_leaf = list(range(k)) + [0] * (k - 1)
            for t in range(k - 1):
                a, b = int(dend.left[t]), int(dend.right[t])
                assert min_leaf[a] < min_leaf[b]
                min_leaf[k + t] = min(min_leaf[a], min_leaf[b])

    def test_height_monotonicity(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            k = int(rng.integers(2, 20))
            dend = ward_d2(random_distance(rng, k), assume_squared=bool(k % 2))
            assert np.all(np.diff(dend.heights) >= 0.0)

    def test_determinism(self):
        rng = np.random.default_rng(31)
        d = random_distance(rng, 15)
        one = ward_d2(d, assume_squared=False)
        two = ward_d2(d, assume_squared=False)
        assert one.left.tolist() == two.left.tolist()
        assert np.array_equal(one.heights, two.heights)

    def test_backends_bit_identical(self):
        rng = np.random.default_rng(5)
        for trial in range(30):
            k = int(rng.integers(2, 25))
            d = random_distance(rng, k)
            work1 = np.array(d * d, dtype=np.float64, order="C")
            work2 = work1.copy()
            l1, r1, h1, s1 = _ward_cy.ward_merge(work1)
            l2, r2, h2, s2 = _ward_py.ward_merge(work2)
            assert np.array_equal(l1, l2) and np.array_equal(r1, r2)
            assert np.array_equal(h1, h2)
            assert np.array_equal(s1, s2)

    def test_backend_reported(self):
        assert backend() in ("compiled", "python")

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_label_permutation_isomorphic(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(3, 10))
        pts = rng.random((k, 3))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, 0.0)
        perm = rng.permutation(k)
        d2 = d[np.ix_(perm, perm)]
        t1 = ward_d2(d, assume_squared=False)
        t2 = ward_d2(d2, assume_squared=False)

        def node_sets(dend, to_orig):
            out = set()
            members = {i: frozenset([to_orig[i]]) for i in range(k)}
            for t in range(k - 1):
                s = members[int(dend.left[t])] | members[int(dend.right[t])]
                members[k + t] = s
                out.add((round(float(dend.heights[t]), 9), s))
            return out

        assert node_sets(t1, list(range(k))) == node_sets(t2, perm.tolist())

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            ward_d2(np.array([[0.0, 1.0], [2.0, 0.0]]), assume_squared=False)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ward_d2(np.array([[0.0, -1.0], [-1.0, 0.0]]), assume_squared=False)

    def test_measure_tag_sets_scale_convention(self, small_props):
        from treemimic import theoretical_variance

        d0 = distance_matrix(small_props, "d0")
        ds = distance_matrix(small_props, "dstar", theoretical_variance(small_props))
        t0 = ward_d2(d0)  # plain distances: squared internally
        ts = ward_d2(ds)  # already-squared dstar values
        ref0 = reference_ward(d0.values.tolist(), False)
        refs = reference_ward(ds.values.tolist(), True)
        assert t0.heights[0] == pytest.approx(ref0[0][2], rel=1e-12)
        assert ts.heights[0] == pytest.approx(refs[0][2], rel=1e-12)


class TestLeafOrder:
    def test_two_leaves(self):
        d = ward_d2(np.array([[0.0, 1.0], [1.0, 0.0]]), assume_squared=False)
        assert leaf_order(d).tolist() == [0, 1]

    def test_is_permutation(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            k = int(rng.integers(2, 15))
            d = ward_d2(random_distance(rng, k), assume_squared=False)
            assert sorted(leaf_order(d).tolist()) == list(range(k))

    def test_planted_clusters_contiguous(self):
        from treemimic import datasets

        cm, truth = datasets.gen_two_cluster(seed=4, per_cluster=6, n=5000)
        pm = to_proportions(cm)
        dend = ward_d2(distance_matrix(pm, "d0"))
        order = leaf_order(dend).tolist()
        positions = {
            name: sorted(pm.population_ids.index(x) for x in members)
            for name, members in truth["clusters"].items()
        }
        for members in positions.values():
            spots = sorted(order.index(i) for i in members)
            assert spots == list(range(spots[0], spots[0] + len(members)))


class TestCut:
    def test_extremes(self):
        d = line_tree()
        assert cut(d, 1).tolist() == [1, 1, 1, 1]
        assert sorted(cut(d, 4).tolist()) == [1, 2, 3, 4]

    def test_two_groups(self):
        d = line_tree()
        assert cut(d, 2).tolist() == [1, 1, 2, 2]

    def test_labels_follow_leaf_order(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            k = int(rng.integers(3, 12))
            d = ward_d2(random_distance(rng, k), assume_squared=False)
            g = int(rng.integers(1, k + 1))
            labels = cut(d, g)
            seen = []
            for leaf in leaf_order(d):
                if labels[leaf] not in seen:
                    seen.append(int(labels[leaf]))
            assert seen == list(range(1, g + 1))

    def test_planted_three_clusters(self):
        from treemimic import datasets

        cm, truth = datasets.gen_three_cluster(seed=2, per_cluster=5, n=5000)
        pm = to_proportions(cm)
        dend = ward_d2(distance_matrix(pm, "d0"))
        labels = cut(dend, 3)
        for members in truth["clusters"].values():
            idx = [pm.population_ids.index(x) for x in members]
            assert len({int(labels[i]) for i in idx}) == 1

    def test_out_of_range(self):
        d = line_tree()
        with pytest.raises(ValueError):
            cut(d, 0)
        with pytest.raises(ValueError):
            cut(d, 5)


class TestDendrogramValidation:
    def test_rejects_wrong_sizes(self):
        with pytest.raises(ValueError, match="size"):
            Dendrogram(3, [0, 3], [1, 2], [1.0, 2.0], [2, 4])

    def test_rejects_two_parents(self):
        with pytest.raises(ValueError, match="two parents"):
            Dendrogram(3, [0, 0], [1, 1], [1.0, 2.0], [2, 3])

    def test_rejects_decreasing_heights(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            Dendrogram(3, [0, 3], [1, 2], [2.0, 1.0], [2, 3])
