import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmdist import (
    Lip1Set,
    SemiDistancePair,
    SizeLimitError,
    box_distance,
    box_pair,
    hli_lambda,
    lip1_vertices,
    lip_point_distance,
    me_lambda,
    me_lambda_maps,
    metric_closure,
    mm_space,
    observable_distance,
    project_to_lip1,
    pullback_pair,
    semidist_pair,
)
from mmdist.instances import random_semidist_pair, random_space, random_space_total

from oracles import lip_vertices_active_sets, me_infimum_grid, sup_distance_to_lip_lp


class TestMeLambda:
    def test_identical_functions(self):
        assert me_lambda([1.0, 2.0], [1.0, 2.0], [0.5, 0.5], 1.0) == 0.0

    def test_point_three_gap_at_unit_lambda(self):
        # mass 0.5 above the candidate 0.3, and 0.5 > 0.3, so the infimum
        # sits at the gap itself (and is not attained in the weak form)
        assert me_lambda([0.3, 0.0], [0.0, 0.0], [0.5, 0.5], 1.0) == 0.3

    def test_point_three_gap_at_lambda_two(self):
        assert me_lambda([0.3, 0.0], [0.0, 0.0], [0.5, 0.5], 2.0) == 0.25

    def test_lambda_zero_is_support_sup(self):
        assert me_lambda([5.0, 1.0], [0.0, 1.0], [0.0, 0.7], 0.0) == 0.0 + 0.0
        assert me_lambda([5.0, 1.0], [0.0, 0.4], [0.0, 0.7], 0.0) == 0.6

    def test_matches_grid_infimum(self):
        rng = np.random.default_rng(61)
        for _ in range(40):
            n = int(rng.integers(1, 6))
            w = rng.integers(0, 9, size=n).astype(float) * 0.1
            if not w.any():
                w[0] = 0.5
            f = np.round(rng.uniform(-2, 2, size=n), 3)
            g = np.round(rng.uniform(-2, 2, size=n), 3)
            lam = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
            got = me_lambda(f, g, w, lam)
            want = me_infimum_grid(f, g, w, lam)
            # the grid oracle overshoots the infimum by at most one step
            step = (float(np.abs(f - g).max(initial=0.0)) + 1.0) / 20000
            assert want - step - 1e-12 <= got <= want + 1e-12

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 5), st.floats(0.0, 3.0), st.integers(0, 10_000))
    def test_metric_axioms_hypothesis(self, n, lam, key):
        rng = np.random.default_rng(key)
        w = rng.integers(1, 9, size=n).astype(float) * 0.1
        f, g, h = (np.round(rng.uniform(-2, 2, size=n), 3) for _ in range(3))
        assert me_lambda(f, g, w, lam) == me_lambda(g, f, w, lam)
        assert me_lambda(f, f, w, lam) == 0.0
        assert me_lambda(f, h, w, lam) <= me_lambda(f, g, w, lam) + me_lambda(
            g, h, w, lam
        ) + 1e-12

    def test_maps_variant_examples(self):
        d = np.array([[0.0, 1.0], [1.0, 0.0]])
        w = np.array([0.5, 0.5])
        assert me_lambda_maps([0, 1], [0, 1], w, d, 1.0) == 0.0
        # two constant maps at distance one, full mass at the gap
        assert me_lambda_maps([0, 0], [1, 1], w, d, 1.0) == 1.0
        # disagreement on mass 0.2 at distance 5
        d5 = np.array([[0.0, 5.0], [5.0, 0.0]])
        assert me_lambda_maps([0, 0], [1, 0], [0.2, 0.8], d5, 1.0) == pytest.approx(0.2)


class TestProjection:
    def test_lipschitz_input_is_fixed(self):
        d = np.array([[0.0, 1.0], [1.0, 0.0]])
        f = np.array([0.0, 0.8])
        assert np.allclose(project_to_lip1(f, d, [0, 1]), f)

    def test_projection_of_steep_function(self):
        d = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(project_to_lip1([0.0, 5.0], d, [0, 1]), [0.0, 1.0])

    def test_single_anchor_gives_cone(self):
        X = random_space(np.random.default_rng(2), min_points=3, max_points=5)
        f = np.zeros(X.n)
        out = project_to_lip1(f, X.dist, [0])
        assert np.allclose(out, X.dist[:, 0])

    def test_empty_anchor_rejected(self):
        with pytest.raises(ValueError):
            project_to_lip1([0.0], np.zeros((1, 1)), [])

    def test_output_always_lipschitz_for_metrics(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            X = random_space(rng, min_points=2, max_points=5)
            f = np.round(rng.uniform(-3, 3, size=X.n), 3)
            k = int(rng.integers(1, X.n + 1))
            anchor = rng.choice(X.n, size=k, replace=False)
            out = project_to_lip1(f, X.dist, anchor)
            assert Lip1Set(X.dist, X.weights).contains(out, tol=1e-9)


class TestVertices:
    def test_single_point(self):
        assert np.array_equal(lip1_vertices(np.zeros((1, 1)), [1.0]), np.zeros((1, 1)))

    def test_two_point_interval_endpoints(self):
        v = lip1_vertices([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
        assert sorted(map(tuple, v)) == [(0.0, -1.0), (0.0, 1.0)]

    def test_matches_active_set_enumeration(self):
        rng = np.random.default_rng(71)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            steps = rng.integers(50, 201, size=(n, n)).astype(float) / 100.0
            d = np.triu(steps, 1)
            d = d + d.T
            got = {
                tuple(np.round(v, 6)) for v in lip1_vertices(d, np.ones(n))
            }
            want = {tuple(np.round(v, 6)) for v in lip_vertices_active_sets(d)}
            assert got == want

    def test_equilateral_triangle_hexagon(self):
        d = np.ones((3, 3)) - np.eye(3)
        assert len(lip1_vertices(d, np.ones(3))) == 6

    def test_size_limit(self):
        n = 7
        d = np.ones((n, n)) - np.eye(n)
        with pytest.raises(SizeLimitError):
            lip1_vertices(d, np.ones(n))

    def test_vertices_are_members(self):
        rng = np.random.default_rng(73)
        for _ in range(20):
            X = random_space(rng, min_points=2, max_points=4)
            lset = Lip1Set(X.dist, X.weights)
            for v in lset.vertices():
                assert lset.contains(v, tol=1e-9)

    def test_samples_are_members(self):
        rng = np.random.default_rng(74)
        for _ in range(40):
            X = random_space(rng, min_points=1, max_points=5)
            lset = Lip1Set(X.dist, X.weights)
            assert lset.contains(lset.sample(rng), tol=1e-9)


class TestPointDistance:
    def test_matches_lp_at_lambda_zero(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(1, 5))
            steps = rng.integers(50, 201, size=(n, n)).astype(float) / 100.0
            d = np.triu(steps, 1)
            d = d + d.T
            f = np.round(rng.uniform(-2, 2, size=n), 3)
            got = lip_point_distance(f, d, np.ones(n), 0.0)
            want = sup_distance_to_lip_lp(f, metric_closure(d))
            assert got == pytest.approx(want, abs=1e-7)

    def test_members_are_at_distance_zero(self):
        rng = np.random.default_rng(79)
        X = random_space(rng, min_points=2, max_points=5)
        lset = Lip1Set(X.dist, X.weights)
        for _ in range(10):
            f = lset.sample(rng)
            assert lip_point_distance(f, X.dist, X.weights, 0.7) <= 1e-9


class TestHliPair:
    def test_identical_semimetrics(self):
        pair = semidist_pair([0.5, 0.5], [[0, 1], [1, 0]], [[0, 1], [1, 0]])
        assert hli_lambda(pair, 0.0).value == 0.0

    def test_cross_pair_golden_half(self):
        # the vertex (0, 2) of the wider set sits at sup-distance 0.5 from
        # the narrower set after the optimal translation
        pair = semidist_pair([0.5, 0.5], [[0, 1], [1, 0]], [[0, 2], [2, 0]])
        assert sup_distance_to_lip_lp([0.0, 2.0], [[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(0.5)
        res = hli_lambda(pair, 0.0)
        assert res.value == pytest.approx(0.5, abs=1e-12)
        assert res.tag == "exact"

    def test_smaller_semimetric_has_zero_directed_part(self):
        # d1 <= d2 entrywise nests the Lipschitz sets, so functions for d1
        # are already at distance zero from the d2 set
        rng = np.random.default_rng(83)
        for _ in range(20):
            pair = random_semidist_pair(rng, max_cells=4)
            d_small = np.minimum(pair.d1, pair.d2)
            for v in Lip1Set(d_small, pair.weights).vertices():
                assert lip_point_distance(v, pair.d2, pair.weights, 0.0) <= 1e-9

    def test_exact0_requires_lambda_zero(self):
        pair = semidist_pair([1.0], [[0.0]], [[0.0]])
        with pytest.raises(ValueError):
            hli_lambda(pair, 1.0, "exact0")

    def test_exact0_size_limit(self):
        n = 7
        d = np.ones((n, n)) - np.eye(n)
        pair = SemiDistancePair(np.ones(n), d, d)
        with pytest.raises(SizeLimitError):
            hli_lambda(pair, 0.0, "exact0")

    def test_pair_hausdorff_below_box(self):
        rng = np.random.default_rng(89)
        for k in range(40):
            pair = random_semidist_pair(rng, max_cells=4)
            h0 = hli_lambda(pair, 0.0).value
            assert h0 <= box_pair(pair, 0.0).value + 1e-9
            lam = float(rng.uniform(0.3, 2.0))
            res = hli_lambda(pair, lam, "sampled", samples=16, seed=k)
            assert res.tag == "lower-bound"
            assert res.value <= box_pair(pair, lam).value + 1e-9

    def test_sampled_lower_bound_below_exact_at_lambda_zero(self):
        rng = np.random.default_rng(97)
        for k in range(20):
            pair = random_semidist_pair(rng, max_cells=4)
            exact = hli_lambda(pair, 0.0).value
            sampled = hli_lambda(pair, 0.0, "sampled", samples=24, seed=k).value
            assert sampled <= exact + 1e-9


class TestObservableDistance:
    def test_isomorphic_spaces(self):
        X = mm_space([0.5, 0.5], [[0, 1], [1, 0]])
        assert observable_distance(X, X, 0.0).value == 0.0

    def test_two_point_golden_value(self):
        X = mm_space([0.5, 0.5], [[0, 1], [1, 0]])
        Y = mm_space([0.5, 0.5], [[0, 2], [2, 0]])
        # oracle: enumerate the coupling family, score by the vertex method
        best = np.inf
        for t in np.linspace(0.0, 0.5, 41):
            pi = np.array([[t, 0.5 - t], [0.5 - t, t]])
            ii, jj = np.nonzero(pi > 0)
            w = pi[ii, jj]
            d1 = X.dist[np.ix_(ii, ii)]
            d2 = Y.dist[np.ix_(jj, jj)]
            value = 0.0
            for da, db in ((d1, d2), (d2, d1)):
                for v in lip1_vertices(da, w):
                    value = max(value, sup_distance_to_lip_lp(v, metric_closure(db)))
            best = min(best, value)
        assert best == pytest.approx(0.5, abs=1e-7)
        res = observable_distance(X, Y, 0.0)
        assert res.value == pytest.approx(0.5, abs=1e-12)
        # the factor-two sandwich is tight on this pair
        b0 = box_distance(X, Y, 0.0).value
        assert res.value <= b0 <= 2 * res.value

    def test_sandwich_on_random_pairs(self):
        rng = np.random.default_rng(101)
        for _ in range(25):
            X = random_space(rng, max_points=3)
            Y = random_space(rng, max_points=3)
            h0 = observable_distance(X, Y, 0.0).value
            b0 = box_distance(X, Y, 0.0).value
            assert h0 <= b0 + 1e-9
            assert b0 <= 2 * h0 + 1e-9

    def test_space_level_matches_pair_on_best_coupling(self):
        # the certified coupling's vertex-based Hausdorff value must agree
        # with the space-level result computed through the box search
        from mmdist import Coupling

        rng = np.random.default_rng(103)
        checked = 0
        for _ in range(40):
            total = float(np.round(rng.uniform(0.5, 2.0), 2))
            X = random_space_total(rng, total, min_points=2, max_points=2)
            Y = random_space_total(rng, total, min_points=2, max_points=3)
            res = observable_distance(X, Y, 0.0)
            pair = pullback_pair(X, Y, Coupling(res.coupling, X.weights, Y.weights))
            if len(pair.support) <= 6:
                assert hli_lambda(pair, 0.0).value == pytest.approx(res.value, abs=1e-9)
                checked += 1
        assert checked >= 20

    def test_sampled_mode_is_tagged_heuristic(self):
        X = mm_space([0.5, 0.5], [[0, 1], [1, 0]])
        Y = mm_space([0.5, 0.5], [[0, 2], [2, 0]])
        res = observable_distance(X, Y, 1.0, "sampled", samples=8, seed=0)
        assert res.tag == "heuristic"
        assert res.value >= 0.0

    def test_mass_gap_rule(self):
        X = mm_space([1.0], [[0.0]])
        Y = mm_space([2.0], [[0.0]])
        assert observable_distance(X, Y, 0.0).value == 1.0
