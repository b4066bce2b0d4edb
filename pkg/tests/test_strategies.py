import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import pdist, squareform

from oracles import quad_entropy, quad_margin
from pu_active.data import PoolState
from pu_active.density import fit_kde
from pu_active.strategies import (
    KnnGraph,
    MarginVariant,
    QueryContext,
    StrategyError,
    StrategyKind,
    StrategyParams,
    build_knn_graph,
    exact_expected_margin,
    expected_entropy_score,
    expected_margin_score,
    neighborhood_scores,
    neighborhood_select,
    relevance_select,
    select_query,
)
from pu_active.svdd import KernelSpec, train_svdd


class TestMarginScore:
    def test_zero(self):
        assert expected_margin_score(0.0) == 1.0

    def test_valid_regime(self):
        assert expected_margin_score(0.25) == pytest.approx(0.75)
        assert quad_margin(0.25) == pytest.approx(0.75, abs=1e-12)

    def test_documented_discrepancy_at_one(self):
        assert expected_margin_score(1.0) == 0.0
        assert quad_margin(1.0) == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(0.5, 50.0, exclude_min=True))
    def test_difference_identity(self, a):
        assert expected_margin_score(a) - exact_expected_margin(a) == pytest.approx(-1 / (2 * a), abs=1e-12)


class TestExactMargin:
    def test_values(self):
        assert exact_expected_margin(0.25) == pytest.approx(0.75)
        assert exact_expected_margin(1.0) == pytest.approx(0.5)
        assert quad_margin(1.0) == pytest.approx(0.5, abs=1e-12)

    def test_global_minimum(self):
        a_star = 1 / math.sqrt(2)
        assert exact_expected_margin(a_star) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
        assert exact_expected_margin(a_star) == pytest.approx(0.414214, abs=1e-6)
        scan = np.linspace(0.05, 3.0, 400)
        q = np.array([quad_margin(a) for a in scan])
        assert q.min() >= math.sqrt(2) - 1 - 1e-10
        assert abs(scan[q.argmin()] - a_star) < 0.01

    def test_continuity_at_half(self):
        assert exact_expected_margin(0.5) == 0.5
        assert exact_expected_margin(0.5 + 1e-12) == pytest.approx(0.5, abs=1e-9)

    @given(st.floats(0.0, 1e6))
    def test_nonnegative(self, a):
        assert exact_expected_margin(a) >= 0


class TestEntropyScore:
    def test_endpoints(self):
        assert expected_entropy_score(0.0) == 0.0
        assert expected_entropy_score(1.0) == 0.5
        assert quad_entropy(1.0) == pytest.approx(0.5, abs=1e-12)

    def test_values_against_quadrature(self):
        assert quad_entropy(0.2) == pytest.approx(0.30391, abs=1e-5)
        assert quad_entropy(0.8) == pytest.approx(0.54902, abs=1e-5)
        assert expected_entropy_score(0.2) == pytest.approx(quad_entropy(0.2), abs=1e-12)
        assert expected_entropy_score(0.8) == pytest.approx(quad_entropy(0.8), abs=1e-12)

    def test_ratio_above_one_is_clamped(self):
        assert expected_entropy_score(3.0) == 0.5

    @given(st.floats(1e-9, 1 - 1e-9))
    def test_positive_inside(self, a):
        assert expected_entropy_score(a) > 0

    def test_interior_maximum_beats_clamped_value(self):
        a = np.linspace(0.01, 0.99, 981)
        s = expected_entropy_score(a)
        assert s.max() > 0.5
        assert 0.7 < a[s.argmax()] < 0.8


class TestKnnGraph:
    def test_collinear(self):
        X = np.array([[0.0], [1.0], [3.0]])
        g = build_knn_graph(X, 1)
        D = squareform(pdist(X))
        np.fill_diagonal(D, np.inf)
        nearest = D.argmin(axis=1)
        want = {i: set() for i in range(3)}
        for i, j in enumerate(nearest):
            want[i].add(int(j))
            want[int(j)].add(i)
        assert {i: set(v) for i, v in g.adjacency.items()} == want
        assert g.degree(1) == 2

    def test_complete_when_k_is_n_minus_1(self, rng):
        g = build_knn_graph(rng.normal(size=(6, 2)), 5)
        assert all(g.degree(i) == 5 for i in range(6))

    def test_duplicates(self):
        X = np.array([[0.0], [0.0], [0.0], [5.0]])
        g = build_knn_graph(X, 1)
        assert all(i not in g.neighbors(i) for i in range(4))
        for i, nb in g.adjacency.items():
            for j in nb:
                assert i in g.neighbors(j)
        # 0 picks 1 (tie with 2, lower id wins); 1, 2 and the far point 3 all pick 0
        assert g.neighbors(0) == (1, 2, 3)
        assert g.neighbors(2) == (0,)

    def test_k_too_large(self, rng):
        with pytest.raises(ValueError):
            build_knn_graph(rng.normal(size=(4, 2)), 4)

    def test_custom_ids(self):
        g = build_knn_graph([[0.0], [1.0], [3.0]], 1, ids=[10, 20, 30])
        assert g.neighbors(20) == (10, 30)


@dataclass
class FixedScores:
    """Stand-in one-class model with a preset score per row of X."""

    scores: np.ndarray
    R: float = 1.0

    def score(self, X):
        return self.scores[X[:, 0].astype(int)]

    def distance(self, X):
        return self.R - self.score(X)


class FixedRatios(QueryContext):
    def __init__(self, ratios, **kw):
        n = len(ratios)
        super().__init__(X=np.arange(n, dtype=float)[:, None],
                         pool=PoolState(positives=(), unlabeled=tuple(range(n))), **kw)
        self._a = np.asarray(ratios, dtype=float)

    def ratios(self, ids):
        return self._a[ids]


def index_ctx(n, unlabeled, scores, **kw):
    X = np.arange(n, dtype=float)[:, None]
    return QueryContext(X=X, pool=PoolState(unlabeled=unlabeled), svdd=FixedScores(np.asarray(scores, float)), **kw)


class TestRelevance:
    def test_single(self):
        assert relevance_select(index_ctx(3, (2,), [0, 0, 0])) == 2

    def test_argmax(self):
        scores = np.zeros(6)
        scores[2], scores[5] = -0.1, 0.3
        assert relevance_select(index_ctx(6, (2, 5), scores)) == 5

    def test_tie(self):
        scores = np.zeros(8)
        scores[4] = scores[7] = 0.2
        assert relevance_select(index_ctx(8, (7, 4), scores)) == 4

    def test_empty_pool(self):
        with pytest.raises(StrategyError):
            relevance_select(index_ctx(3, (), [0, 0, 0]))


class TestNeighborhood:
    def _toy(self, sigma):
        # path graph 0-1-2-3 plus edge 1-3; P={0}, U={1,2,3}
        X = np.arange(4, dtype=float)[:, None]
        g = KnnGraph(k=2, adjacency={0: (1,), 1: (0, 2, 3), 2: (1, 3), 3: (1, 2)})
        pool = PoolState(positives=(0,), unlabeled=(1, 2, 3))
        svdd = FixedScores(np.array([0.0, 0.5, 0.1, 0.9]), R=1.0)
        return QueryContext(X=X, pool=pool, svdd=svdd, knn=g,
                            params=StrategyParams(sigma=sigma, k=2))

    def test_sigma_one_is_boundary_only(self):
        ctx = self._toy(1.0)
        # |d - R| = |score|, smallest at id 2
        assert neighborhood_select(ctx) == 2

    def test_sigma_zero_bruteforce(self):
        ctx = self._toy(0.0)
        ybar = {0: 1, 1: 0, 2: 0, 3: 0}
        adj = ctx.knn.adjacency
        brute = {i: sum(ybar[j] + 1 for j in adj[i]) / (2 * 2) for i in (1, 2, 3)}
        np.testing.assert_allclose(neighborhood_scores(ctx, np.array([1, 2, 3])),
                                   [brute[1], brute[2], brute[3]])
        assert neighborhood_select(ctx) == min(brute, key=lambda i: (brute[i], i))

    def test_negative_neighbors_attract(self):
        ctx = self._toy(0.0)
        ctx.pool = PoolState(positives=(0,), negatives=(3,), unlabeled=(1, 2))
        # id 2: neighbours 1 (unlabeled, 1) and 3 (negative, 0) -> lowest
        assert neighborhood_select(ctx) == 2

    def test_singleton_pool(self):
        ctx = QueryContext(X=np.zeros((2, 1)), pool=PoolState(positives=(0,), unlabeled=(1,)),
                           svdd=FixedScores(np.zeros(2)), knn=KnnGraph(k=1, adjacency={}))
        assert neighborhood_select(ctx) == 1

    def test_missing_graph(self):
        with pytest.raises(StrategyError):
            neighborhood_select(index_ctx(3, (1,), [0, 0, 0]))


class TestSelectQuery:
    def test_margin(self):
        scores = expected_margin_score(np.array([0.1, 0.55, 0.9]))
        np.testing.assert_allclose(scores, [0.9, -0.45, -0.1])
        assert select_query(StrategyKind.EXPECTED_MARGIN, FixedRatios([0.1, 0.55, 0.9])) == 1

    def test_exact_margin_variant(self):
        ctx = FixedRatios([0.1, 0.71, 2.0], params=StrategyParams(margin_variant=MarginVariant.EXACT))
        assert select_query("margin", ctx) == 1

    def test_entropy(self):
        assert select_query(StrategyKind.EXPECTED_ENTROPY, FixedRatios([0.2, 0.8])) == 1

    def test_random_deterministic(self):
        picks = []
        for _ in range(2):
            ctx = FixedRatios(np.zeros(50), rng=np.random.default_rng(9))
            picks.append(select_query(StrategyKind.RANDOM, ctx))
        assert picks[0] == picks[1]

    def test_unprepared_context(self):
        ctx = QueryContext(X=np.zeros((3, 1)), pool=PoolState(unlabeled=(0, 1, 2)))
        with pytest.raises(StrategyError):
            select_query(StrategyKind.EXPECTED_MARGIN, ctx)

    def test_parse_names(self):
        assert StrategyKind.parse("entropy") is StrategyKind.EXPECTED_ENTROPY
        assert StrategyKind.parse("max_relevance") is StrategyKind.MAX_RELEVANCE
        with pytest.raises(ValueError):
            StrategyKind.parse("committee")


class ScaledKde:
    """Density model whose outputs are multiplied by a constant."""

    def __init__(self, model, factor):
        self.model, self.log_factor = model, math.log(factor)

    d = property(lambda self: self.model.d)
    log_peak = property(lambda self: self.model.log_peak + self.log_factor)

    def log_density(self, X):
        return self.model.log_density(X) + self.log_factor


def realistic_context(seed, **kw):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(size=(40, 2)), rng.normal(loc=2.0, size=(40, 2))])
    pool = PoolState(positives=tuple(range(10)), unlabeled=tuple(range(10, 80)))
    pos = fit_kde(X[:10], 0.5)
    all_ = fit_kde(X, 0.6)
    svdd = train_svdd(X[:10], None, KernelSpec("rbf", 0.5), 1.0)
    return QueryContext(X=X, pool=pool, pos_density=pos, all_density=all_, svdd=svdd,
                        knn=build_knn_graph(X, 5), rng=np.random.default_rng(seed), **kw)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("factor", [1e-3, 7.0, 1e6])
def test_scale_invariance_of_choice(seed, factor):
    ctx = realistic_context(seed)
    for kind in (StrategyKind.EXPECTED_MARGIN, StrategyKind.EXPECTED_ENTROPY):
        base = select_query(kind, ctx)
        ctx2 = realistic_context(seed)
        ctx2.pos_density = ScaledKde(ctx2.pos_density, factor)
        ctx2.all_density = ScaledKde(ctx2.all_density, factor)
        assert select_query(kind, ctx2) == base


@pytest.mark.parametrize("kind", list(StrategyKind))
def test_selectors_pick_from_pool_and_repeat(kind):
    a = select_query(kind, realistic_context(3))
    b = select_query(kind, realistic_context(3))
    assert a == b
    assert a in realistic_context(3).pool.unlabeled
