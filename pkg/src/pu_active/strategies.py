"""Query-selection rules.

The two PU rules depend on a sample only through the likelihood ratio
``a = p(x|+) / p(x)``. With the class prior ``P`` integrated out under a
uniform prior:

* expected margin  ``E|1 - 2aP|``  (smaller is more uncertain)
* expected entropy ``E H(aP)``     (larger is more uncertain)

``expected_margin_score`` keeps the widely quoted closed form
``(1 - a) sgn(1/2 - a)``, which only equals the integral for ``a <= 1/2``;
``exact_expected_margin`` is the true integral for every ``a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .data import PoolState
from .density import KdeModel, likelihood_ratio
from .svdd import SvddModel


class StrategyError(ValueError):
    pass


class StrategyKind(str, enum.Enum):
    RANDOM = "random"
    MAX_RELEVANCE = "relevance"
    NEIGHBORHOOD_SVDD = "neighborhood"
    EXPECTED_MARGIN = "margin"
    EXPECTED_ENTROPY = "entropy"

    @classmethod
    def parse(cls, value) -> "StrategyKind":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        for kind in cls:
            if v in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown strategy {value!r}")


ALL_STRATEGIES = tuple(StrategyKind)


class MarginVariant(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    EXACT = "exact"


@dataclass(frozen=True)
class StrategyParams:
    sigma: float = 0.5
    c: float = 1.0
    k: int = 5
    seed: int = 0
    margin_variant: MarginVariant = MarginVariant.CLOSED_FORM

    def __post_init__(self):
        object.__setattr__(self, "margin_variant", MarginVariant(self.margin_variant))
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.k < 1:
            raise ValueError("k must be positive")


# --- closed-form scores -----------------------------------------------------

def expected_margin_score(a):
    """``(1 - a) * sgn(1/2 - a)``.

    At ``a = 1/2`` the value is taken from the ``a < 1/2`` branch (1/2), so
    the formula agrees with the integral on the whole of ``[0, 1/2]``.
    """
    a = np.asarray(a, dtype=float)
    out = np.where(a <= 0.5, 1.0 - a, a - 1.0)
    return out[()] if out.ndim == 0 else out


def exact_expected_margin(a):
    """Integral of ``|1 - 2aP|`` over ``P`` in [0, 1]."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        big = a - 1.0 + 0.5 / np.where(a > 0.5, a, 1.0)
    out = np.where(a <= 0.5, 1.0 - a, big)
    return out[()] if out.ndim == 0 else out


def expected_entropy_score(a):
    """``[-a^2 ln a + a + (a-1)^2 ln(1-a)] / (2a)`` with ``a`` clamped to [0, 1]."""
    a = np.clip(np.asarray(a, dtype=float), 0.0, 1.0)
    inner = (a > 0.0) & (a < 1.0)
    s = np.where(inner, a, 0.5)
    val = (-(s**2) * np.log(s) + s + (1.0 - s) ** 2 * np.log1p(-s)) / (2.0 * s)
    out = np.where(inner, val, np.where(a >= 1.0, 0.5, 0.0))
    return out[()] if out.ndim == 0 else out


# --- neighbourhood graph ----------------------------------------------------

@dataclass(frozen=True)
class KnnGraph:
    k: int
    adjacency: dict = field(default_factory=dict)

    def neighbors(self, i) -> tuple[int, ...]:
        return self.adjacency.get(int(i), ())

    def degree(self, i) -> int:
        return len(self.neighbors(i))


def build_knn_graph(samples, k: int, ids=None) -> KnnGraph:
    """Symmetrised k-nearest-neighbour graph under Euclidean distance.

    ``ids`` names the rows of ``samples`` (defaults to ``0..n-1``). Distance
    ties resolve toward the lower id.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n = X.shape[0]
    ids = np.arange(n) if ids is None else np.asarray(ids, dtype=int)
    if len(ids) != n:
        raise ValueError("ids must match the number of samples")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    D = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D, np.inf)
    nbrs: dict[int, set] = {int(i): set() for i in ids}
    for r in range(n):
        # lexsort: last key primary -> distance, then id
        order = np.lexsort((ids, D[r]))
        for c in order[:k]:
            a, b = int(ids[r]), int(ids[c])
            nbrs[a].add(b)
            nbrs[b].add(a)
    return KnnGraph(k=k, adjacency={i: tuple(sorted(s)) for i, s in nbrs.items()})


# --- query context and selectors -----------------------------------------------

@dataclass
class QueryContext:
    """Everything a selector may look at. Holds features only, never truth."""

    X: np.ndarray
    pool: PoolState
    pos_density: Optional[KdeModel] = None
    all_density: Optional[KdeModel] = None
    svdd: Optional[SvddModel] = None
    knn: Optional[KnnGraph] = None
    params: StrategyParams = field(default_factory=StrategyParams)
    rng: Optional[np.random.Generator] = None

    def candidates(self) -> np.ndarray:
        u = np.asarray(self.pool.unlabeled, dtype=int)
        if u.size == 0:
            raise StrategyError("the unlabeled pool is empty")
        return u

    def ratios(self, ids) -> np.ndarray:
        if self.pos_density is None or self.all_density is None:
            raise StrategyError("density models are required for the PU rules")
        return likelihood_ratio(self.pos_density, self.all_density, self.X[ids])


def _argmin_lowest_id(ids, values):
    order = np.lexsort((ids, values))
    return int(ids[order[0]])


def _argmax_lowest_id(ids, values):
    return _argmin_lowest_id(ids, -np.asarray(values, dtype=float))


def relevance_select(ctx: QueryContext) -> int:
    """Pool sample the one-class model scores highest."""
    ids = ctx.candidates()
    if ctx.svdd is None:
        raise StrategyError("relevance selection needs a trained SVDD")
    return _argmax_lowest_id(ids, ctx.svdd.score(ctx.X[ids]))


def neighborhood_scores(ctx: QueryContext, ids) -> np.ndarray:
    p = ctx.params
    if ctx.knn is None:
        raise StrategyError("neighbourhood selection needs a k-NN graph")
    if ctx.svdd is None:
        raise StrategyError("neighbourhood selection needs a trained SVDD")
    boundary = np.abs(ctx.svdd.distance(ctx.X[ids]) - ctx.svdd.R) / p.c
    weight = {i: 2 for i in ctx.pool.positives}
    weight.update({i: 0 for i in ctx.pool.negatives})
    members = set(ctx.pool.training_side)
    local = np.array([
        sum(weight.get(j, 1) for j in ctx.knn.neighbors(i) if j in members)
        for i in ids
    ], dtype=float)
    return p.sigma * boundary + (1.0 - p.sigma) / (2.0 * ctx.knn.k) * local


def neighborhood_select(ctx: QueryContext) -> int:
    ids = ctx.candidates()
    return _argmin_lowest_id(ids, neighborhood_scores(ctx, ids))


def margin_select(ctx: QueryContext) -> int:
    ids = ctx.candidates()
    a = ctx.ratios(ids)
    if ctx.params.margin_variant == MarginVariant.EXACT:
        scores = exact_expected_margin(a)
    else:
        scores = expected_margin_score(a)
    return _argmin_lowest_id(ids, scores)


def entropy_select(ctx: QueryContext) -> int:
    ids = ctx.candidates()
    return _argmax_lowest_id(ids, expected_entropy_score(ctx.ratios(ids)))


def random_select(ctx: QueryContext) -> int:
    ids = ctx.candidates()
    rng = ctx.rng if ctx.rng is not None else np.random.default_rng(ctx.params.seed)
    return int(ids[rng.integers(ids.size)])


_SELECTORS = {
    StrategyKind.RANDOM: random_select,
    StrategyKind.MAX_RELEVANCE: relevance_select,
    StrategyKind.NEIGHBORHOOD_SVDD: neighborhood_select,
    StrategyKind.EXPECTED_MARGIN: margin_select,
    StrategyKind.EXPECTED_ENTROPY: entropy_select,
}


def select_query(kind, ctx: QueryContext) -> int:
    return _SELECTORS[StrategyKind.parse(kind)](ctx)
