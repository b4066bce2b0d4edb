"""The active-learning loop: select, ask, update, retrain, evaluate."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, TextIO

import numpy as np

from .data import Dataset, Label, PoolState, apply_oracle_answer
from .density import KdeModel, fit_kde, fit_kde_cv
from .metrics import MetricsRecord, compute_metrics
from .strategies import (
    QueryContext,
    StrategyKind,
    StrategyParams,
    build_knn_graph,
    select_query,
)
from .svdd import KernelSpec, SvddModel, train_svdd


class OracleAbort(Exception):
    """Raised by an oracle to stop the loop early."""


class Oracle(Protocol):
    def query(self, id: int) -> Label: ...


class GroundTruthOracle:
    def __init__(self, truth):
        self.truth = np.asarray(truth, dtype=int)
        self.calls: list[int] = []

    def query(self, id: int) -> Label:
        label = Label(int(self.truth[id]))
        if label == Label.UNLABELED:
            raise OracleAbort(f"no ground truth for sample {id}")
        self.calls.append(int(id))
        return label


def render_ascii(x, shape, ramp=" .:-=+*#%@") -> str:
    img = np.asarray(x, dtype=float).reshape(shape)
    lo, hi = img.min(), img.max()
    scaled = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo)
    idx = np.minimum((scaled * len(ramp)).astype(int), len(ramp) - 1)
    return "\n".join("".join(ramp[i] for i in row) for row in idx)


class InteractiveOracle:
    """Asks a person at the terminal. ``q`` (or end of input) aborts."""

    PROMPT = "label sample {id} as target? [y/n/q] "

    def __init__(self, X, display_shape=None, input_fn: Optional[Callable[[str], str]] = None,
                 out: TextIO = sys.stdout):
        self.X = np.asarray(X)
        self.display_shape = display_shape
        self.input_fn = input_fn or input
        self.out = out

    def show(self, id: int):
        x = self.X[id]
        if self.display_shape is not None:
            print(render_ascii(x, self.display_shape), file=self.out)
        else:
            print(np.array2string(x, precision=4, max_line_width=100), file=self.out)

    def query(self, id: int) -> Label:
        self.show(id)
        while True:
            try:
                reply = self.input_fn(self.PROMPT.format(id=id)).strip().lower()
            except EOFError:
                raise OracleAbort("input closed") from None
            if reply in ("y", "yes"):
                return Label.POSITIVE
            if reply in ("n", "no"):
                return Label.NEGATIVE
            if reply in ("q", "quit"):
                raise OracleAbort("aborted by user")
            print("please answer y, n or q", file=self.out)


@dataclass(frozen=True)
class LoopConfig:
    budget: int = 25
    strategy: StrategyKind = StrategyKind.EXPECTED_MARGIN
    retrain_each_round: bool = True
    density_refit_each_round: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", StrategyKind.parse(self.strategy))
        if self.budget < 1:
            raise ValueError("budget must be at least 1")


@dataclass(frozen=True)
class ModelParams:
    """Hyperparameters for one loop run. ``None`` bandwidths are chosen by
    leave-one-out likelihood each time the density is fitted."""

    gamma: float = 1.0
    C_pos: float = 1.0
    C_neg: float = 1.0
    h_pos: Optional[float] = None
    h_all: Optional[float] = None
    kernel: str = "rbf"
    tol: float = 1e-6
    strategy: StrategyParams = field(default_factory=StrategyParams)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel, self.gamma)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    selected_id: int
    oracle_answer: Label
    n_positive: int
    n_negative: int
    metrics: Optional[MetricsRecord]

    def as_dict(self):
        out = {
            "round": self.round,
            "selected_id": self.selected_id,
            "oracle_answer": int(self.oracle_answer),
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
        }
        if self.metrics is not None:
            out.update(self.metrics.as_dict())
        return out


@dataclass
class LoopTrace:
    records: list[RoundRecord]
    baseline: Optional[MetricsRecord]
    final_pool: PoolState
    aborted: bool = False
    model: Optional[SvddModel] = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


def _fit_density(points, h) -> KdeModel:
    return fit_kde(points, h) if h is not None else fit_kde_cv(points)


def _train(dataset: Dataset, pool: PoolState, hyper: ModelParams) -> SvddModel:
    return train_svdd(
        dataset.rows(pool.positives),
        dataset.rows(pool.negatives),
        hyper.kernel_spec(),
        hyper.C_pos,
        hyper.C_neg,
        tol=hyper.tol,
    )


def evaluate(model: SvddModel, dataset: Dataset, pool: PoolState) -> Optional[MetricsRecord]:
    if not pool.test or dataset.truth is None:
        return None
    pred = model.predict(dataset.rows(pool.test))
    return compute_metrics(pred, dataset.truth[list(pool.test)])


def run_loop(dataset: Dataset, pool: PoolState, cfg: LoopConfig, oracle: Oracle,
             hyper: ModelParams | None = None) -> LoopTrace:
    """Run ``cfg.budget`` query rounds.

    Each round fits ``p(x|+)`` on the current positives (``p(x)`` is fitted
    once on pool plus labelled data unless ``density_refit_each_round``),
    picks a pool sample with the configured rule, asks the oracle, moves the
    sample to P or N, retrains the SVDD on P + N and scores it on the test
    split. An :class:`OracleAbort` ends the run early with
    ``trace.aborted`` set.
    """
    hyper = hyper or ModelParams()
    if not pool.positives:
        raise ValueError("the loop needs at least one labelled positive")
    if cfg.budget > len(pool.unlabeled):
        raise ValueError(f"budget {cfg.budget} exceeds pool size {len(pool.unlabeled)}")

    kind = cfg.strategy
    rng = np.random.default_rng(hyper.strategy.seed)
    # the set P+N+U never changes during a run, only the labels within it
    support_ids = pool.training_side

    knn = None
    if kind == StrategyKind.NEIGHBORHOOD_SVDD:
        k = min(hyper.strategy.k, len(support_ids) - 1)
        knn = build_knn_graph(dataset.rows(support_ids), k, ids=support_ids)

    model = _train(dataset, pool, hyper)
    baseline = evaluate(model, dataset, pool)
    needs_density = kind in (StrategyKind.EXPECTED_MARGIN, StrategyKind.EXPECTED_ENTROPY)
    all_density = None

    records: list[RoundRecord] = []
    aborted = False
    for t in range(1, cfg.budget + 1):
        pos_density = None
        if needs_density:
            if all_density is None or cfg.density_refit_each_round:
                all_density = _fit_density(dataset.rows(support_ids), hyper.h_all)
            pos_density = _fit_density(dataset.rows(pool.positives), hyper.h_pos)
        ctx = QueryContext(
            X=dataset.X,
            pool=pool,
            pos_density=pos_density,
            all_density=all_density,
            svdd=model,
            knn=knn,
            params=hyper.strategy,
            rng=rng,
        )
        chosen = select_query(kind, ctx)
        try:
            answer = Label(oracle.query(chosen))
        except OracleAbort:
            aborted = True
            break
        pool = apply_oracle_answer(pool, chosen, answer)
        if cfg.retrain_each_round:
            model = _train(dataset, pool, hyper)
        records.append(RoundRecord(
            round=t,
            selected_id=chosen,
            oracle_answer=answer,
            n_positive=len(pool.positives),
            n_negative=len(pool.negatives),
            metrics=evaluate(model, dataset, pool),
        ))
    return LoopTrace(records, baseline, pool, aborted, model)
