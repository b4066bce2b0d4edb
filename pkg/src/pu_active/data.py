"""Samples, labels, pools and the train/pool/test split protocol."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np


class Label(enum.IntEnum):
    POSITIVE = 1
    NEGATIVE = -1
    UNLABELED = 0


class DatasetError(ValueError):
    pass


class PoolError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    id: int
    x: np.ndarray


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus optional ground truth.

    ``X`` has one row per sample; a sample's id is its row index. ``truth``
    holds integer :class:`Label` values. ``Label.UNLABELED`` in ``truth``
    means the true label is unknown for that row (e.g. rows waiting for an
    interactive oracle).
    """

    X: np.ndarray
    truth: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        object.__setattr__(self, "X", X)
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=int))

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i) -> Sample:
        return Sample(int(i), self.X[i])

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]

    def rows(self, ids: Sequence[int]) -> np.ndarray:
        """Feature rows for ``ids``; every feature access in the pipeline goes
        through here so that data access can be audited."""
        return self.X[np.asarray(ids, dtype=int)].reshape(len(ids), self.dim)


@dataclass
class ValidationReport:
    n_samples: int
    dimension: int
    n_positive: int = 0
    n_negative: int = 0
    n_missing_truth: int = 0
    has_truth: bool = False
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __str__(self):
        lines = [
            f"samples:   {self.n_samples}",
            f"dimension: {self.dimension}",
        ]
        if self.has_truth:
            lines.append(f"targets:   {self.n_positive}")
            lines.append(f"outliers:  {self.n_negative}")
            if self.n_missing_truth:
                lines.append(f"unlabeled: {self.n_missing_truth}")
        else:
            lines.append("truth:     none")
        lines.append("status:    " + ("ok" if self.ok else "INVALID"))
        lines.extend(f"  - {p}" for p in self.problems)
        return "\n".join(lines)


def validate_dataset(d: Dataset) -> ValidationReport:
    n = len(d)
    dim = d.X.shape[1] if d.X.ndim == 2 else 0
    report = ValidationReport(n_samples=n, dimension=dim)
    if n == 0:
        report.problems.append("dataset is empty")
    if dim < 1:
        report.problems.append("feature dimension must be >= 1")
    bad = ~np.isfinite(d.X)
    if bad.any():
        rows = np.unique(np.nonzero(bad)[0])
        report.problems.append(
            f"non-finite feature values in {rows.size} sample(s), first id {rows[0]}"
        )
    if d.truth is not None:
        report.has_truth = True
        t = d.truth
        if t.ndim != 1 or t.shape[0] != n:
            report.problems.append(
                f"truth length {t.shape[0] if t.ndim else 0} does not match {n} samples"
            )
        else:
            unknown = ~np.isin(t, [int(l) for l in Label])
            if unknown.any():
                report.problems.append(f"unknown truth value {t[unknown][0]}")
            report.n_positive = int(np.sum(t == Label.POSITIVE))
            report.n_negative = int(np.sum(t == Label.NEGATIVE))
            report.n_missing_truth = int(np.sum(t == Label.UNLABELED))
    return report


def _ids(values: Iterable[int]) -> tuple[int, ...]:
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class PoolState:
    """Immutable partition of dataset ids.

    ``positives``/``negatives`` are the labelled sets P and N, ``unlabeled``
    is the query pool U and ``test`` the held-out evaluation split T. All
    four are insertion-ordered tuples.
    """

    positives: tuple[int, ...] = ()
    negatives: tuple[int, ...] = ()
    unlabeled: tuple[int, ...] = ()
    test: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("positives", "negatives", "unlabeled", "test"):
            object.__setattr__(self, name, _ids(getattr(self, name)))
        seen: set[int] = set()
        for group in (self.positives, self.negatives, self.unlabeled, self.test):
            s = set(group)
            if len(s) != len(group) or seen & s:
                raise PoolError("pool sets must be pairwise disjoint and duplicate-free")
            seen |= s

    @property
    def labeled(self) -> tuple[int, ...]:
        return self.positives + self.negatives

    @property
    def training_side(self) -> tuple[int, ...]:
        """Every id a learner may look at: labelled plus pool."""
        return self.positives + self.negatives + self.unlabeled

    def label_of(self, i: int) -> Label:
        if i in self.positives:
            return Label.POSITIVE
        if i in self.negatives:
            return Label.NEGATIVE
        return Label.UNLABELED


def apply_oracle_answer(p: PoolState, id: int, answer: Label) -> PoolState:
    id = int(id)
    if id not in p.unlabeled:
        raise PoolError(f"sample {id} is not in the unlabeled pool")
    answer = Label(answer)
    if answer == Label.UNLABELED:
        raise PoolError("oracle answer must be POSITIVE or NEGATIVE")
    u = tuple(i for i in p.unlabeled if i != id)
    if answer == Label.POSITIVE:
        return replace(p, positives=p.positives + (id,), unlabeled=u)
    return replace(p, negatives=p.negatives + (id,), unlabeled=u)


@dataclass(frozen=True)
class SplitSpec:
    pool_size: int = 200
    train_fraction_of_targets: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError("pool_size must be positive")
        if not 0.0 < self.train_fraction_of_targets < 1.0:
            raise ValueError("train_fraction_of_targets must lie in (0, 1)")


def protocol_split(d: Dataset, s: SplitSpec) -> PoolState:
    """Random pool / training-target / test partition.

    ``pool_size`` ids are drawn uniformly as the unlabelled pool. Of the
    targets left over, ``floor(train_fraction * count)`` become the initial
    positives; everything else goes to the test split. No negatives are
    labelled at the start.
    """
    if d.truth is None:
        raise DatasetError("protocol_split requires ground-truth labels")
    n = len(d)
    if s.pool_size >= n:
        raise DatasetError(f"pool_size {s.pool_size} must be smaller than dataset size {n}")
    rng = np.random.default_rng(s.seed)
    pool = np.sort(rng.choice(n, size=s.pool_size, replace=False))
    rest = np.setdiff1d(np.arange(n), pool)
    targets = rest[d.truth[rest] == Label.POSITIVE]
    n_train = int(np.floor(s.train_fraction_of_targets * targets.size))
    if n_train == 0:
        raise DatasetError("no training targets left outside the pool")
    positives = np.sort(rng.permutation(targets)[:n_train])
    test = np.setdiff1d(rest, positives)
    return PoolState(positives=positives, unlabeled=pool, test=test)


def pool_from_labels(d: Dataset) -> PoolState:
    """Partition a partially labelled dataset for interactive use: rows with
    truth ``+1`` seed P, ``-1`` seed N and ``0`` form the pool. No test split."""
    if d.truth is None:
        raise DatasetError("dataset carries no labels; at least one target row is needed")
    t = d.truth
    return PoolState(
        positives=np.flatnonzero(t == Label.POSITIVE),
        negatives=np.flatnonzero(t == Label.NEGATIVE),
        unlabeled=np.flatnonzero(t == Label.UNLABELED),
    )
