"""Dataset loading, synthetic data, hyperparameter tuning and multi-seed
experiment orchestration with on-disk results."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .data import Dataset, DatasetError, Label, PoolState, SplitSpec, protocol_split, validate_dataset
from .density import default_bandwidth_grid, rule_of_thumb_bandwidth, select_bandwidth_loo
from .loop import GroundTruthOracle, LoopConfig, LoopTrace, ModelParams, run_loop
from .metrics import AggregateRecord, aggregate_runs, gain
from .strategies import ALL_STRATEGIES, MarginVariant, StrategyKind, StrategyParams
from .svdd import KernelSpec, SvddError, train_svdd

log = logging.getLogger(__name__)

_LABEL_TOKENS = {"1": Label.POSITIVE, "+1": Label.POSITIVE, "-1": Label.NEGATIVE, "0": Label.UNLABELED}


class FormatError(DatasetError):
    pass


# --- loaders ---------------------------------------------------------------------

def load_csv(path) -> Dataset:
    """Read ``f0,...,f{d-1},label`` rows (header line required).

    Labels are ``1`` (target), ``-1`` (outlier) or ``0`` (truth unknown).
    """
    path = Path(path)
    rows, labels = [], []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty file")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"{path}:{lineno}: ragged row ({len(row)} fields, expected {width})")
            *feats, token = (c.strip() for c in row)
            if token not in _LABEL_TOKENS:
                raise FormatError(f"{path}:{lineno}: unknown label token {token!r}")
            try:
                rows.append([float(v) for v in feats])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric feature ({exc})") from None
            labels.append(int(_LABEL_TOKENS[token]))
    if not rows:
        raise FormatError(f"{path}: no samples")
    return Dataset(np.array(rows, dtype=float), np.array(labels, dtype=int), name=path.stem)


def write_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    truth = dataset.truth if dataset.truth is not None else np.zeros(len(dataset), dtype=int)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(dataset.dim)] + ["label"])
        for x, t in zip(dataset.X, truth):
            w.writerow([repr(float(v)) for v in x] + [str(int(t))])


def load_svmlight(path, target_class=None) -> Dataset:
    """Read ``label idx:val ...`` lines with 1-based, strictly increasing
    indices into a dense matrix. ``#`` starts a comment.

    Without ``target_class`` a positive label is a target and anything else
    an outlier. With it, rows whose label equals ``target_class`` are targets
    (one-vs-rest for multi-class files).
    """
    path = Path(path)
    entries, labels = [], []
    dim = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            token, *pairs = line.split()
            try:
                value = float(token)
                hit = value > 0 if target_class is None else value == float(target_class)
                lab = Label.POSITIVE if hit else Label.NEGATIVE
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad label {token!r}") from None
            feats = {}
            last = 0
            for pair in pairs:
                try:
                    k, v = pair.split(":", 1)
                    idx, val = int(k), float(v)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: cannot parse {pair!r}") from None
                if idx < 1:
                    raise FormatError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                if idx <= last:
                    raise FormatError(f"{path}:{lineno}: feature indices must increase ({idx} after {last})")
                last = idx
                feats[idx] = val
            dim = max(dim, last)
            entries.append(feats)
            labels.append(int(lab))
    if not entries:
        raise FormatError(f"{path}: no samples")
    X = np.zeros((len(entries), max(dim, 1)))
    for r, feats in enumerate(entries):
        for idx, val in feats.items():
            X[r, idx - 1] = val
    return Dataset(X, np.array(labels, dtype=int), name=path.stem)


def _is_svmlight(path: Path) -> bool:
    return path.suffix.lower() in (".svm", ".svmlight", ".libsvm", ".txt")


def load_dataset(path, target_class=None) -> Dataset:
    path = Path(path)
    if _is_svmlight(path):
        return load_svmlight(path, target_class)
    return load_csv(path)


def standardize(dataset: Dataset) -> Dataset:
    sd = dataset.X.std(axis=0)
    sd[sd == 0] = 1.0
    return replace(dataset, X=(dataset.X - dataset.X.mean(axis=0)) / sd)


# --- synthetic data ---------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    n_target: int = 100
    n_outlier: int = 400
    d: int = 5
    target_mean: float | Sequence[float] = 0.0
    target_scale: float = 1.0
    outlier_mean: float | Sequence[float] = (2.5,)
    outlier_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_target < 1 or self.n_outlier < 1:
            raise ValueError("synthetic counts must be at least 1")
        if self.d < 1:
            raise ValueError("dimension must be at least 1")
        if not (self.target_scale > 0 and self.outlier_scale > 0):
            raise ValueError("scales must be positive")

    def _mean(self, value):
        """Scalars fill every coordinate; sequences are zero-padded to ``d``."""
        v = np.asarray(value, dtype=float)
        if v.ndim == 0:
            return np.full(self.d, float(v))
        if v.size > self.d:
            raise ValueError(f"mean has {v.size} entries for dimension {self.d}")
        return np.concatenate([v, np.zeros(self.d - v.size)])


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Isotropic Gaussian targets and outliers, targets listed first."""
    rng = np.random.default_rng(spec.seed)
    t = spec._mean(spec.target_mean) + spec.target_scale * rng.standard_normal((spec.n_target, spec.d))
    o = spec._mean(spec.outlier_mean) + spec.outlier_scale * rng.standard_normal((spec.n_outlier, spec.d))
    truth = np.concatenate([np.full(spec.n_target, int(Label.POSITIVE)),
                            np.full(spec.n_outlier, int(Label.NEGATIVE))])
    return Dataset(np.vstack([t, o]), truth, name="synthetic")


# --- hyperparameter tuning ------------------------------------------------------

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_GAMMA_EXPONENTS = tuple(range(-6, 5))


@dataclass
class TuningResult:
    h_pos: float
    h_all: float
    gamma: float
    C: float
    holdout_recall: float
    pool_acceptance: float


def gamma_grid(points, exponents=DEFAULT_GAMMA_EXPONENTS) -> np.ndarray:
    var = float(np.var(points))
    scale = 1.0 / (points.shape[1] * var) if var > 0 else 1.0
    return scale * 2.0 ** np.asarray(exponents, dtype=float)


def _loo_or_default(points, grid=None) -> float:
    if points.shape[0] < 2:
        return rule_of_thumb_bandwidth(points)
    grid = default_bandwidth_grid(points) if grid is None else grid
    try:
        return select_bandwidth_loo(points, grid)
    except ValueError:
        return rule_of_thumb_bandwidth(points)


def tune_hyperparameters(dataset: Dataset, pool: PoolState, seed: int = 0,
                         C_grid=DEFAULT_C_GRID, gamma_exponents=DEFAULT_GAMMA_EXPONENTS,
                         holdout_fraction: float = 0.2, target_recall: float = 0.95,
                         bandwidth_grid=None) -> TuningResult:
    """Pick KDE bandwidths and SVDD (C, gamma) from training-side data only.

    Bandwidths maximise leave-one-out likelihood (p(x|+) on P, p(x) on P+N+U).
    For the SVDD, P is split into folds of ``holdout_fraction`` each; every
    fold is held out once as pseudo-test targets while the rest is fitted, so
    each positive gets one out-of-sample score. Among settings that accept at
    least ``target_recall`` of them, the one whose full-P model accepts the
    smallest share of the unlabelled pool wins (tightest description). If
    none reach the target, the highest held-out recall wins.
    """
    P = dataset.rows(pool.positives)
    h_pos = _loo_or_default(P, bandwidth_grid)
    support = dataset.rows(pool.training_side)
    h_all = _loo_or_default(support, bandwidth_grid)

    rng = np.random.default_rng(seed)
    n = P.shape[0]
    n_folds = min(max(int(round(1.0 / holdout_fraction)), 2), n) if n >= 2 else 0
    folds = np.array_split(rng.permutation(n), n_folds) if n_folds else []
    U = dataset.rows(pool.unlabeled)
    gammas = gamma_grid(P, gamma_exponents)

    best = None
    for C in C_grid:
        for gamma in gammas:
            kernel = KernelSpec("rbf", gamma)
            try:
                full = train_svdd(P, None, kernel, C, C)
                hits = 0
                for hold in folds:
                    fit = np.delete(P, hold, axis=0)
                    m = train_svdd(fit, None, kernel, C, C)
                    hits += int(np.sum(m.score(P[hold]) >= 0))
            except SvddError:
                continue
            recall = hits / n if folds else 1.0
            accept = float(np.mean(full.score(U) >= 0)) if U.size else 0.0
            ok = recall >= target_recall
            # reach the target first, then tightest; otherwise best recall
            key = (ok, -accept if ok else recall, recall if ok else -accept)
            if best is None or key > best[0]:
                best = (key, C, float(gamma), recall, accept)
    if best is None:
        raise SvddError("no feasible (C, gamma) pair on the tuning grid")
    _, C, gamma, recall, accept = best
    return TuningResult(h_pos, h_all, gamma, C, recall, accept)


# --- configuration ------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Flat experiment description; key names match the YAML config file."""

    dataset: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    target_class: int = 1
    standardize: bool = False
    pool_size: int = 200
    train_fraction: float = 0.5
    strategies: tuple = ALL_STRATEGIES
    budget: int = 25
    seeds: tuple = tuple(range(30))
    bandwidth_grid: Optional[tuple] = None
    C_grid: tuple = DEFAULT_C_GRID
    gamma_exponents: tuple = DEFAULT_GAMMA_EXPONENTS
    sigma: float = 0.5
    c: float = 1.0
    k: int = 5
    margin_variant: str = "closed_form"
    density_refit_each_round: bool = False
    output: str = "results"
    n_jobs: int = 1

    def __post_init__(self):
        self.strategies = tuple(StrategyKind.parse(s) for s in self.strategies)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.dataset is None and self.synthetic is None:
            raise ValueError("config needs either 'dataset' or 'synthetic'")
        MarginVariant(self.margin_variant)

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        if isinstance(raw.get("synthetic"), dict):
            raw["synthetic"] = SyntheticSpec(**raw["synthetic"])
        if raw.get("strategies") == "all":
            raw["strategies"] = ALL_STRATEGIES
        for key in ("strategies", "seeds", "C_grid", "gamma_exponents", "bandwidth_grid"):
            if raw.get(key) is not None:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a key-value mapping")
        return cls.from_mapping(raw)


def bench_config(seeds: int = 30, budget: int = 25, strategies=ALL_STRATEGIES,
                 output: str = "bench_results", n_jobs: int = 1) -> ExperimentConfig:
    """The built-in synthetic benchmark.

    100 unit-Gaussian targets at the origin and 400 unit-Gaussian outliers
    shifted by 2.5 along the first axis, d = 5, pool 200.
    """
    return ExperimentConfig(
        synthetic=SyntheticSpec(),
        strategies=tuple(strategies),
        budget=budget,
        seeds=tuple(range(seeds)),
        output=output,
        n_jobs=n_jobs,
    )


def load_experiment_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.synthetic is not None:
        ds = generate_synthetic(cfg.synthetic)
    else:
        path = Path(cfg.dataset)
        ds = load_dataset(path, cfg.target_class)
        if not _is_svmlight(path) and cfg.target_class != 1:
            # csv labels are already +-1: swap roles when -1 is the target
            known = ds.truth != Label.UNLABELED
            ds = replace(ds, truth=np.where(known, np.where(ds.truth == cfg.target_class, 1, -1), 0))
    report = validate_dataset(ds)
    if not report.ok:
        raise DatasetError("invalid dataset: " + "; ".join(report.problems))
    if cfg.standardize:
        ds = standardize(ds)
    return ds


# --- orchestration -------------------------------------------------------------

@dataclass
class CellResult:
    strategy: StrategyKind
    seed: int
    trace: LoopTrace
    tuning: TuningResult

    @property
    def gain(self) -> float:
        return gain(self.trace, self.trace.baseline)


def prepare_seed(dataset: Dataset, cfg: ExperimentConfig, seed: int):
    pool = protocol_split(dataset, SplitSpec(cfg.pool_size, cfg.train_fraction, seed))
    tuning = tune_hyperparameters(
        dataset, pool, seed=seed, C_grid=cfg.C_grid,
        gamma_exponents=cfg.gamma_exponents, bandwidth_grid=cfg.bandwidth_grid,
    )
    return pool, tuning


def run_cell(dataset: Dataset, cfg: ExperimentConfig, seed: int, strategy: StrategyKind,
             pool: PoolState, tuning: TuningResult) -> CellResult:
    hyper = ModelParams(
        gamma=tuning.gamma,
        C_pos=tuning.C,
        C_neg=tuning.C,
        h_pos=tuning.h_pos,
        h_all=tuning.h_all,
        strategy=StrategyParams(sigma=cfg.sigma, c=cfg.c, k=cfg.k, seed=seed,
                                margin_variant=cfg.margin_variant),
    )
    loop_cfg = LoopConfig(budget=cfg.budget, strategy=strategy,
                          density_refit_each_round=cfg.density_refit_each_round)
    trace = run_loop(dataset, pool, loop_cfg, GroundTruthOracle(dataset.truth), hyper)
    return CellResult(strategy, seed, trace, tuning)


def _run_seed(args):
    dataset, cfg, seed = args
    pool, tuning = prepare_seed(dataset, cfg, seed)
    return [run_cell(dataset, cfg, seed, s, pool, tuning) for s in cfg.strategies]


def _fmt(v):
    return float(f"{v:.12g}") if isinstance(v, float) else v


def _trace_lines(cell: CellResult) -> str:
    lines = []
    for rec in cell.trace.records:
        obj = {"strategy": cell.strategy.value, "seed": cell.seed}
        obj.update({k: _fmt(v) for k, v in rec.as_dict().items()})
        lines.append(json.dumps(obj, sort_keys=True))
    return "".join(line + "\n" for line in lines)


@dataclass
class ExperimentSummary:
    output: Path
    cells: list[CellResult] = field(default_factory=list)
    aggregates: list[AggregateRecord] = field(default_factory=list)

    def gains(self, strategy) -> np.ndarray:
        kind = StrategyKind.parse(strategy)
        return np.array([c.gain for c in sorted(self.cells, key=lambda c: c.seed)
                         if c.strategy == kind])

    def table(self) -> str:
        rows = [f"{'strategy':<14} {'gain (F1 pts)':>16} {'seeds':>6}"]
        for a in self.aggregates:
            rows.append(f"{a.strategy:<14} {a.table_cell():>16} {a.n_seeds:>6}")
        return "\n".join(rows)


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentSummary:
    """Run every seed x strategy cell and persist the results under ``cfg.output``.

    Files written:

    * ``traces/<strategy>_seed<k>.jsonl`` one JSON object per round
    * ``runs.csv``      baseline / final F1 and gain per cell
    * ``summary.csv``   mean and standard deviation of gain per strategy
    * ``curves.csv``    mean precision / recall / F1 per round (round 0 is
      the model before any query), for precision-vs-queries plots
    """
    dataset = dataset if dataset is not None else load_experiment_dataset(cfg)
    out = Path(cfg.output)
    (out / "traces").mkdir(parents=True, exist_ok=True)

    summary = ExperimentSummary(out)
    jobs = [(dataset, cfg, seed) for seed in cfg.seeds]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(cfg.n_jobs) as ex:
            results = ex.map(_run_seed, jobs)
            for cells in results:
                _flush_cells(out, cells)
                summary.cells.extend(cells)
    else:
        for job in jobs:
            cells = _run_seed(job)
            _flush_cells(out, cells)
            summary.cells.extend(cells)

    _write_runs(out, summary.cells)
    if len(cfg.seeds) >= 2:
        summary.aggregates = [aggregate_runs(summary.gains(s), s) for s in cfg.strategies]
    _write_summary(out, summary.aggregates)
    _write_curves(out, summary.cells, cfg)
    return summary


def _flush_cells(out: Path, cells):
    for cell in cells:
        log.info("seed %d %s: gain %.2f", cell.seed, cell.strategy.value, cell.gain)
        path = out / "traces" / f"{cell.strategy.value}_seed{cell.seed}.jsonl"
        path.write_text(_trace_lines(cell), encoding="utf-8")


def _write_runs(out: Path, cells):
    with (out / "runs.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "seed", "gamma", "C", "h_pos", "h_all",
                    "baseline_f1", "final_f1", "gain", "aborted"])
        for c in cells:
            base = c.trace.baseline.f1 if c.trace.baseline else float("nan")
            final = c.trace.records[-1].metrics.f1 if c.trace.records else float("nan")
            w.writerow([c.strategy.value, c.seed, f"{c.tuning.gamma:.6g}", f"{c.tuning.C:g}",
                        f"{c.tuning.h_pos:.6g}", f"{c.tuning.h_all:.6g}",
                        f"{base:.6f}", f"{final:.6f}", f"{c.gain:.6f}", int(c.trace.aborted)])


def _write_summary(out: Path, aggregates):
    with (out / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "mean_gain", "std_gain", "n_seeds", "table"])
        for a in aggregates:
            w.writerow([a.strategy, f"{a.mean_gain:.6f}", f"{a.std_gain:.6f}", a.n_seeds,
                        a.table_cell()])


def _write_curves(out: Path, cells, cfg: ExperimentConfig):
    with (out / "curves.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "round", "precision", "recall", "f1", "n_runs"])
        for s in cfg.strategies:
            mine = [c for c in cells if c.strategy == s and c.trace.baseline is not None]
            for r in range(cfg.budget + 1):
                ms = [c.trace.baseline if r == 0 else c.trace.records[r - 1].metrics
                      for c in mine if r <= len(c.trace.records)]
                if not ms:
                    continue
                w.writerow([s.value, r,
                            f"{np.mean([m.precision for m in ms]):.6f}",
                            f"{np.mean([m.recall for m in ms]):.6f}",
                            f"{np.mean([m.f1 for m in ms]):.6f}", len(ms)])
