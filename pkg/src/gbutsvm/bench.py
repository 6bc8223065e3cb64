"""Benchmark harness: split, grid-search with cross-validation, refit, report.

Protocol per dataset:

1. stratified three-way split into train / universum / test
   (``universum_method="average"`` folds the universum slice back into
   training and derives Universum rows from class-ball or class-point
   averages instead, mirroring the two-way protocol);
2. k-fold grid search on the training part only - Universum material is
   rebuilt inside each fold and the test part is never touched;
3. refit the best grid point on the full training part (refit timing
   covers dual assembly plus the two dual solves; ball generation is
   timed separately);
4. score once on the held-out test part.

CV ties break toward the smallest grid point in enumeration order, which
is ascending lexicographic in (c, epsilon, sigma, num_min, purity).
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fsio import atomic_write_text
from ._validation import require
from .datasets import Dataset, SplitSpec, accuracy, kfold, split_three_way
from .errors import DataFormatError, InfeasibleThresholdsError, SolverError
from .granular import (
    BallGenConfig,
    generate_balls,
    universum_balls_average,
    universum_balls_split,
)
from .models import (
    Hyperparams,
    TrainInputs,
    classify,
    train_gbutsvm,
    train_tsvm,
    train_utsvm,
)

log = logging.getLogger("gbutsvm.bench")

MODEL_KINDS = ("tsvm", "utsvm", "gbutsvm")
UNIVERSUM_METHODS = ("split", "average")


def _derive_seed(seed, *parts):
    """Mix ``seed`` with integer salts into an independent child seed.

    The result is masked to 63 bits so it is valid both for
    ``numpy.random.default_rng`` (which rejects negative seeds) and for
    signed 8-byte serialization.
    """
    blob = b"".join(int(p).to_bytes(8, "little", signed=True) for p in (seed, *parts))
    raw = int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")
    return raw & ((1 << 63) - 1)


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid for the benchmark search.

    Defaults: penalties 2^(2i) for i in -4..4 (tied c1=c2=cu), epsilon in
    {0, 0.2, ..., 1}, sigma in {0.25, 0.5, 1, 2, 4} for kernel runs, and
    small ball-threshold candidate sets. ``tie_costs=False`` enumerates
    the full (c1, c2, cu) cross product instead.
    """

    c_values: tuple = tuple(float(2.0 ** (2 * i)) for i in range(-4, 5))
    tie_costs: bool = True
    epsilon_values: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    sigma_values: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    num_min_values: tuple = (1, 4)
    purity_values: tuple = (0.9, 1.0)
    kernel: str = "linear"
    radius_mode: str = "average"
    k_folds: int = 5

    def __post_init__(self):
        require(len(self.c_values) >= 1, "c_values must not be empty")
        require(self.kernel in ("linear", "rbf"), f"unknown kernel {self.kernel!r}")
        require(self.k_folds >= 2, "k_folds must be >= 2")
        require(all(c > 0 for c in self.c_values), "penalties must be positive")
        require(all(e >= 0 for e in self.epsilon_values), "epsilon values must be >= 0")


@dataclass(frozen=True)
class GridPoint:
    c1: float
    c2: float
    cu: float
    epsilon: float | None = None
    sigma: float | None = None
    num_min: int | None = None
    purity: float | None = None

    def hyperparams(self, kernel):
        return Hyperparams(
            c1=self.c1,
            c2=self.c2,
            cu=self.cu if self.cu is not None else 1.0,
            epsilon=self.epsilon if self.epsilon is not None else 0.0,
            kernel=kernel,
            sigma=self.sigma if self.sigma is not None else 1.0,
        )


def grid_points(kind, grid: GridSpec, ball_pairs=None):
    """Enumerate grid points for one model kind in tie-break order."""
    require(kind in MODEL_KINDS, f"unknown model kind {kind!r}")
    if grid.tie_costs:
        costs = [(c, c, c) for c in sorted(grid.c_values)]
    else:
        ordered = sorted(grid.c_values)
        costs = [(a, b, g) for a in ordered for b in ordered for g in ordered]
    epsilons = [None] if kind == "tsvm" else sorted(grid.epsilon_values)
    sigmas = [None] if grid.kernel == "linear" else sorted(grid.sigma_values)
    if kind == "gbutsvm":
        pairs = ball_pairs if ball_pairs is not None else [
            (n, p) for n in sorted(grid.num_min_values) for p in sorted(grid.purity_values)
        ]
    else:
        pairs = [(None, None)]
    out = []
    for c1, c2, cu in costs:
        for eps in epsilons:
            for sg in sigmas:
                for num_min, purity in pairs:
                    out.append(GridPoint(c1, c2, cu, eps, sg, num_min, purity))
    return out


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: tuple  # of (num_min, purity)
    infeasible: tuple  # of (num_min, purity, reason)


def preflight_balls(train: Dataset, grid: GridSpec, seed=42):
    """Check which (num_min, purity) pairs yield at least one ball per class."""
    feasible = []
    infeasible = []
    for num_min in sorted(grid.num_min_values):
        for purity in sorted(grid.purity_values):
            cfg = BallGenConfig(num_min=num_min, purity_threshold=purity,
                                radius_mode=grid.radius_mode)
            try:
                bs = generate_balls(train, cfg, seed=_derive_seed(seed, 23))
            except InfeasibleThresholdsError as exc:
                infeasible.append((num_min, purity, str(exc)))
                continue
            counts = bs.counts()
            if counts[1] >= 1 and counts[-1] >= 1:
                feasible.append((num_min, purity))
            else:
                infeasible.append(
                    (num_min, purity, f"missing a class (counts {counts})")
                )
    if not feasible:
        raise InfeasibleThresholdsError(
            f"no (num_min, purity) candidate keeps a ball of each class on "
            f"{train.name!r}: {infeasible}"
        )
    return FeasibilityReport(tuple(feasible), tuple(infeasible))


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one (dataset, model) benchmark run."""

    dataset: str
    model: str
    c1: float
    c2: float
    cu: float | None
    epsilon: float | None
    sigma: float | None
    num_min: int | None
    purity: float | None
    cv_accuracy: float
    cv_fold_accuracies: tuple
    test_accuracy: float
    train_seconds: float
    ball_seconds: float
    n_balls: int
    n_universum_rows: int
    compression: float
    n_train: int
    n_universum: int
    n_test: int
    seed: int

    def __post_init__(self):
        require(0.0 <= self.cv_accuracy <= 100.0, "cv_accuracy out of [0, 100]")
        require(0.0 <= self.test_accuracy <= 100.0, "test_accuracy out of [0, 100]")
        require(all(0.0 <= a <= 100.0 for a in self.cv_fold_accuracies),
                "fold accuracy out of [0, 100]")
        require(self.train_seconds >= 0 and self.ball_seconds >= 0,
                "timings must be >= 0")


class _GridExhausted(RuntimeError):
    pass


def _merge(a: Dataset, b: Dataset, name):
    return Dataset(name, np.vstack([a.features, b.features]),
                   np.concatenate([a.labels, b.labels]))


def _averaged_universum_points(train: Dataset, seed):
    """Universum points as averages of shuffled opposite-class pairs."""
    rng = np.random.default_rng(seed)
    pos = train.features[train.labels == 1]
    neg = train.features[train.labels == -1]
    m = min(pos.shape[0], neg.shape[0])
    if m == 0:
        raise DataFormatError(f"{train.name!r} lacks a class; cannot average")
    return (pos[rng.permutation(pos.shape[0])[:m]] + neg[rng.permutation(neg.shape[0])[:m]]) / 2.0


class _ModelRunner:
    """Caches per-fold ball sets / universum material within one experiment."""

    def __init__(self, kind, train_d, univ_d, grid, method, seed, fold_plan):
        self.kind = kind
        self.train_d = train_d
        self.univ_d = univ_d
        self.grid = grid
        self.method = method
        self.seed = seed
        self.fold_plan = fold_plan
        self.fold_sets = []
        for f in range(fold_plan.k):
            tr_idx, va_idx = fold_plan.fold_indices(f)
            self.fold_sets.append(
                (train_d.subset(tr_idx, f"{train_d.name}/fold{f}"), train_d.subset(va_idx))
            )
        self._ball_cache = {}
        self._uball_cache = {}
        self._upoint_cache = {}

    # fold_key is the fold index, or "full" for the refit pass.
    def _fold_train(self, fold_key):
        return self.train_d if fold_key == "full" else self.fold_sets[fold_key][0]

    def _class_balls(self, fold_key, num_min, purity):
        key = (fold_key, num_min, purity)
        if key not in self._ball_cache:
            cfg = BallGenConfig(num_min=num_min, purity_threshold=purity,
                                radius_mode=self.grid.radius_mode)
            self._ball_cache[key] = generate_balls(
                self._fold_train(fold_key), cfg, seed=_derive_seed(self.seed, 23)
            )
        return self._ball_cache[key]

    def _universum_balls(self, fold_key, num_min, purity, class_balls):
        if self.method == "average":
            return universum_balls_average(class_balls)
        if self.univ_d is None:
            return None
        key = (num_min, purity)
        if key not in self._uball_cache:
            cfg = BallGenConfig(num_min=num_min, purity_threshold=purity,
                                radius_mode=self.grid.radius_mode)
            self._uball_cache[key] = universum_balls_split(
                self.univ_d, cfg, seed=_derive_seed(self.seed, 29)
            )
        return self._uball_cache[key]

    def _universum_points(self, fold_key):
        if self.method == "split":
            require(self.univ_d is not None, "no universum slice available")
            return self.univ_d.features
        if fold_key not in self._upoint_cache:
            self._upoint_cache[fold_key] = _averaged_universum_points(
                self._fold_train(fold_key),
                _derive_seed(self.seed, 31, -1 if fold_key == "full" else fold_key),
            )
        return self._upoint_cache[fold_key]

    def fit(self, point: GridPoint, fold_key):
        """Train one grid point; returns (model, ball_seconds, n_balls, n_univ_rows)."""
        train_d = self._fold_train(fold_key)
        h = point.hyperparams(self.grid.kernel)
        if self.kind == "tsvm":
            return train_tsvm(train_d.features, train_d.labels, h), 0.0, 0, 0
        if self.kind == "utsvm":
            upoints = self._universum_points(fold_key)
            model = train_utsvm(train_d.features, train_d.labels, upoints, h)
            return model, 0.0, 0, upoints.shape[0]
        started = time.perf_counter()
        class_balls = self._class_balls(fold_key, point.num_min, point.purity)
        univ_balls = self._universum_balls(fold_key, point.num_min, point.purity, class_balls)
        ball_seconds = time.perf_counter() - started
        t = TrainInputs.from_balls(class_balls, univ_balls)
        model = train_gbutsvm(t, h)
        n_univ = 0 if univ_balls is None else len(univ_balls)
        return model, ball_seconds, len(class_balls), n_univ

    def evaluate(self, point: GridPoint):
        """CV fold accuracies for one grid point, or None when infeasible."""
        accs = []
        for f, (_, val_d) in enumerate(self.fold_sets):
            try:
                model, _, _, _ = self.fit(point, f)
            except (InfeasibleThresholdsError, SolverError, DataFormatError):
                return None
            pred = classify(model, val_d.features)
            accs.append(accuracy(pred, val_d.labels))
        return tuple(accs)


def run_experiment(
    d: Dataset,
    models=MODEL_KINDS,
    grid: GridSpec = GridSpec(),
    split: SplitSpec | None = None,
    universum_method="split",
    seed=42,
    jobs=1,
):
    """Full protocol on one dataset; returns a RunRecord per surviving model.

    A model whose every grid point fails is logged and skipped (the run
    continues with the remaining models).
    """
    require(universum_method in UNIVERSUM_METHODS,
            f"universum_method must be in {UNIVERSUM_METHODS}")
    for kind in models:
        require(kind in MODEL_KINDS, f"unknown model kind {kind!r}")
    require(jobs >= 1, "jobs must be >= 1")
    split = split if split is not None else SplitSpec(seed=seed)
    train_d, univ_d, test_d = split_three_way(d, split)
    n_universum = univ_d.n_samples
    if universum_method == "average":
        train_d = _merge(train_d, univ_d, f"{d.name}/train")
        univ_d = None

    fold_plan = kfold(train_d.n_samples, grid.k_folds, seed=_derive_seed(seed, 11))
    records = []
    for kind in models:
        try:
            records.append(
                _run_one_model(kind, d.name, train_d, univ_d, test_d, n_universum,
                               grid, universum_method, seed, jobs, fold_plan)
            )
        except (_GridExhausted, InfeasibleThresholdsError) as exc:
            log.warning("dataset %s: model %s flagged: %s", d.name, kind, exc)
    return records


def _run_one_model(kind, dataset_name, train_d, univ_d, test_d, n_universum,
                   grid, method, seed, jobs, fold_plan):
    ball_pairs = None
    if kind == "gbutsvm":
        report = preflight_balls(train_d, grid, seed=seed)
        ball_pairs = list(report.feasible)
    points = grid_points(kind, grid, ball_pairs)
    runner = _ModelRunner(kind, train_d, univ_d, grid, method, seed, fold_plan)

    if kind == "gbutsvm":
        # Warm the fold ball caches sequentially; the grid loop (possibly
        # threaded) then only assembles and solves duals.
        for f in range(fold_plan.k):
            for num_min, purity in ball_pairs:
                try:
                    runner._class_balls(f, num_min, purity)
                except InfeasibleThresholdsError:
                    pass

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(runner.evaluate, points))
    else:
        results = [runner.evaluate(p) for p in points]

    best_idx = -1
    best_acc = -np.inf
    for i, fold_accs in enumerate(results):
        if fold_accs is None:
            continue
        acc = float(np.mean(fold_accs))
        if acc > best_acc:
            best_acc = acc
            best_idx = i
    if best_idx < 0:
        raise _GridExhausted(f"every grid point failed for {kind}")

    best = points[best_idx]
    model, ball_seconds, n_balls, n_univ_rows = runner.fit(best, "full")
    pred = classify(model, test_d.features)
    test_acc = accuracy(pred, test_d.labels)
    compression = train_d.n_samples / n_balls if n_balls else 1.0
    return RunRecord(
        dataset=dataset_name,
        model=kind,
        c1=best.c1,
        c2=best.c2,
        cu=None if kind == "tsvm" else best.cu,
        epsilon=best.epsilon,
        sigma=best.sigma,
        num_min=best.num_min,
        purity=best.purity,
        cv_accuracy=best_acc,
        cv_fold_accuracies=results[best_idx],
        test_accuracy=test_acc,
        train_seconds=model.diagnostics["train_seconds"],
        ball_seconds=ball_seconds,
        n_balls=n_balls,
        n_universum_rows=n_univ_rows,
        compression=compression,
        n_train=train_d.n_samples,
        n_universum=n_universum,
        n_test=test_d.n_samples,
        seed=seed,
    )


_RUN_COLUMNS = [
    "dataset", "model", "c1", "c2", "cu", "epsilon", "sigma", "num_min",
    "purity", "cv_accuracy", "test_accuracy", "train_seconds", "ball_seconds",
    "n_balls", "n_universum_rows", "compression", "n_train", "n_universum",
    "n_test", "seed",
]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def records_to_runs_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_RUN_COLUMNS + [f"fold{i}_accuracy" for i in range(_max_folds(records))])
    for r in records:
        row = [_cell(getattr(r, c)) for c in _RUN_COLUMNS]
        row += ["%.17g" % a for a in r.cv_fold_accuracies]
        row += [""] * (_max_folds(records) - len(r.cv_fold_accuracies))
        w.writerow(row)
    return buf.getvalue()


def _max_folds(records):
    return max((len(r.cv_fold_accuracies) for r in records), default=0)


def records_to_matrix_csv(records):
    datasets = list(dict.fromkeys(r.dataset for r in records))
    models = list(dict.fromkeys(r.model for r in records))
    cells = {(r.dataset, r.model): r.test_accuracy for r in records}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset"] + models)
    for ds in datasets:
        w.writerow(
            [ds] + [_cell(cells.get((ds, m))) for m in models]
        )
    return buf.getvalue()


def records_to_markdown(records):
    lines = ["# Benchmark report", ""]
    datasets = list(dict.fromkeys(r.dataset for r in records))
    for ds in datasets:
        lines += [f"## {ds}", "",
                  "| model | test acc (%) | cv acc (%) | refit time (s) | "
                  "ball time (s) | balls | compression | chosen point |",
                  "|---|---|---|---|---|---|---|---|"]
        for r in [r for r in records if r.dataset == ds]:
            chosen = ", ".join(
                f"{k}={getattr(r, k):g}" if isinstance(getattr(r, k), float)
                else f"{k}={getattr(r, k)}"
                for k in ("c1", "c2", "cu", "epsilon", "sigma", "num_min", "purity")
                if getattr(r, k) is not None
            )
            lines.append(
                f"| {r.model} | {r.test_accuracy:.2f} | {r.cv_accuracy:.2f} "
                f"| {r.train_seconds:.4f} | {r.ball_seconds:.4f} | {r.n_balls} "
                f"| {r.compression:.1f} | {chosen} |"
            )
        lines.append("")
    return "\n".join(lines)


def records_to_report_csv(records):
    """report.csv: same summary as the markdown report, machine-readable."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_RUN_COLUMNS)
    for r in records:
        w.writerow([_cell(getattr(r, c)) for c in _RUN_COLUMNS])
    return buf.getvalue()


def emit_report(records, out_dir, report_format="md"):
    """Write accuracy_matrix.csv, runs.csv and report.(md|csv) atomically."""
    require(report_format in ("md", "csv"),
            f"report_format must be md or csv, got {report_format!r}", exc=ValueError)
    require(len(records) > 0, "no records to report", exc=ValueError)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "accuracy_matrix.csv", records_to_matrix_csv(records))
    atomic_write_text(out / "runs.csv", records_to_runs_csv(records))
    if report_format == "md":
        atomic_write_text(out / "report.md", records_to_markdown(records))
    else:
        atomic_write_text(out / "report.csv", records_to_report_csv(records))
    return out


@dataclass(frozen=True)
class BenchConfig:
    """Parsed plain-text benchmark configuration."""

    datasets: tuple
    label_column: object = -1
    positive_label: str | None = None
    header: bool = True
    scale: bool = True
    models: tuple = MODEL_KINDS
    universum_method: str = "split"
    seed: int = 42
    split: SplitSpec = field(default_factory=SplitSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    jobs: int = 1
    out_dir: str | None = None


def _parse_bool(value, key):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DataFormatError(f"config key {key!r}: expected a boolean, got {value!r}")


def _parse_list(value):
    return [v.strip() for v in value.split(",") if v.strip()]


_CONFIG_KEYS = {
    "datasets", "label_column", "positive_label", "header", "scale", "models",
    "universum_method", "seed", "train_fraction", "universum_fraction",
    "test_fraction", "c_values", "tie_costs", "epsilon_values", "sigma_values",
    "num_min_values", "purity_values", "kernel", "radius_mode", "k_folds",
    "jobs", "out_dir",
}


def parse_config(path):
    """Parse a ``key = value`` benchmark config file into a BenchConfig."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    kv = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise DataFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise DataFormatError(f"{path}:{lineno}: unknown key {key!r}")
        kv[key] = value.strip()

    if "datasets" not in kv or not _parse_list(kv["datasets"]):
        raise DataFormatError(f"{path}: config must list at least one dataset")

    try:
        seed = int(kv.get("seed", "42"))
        split = SplitSpec(
            train_fraction=float(kv.get("train_fraction", "0.5")),
            universum_fraction=float(kv.get("universum_fraction", "0.3")),
            test_fraction=float(kv.get("test_fraction", "0.2")),
            seed=seed,
        )
        defaults = GridSpec()
        grid = GridSpec(
            c_values=tuple(float(v) for v in _parse_list(kv["c_values"]))
            if "c_values" in kv else defaults.c_values,
            tie_costs=_parse_bool(kv["tie_costs"], "tie_costs")
            if "tie_costs" in kv else True,
            epsilon_values=tuple(float(v) for v in _parse_list(kv["epsilon_values"]))
            if "epsilon_values" in kv else defaults.epsilon_values,
            sigma_values=tuple(float(v) for v in _parse_list(kv["sigma_values"]))
            if "sigma_values" in kv else defaults.sigma_values,
            num_min_values=tuple(int(v) for v in _parse_list(kv["num_min_values"]))
            if "num_min_values" in kv else defaults.num_min_values,
            purity_values=tuple(float(v) for v in _parse_list(kv["purity_values"]))
            if "purity_values" in kv else defaults.purity_values,
            kernel=kv.get("kernel", "linear"),
            radius_mode=kv.get("radius_mode", "average"),
            k_folds=int(kv.get("k_folds", "5")),
        )
        label_column = kv.get("label_column", "-1")
        try:
            label_column = int(label_column)
        except ValueError:
            pass  # keep as a column name
        config = BenchConfig(
            datasets=tuple(_parse_list(kv["datasets"])),
            label_column=label_column,
            positive_label=kv.get("positive_label") or None,
            header=_parse_bool(kv["header"], "header") if "header" in kv else True,
            scale=_parse_bool(kv["scale"], "scale") if "scale" in kv else True,
            models=tuple(_parse_list(kv["models"])) if "models" in kv else MODEL_KINDS,
            universum_method=kv.get("universum_method", "split"),
            seed=seed,
            split=split,
            grid=grid,
            jobs=int(kv.get("jobs", "1")),
            out_dir=kv.get("out_dir") or None,
        )
    except (ValueError, DataFormatError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(f"{path}: {exc}") from None
    for kind in config.models:
        require(kind in MODEL_KINDS, f"{path}: unknown model kind {kind!r}")
    require(config.universum_method in UNIVERSUM_METHODS,
            f"{path}: unknown universum_method {config.universum_method!r}")
    return config
