"""Binary-classification datasets: CSV loading, stratified splitting, folds.

Conventions used throughout the toolkit:

* labels are strictly +1 / -1 (int64);
* features are float64 matrices, one row per sample;
* accuracy is reported in percent (0..100).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import as_float_matrix, as_pm1_labels, check_same_length, require
from .errors import DataFormatError


def _frozen(arr):
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """An immutable labeled sample set.

    Parameters
    ----------
    name : str
        Identifier used in reports and error messages.
    features : ndarray of shape (n_samples, n_features)
    labels : ndarray of shape (n_samples,)
        Values in {+1, -1}.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = _frozen(as_float_matrix(self.features, "features"))
        labs = _frozen(as_pm1_labels(self.labels, "labels"))
        check_same_length(feats, labs, "features", "labels")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def class_counts(self):
        """Return (n_positive, n_negative)."""
        pos = int(np.sum(self.labels == 1))
        return pos, self.n_samples - pos

    def subset(self, indices, name=None):
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            name if name is not None else self.name,
            self.features[idx],
            self.labels[idx],
        )


@dataclass(frozen=True)
class SplitSpec:
    """Three-way split fractions for train / universum / test."""

    train_fraction: float = 0.5
    universum_fraction: float = 0.3
    test_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        fracs = (self.train_fraction, self.universum_fraction, self.test_fraction)
        require(all(f > 0 for f in fracs), f"split fractions must be positive, got {fracs}")
        require(
            abs(sum(fracs) - 1.0) <= 1e-9,
            f"split fractions must sum to 1, got {sum(fracs)!r}",
        )


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of n samples to k cross-validation folds."""

    k: int
    assignments: np.ndarray

    def __post_init__(self):
        arr = _frozen(np.asarray(self.assignments, dtype=np.int64))
        require(self.k >= 2, f"k must be >= 2, got {self.k}")
        require(arr.ndim == 1 and arr.size >= self.k, "assignments shorter than k")
        require(
            arr.min() >= 0 and arr.max() < self.k,
            "fold assignments out of range",
        )
        sizes = np.bincount(arr, minlength=self.k)
        require(sizes.max() - sizes.min() <= 1, "fold sizes differ by more than 1")
        object.__setattr__(self, "assignments", arr)

    def fold_indices(self, fold):
        """Return (train_idx, held_out_idx) for one fold."""
        held = np.where(self.assignments == fold)[0]
        rest = np.where(self.assignments != fold)[0]
        return rest, held


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def load_csv(
    path,
    label_column,
    positive_label=None,
    header=True,
    scale=True,
    name=None,
):
    """Load a labeled CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
    label_column : int or str
        Column holding the class label. A string requires ``header=True``.
    positive_label : str, optional
        Raw label value mapped to +1; every other (single) value maps to -1.
        When omitted the column must already contain +1/-1.
    header : bool
        Whether the first row holds column names.
    scale : bool
        Min-max scale every feature column to [0, 1] (constant columns
        become 0). On by default; disable to keep raw feature values.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc

    rows = [r for r in csv.reader(raw.splitlines()) if r and any(c.strip() for c in r)]
    if header:
        if not rows:
            raise DataFormatError(f"{path}: empty file")
        columns = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_line = 2
    else:
        columns = None
        data_rows = rows
        first_line = 1
    if not data_rows:
        raise DataFormatError(f"{path}: no data rows")

    width = len(data_rows[0])
    if isinstance(label_column, str):
        if columns is None:
            raise DataFormatError(f"{path}: label column by name requires a header row")
        try:
            label_idx = columns.index(label_column)
        except ValueError:
            raise DataFormatError(
                f"{path}: no column named {label_column!r} (have {columns})"
            ) from None
    else:
        label_idx = int(label_column)
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise DataFormatError(f"{path}: label column {label_column} out of range")

    feats = np.empty((len(data_rows), width - 1))
    raw_labels = []
    for i, row in enumerate(data_rows):
        line = first_line + i
        if len(row) != width:
            raise DataFormatError(
                f"{path}: row {line} has {len(row)} fields, expected {width}"
            )
        raw_labels.append(row[label_idx].strip())
        cells = [c for j, c in enumerate(row) if j != label_idx]
        try:
            feats[i] = [float(c) for c in cells]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {line}: {exc}") from None
        if not np.all(np.isfinite(feats[i])):
            raise DataFormatError(f"{path}: row {line} contains non-finite values")

    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise DataFormatError(
            f"{path}: label column has {len(distinct)} distinct values "
            f"{distinct[:5]}...; binary labels required"
        )
    if positive_label is None:
        try:
            labels = np.array([int(float(v)) for v in raw_labels], dtype=np.int64)
        except ValueError:
            raise DataFormatError(
                f"{path}: labels {distinct} are not +1/-1; pass positive_label"
            ) from None
        if not np.all((labels == 1) | (labels == -1)):
            raise DataFormatError(
                f"{path}: labels {distinct} are not +1/-1; pass positive_label"
            )
    else:
        pos = str(positive_label).strip()
        if len(distinct) == 2 and pos not in distinct:
            raise DataFormatError(
                f"{path}: positive_label {pos!r} not among label values {distinct}"
            )
        labels = np.where(np.array(raw_labels) == pos, 1, -1).astype(np.int64)

    if scale:
        feats = minmax_scale(feats)

    return Dataset(name or path.stem, feats, labels)


def load_features_csv(path, header=True, scale=False):
    """Load an unlabeled feature-only CSV into a float64 matrix.

    With ``scale=True`` the columns are min-max scaled to [0, 1], the
    same per-file convention ``load_csv`` applies to labeled data.
    """
    path = Path(path)
    rows = [
        r
        for r in csv.reader(path.read_text(encoding="utf-8").splitlines())
        if r and any(c.strip() for c in r)
    ]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {i+1} has {len(row)} fields, expected {width}")
        try:
            out[i] = [float(c) for c in row]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i+1}: {exc}") from None
    if scale:
        out = minmax_scale(out)
    return as_float_matrix(out, str(path))


def minmax_scale(features):
    """Scale each column to [0, 1]; constant columns map to 0."""
    feats = np.asarray(features, dtype=np.float64)
    lo = feats.min(axis=0)
    span = feats.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return (feats - lo) / safe


def split_three_way(d: Dataset, spec: SplitSpec):
    """Stratified split into (train, universum, test) datasets.

    Part sizes are round(N * fraction) for universum and test with the
    remainder assigned to train. Within each part the original row order
    is preserved. The same seed always yields the same partition.
    """
    n = d.n_samples
    n_univ = _round_half_up(n * spec.universum_fraction)
    n_test = _round_half_up(n * spec.test_fraction)
    n_train = n - n_univ - n_test
    for part, size in (("train", n_train), ("universum", n_univ), ("test", n_test)):
        require(size >= 1, f"{part} part would be empty (N={n}, spec={spec})")

    rng = np.random.default_rng(spec.seed)
    class_order = [1, -1]
    class_indices = {c: np.where(d.labels == c)[0] for c in class_order}
    class_sizes = {c: len(class_indices[c]) for c in class_order}

    # Largest-remainder quotas per class for the universum and test parts;
    # train absorbs whatever is left in each class.
    quotas = {}
    for part, size in (("universum", n_univ), ("test", n_test)):
        ideal = {c: size * class_sizes[c] / n for c in class_order}
        base = {c: int(np.floor(ideal[c])) for c in class_order}
        leftover = size - sum(base.values())
        order = sorted(class_order, key=lambda c: (-(ideal[c] - base[c]), -c))
        for c in order[:leftover]:
            base[c] += 1
        quotas[part] = base

    parts = {"train": [], "universum": [], "test": []}
    per_part_class = {p: {c: [] for c in class_order} for p in parts}
    for c in class_order:
        idx = class_indices[c]
        perm = idx[rng.permutation(len(idx))]
        k_u = quotas["universum"][c]
        k_t = quotas["test"][c]
        per_part_class["universum"][c] = list(perm[:k_u])
        per_part_class["test"][c] = list(perm[k_u : k_u + k_t])
        per_part_class["train"][c] = list(perm[k_u + k_t :])

    # Ensure each part sees both labels when the counts make that possible:
    # swap one sample of the missing class in from the richest donor part in
    # exchange for one sample of an over-represented class (sizes unchanged).
    part_names = ["train", "universum", "test"]
    for p in part_names:
        for c in class_order:
            if class_sizes[c] == 0 or per_part_class[p][c]:
                continue
            other = [cc for cc in class_order if cc != c][0]
            if len(per_part_class[p][other]) < 2:
                continue  # part too small to hold both labels
            donors = [q for q in part_names if q != p and len(per_part_class[q][c]) >= 2]
            if not donors:
                continue
            donor = max(donors, key=lambda q: (len(per_part_class[q][c]), q == "train"))
            per_part_class[p][c].append(per_part_class[donor][c].pop())
            per_part_class[donor][other].append(per_part_class[p][other].pop())

    out = []
    for p in part_names:
        merged = sorted(per_part_class[p][1] + per_part_class[p][-1])
        out.append(d.subset(np.array(merged, dtype=np.int64), name=f"{d.name}/{p}"))
    return tuple(out)


def kfold(n, k, seed=42):
    """Shuffle n items into k folds whose sizes differ by at most one."""
    require(2 <= k <= n, f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(k, assignments)


def accuracy(predicted, actual):
    """Percent agreement between two label vectors."""
    pred = np.asarray(predicted).reshape(-1)
    act = np.asarray(actual).reshape(-1)
    check_same_length(pred, act, "predicted", "actual")
    require(pred.size > 0, "accuracy of empty vectors is undefined")
    return 100.0 * float(np.mean(pred == act))
