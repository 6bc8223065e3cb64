"""Granular balls: purity-driven recursive 2-means coverage of a dataset.

A ball is the set of samples assigned to one leaf of a recursive binary
split. Each ball stores the member mean as its center, an average- or
maximum-distance radius, the majority label, and the purity (majority
fraction). Generation starts from one ball holding the whole dataset and
keeps splitting any ball whose purity is below the threshold; a final
delete pass removes balls that miss the minimum-size or purity bars.

Randomness is drawn from a generator seeded by a digest of (seed, sorted
member indices), so the result is independent of processing order and a
higher purity threshold can only add splits, never remove them.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fsio import atomic_write_text
from ._validation import require
from .datasets import Dataset
from .errors import DataFormatError, InfeasibleThresholdsError

_RADIUS_MODES = ("average", "maximum")


@dataclass(frozen=True)
class BallGenConfig:
    """Thresholds controlling ball generation.

    num_min : smallest member count a ball may keep after the delete pass.
    purity_threshold : majority-label fraction a ball must reach; balls
        below it are split further. Must lie in (0.5, 1].
    radius_mode : "average" (mean member distance to center, the default)
        or "maximum".
    """

    num_min: int = 1
    purity_threshold: float = 1.0
    radius_mode: str = "average"

    def __post_init__(self):
        require(self.num_min >= 1, f"num_min must be >= 1, got {self.num_min}")
        require(
            0.5 < self.purity_threshold <= 1.0,
            f"purity_threshold must be in (0.5, 1], got {self.purity_threshold}",
        )
        require(
            self.radius_mode in _RADIUS_MODES,
            f"radius_mode must be one of {_RADIUS_MODES}, got {self.radius_mode!r}",
        )


@dataclass(frozen=True)
class GranularBall:
    """One ball: center, radius, majority label, purity, member indices.

    ``member_indices`` is None for synthetic balls (pairwise-averaged
    Universum balls) that have no member set of their own.
    """

    center: np.ndarray
    radius: float
    label: int
    purity: float
    member_indices: np.ndarray | None

    def __post_init__(self):
        center = np.ascontiguousarray(self.center, dtype=np.float64).reshape(-1)
        require(np.all(np.isfinite(center)), "ball center must be finite")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        require(self.radius >= 0, f"radius must be >= 0, got {self.radius}")
        require(self.label in (-1, 0, 1), f"label must be -1/0/+1, got {self.label}")
        require(
            0.5 <= self.purity <= 1.0,
            f"purity must be in [0.5, 1], got {self.purity}",
        )
        if self.member_indices is not None:
            idx = np.ascontiguousarray(self.member_indices, dtype=np.int64)
            require(idx.size >= 1, "member_indices must be nonempty")
            idx.setflags(write=False)
            object.__setattr__(self, "member_indices", idx)

    @property
    def member_count(self):
        return 0 if self.member_indices is None else int(self.member_indices.size)


@dataclass(frozen=True)
class BallSet:
    """Balls generated from one source dataset plus generation metadata."""

    balls: tuple
    source_name: str
    n_features: int
    config: BallGenConfig | None = None
    n_splits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))

    def __len__(self):
        return len(self.balls)

    def of_label(self, label):
        return [b for b in self.balls if b.label == label]

    def centers(self, label=None):
        picked = self.balls if label is None else self.of_label(label)
        if not picked:
            return np.zeros((0, self.n_features))
        return np.array([b.center for b in picked])

    def radii(self, label=None):
        picked = self.balls if label is None else self.of_label(label)
        return np.array([b.radius for b in picked], dtype=np.float64)

    def counts(self):
        out = {1: 0, -1: 0, 0: 0}
        for b in self.balls:
            out[b.label] += 1
        return out

    def covered_indices(self):
        parts = [b.member_indices for b in self.balls if b.member_indices is not None]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))

    def compression(self, n_samples):
        """Samples per ball: how much smaller the ball set is than the data."""
        return n_samples / max(len(self.balls), 1)


def _ball_rng(seed, member_indices):
    digest = hashlib.blake2b(
        int(seed).to_bytes(8, "little", signed=True) + member_indices.tobytes(),
        digest_size=16,
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def _majority(labels):
    """Return (purity, majority_label); ties break toward +1."""
    n_pos = int(np.sum(labels == 1))
    n = labels.size
    n_neg = n - n_pos
    if n_pos >= n_neg:
        return n_pos / n, 1
    return n_neg / n, -1


def _make_ball(features, labels, member_indices, radius_mode, force_label=None):
    X = features[member_indices]
    center = X.mean(axis=0)
    dists = np.sqrt(((X - center) ** 2).sum(axis=1))
    radius = float(dists.max() if radius_mode == "maximum" else dists.mean())
    purity, label = _majority(labels[member_indices])
    return GranularBall(
        center=center,
        radius=radius,
        label=force_label if force_label is not None else label,
        purity=purity,
        member_indices=member_indices,
    )


def _two_means_split(X, y, rng):
    """Split rows of X into two nonempty index groups by seeded 2-means.

    Initial centroids are one random member of the majority label and one
    of the minority label. Lloyd iterations run until the assignment
    vector stabilizes (at most 100 rounds); an empty cluster is rescued by
    reassigning the point farthest from the nonempty cluster's centroid.
    """
    n = X.shape[0]
    _, maj = _majority(y)
    maj_members = np.where(y == maj)[0]
    min_members = np.where(y != maj)[0]
    centers = np.stack(
        [X[rng.choice(maj_members)], X[rng.choice(min_members)]]
    ).astype(np.float64)

    assign = None
    for _ in range(100):
        d0 = ((X - centers[0]) ** 2).sum(axis=1)
        d1 = ((X - centers[1]) ** 2).sum(axis=1)
        new_assign = (d1 < d0).astype(np.int64)  # ties go to cluster 0
        for empty in (0, 1):
            if not np.any(new_assign == empty):
                other = 1 - empty
                far = np.argmax(((X - centers[other]) ** 2).sum(axis=1))
                new_assign[far] = empty
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centers[0] = X[assign == 0].mean(axis=0)
        centers[1] = X[assign == 1].mean(axis=0)

    left = np.where(assign == 0)[0]
    right = np.where(assign == 1)[0]
    return left, right


def _split_to_purity(d: Dataset, cfg: BallGenConfig, seed):
    """Run the splitting loop; returns (final member groups, split count)."""
    queue = [np.arange(d.n_samples, dtype=np.int64)]
    final = []
    n_splits = 0
    while queue:
        members = queue.pop()
        purity, _ = _majority(d.labels[members])
        if purity >= cfg.purity_threshold:
            final.append(members)
            continue
        X = d.features[members]
        if np.all(X == X[0]):
            # Mixed labels on identical coordinates: no split can help.
            continue
        rng = _ball_rng(seed, members)
        left, right = _two_means_split(X, d.labels[members], rng)
        n_splits += 1
        queue.append(members[left])
        queue.append(members[right])
    # Canonical order: by smallest member index.
    final.sort(key=lambda m: int(m.min()))
    return final, n_splits


def generate_balls(d: Dataset, cfg: BallGenConfig = BallGenConfig(), seed=42):
    """Cover a labeled dataset with purity-qualified granular balls.

    Splits until every ball reaches the purity threshold, then deletes
    balls smaller than ``num_min`` (or below the purity bar). Raises
    :class:`InfeasibleThresholdsError` when nothing survives.
    """
    require(d.n_samples >= 1, "dataset has no rows")
    groups, n_splits = _split_to_purity(d, cfg, seed)
    balls = [_make_ball(d.features, d.labels, m, cfg.radius_mode) for m in groups]
    bs = BallSet(balls, d.name, d.n_features, cfg, n_splits)
    return delete_unqualified(bs)


def delete_unqualified(bs: BallSet):
    """Delete pass: drop balls under num_min members or under the purity bar."""
    cfg = bs.config
    require(cfg is not None, "BallSet has no generation config", exc=ValueError)
    kept = [
        b
        for b in bs.balls
        if b.member_count >= cfg.num_min and b.purity >= cfg.purity_threshold
    ]
    if not kept:
        raise InfeasibleThresholdsError(
            f"no balls survive num_min={cfg.num_min}, "
            f"purity_threshold={cfg.purity_threshold} on {bs.source_name!r}"
        )
    return BallSet(kept, bs.source_name, bs.n_features, cfg, bs.n_splits)


def universum_balls_split(u: Dataset, cfg: BallGenConfig = BallGenConfig(), seed=42):
    """Generate Universum balls by splitting the Universum slice itself.

    Purity during splitting is measured against the slice's own labels;
    the surviving balls are then marked unlabeled (label 0).
    """
    labeled = generate_balls(u, cfg, seed)
    balls = [
        GranularBall(b.center, b.radius, 0, b.purity, b.member_indices)
        for b in labeled.balls
    ]
    return BallSet(balls, u.name, u.n_features, cfg, labeled.n_splits)


def universum_balls_average(class_balls: BallSet):
    """Build Universum balls by averaging class-ball pairs.

    Positive and negative balls are each ordered by member count
    (descending, stable on the original ball order) and paired off;
    ball i averages the centers and the radii of pair i. The number of
    Universum balls is min(#positive, #negative).
    """
    pos = sorted(class_balls.of_label(1), key=lambda b: -b.member_count)
    neg = sorted(class_balls.of_label(-1), key=lambda b: -b.member_count)
    m = min(len(pos), len(neg))
    if m == 0:
        raise InfeasibleThresholdsError(
            f"cannot average Universum balls: {len(pos)} positive / "
            f"{len(neg)} negative balls in {class_balls.source_name!r}"
        )
    balls = [
        GranularBall(
            center=(p.center + q.center) / 2.0,
            radius=(p.radius + q.radius) / 2.0,
            label=0,
            purity=1.0,
            member_indices=None,
        )
        for p, q in zip(pos[:m], neg[:m])
    ]
    return BallSet(balls, class_balls.source_name, class_balls.n_features, class_balls.config, 0)


def write_balls_csv(bs: BallSet, path):
    """Serialize a ball set to CSV (centers at full precision)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["ball_id", "label", "radius", "purity", "member_count"]
        + [f"c{j}" for j in range(bs.n_features)]
    )
    for i, b in enumerate(bs.balls):
        w.writerow(
            [i, b.label, "%.17g" % b.radius, "%.17g" % b.purity, b.member_count]
            + ["%.17g" % v for v in b.center]
        )
    atomic_write_text(path, buf.getvalue())


def read_balls_csv(path):
    """Read a ball-set CSV back (member indices are not stored, so the
    returned balls carry member_indices=None)."""
    path = Path(path)
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    if len(rows) < 2:
        raise DataFormatError(f"{path}: no ball rows")
    header = rows[0]
    n_features = len(header) - 5
    if n_features < 1 or header[:5] != ["ball_id", "label", "radius", "purity", "member_count"]:
        raise DataFormatError(f"{path}: not a ball-set CSV")
    balls = []
    for row in rows[1:]:
        if len(row) != len(header):
            raise DataFormatError(f"{path}: ball row has {len(row)} fields")
        try:
            balls.append(
                GranularBall(
                    center=np.array([float(v) for v in row[5:]]),
                    radius=float(row[2]),
                    label=int(row[1]),
                    purity=float(row[3]),
                    member_indices=None,
                )
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from None
    return BallSet(balls, path.stem, n_features, None, 0)
