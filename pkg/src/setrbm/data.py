"""Data model for multiple-instance datasets: bags, parsing, scaling, folds.

The canonical on-disk format is a sparse per-instance text file:

    # comment
    !dims <D> <C>               (optional header)
    <bag_id> <label> <idx>:<value> ...

One instance per line, 1-based strictly increasing feature indices,
instances grouped into bags by their shared bag id.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

__all__ = [
    "MilFormatError",
    "Bag",
    "Dataset",
    "FeatureScaler",
    "FoldPlan",
    "parse_mil_sparse",
    "serialize_mil_sparse",
    "fit_scaler",
    "apply_scaler",
    "make_folds",
    "validation_split",
]


class MilFormatError(ValueError):
    """Malformed MIL sparse text input."""


@dataclass
class Bag:
    """One input set: a non-empty (n, D) matrix of instance vectors plus a label."""

    id: str
    label: int
    instances: np.ndarray

    def __post_init__(self):
        self.instances = np.asarray(self.instances, dtype=np.float64)
        if self.instances.ndim != 2 or self.instances.shape[0] < 1:
            raise ValueError(f"bag {self.id!r}: instances must be a non-empty 2-D array")
        if not np.all(np.isfinite(self.instances)):
            raise ValueError(f"bag {self.id!r}: non-finite feature value")
        if self.label < 0:
            raise ValueError(f"bag {self.id!r}: negative label")

    @property
    def size(self) -> int:
        return self.instances.shape[0]

    @property
    def dim(self) -> int:
        return self.instances.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, Bag)
            and self.id == other.id
            and self.label == other.label
            and self.instances.shape == other.instances.shape
            and np.array_equal(self.instances, other.instances)
        )


@dataclass
class Dataset:
    bags: list
    num_classes: int
    num_features: int
    name: str = ""

    def __post_init__(self):
        seen = set()
        for bag in self.bags:
            if bag.id in seen:
                raise ValueError(f"duplicate bag id {bag.id!r}")
            seen.add(bag.id)
            if bag.label >= self.num_classes:
                raise ValueError(f"bag {bag.id!r}: label {bag.label} >= C={self.num_classes}")
            if bag.dim != self.num_features:
                raise ValueError(
                    f"bag {bag.id!r}: dimension {bag.dim} != D={self.num_features}"
                )

    def __len__(self) -> int:
        return len(self.bags)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.num_classes == other.num_classes
            and self.num_features == other.num_features
            and self.name == other.name
            and self.bags == other.bags
        )

    def labels(self) -> np.ndarray:
        return np.array([b.label for b in self.bags], dtype=int)


def parse_mil_sparse(stream, name: str = "") -> Dataset:
    """Parse the MIL sparse text format into a Dataset.

    ``stream`` is an iterable of lines, an open text file, or a whole
    string. Bags are assembled in first-appearance order of their ids.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    declared_d = declared_c = None
    bag_order: list = []
    bag_rows: dict = {}
    bag_labels: dict = {}
    max_idx = 0
    max_label = -1
    saw_data = False

    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("!dims"):
            if saw_data:
                raise MilFormatError(f"line {lineno}: !dims header after data lines")
            parts = line.split()
            if len(parts) != 3:
                raise MilFormatError(f"line {lineno}: malformed !dims header")
            try:
                declared_d, declared_c = int(parts[1]), int(parts[2])
            except ValueError:
                raise MilFormatError(f"line {lineno}: non-numeric !dims header") from None
            if declared_d < 1 or declared_c < 1:
                raise MilFormatError(f"line {lineno}: !dims values must be positive")
            continue

        saw_data = True
        tokens = line.split()
        if len(tokens) < 2:
            raise MilFormatError(f"line {lineno}: expected '<bag_id> <label> ...'")
        bag_id = tokens[0]
        try:
            label = int(tokens[1])
        except ValueError:
            raise MilFormatError(f"line {lineno}: non-numeric label {tokens[1]!r}") from None
        if label < 0:
            raise MilFormatError(f"line {lineno}: negative label")

        prev_idx = 0
        pairs = []
        for tok in tokens[2:]:
            if ":" not in tok:
                raise MilFormatError(f"line {lineno}: malformed feature token {tok!r}")
            idx_s, _, val_s = tok.partition(":")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise MilFormatError(f"line {lineno}: non-numeric token {tok!r}") from None
            if idx <= prev_idx:
                raise MilFormatError(
                    f"line {lineno}: feature indices must be 1-based and strictly "
                    f"increasing (got {idx} after {prev_idx})"
                )
            if declared_d is not None and idx > declared_d:
                raise MilFormatError(f"line {lineno}: index {idx} exceeds declared D={declared_d}")
            if not np.isfinite(val):
                raise MilFormatError(f"line {lineno}: non-finite value in {tok!r}")
            prev_idx = idx
            pairs.append((idx, val))
        max_idx = max(max_idx, prev_idx)
        max_label = max(max_label, label)

        if bag_id not in bag_rows:
            bag_order.append(bag_id)
            bag_rows[bag_id] = []
            bag_labels[bag_id] = label
        elif bag_labels[bag_id] != label:
            raise MilFormatError(
                f"line {lineno}: bag {bag_id!r} has conflicting labels "
                f"{bag_labels[bag_id]} and {label}"
            )
        bag_rows[bag_id].append(pairs)

    if not bag_order:
        raise MilFormatError("no instances found")

    num_features = declared_d if declared_d is not None else max_idx
    num_classes = declared_c if declared_c is not None else max_label + 1
    if num_features < 1:
        raise MilFormatError("no feature indices seen and no !dims header")
    if max_label >= num_classes:
        raise MilFormatError(f"label {max_label} exceeds declared C={num_classes}")

    bags = []
    for bag_id in bag_order:
        rows = np.zeros((len(bag_rows[bag_id]), num_features))
        for r, pairs in enumerate(bag_rows[bag_id]):
            for idx, val in pairs:
                rows[r, idx - 1] = val
        bags.append(Bag(bag_id, bag_labels[bag_id], rows))
    return Dataset(bags, num_classes, num_features, name)


def serialize_mil_sparse(dataset: Dataset) -> str:
    """Inverse of parse_mil_sparse; zero feature values are omitted."""
    lines = [f"!dims {dataset.num_features} {dataset.num_classes}"]
    for bag in dataset.bags:
        for row in bag.instances:
            feats = " ".join(f"{i + 1}:{row[i]!r}" for i in np.nonzero(row)[0])
            lines.append(f"{bag.id} {bag.label} {feats}".rstrip())
    return "\n".join(lines) + "\n"


@dataclass
class FeatureScaler:
    """Per-feature min-max ranges fitted on training bags."""

    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, instances: np.ndarray) -> np.ndarray:
        if instances.shape[1] != self.mins.shape[0]:
            raise ValueError(
                f"scaler fitted for D={self.mins.shape[0]}, got D={instances.shape[1]}"
            )
        span = self.maxs - self.mins
        out = np.zeros_like(instances, dtype=np.float64)
        nz = span > 0
        out[:, nz] = (instances[:, nz] - self.mins[nz]) / span[nz]
        return np.clip(out, 0.0, 1.0)


def fit_scaler(train_bags) -> FeatureScaler:
    """Min and max per feature over every instance of every training bag."""
    if not train_bags:
        raise ValueError("fit_scaler: no training bags")
    stacked = np.vstack([b.instances for b in train_bags])
    return FeatureScaler(stacked.min(axis=0), stacked.max(axis=0))


def apply_scaler(scaler: FeatureScaler, dataset: Dataset) -> Dataset:
    """Rescale every bag; out-of-range test values clamp into [0, 1]."""
    bags = [Bag(b.id, b.label, scaler.transform(b.instances)) for b in dataset.bags]
    return Dataset(bags, dataset.num_classes, dataset.num_features, dataset.name)


def scale_bags(scaler: FeatureScaler, bags) -> list:
    return [Bag(b.id, b.label, scaler.transform(b.instances)) for b in bags]


@dataclass
class FoldPlan:
    """Stratified fold assignments for repeated cross-validation."""

    k: int
    repeats: int
    assignments: list = field(default_factory=list)  # per repeat: bag id -> fold
    seed: int = 0

    def test_bags(self, dataset: Dataset, repeat: int, fold: int) -> list:
        a = self.assignments[repeat]
        return [b for b in dataset.bags if a[b.id] == fold]

    def train_bags(self, dataset: Dataset, repeat: int, fold: int) -> list:
        a = self.assignments[repeat]
        return [b for b in dataset.bags if a[b.id] != fold]


def make_folds(dataset: Dataset, k: int, repeats: int, seed: int) -> FoldPlan:
    """Stratified k-fold plan, repeated; deterministic in (dataset, k, repeats, seed).

    Within each class the fold sizes differ by at most one. Extra bags of
    successive classes start at rotated fold offsets so total fold sizes
    stay balanced too.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    labels = sorted({b.label for b in dataset.bags})
    by_class = {c: [b.id for b in dataset.bags if b.label == c] for c in labels}
    for c, ids in by_class.items():
        if len(ids) < k:
            raise ValueError(f"class {c} has {len(ids)} bags, fewer than k={k}")

    root = RngStream(seed)
    assignments = []
    for r in range(repeats):
        stream = root.derive(r)
        assignment = {}
        offset = 0
        for c in labels:
            ids = by_class[c]
            perm = stream.permutation(len(ids))
            for pos, idx in enumerate(perm):
                assignment[ids[idx]] = (pos + offset) % k
            offset += len(ids)
        assignments.append(assignment)
    return FoldPlan(k, repeats, assignments, seed)


def validation_split(train_bags, fraction: float, seed: int):
    """Stratified (fit, validation) split with round(fraction * n) validation bags."""
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must be in (0, 1)")
    n = len(train_bags)
    target = int(np.floor(fraction * n + 0.5))
    labels = sorted({b.label for b in train_bags})
    by_class = {c: [b for b in train_bags if b.label == c] for c in labels}

    base = {c: int(np.floor(fraction * len(by_class[c]))) for c in labels}
    remainder = target - sum(base.values())
    fracs = sorted(
        labels, key=lambda c: (-(fraction * len(by_class[c]) - base[c]), c)
    )
    counts = dict(base)
    for c in fracs:
        if remainder <= 0:
            break
        if counts[c] < len(by_class[c]):
            counts[c] += 1
            remainder -= 1

    stream = RngStream(seed)
    fit, val = [], []
    for c in labels:
        bags = by_class[c]
        perm = stream.permutation(len(bags))
        take = counts[c]
        if take >= len(bags):
            raise ValueError(f"validation split leaves class {c} empty in fit bags")
        val.extend(bags[i] for i in perm[:take])
        fit.extend(bags[i] for i in perm[take:])
    if not val:
        raise ValueError("validation split produced no validation bags")
    return fit, val
