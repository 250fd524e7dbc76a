"""Synthetic benchmark problems and dataset converters."""

from __future__ import annotations

import numpy as np

from .data import Bag, Dataset
from .numerics import RngStream

__all__ = [
    "toy_vector_bags",
    "toy_mil_dataset",
    "dataset_from_uci_musk",
]


def toy_vector_bags(n_bags: int = 20, seed: int = 0) -> Dataset:
    """Linearly separable singleton bags: class 0 holds e1, class 1 holds e2."""
    bags = []
    for i in range(n_bags):
        label = i % 2
        x = np.zeros(2)
        x[label] = 1.0
        bags.append(Bag(f"v{i}", label, x[None, :]))
    return Dataset(bags, 2, 2, name=f"toy-vector-{n_bags}")


def toy_mil_dataset(
    n_bags: int = 30,
    num_features: int = 4,
    positive_fraction: float = 0.4,
    max_bag_size: int = 4,
    seed: int = 0,
) -> Dataset:
    """Separable bags-of-vectors problem with a 60/40 class split by default.

    Feature 0 is a perfect witness: every positive bag contains exactly one
    instance with feature 0 set to 1 and negative bags never do. The
    remaining features are uniform noise, so only set-level pooling of the
    witness solves the task.
    """
    rng = RngStream(seed)
    n_pos = int(round(n_bags * positive_fraction))
    bags = []
    for i in range(n_bags):
        label = 1 if i < n_pos else 0
        size = 2 + int(rng.uniform() * (max_bag_size - 1))
        X = rng.uniforms((size, num_features))
        X[:, 0] = 0.0
        if label == 1:
            witness = int(rng.uniform() * size)
            X[witness, 0] = 1.0
        bags.append(Bag(f"bag{i}", label, X))
    order = RngStream(seed, 1).permutation(n_bags)
    return Dataset(
        [bags[i] for i in order], 2, num_features, name=f"toy-mil-{n_bags}"
    )


def dataset_from_uci_musk(lines, name: str = "musk1") -> Dataset:
    """Convert the UCI Musk CSV (clean1.data / clean2.data) to a Dataset.

    Each row is ``molecule,conformation,f1..f166,class``; molecules become
    bags. Class strings like ``1.`` or ``MUSK-xxx`` row prefixes are
    handled as distributed by UCI.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    order: list = []
    rows: dict = {}
    labels: dict = {}
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip().strip('"') for p in line.split(",")]
        if len(parts) < 4:
            raise ValueError(f"malformed musk row: {line[:60]!r}")
        mol = parts[0]
        feats = np.array([float(v) for v in parts[2:-1]], dtype=np.float64)
        label = int(float(parts[-1]))
        if mol not in rows:
            order.append(mol)
            rows[mol] = []
            labels[mol] = label
        elif labels[mol] != label:
            raise ValueError(f"molecule {mol!r} has conflicting class labels")
        rows[mol].append(feats)
    bags = [Bag(mol, labels[mol], np.vstack(rows[mol])) for mol in order]
    dims = {b.dim for b in bags}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature counts: {sorted(dims)}")
    return Dataset(bags, 2, dims.pop(), name=name)
