"""Model zoo: one name per benchmark row, one fit function behind them all.

Every entry takes scaled training bags plus an RngStream and returns a
predictor with ``predict(bag) -> (label, confidence)``. RBM-family
entries tune learning rates by grid search on a 20% validation split;
SVM entries tune their kernel hyper-parameters the same way.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from . import baselines, kernels, svm
from .data import validation_split
from .numerics import RngStream, sigmoid, _splitmix64
from .set_rbm import SetVariant
from .trainer import TrainConfig, TrainedModel, grid_search

__all__ = ["ModelSpec", "MODEL_NAMES", "fit_predictor"]

MODEL_NAMES = (
    "classrbm-poolin",
    "set-xor-soft",
    "set-xor-hard",
    "set-or-soft",
    "set-or-hard",
    "maxout-logit",
    "maxout-mlp",
    "maxout-classrbm",
    "svm-migraph",
    "svm-migraph2",
    "svm-max",
    "majority",
)


@dataclass(frozen=True)
class ModelSpec:
    """A model name plus the hyper-parameter grids used to tune it."""

    name: str
    objective: str = "discriminative"
    rates: tuple = (0.001, 0.01, 0.1)
    hidden_units: int = 100
    max_epochs: int = 200
    patience: int = 20
    validation_fraction: float = 0.2
    gamma_grid: tuple = (0.01, 0.05, 0.1, 0.5, 1.0)
    c_grid: tuple = (1.0, 10.0, 100.0)
    sigma0_grid: tuple = (0.5, 1.0, 2.0, 4.0)

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; choose from {MODEL_NAMES}")


def _split_seed(rng: RngStream) -> int:
    return _splitmix64(rng.seed ^ rng.stream_id)


def _train_grid(spec: ModelSpec, seed: int) -> list:
    kw = dict(
        hidden_units=spec.hidden_units,
        max_epochs=spec.max_epochs,
        patience=spec.patience,
        validation_fraction=spec.validation_fraction,
        seed=seed,
    )
    if spec.objective == "hybrid":
        return [
            TrainConfig(objective="hybrid", disc_rate=d, gen_rate=g, **kw)
            for d in spec.rates
            for g in spec.rates
        ]
    if spec.objective == "generative":
        return [
            TrainConfig(objective="generative", disc_rate=0.0, gen_rate=r, **kw)
            for r in spec.rates
        ]
    return [
        TrainConfig(objective="discriminative", disc_rate=r, gen_rate=0.0, **kw)
        for r in spec.rates
    ]


class RbmPredictor:
    """Posterior-argmax predictor; optionally pools bags to a single vector."""

    def __init__(self, model: TrainedModel, pool_input: bool = False):
        self.model = model
        self.pool_input = pool_input

    def predict(self, bag):
        if self.pool_input:
            bag = baselines.pool_bag(bag)[None, :]
        return self.model.predict(bag)


class MaxOutPredictor:
    def __init__(self, model: baselines.MaxOutModel):
        self.model = model

    def predict(self, bag):
        label, score = baselines.maxout_predict(self.model, bag)
        return label, float(max(score, 1.0 - score))


class MajorityPredictor:
    """Constant prediction of the most frequent training label."""

    def __init__(self, label: int, frequency: float):
        self.label = label
        self.frequency = frequency

    def predict(self, bag):
        return self.label, self.frequency


class SvmPredictor:
    """One-vs-rest kernel SVM over bags.

    Decision scores are mapped through a logistic link to get a
    confidence in [0, 1]; for binary tasks the positive class score is
    sigmoid(decision) and the confidence its larger side.
    """

    def __init__(self, machines, train_bags, kind, gamma, sigma0, num_classes):
        self.machines = machines  # class index -> SvmModel (binary: single entry)
        self.train_bags = train_bags
        self.kind = kind
        self.gamma = gamma
        self.sigma0 = sigma0
        self.num_classes = num_classes

    def _kernel_row(self, bag) -> np.ndarray:
        if self.kind == "max":
            return np.array(
                [kernels.max_kernel(bag, b, self.gamma) for b in self.train_bags]
            )
        return np.array(
            [
                kernels.migraph_kernel(bag, b, self.gamma, self.sigma0)
                for b in self.train_bags
            ]
        )

    def predict(self, bag):
        row = self._kernel_row(bag)
        if self.num_classes == 2:
            score = self.machines[1].decision(row)
            p = sigmoid(score)
            return (1 if score >= 0 else 0), float(max(p, 1.0 - p))
        scores = np.array([self.machines[c].decision(row) for c in range(self.num_classes)])
        label = int(np.argmax(scores))
        probs = np.exp(scores - scores.max())
        return label, float(probs[label] / probs.sum())


def _accuracy(predictor, bags) -> float:
    return sum(1 for b in bags if predictor.predict(b)[0] == b.label) / len(bags)


def _fit_svm(spec: ModelSpec, bags, num_classes: int, rng: RngStream) -> SvmPredictor:
    kind = spec.name.removeprefix("svm-")
    fit, val = validation_split(bags, spec.validation_fraction, _split_seed(rng))
    both = list(fit) + list(val)
    n_fit = len(fit)

    if kind == "migraph":
        combos = [(g, None) for g in spec.gamma_grid]
    elif kind == "migraph2":
        combos = [(g, s0) for g in spec.gamma_grid for s0 in spec.sigma0_grid]
    else:
        combos = [(g, None) for g in spec.gamma_grid]

    best = None
    for gamma, sigma0 in combos:
        G = kernels.gram_matrix(both, kind, gamma, sigma0)
        fit_gram = G[:n_fit, :n_fit]
        val_rows = G[n_fit:, :n_fit]
        for c_svm in spec.c_grid:
            machines = {}
            for cls in range(num_classes) if num_classes > 2 else (1,):
                y = np.where(np.array([b.label for b in fit]) == cls, 1.0, -1.0)
                machines[cls] = svm.svm_train(fit_gram, y, c_svm)
            correct = 0
            for i, bag in enumerate(val):
                row = val_rows[i]
                if num_classes == 2:
                    pred = 1 if machines[1].decision(row) >= 0 else 0
                else:
                    pred = int(
                        np.argmax([machines[c].decision(row) for c in range(num_classes)])
                    )
                correct += pred == bag.label
            acc = correct / len(val)
            if best is None or acc > best[0]:
                best = (acc, gamma, sigma0, c_svm, machines)

    _, gamma, sigma0, c_svm, machines = best
    return SvmPredictor(machines, fit, kind, gamma, sigma0, num_classes)


def fit_predictor(spec, bags, num_classes: int, rng: RngStream, grid=None):
    """Fit the named model on (already scaled) training bags.

    ``grid`` optionally overrides the TrainConfig grid for the
    RBM-family and max-out entries.
    """
    if isinstance(spec, str):
        spec = ModelSpec(spec)
    name = spec.name

    if name == "majority":
        counts = Counter(b.label for b in bags)
        top = max(counts, key=lambda c: (counts[c], -c))
        return MajorityPredictor(int(top), counts[top] / len(bags))

    if name.startswith("svm-"):
        return _fit_svm(spec, bags, num_classes, rng)

    if name.startswith("maxout-"):
        if num_classes != 2:
            raise ValueError("max-output baselines support binary tasks only")
        kind = spec.name.removeprefix("maxout-")
        configs = grid or _train_grid(spec, _split_seed(rng))
        fit, val = validation_split(
            bags, configs[0].validation_fraction, configs[0].seed
        )
        best = None
        for i, config in enumerate(configs):
            model, history = baselines.maxout_train_on_split(
                kind, fit, val, config, rng.derive(i)
            )
            if best is None or history.best_accuracy > best[0]:
                best = (history.best_accuracy, model)
        return MaxOutPredictor(best[1])

    if name == "classrbm-poolin":
        pooled = baselines.pool_bags(bags)
        configs = grid or _train_grid(spec, _split_seed(rng))
        result = grid_search("classrbm", pooled, configs, rng, num_classes)
        return RbmPredictor(result.model, pool_input=True)

    family, pooling = name.split("-")[1], name.split("-")[2]
    variant = SetVariant(family, "hardmax" if pooling == "hard" else "soft")
    configs = grid or _train_grid(spec, _split_seed(rng))
    result = grid_search(variant, bags, configs, rng, num_classes)
    return RbmPredictor(result.model)
