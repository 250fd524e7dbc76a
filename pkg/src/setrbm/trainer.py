"""Stochastic gradient training with early stopping and grid search.

One training run is strictly sequential: bags are visited in a seeded
shuffle each epoch and each visit applies the discriminative step, the
contrastive-divergence step, or both (hybrid), depending on the
objective. Validation accuracy is measured after every epoch and the
parameters from the best epoch are returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import classrbm, set_rbm
from .classrbm import RbmParams, init_params
from .data import validation_split
from .numerics import RngStream
from .set_rbm import SetVariant

__all__ = [
    "TrainConfig",
    "TrainHistory",
    "TrainedModel",
    "TrainingDiverged",
    "train",
    "train_on_split",
    "grid_search",
    "GridSearchResult",
    "default_grid",
]

OBJECTIVES = ("discriminative", "generative", "hybrid")


class TrainingDiverged(RuntimeError):
    """Parameters became non-finite during training."""

    def __init__(self, epoch: int):
        super().__init__(f"parameters diverged (non-finite) at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "discriminative"
    disc_rate: float = 0.01
    gen_rate: float = 0.0
    hidden_units: int = 100
    max_epochs: int = 200
    patience: int = 20
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.disc_rate < 0 or self.gen_rate < 0:
            raise ValueError("learning rates must be non-negative")
        # A zero rate disables that branch entirely; a hybrid run with both
        # rates zero would never move, so reject it.
        if self.objective == "hybrid" and self.disc_rate == 0 and self.gen_rate == 0:
            raise ValueError("hybrid objective needs a positive learning rate")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.hidden_units < 1 or self.max_epochs < 0:
            raise ValueError("hidden_units must be positive and max_epochs non-negative")

    @property
    def uses_disc(self) -> bool:
        return self.objective in ("discriminative", "hybrid") and self.disc_rate > 0

    @property
    def uses_gen(self) -> bool:
        return self.objective in ("generative", "hybrid") and self.gen_rate > 0


@dataclass
class TrainHistory:
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1
    best_accuracy: float = float("nan")
    provenance: str = ""


@dataclass
class TrainedModel:
    """A model kind plus trained parameters, with a posterior interface.

    ``kind`` is either the string "classrbm" or a SetVariant. The
    classrbm kind only accepts singleton bags (one pre-pooled vector).
    """

    kind: object
    params: RbmParams

    def posterior(self, bag) -> np.ndarray:
        if isinstance(self.kind, SetVariant):
            return set_rbm.set_posterior(self.kind, self.params, bag)
        X = set_rbm._instances(bag)
        if X.shape[0] != 1:
            raise ValueError("classrbm expects singleton bags (one pre-pooled vector)")
        return classrbm.posterior(self.params, X[0])

    def predict(self, bag):
        """(label, confidence): argmax class and its posterior probability."""
        p = self.posterior(bag)
        label = int(np.argmax(p))
        return label, float(p[label])


def _num_classes(bags, num_classes=None) -> int:
    seen = 1 + max(b.label for b in bags)
    if num_classes is None:
        return seen
    if num_classes < seen:
        raise ValueError(f"num_classes={num_classes} but labels reach {seen - 1}")
    return num_classes


def _check_bags(kind, bags):
    if not bags:
        raise ValueError("empty training set")
    dims = {b.dim for b in bags}
    if len(dims) != 1:
        raise ValueError(f"bags disagree on dimensionality: {sorted(dims)}")
    if kind == "classrbm" and any(b.size != 1 for b in bags):
        raise ValueError("classrbm training requires singleton (pre-pooled) bags")
    return dims.pop()


def _accuracy(model: TrainedModel, bags) -> float:
    correct = sum(1 for b in bags if model.predict(b)[0] == b.label)
    return correct / len(bags)


def train_on_split(kind, fit_bags, val_bags, config: TrainConfig, rng: RngStream, num_classes=None):
    """Train on fit_bags, early-stop on val_bags; returns (model, history).

    ``kind`` is "classrbm" or a SetVariant. The snapshot returned belongs
    to the earliest epoch attaining the maximum validation accuracy.
    """
    dim = _check_bags(kind, fit_bags)
    C = _num_classes(list(fit_bags) + list(val_bags), num_classes)
    if not val_bags:
        raise ValueError("empty validation set")

    params = init_params(dim, config.hidden_units, C, rng.derive(0))
    sgd = rng.derive(1)
    model = TrainedModel(kind, params)
    history = TrainHistory()
    best_params = params.copy()
    since_best = 0

    hard_variant = None
    if isinstance(kind, SetVariant):
        # CD always samples with the soft formulas; hardmax only shapes the
        # discriminative path.
        hard_variant = kind

    for epoch in range(config.max_epochs):
        for i in sgd.permutation(len(fit_bags)):
            bag = fit_bags[i]
            if config.uses_disc:
                if isinstance(kind, SetVariant):
                    grad = set_rbm.set_disc_gradient(hard_variant, params, bag, bag.label)
                else:
                    grad = classrbm.disc_gradient(params, bag.instances[0], bag.label)
                params.axpy(-config.disc_rate, grad)
            if config.uses_gen:
                if isinstance(kind, SetVariant):
                    new = set_rbm.set_cd_update(
                        kind.family, params, bag, bag.label, config.gen_rate, sgd
                    )
                else:
                    new = classrbm.cd_update(
                        params, bag.instances[0], bag.label, config.gen_rate, sgd
                    )
                params.b, params.c, params.d = new.b, new.c, new.d
                params.W, params.U = new.W, new.U
        if not params.is_finite():
            raise TrainingDiverged(epoch)
        acc = _accuracy(model, val_bags)
        history.val_accuracy.append(acc)
        if history.best_epoch < 0 or acc > history.best_accuracy:
            history.best_epoch = epoch
            history.best_accuracy = acc
            best_params = params.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    if history.best_epoch < 0:  # max_epochs == 0
        history.best_accuracy = _accuracy(model, val_bags)
        best_params = params.copy()
    history.provenance = (
        f"epoch {history.best_epoch} of {len(history.val_accuracy)} run; "
        f"objective={config.objective} disc_rate={config.disc_rate} "
        f"gen_rate={config.gen_rate} seed={config.seed}"
    )
    return TrainedModel(kind, best_params), history


def train(kind, train_bags, config: TrainConfig, rng: RngStream | None = None, num_classes=None):
    """Split off a validation fraction, then train with early stopping."""
    _check_bags(kind, train_bags)
    if rng is None:
        rng = RngStream(config.seed)
    fit, val = validation_split(train_bags, config.validation_fraction, config.seed)
    return train_on_split(kind, fit, val, config, rng, num_classes)


@dataclass
class GridSearchResult:
    config: TrainConfig
    model: TrainedModel
    history: TrainHistory
    val_accuracy: float


def default_grid(objective: str = "discriminative", rates=(0.001, 0.01, 0.1), **kw) -> list:
    """The default hyper-parameter grid: each active rate sweeps ``rates``."""
    if objective == "hybrid":
        return [
            TrainConfig(objective=objective, disc_rate=d, gen_rate=g, **kw)
            for d in rates
            for g in rates
        ]
    if objective == "generative":
        return [TrainConfig(objective=objective, disc_rate=0.0, gen_rate=r, **kw) for r in rates]
    return [TrainConfig(objective=objective, disc_rate=r, gen_rate=0.0, **kw) for r in rates]


def grid_search(kind, train_bags, grid, rng: RngStream | None = None, num_classes=None):
    """Train every config on the fit split; pick the best validation accuracy.

    Ties keep the earliest entry in grid order. Nothing is retrained: the
    winning run's model (trained on the fit split only) is returned.
    """
    if not grid:
        raise ValueError("empty hyper-parameter grid")
    if rng is None:
        rng = RngStream(grid[0].seed)
    fit, val = validation_split(train_bags, grid[0].validation_fraction, grid[0].seed)
    best = None
    for i, config in enumerate(grid):
        model, history = train_on_split(kind, fit, val, config, rng.derive(i), num_classes)
        if best is None or history.best_accuracy > best.val_accuracy:
            best = GridSearchResult(config, model, history, history.best_accuracy)
    return best
