"""Comparison systems: pooled-input RBM features and max-output models.

``pool_bag`` flattens a bag to a fixed [max | min | mean] vector so the
plain single-vector RBM applies. The max-output family instead scores
every instance with an ordinary binary classifier and lets the best
instance speak for the bag, training only on the per-bag argmax
instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import classrbm
from .classrbm import RbmParams, init_params
from .data import Bag, validation_split
from .numerics import RngStream, sigmoid
from .set_rbm import _instances
from .trainer import TrainConfig, TrainHistory, TrainingDiverged

__all__ = [
    "pool_bag",
    "pool_bags",
    "MaxOutModel",
    "maxout_train",
    "maxout_predict",
    "MAXOUT_KINDS",
]

MAXOUT_KINDS = ("logit", "mlp", "classrbm")


def pool_bag(bag) -> np.ndarray:
    """[per-feature max | min | mean] over the bag's instances; length 3D."""
    X = _instances(bag)
    return np.concatenate([X.max(axis=0), X.min(axis=0), X.mean(axis=0)])


def pool_bags(bags) -> list:
    """Pooled singleton bags, ready for classrbm training."""
    return [Bag(b.id, b.label, pool_bag(b)[None, :]) for b in bags]


@dataclass
class MaxOutModel:
    """A binary instance scorer used through max-pooling over the bag.

    kind "logit": w (D,), w0; kind "mlp": one sigmoid hidden layer
    (W1 (H, D), b1 (H,), w2 (H,), b2) with a sigmoid output; kind
    "classrbm": an RbmParams whose positive-class posterior scores
    instances.
    """

    kind: str
    weights: dict

    def instance_scores(self, X: np.ndarray) -> np.ndarray:
        """Positive-class probability of every instance; shape (n,)."""
        w = self.weights
        if self.kind == "logit":
            return sigmoid(X @ w["w"] + w["w0"])
        if self.kind == "mlp":
            hidden = sigmoid(X @ w["W1"].T + w["b1"][None, :])
            return sigmoid(hidden @ w["w2"] + w["b2"])
        return np.array([classrbm.posterior(w["params"], x)[1] for x in X])


def _init_maxout(kind: str, dim: int, hidden: int, rng: RngStream) -> MaxOutModel:
    if kind == "logit":
        return MaxOutModel(kind, {"w": np.zeros(dim), "w0": 0.0})
    if kind == "mlp":
        bound = 0.01 / np.sqrt(dim)
        return MaxOutModel(
            kind,
            {
                "W1": (rng.uniforms((hidden, dim)) * 2 - 1) * bound,
                "b1": np.zeros(hidden),
                "w2": (rng.uniforms(hidden) * 2 - 1) * bound,
                "b2": 0.0,
            },
        )
    return MaxOutModel(kind, {"params": init_params(dim, hidden, 2, rng)})


def _maxout_step(model: MaxOutModel, x: np.ndarray, label: int, rate: float) -> None:
    """One gradient step of the instance-level loss on instance x."""
    w = model.weights
    if model.kind == "logit":
        err = sigmoid(x @ w["w"] + w["w0"]) - label  # d(cross-entropy)/d logit
        w["w"] -= rate * err * x
        w["w0"] -= rate * err
    elif model.kind == "mlp":
        z1 = w["W1"] @ x + w["b1"]
        a1 = sigmoid(z1)
        p = sigmoid(a1 @ w["w2"] + w["b2"])
        err = p - label
        d1 = err * w["w2"] * a1 * (1 - a1)
        w["w2"] -= rate * err * a1
        w["b2"] -= rate * err
        w["W1"] -= rate * np.outer(d1, x)
        w["b1"] -= rate * d1
    else:
        grad = classrbm.disc_gradient(w["params"], x, label)
        w["params"].axpy(-rate, grad)


def maxout_predict(model: MaxOutModel, bag):
    """(label, bag score): the score is the best instance's positive probability."""
    score = float(model.instance_scores(_instances(bag)).max())
    return (1 if score >= 0.5 else 0), score


def _maxout_accuracy(model: MaxOutModel, bags) -> float:
    return sum(1 for b in bags if maxout_predict(model, b)[0] == b.label) / len(bags)


def maxout_train(kind: str, bags, config: TrainConfig, rng: RngStream | None = None):
    """Train a max-output model on binary bags; returns (model, history).

    Each visit scores the bag's instances, picks the argmax (ties to the
    lowest index) and applies one instance-level gradient step there.
    Early stopping mirrors the RBM trainer.
    """
    if kind not in MAXOUT_KINDS:
        raise ValueError(f"unknown max-out kind {kind!r}")
    if not bags:
        raise ValueError("empty training set")
    if any(b.label not in (0, 1) for b in bags):
        raise ValueError("max-output models support binary tasks only (C=2)")
    if rng is None:
        rng = RngStream(config.seed)

    fit, val = validation_split(bags, config.validation_fraction, config.seed)
    return maxout_train_on_split(kind, fit, val, config, rng)


def maxout_train_on_split(kind, fit, val, config: TrainConfig, rng: RngStream):
    if any(b.label not in (0, 1) for b in list(fit) + list(val)):
        raise ValueError("max-output models support binary tasks only (C=2)")
    dim = fit[0].dim
    model = _init_maxout(kind, dim, config.hidden_units, rng.derive(0))
    sgd = rng.derive(1)
    history = TrainHistory()
    best = _init_maxout(kind, dim, config.hidden_units, rng.derive(0))
    since_best = 0

    for epoch in range(config.max_epochs):
        for i in sgd.permutation(len(fit)):
            bag = fit[i]
            X = bag.instances
            pick = int(np.argmax(model.instance_scores(X)))
            _maxout_step(model, X[pick], bag.label, config.disc_rate)
        if not _maxout_finite(model):
            raise TrainingDiverged(epoch)
        acc = _maxout_accuracy(model, val)
        history.val_accuracy.append(acc)
        if history.best_epoch < 0 or acc > history.best_accuracy:
            history.best_epoch = epoch
            history.best_accuracy = acc
            best = _copy_maxout(model)
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    if history.best_epoch < 0:
        history.best_accuracy = _maxout_accuracy(model, val)
        best = _copy_maxout(model)
    history.provenance = f"epoch {history.best_epoch}; kind={kind} rate={config.disc_rate}"
    return best, history


def _maxout_finite(model: MaxOutModel) -> bool:
    for v in model.weights.values():
        if isinstance(v, RbmParams):
            if not v.is_finite():
                return False
        elif not np.all(np.isfinite(v)):
            return False
    return True


def _copy_maxout(model: MaxOutModel) -> MaxOutModel:
    out = {}
    for k, v in model.weights.items():
        if isinstance(v, RbmParams):
            out[k] = v.copy()
        elif isinstance(v, np.ndarray):
            out[k] = v.copy()
        else:
            out[k] = v
    return MaxOutModel(model.kind, out)
