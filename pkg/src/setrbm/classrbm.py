"""Classification restricted Boltzmann machine over single vectors.

Energy E(x, y, h) = -d.y - c.h - b.x - h.W.x - h.U.y with binary hidden
units h, inputs x in [0, 1]^D treated as Bernoulli means, and a one-hot
class target y. The class posterior is the softmax of negated free
energies, which this module computes in closed form together with the
exact gradient of -log p(y|x) and the one-step contrastive divergence
update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, log_sum_exp, sigmoid, softplus

__all__ = [
    "RbmParams",
    "Gradients",
    "GibbsParticle",
    "init_params",
    "free_energy",
    "posterior",
    "disc_gradient",
    "gibbs_step",
    "cd_update",
]


@dataclass
class RbmParams:
    """The five parameter blocks shared by every RBM variant.

    b: input biases (D,), c: hidden biases (H,), d: class biases (C,),
    W: hidden-input weights (H, D), U: hidden-class weights (H, C).
    """

    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    W: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        for name in ("b", "c", "d", "W", "U"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        H, D = self.W.shape
        C = self.U.shape[1]
        if self.b.shape != (D,) or self.c.shape != (H,) or self.d.shape != (C,):
            raise ValueError("inconsistent parameter shapes")
        if self.U.shape != (H, C):
            raise ValueError("inconsistent parameter shapes")

    @property
    def num_inputs(self) -> int:
        return self.W.shape[1]

    @property
    def num_hidden(self) -> int:
        return self.W.shape[0]

    @property
    def num_classes(self) -> int:
        return self.U.shape[1]

    def copy(self) -> "RbmParams":
        return RbmParams(self.b.copy(), self.c.copy(), self.d.copy(), self.W.copy(), self.U.copy())

    def blocks(self) -> dict:
        return {"b": self.b, "c": self.c, "d": self.d, "W": self.W, "U": self.U}

    def axpy(self, scale: float, other: "Gradients") -> None:
        """In-place params += scale * other, block by block."""
        self.b += scale * other.b
        self.c += scale * other.c
        self.d += scale * other.d
        self.W += scale * other.W
        self.U += scale * other.U

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.blocks().values())

    def allclose(self, other: "RbmParams", **kw) -> bool:
        return all(
            np.allclose(a, b, **kw)
            for a, b in zip(self.blocks().values(), other.blocks().values())
        )


class Gradients(RbmParams):
    """Per-block partial derivatives; same shapes as the owning RbmParams."""


def init_params(num_inputs: int, num_hidden: int, num_classes: int, rng: RngStream) -> RbmParams:
    """Small symmetric init: W, U ~ U(-0.01/sqrt(D), 0.01/sqrt(D)), biases zero."""
    bound = 0.01 / np.sqrt(num_inputs)
    W = (rng.uniforms((num_hidden, num_inputs)) * 2.0 - 1.0) * bound
    U = (rng.uniforms((num_hidden, num_classes)) * 2.0 - 1.0) * bound
    return RbmParams(
        np.zeros(num_inputs), np.zeros(num_hidden), np.zeros(num_classes), W, U
    )


def _check_input(params: RbmParams, x: np.ndarray, y: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.num_inputs,):
        raise ValueError(f"x has shape {x.shape}, expected ({params.num_inputs},)")
    if y is not None and not (0 <= y < params.num_classes):
        raise ValueError(f"class index {y} out of range [0, {params.num_classes})")
    return x


def free_energy(params: RbmParams, x, y: int) -> float:
    """F(x, y) = -d[y] - sum_j softplus(c_j + W_j.x + U_j[y])."""
    x = _check_input(params, x, y)
    act = params.c + params.W @ x + params.U[:, y]
    return float(-params.d[y] - softplus(act).sum())


def _neg_free_energies(params: RbmParams, x: np.ndarray) -> np.ndarray:
    act = params.c + params.W @ x  # (H,)
    return params.d + softplus(act[:, None] + params.U).sum(axis=0)


def posterior(params: RbmParams, x) -> np.ndarray:
    """p(y | x) over all classes, via log-sum-exp of negated free energies."""
    x = _check_input(params, x)
    neg_f = _neg_free_energies(params, x)
    return np.exp(neg_f - log_sum_exp(neg_f))


def disc_gradient(params: RbmParams, x, y: int) -> Gradients:
    """Exact gradient of -log p(y | x) for every parameter block.

    The input-bias block is identically zero: the b.x term of the free
    energy is class-independent and cancels in the conditional.
    """
    x = _check_input(params, x, y)
    act = params.c + params.W @ x
    S = sigmoid(act[:, None] + params.U)  # (H, C) hidden activations per class
    neg_f = params.d + softplus(act[:, None] + params.U).sum(axis=0)
    p = np.exp(neg_f - log_sum_exp(neg_f))

    dd = p.copy()
    dd[y] -= 1.0
    q = S @ p - S[:, y]  # (H,)
    dU = S * p[None, :]
    dU[:, y] -= S[:, y]
    return Gradients(
        b=np.zeros(params.num_inputs),
        c=q,
        d=dd,
        W=np.outer(q, x),
        U=dU,
    )


@dataclass
class GibbsParticle:
    """Negative-phase sample plus the hidden probabilities of both phases.

    x_neg is a binary vector, y_neg a class index; h_pos and h_neg hold
    p(h=1 | ...) conditioned on the data and on the sample respectively.
    h_sample is the binary hidden state actually drawn in between.
    """

    x_neg: np.ndarray
    y_neg: int
    h_pos: np.ndarray
    h_neg: np.ndarray
    h_sample: np.ndarray


def gibbs_step(params: RbmParams, x, y: int, rng: RngStream) -> GibbsParticle:
    """One Gibbs sweep h | (x, y) -> (x~, y~) | h, started at the data.

    Draw order: H uniforms for h, D for x~, one for y~.
    """
    x = _check_input(params, x, y)
    h_pos = sigmoid(params.c + params.W @ x + params.U[:, y])
    h = (rng.uniforms(params.num_hidden) < h_pos).astype(np.float64)
    x_neg = (rng.uniforms(params.num_inputs) < sigmoid(params.b + params.W.T @ h)).astype(
        np.float64
    )
    y_logits = params.d + params.U.T @ h
    y_neg = rng.categorical(np.exp(y_logits - y_logits.max()))
    h_neg = sigmoid(params.c + params.W @ x_neg + params.U[:, y_neg])
    return GibbsParticle(x_neg, int(y_neg), h_pos, h_neg, h)


def cd_update(
    params: RbmParams,
    x,
    y: int,
    rate: float,
    rng: RngStream | None = None,
    particle: GibbsParticle | None = None,
) -> RbmParams:
    """One contrastive-divergence parameter update; returns new params.

    A pre-drawn particle can be injected (for tests); otherwise one
    gibbs_step is taken.
    """
    if rate < 0:
        raise ValueError("learning rate must be non-negative")
    x = _check_input(params, x, y)
    if particle is None:
        if rng is None:
            raise ValueError("need an RngStream when no particle is injected")
        particle = gibbs_step(params, x, y, rng)

    new = params.copy()
    new.b += rate * (x - particle.x_neg)
    new.c += rate * (particle.h_pos - particle.h_neg)
    new.d[y] += rate
    new.d[particle.y_neg] -= rate
    new.W += rate * (np.outer(particle.h_pos, x) - np.outer(particle.h_neg, particle.x_neg))
    new.U[:, y] += rate * particle.h_pos
    new.U[:, particle.y_neg] -= rate * particle.h_neg
    return new
