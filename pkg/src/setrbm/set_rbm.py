"""Classification RBMs over sets of vectors.

Two families generalize the single-vector model to a bag X of instance
vectors, each instance wired to its own copy of the hidden layer through
the shared weights:

* XOR: at each hidden index j at most one instance's unit may fire
  (sum_s h_j^(s) in {0, 1}). Per-unit evidence is pooled across the bag
  by log-sum-exp of a_j^(s) = c_j + W_j.x^(s).
* OR: per-instance hidden layers H are unconstrained, but a second bank
  of class-connected units G is mutually exclusive across instances and
  tied to H by h_j^(s) >= g_j^(s). Pooling applies log-sum-exp to
  softminus(a_j^(s)).

Hard-max variants replace the log-sum-exp pool with a max over
instances, for the posterior and discriminative gradient only; sampling
and CD always use the soft formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .classrbm import Gradients, RbmParams
from .data import Bag
from .numerics import RngStream, log_sum_exp, sigmoid, softminus, softplus

__all__ = [
    "SetVariant",
    "XOR_SOFT",
    "XOR_HARD",
    "OR_SOFT",
    "OR_HARD",
    "SetGibbsParticle",
    "pooled_activation",
    "pooled_activations",
    "set_free_energy",
    "set_posterior",
    "set_disc_gradient",
    "brute_force_posterior",
    "xor_hidden_conditional",
    "or_hidden_conditionals",
    "set_gibbs_step",
    "set_cd_update",
]

FAMILIES = ("xor", "or")
POOLINGS = ("soft", "hardmax")


@dataclass(frozen=True)
class SetVariant:
    """Model family (xor | or) plus pooling mode (soft | hardmax)."""

    family: str
    pooling: str = "soft"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")

    @property
    def kind(self) -> str:
        return f"set-{self.family}"


XOR_SOFT = SetVariant("xor", "soft")
XOR_HARD = SetVariant("xor", "hardmax")
OR_SOFT = SetVariant("or", "soft")
OR_HARD = SetVariant("or", "hardmax")


def _instances(bag) -> np.ndarray:
    X = bag.instances if isinstance(bag, Bag) else np.asarray(bag, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 1:
        raise ValueError("empty bag")
    return X


def _activations(params: RbmParams, X: np.ndarray) -> np.ndarray:
    """Per-(instance, hidden unit) activations a_j^(s); shape (n, H)."""
    if X.shape[1] != params.num_inputs:
        raise ValueError(
            f"instances have D={X.shape[1]}, model expects D={params.num_inputs}"
        )
    return params.c[None, :] + X @ params.W.T


def pooled_activations(variant: SetVariant, params: RbmParams, bag) -> np.ndarray:
    """Pool per-instance activations over the bag for every hidden unit.

    Summation over instances runs in a fixed left-to-right order, so the
    result is bit-reproducible for a given instance ordering.
    """
    A = _activations(params, _instances(bag))
    M = A if variant.family == "xor" else softminus(A)
    if variant.pooling == "soft":
        return log_sum_exp(M, axis=0)
    return M.max(axis=0)


def pooled_activation(variant: SetVariant, params: RbmParams, bag, j: int) -> float:
    """Pooled activation of hidden unit j."""
    return float(pooled_activations(variant, params, bag)[j])


def set_free_energy(variant: SetVariant, params: RbmParams, bag, y: int) -> float:
    """F(X, y) = -d[y] - sum_j softplus(pool_j(X) + U_j[y])."""
    if not (0 <= y < params.num_classes):
        raise ValueError(f"class index {y} out of range")
    pool = pooled_activations(variant, params, bag)
    return float(-params.d[y] - softplus(pool + params.U[:, y]).sum())


def _neg_free_energies(variant: SetVariant, params: RbmParams, X: np.ndarray) -> np.ndarray:
    A = _activations(params, X)
    M = A if variant.family == "xor" else softminus(A)
    pool = log_sum_exp(M, axis=0) if variant.pooling == "soft" else M.max(axis=0)
    return params.d + softplus(pool[:, None] + params.U).sum(axis=0)


def set_posterior(variant: SetVariant, params: RbmParams, bag) -> np.ndarray:
    """p(y | X): softmax over classes of the negated free energies."""
    neg_f = _neg_free_energies(variant, params, _instances(bag))
    return np.exp(neg_f - log_sum_exp(neg_f))


def set_disc_gradient(variant: SetVariant, params: RbmParams, bag, y: int) -> Gradients:
    """Exact gradient of -log p(y | X) for every parameter block.

    Soft pooling backpropagates the softmax weights over instances; hard
    pooling routes the gradient through the per-unit argmax instance
    (ties broken towards the lowest instance index). The input-bias
    block is identically zero.
    """
    X = _instances(bag)
    if not (0 <= y < params.num_classes):
        raise ValueError(f"class index {y} out of range")
    A = _activations(params, X)  # (n, H)
    M = A if variant.family == "xor" else softminus(A)

    if variant.pooling == "soft":
        pool = log_sum_exp(M, axis=0)
        R = np.exp(M - pool[None, :])  # softmax weights over instances, (n, H)
    else:
        pool = M.max(axis=0)
        R = np.zeros_like(M)
        R[np.argmax(M, axis=0), np.arange(M.shape[1])] = 1.0
    # d pool_j / d a_sj; the OR pool goes through softminus first
    Wgt = R if variant.family == "xor" else R * sigmoid(-A)

    S = sigmoid(pool[:, None] + params.U)  # (H, C)
    neg_f = params.d + softplus(pool[:, None] + params.U).sum(axis=0)
    p = np.exp(neg_f - log_sum_exp(neg_f))

    dd = p.copy()
    dd[y] -= 1.0
    q = S @ p - S[:, y]  # dL / d pool, (H,)
    dU = S * p[None, :]
    dU[:, y] -= S[:, y]
    return Gradients(
        b=np.zeros(params.num_inputs),
        c=q * Wgt.sum(axis=0),
        d=dd,
        W=q[:, None] * (Wgt.T @ X),
        U=dU,
    )


def brute_force_posterior(family: str, params: RbmParams, bag) -> np.ndarray:
    """p(y | X) by explicit enumeration of the valid hidden configurations.

    Per hidden index j the partition factor sums raw Boltzmann weights
    exp(-E) over the constrained states: XOR enumerates the |X|+1 states
    {off, on-for-instance-s}; OR enumerates every (g selection, h vector)
    pair with h >= g. Intended as an oracle for the closed-form
    posterior, so it deliberately avoids softplus/log-sum-exp.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    X = _instances(bag)
    n, D = X.shape
    H, C = params.num_hidden, params.num_classes
    if H > 4 or n > 4 or D > 6 or C > 3:
        raise ValueError("sizes exceed the enumeration budget (H<=4, |X|<=4, D<=6, C<=3)")

    A = params.c[None, :] + X @ params.W.T  # (n, H)
    base = float(params.b @ X.sum(axis=0))  # class-independent, kept for fidelity
    unnorm = np.zeros(C)
    for cls in range(C):
        total = np.exp(params.d[cls] + base)
        for j in range(H):
            factor = 0.0
            if family == "xor":
                # states: all off, or exactly one h_j^(s) on
                factor += 1.0
                for s in range(n):
                    factor += np.exp(A[s, j] + params.U[j, cls])
            else:
                for g_sel in range(n + 1):  # 0 = no g on, s+1 = g_j^(s) on
                    for h_vec in product((0, 1), repeat=n):
                        if g_sel > 0 and h_vec[g_sel - 1] == 0:
                            continue  # violates h >= g
                        e = sum(h_vec[s] * A[s, j] for s in range(n))
                        if g_sel > 0:
                            e += params.U[j, cls]
                        factor += np.exp(e)
            total *= factor
        unnorm[cls] = total
    return unnorm / unnorm.sum()


def xor_hidden_conditional(params: RbmParams, bag, y: int, j: int) -> np.ndarray:
    """Distribution of hidden group j over {off, instance 1..n} given (X, y).

    Entry 0 is the all-off state; entry s is p(h_j^(s) = 1 | X, y).
    """
    X = _instances(bag)
    act = _activations(params, X)[:, j] + params.U[j, y]
    logits = np.concatenate(([0.0], act))
    p = np.exp(logits - log_sum_exp(logits))
    return p / p.sum()


def or_hidden_conditionals(params: RbmParams, bag, y: int, j: int):
    """(g distribution over {off, 1..n}, h firing probabilities) for unit j.

    The g distribution uses act = softminus(a) + U_j[y] in the same
    softmax-with-off form as the XOR conditional. Where g picks instance
    s, h_j^(s) = 1 deterministically; everywhere else h fires
    independently with probability sigmoid(a_j^(s)).
    """
    X = _instances(bag)
    a = _activations(params, X)[:, j]
    act = softminus(a) + params.U[j, y]
    logits = np.concatenate(([0.0], act))
    g = np.exp(logits - log_sum_exp(logits))
    return g / g.sum(), sigmoid(a)


@dataclass
class SetGibbsParticle:
    """One negative-phase sample for a bag plus both phases' hidden stats.

    h_pos/h_neg are (n, H) matrices of p(h_j^(s) = 1 | ...) conditioned
    on the data and on (X~, y~); for the OR family g_pos/g_neg carry the
    class-connected units' probabilities. h_sample (and g_sample) are the
    binary states drawn during the sweep.
    """

    x_neg: np.ndarray
    y_neg: int
    h_pos: np.ndarray
    h_neg: np.ndarray
    h_sample: np.ndarray
    g_pos: np.ndarray | None = None
    g_neg: np.ndarray | None = None
    g_sample: np.ndarray | None = None


def _sample_groups(logits: np.ndarray, rng: RngStream) -> np.ndarray:
    """Sample one state per column from softmax-with-off columns.

    ``logits`` has shape (n, H); the implicit off-state logit is 0.
    Returns per-column selections in {0 (off), 1..n}.
    """
    n, H = logits.shape
    full = np.vstack([np.zeros(H), logits])  # (n + 1, H)
    full -= full.max(axis=0, keepdims=True)
    P = np.exp(full)
    cum = np.cumsum(P, axis=0)
    u = rng.uniforms(H) * cum[-1]
    return (cum < u[None, :]).sum(axis=0)


def _xor_marginals(params: RbmParams, X: np.ndarray, y: int) -> np.ndarray:
    """p(h_j^(s) = 1 | X, y) for all (s, j); shape (n, H)."""
    act = _activations(params, X) + params.U[:, y][None, :]
    norm = np.vstack([np.zeros(act.shape[1]), act])
    return np.exp(act - log_sum_exp(norm, axis=0)[None, :])


def _or_marginals(params: RbmParams, X: np.ndarray, y: int):
    """(g marginals, h marginals) for all (s, j); each (n, H)."""
    A = _activations(params, X)
    act = softminus(A) + params.U[:, y][None, :]
    norm = np.vstack([np.zeros(act.shape[1]), act])
    g = np.exp(act - log_sum_exp(norm, axis=0)[None, :])
    h = g + (1.0 - g) * sigmoid(A)
    return g, h


def _sample_y(params: RbmParams, pooled_hidden: np.ndarray, rng: RngStream) -> int:
    logits = params.d + params.U.T @ pooled_hidden
    return rng.categorical(np.exp(logits - logits.max()))


def set_gibbs_step(
    family: str, params: RbmParams, bag, y: int, rng: RngStream
) -> SetGibbsParticle:
    """One Gibbs sweep for a bag, started at the training pair (X, y).

    XOR samples each hidden group from its joint conditional; OR samples
    G first and then H given G. New instances are drawn per (s, i) from
    the usual input conditional, and y~ from the class conditional given
    the sampled hidden (XOR) or class-connected (OR) units. Both phases'
    hidden probabilities use the exact per-(s, j) marginals.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    X = _instances(bag)
    if not (0 <= y < params.num_classes):
        raise ValueError(f"class index {y} out of range")
    n, H = X.shape[0], params.num_hidden
    A = _activations(params, X)

    if family == "xor":
        sel = _sample_groups(A + params.U[:, y][None, :], rng)
        h = np.zeros((n, H))
        on = sel > 0
        h[sel[on] - 1, np.nonzero(on)[0]] = 1.0
        x_neg = (rng.uniforms((n, params.num_inputs)) < sigmoid(params.b[None, :] + h @ params.W)).astype(np.float64)
        y_neg = _sample_y(params, h.sum(axis=0), rng)
        return SetGibbsParticle(
            x_neg=x_neg,
            y_neg=y_neg,
            h_pos=_xor_marginals(params, X, y),
            h_neg=_xor_marginals(params, x_neg, y_neg),
            h_sample=h,
        )

    g_sel = _sample_groups(softminus(A) + params.U[:, y][None, :], rng)
    g = np.zeros((n, H))
    on = g_sel > 0
    g[g_sel[on] - 1, np.nonzero(on)[0]] = 1.0
    h = ((rng.uniforms((n, H)) < sigmoid(A)) | (g > 0)).astype(np.float64)
    x_neg = (rng.uniforms((n, params.num_inputs)) < sigmoid(params.b[None, :] + h @ params.W)).astype(np.float64)
    y_neg = _sample_y(params, g.sum(axis=0), rng)
    g_pos, h_pos = _or_marginals(params, X, y)
    g_neg, h_neg = _or_marginals(params, x_neg, y_neg)
    return SetGibbsParticle(
        x_neg=x_neg,
        y_neg=y_neg,
        h_pos=h_pos,
        h_neg=h_neg,
        h_sample=h,
        g_pos=g_pos,
        g_neg=g_neg,
        g_sample=g,
    )


def set_cd_update(
    family: str,
    params: RbmParams,
    bag,
    y: int,
    rate: float,
    rng: RngStream | None = None,
    particle: SetGibbsParticle | None = None,
) -> RbmParams:
    """One contrastive-divergence update for a bag; returns new params.

    All statistics are summed over the bag's instances. The class-weight
    block uses the H probabilities for the XOR family and the G
    probabilities for the OR family.
    """
    if rate < 0:
        raise ValueError("learning rate must be non-negative")
    X = _instances(bag)
    if particle is None:
        if rng is None:
            raise ValueError("need an RngStream when no particle is injected")
        particle = set_gibbs_step(family, params, bag, y, rng)

    pos_u = particle.h_pos if family == "xor" else particle.g_pos
    neg_u = particle.h_neg if family == "xor" else particle.g_neg

    new = params.copy()
    new.b += rate * (X.sum(axis=0) - particle.x_neg.sum(axis=0))
    new.c += rate * (particle.h_pos.sum(axis=0) - particle.h_neg.sum(axis=0))
    new.d[y] += rate
    new.d[particle.y_neg] -= rate
    new.W += rate * (particle.h_pos.T @ X - particle.h_neg.T @ particle.x_neg)
    new.U[:, y] += rate * pos_u.sum(axis=0)
    new.U[:, particle.y_neg] -= rate * neg_u.sum(axis=0)
    return new
