"""Self-contained correctness checks: finite differences and oracle sweeps.

These drive the ``gradcheck`` and ``oracle-check`` CLI commands and the
acceptance tests. The finite-difference engine perturbs one parameter
entry at a time and never touches the analytic gradient code.
"""

from __future__ import annotations

import numpy as np

from . import classrbm, set_rbm
from .classrbm import Gradients, RbmParams
from .numerics import RngStream
from .set_rbm import SetVariant

__all__ = [
    "finite_difference_gradients",
    "relative_gradient_error",
    "gradcheck_model",
    "oracle_check",
    "MODEL_KINDS",
]

MODEL_KINDS = {
    "classrbm": "classrbm",
    "set-xor-soft": SetVariant("xor", "soft"),
    "set-xor-hard": SetVariant("xor", "hardmax"),
    "set-or-soft": SetVariant("or", "soft"),
    "set-or-hard": SetVariant("or", "hardmax"),
}


def finite_difference_gradients(loss, params: RbmParams, eps: float = 1e-5) -> Gradients:
    """Central-difference gradient of ``loss(params)`` over every block entry."""
    out = Gradients(
        np.zeros_like(params.b),
        np.zeros_like(params.c),
        np.zeros_like(params.d),
        np.zeros_like(params.W),
        np.zeros_like(params.U),
    )
    for name, block in params.blocks().items():
        target = getattr(out, name)
        it = np.nditer(block, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = block[idx]
            block[idx] = orig + eps
            up = loss(params)
            block[idx] = orig - eps
            down = loss(params)
            block[idx] = orig
            target[idx] = (up - down) / (2.0 * eps)
    return out


def relative_gradient_error(analytic: Gradients, numeric: Gradients, floor: float = 1e-2) -> float:
    """Worst entrywise |a - f| / max(|a|, |f|, floor) over all blocks."""
    worst = 0.0
    for name in ("b", "c", "d", "W", "U"):
        a = getattr(analytic, name)
        f = getattr(numeric, name)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


def _random_params(rng: RngStream, D: int, H: int, C: int, scale: float = 1.0) -> RbmParams:
    def u(shape):
        return (rng.uniforms(shape) * 2.0 - 1.0) * scale

    return RbmParams(u(D), u(H), u(C), u((H, D)), u((H, C)))


def _random_bag(rng: RngStream, n: int, D: int) -> np.ndarray:
    return rng.uniforms((n, D))


def gradcheck_model(kind_name: str, trials: int = 50, seed: int = 0, eps: float = 1e-5):
    """Max relative finite-difference error over random small instances.

    Returns (max_error, per-trial errors). Sizes are kept small (D=7,
    H=5, C=3) so a central difference per entry stays fast. Hard-max
    variants are checked away from pooling ties, which random continuous
    activations give almost surely.
    """
    kind = MODEL_KINDS[kind_name]
    root = RngStream(seed)
    errors = []
    D, H, C = 7, 5, 3
    for t in range(trials):
        rng = root.derive(t)
        params = _random_params(rng, D, H, C)
        y = int(rng.uniform() * C)
        if kind == "classrbm":
            x = rng.uniforms(D)
            analytic = classrbm.disc_gradient(params, x, y)
            loss = lambda p: -np.log(classrbm.posterior(p, x)[y])
        else:
            n = 1 + int(rng.uniform() * 4)
            X = _random_bag(rng, n, D)
            analytic = set_rbm.set_disc_gradient(kind, params, X, y)
            loss = lambda p: -np.log(set_rbm.set_posterior(kind, p, X)[y])
        numeric = finite_difference_gradients(loss, params, eps)
        errors.append(relative_gradient_error(analytic, numeric))
    return max(errors), errors


def oracle_check(family: str, trials: int = 200, seed: int = 0):
    """Max relative error of the closed-form soft posterior vs enumeration.

    Random configurations with H<=3, |X|<=4, D<=5, C<=3 and parameters
    uniform in [-2, 2].
    """
    variant = SetVariant(family, "soft")
    root = RngStream(seed)
    worst = 0.0
    for t in range(trials):
        rng = root.derive(t)
        H = 1 + int(rng.uniform() * 3)
        n = 1 + int(rng.uniform() * 4)
        D = 1 + int(rng.uniform() * 5)
        C = 2 + int(rng.uniform() * 2)
        params = _random_params(rng, D, H, C, scale=2.0)
        X = _random_bag(rng, n, D)
        fast = set_rbm.set_posterior(variant, params, X)
        slow = set_rbm.brute_force_posterior(family, params, X)
        worst = max(worst, float(np.max(np.abs(fast - slow) / slow)))
    return worst
