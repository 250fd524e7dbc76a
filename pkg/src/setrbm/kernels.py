"""Set kernels between bags: the miGraph family and the max-sum kernel.

All kernels reduce Gaussian kernel values k(a, b) = exp(-gamma ||a-b||^2)
between instances of the two bags. miGraph downweights instances that sit
in dense neighbourhoods within their own bag; the distance threshold is
either adaptive (mean pairwise distance within the bag) or a fixed
sigma0 shared by all bags.
"""

from __future__ import annotations

import numpy as np

from .set_rbm import _instances

__all__ = [
    "gaussian_kernel_block",
    "adaptive_sigma",
    "migraph_weights",
    "migraph_kernel",
    "max_kernel",
    "gram_matrix",
    "save_gram",
    "load_gram",
]


def _sq_dists(Xa: np.ndarray, Xb: np.ndarray) -> np.ndarray:
    aa = (Xa * Xa).sum(axis=1)[:, None]
    bb = (Xb * Xb).sum(axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (Xa @ Xb.T), 0.0)


def gaussian_kernel_block(Xa, Xb, gamma: float) -> np.ndarray:
    """exp(-gamma ||a - b||^2) for every instance pair; shape (|A|, |B|)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return np.exp(-gamma * _sq_dists(np.atleast_2d(Xa), np.atleast_2d(Xb)))


def adaptive_sigma(bag) -> float:
    """Mean pairwise distance between the bag's instances (|X| >= 2)."""
    X = _instances(bag)
    n = X.shape[0]
    if n < 2:
        raise ValueError("adaptive sigma is undefined for singleton bags")
    d = np.sqrt(_sq_dists(X, X))
    return float(d[np.triu_indices(n, k=1)].mean())


def migraph_weights(bag, sigma: float) -> np.ndarray:
    """w_s = 1 / #{s': ||x_s - x_s'|| < sigma}; the self-pair keeps w_s <= 1."""
    X = _instances(bag)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = np.sqrt(_sq_dists(X, X))
    counts = (d < sigma).sum(axis=1)
    return 1.0 / counts


def migraph_kernel(bag1, bag2, gamma: float, sigma0: float | None = None) -> float:
    """miGraph kernel: weight-averaged Gaussian similarity between bags.

    ``sigma0=None`` selects the adaptive per-bag threshold, which needs
    at least two instances per bag.
    """
    X1, X2 = _instances(bag1), _instances(bag2)
    s1 = adaptive_sigma(X1) if sigma0 is None else float(sigma0)
    s2 = adaptive_sigma(X2) if sigma0 is None else float(sigma0)
    w1 = migraph_weights(X1, s1)
    w2 = migraph_weights(X2, s2)
    K = gaussian_kernel_block(X1, X2, gamma)
    return float((w1 @ K @ w2) / (w1.sum() * w2.sum()))


def max_kernel(bag1, bag2, gamma: float) -> float:
    """Symmetrized mean of best-match Gaussian similarities.

    K = 1/2 [ mean_s max_s' k(x1_s, x2_s') + mean_s' max_s k(x1_s, x2_s') ].
    """
    K = gaussian_kernel_block(_instances(bag1), _instances(bag2), gamma)
    return float(0.5 * (K.max(axis=1).mean() + K.max(axis=0).mean()))


def gram_matrix(bags, kind: str, gamma: float, sigma0: float | None = None) -> np.ndarray:
    """Full kernel matrix between bags, exploiting symmetry.

    ``kind`` is one of "migraph" (adaptive sigma), "migraph2" (fixed
    sigma0) or "max". Per-bag weights are computed once.
    """
    mats = [_instances(b) for b in bags]
    n = len(mats)
    G = np.zeros((n, n))
    if kind in ("migraph", "migraph2"):
        if kind == "migraph":
            sigmas = [adaptive_sigma(X) for X in mats]
        else:
            if sigma0 is None or sigma0 <= 0:
                raise ValueError("migraph2 requires a positive sigma0")
            sigmas = [float(sigma0)] * n
        weights = [migraph_weights(X, s) for X, s in zip(mats, sigmas)]
        sums = [w.sum() for w in weights]
        for i in range(n):
            for j in range(i, n):
                K = gaussian_kernel_block(mats[i], mats[j], gamma)
                G[i, j] = G[j, i] = (weights[i] @ K @ weights[j]) / (sums[i] * sums[j])
    elif kind == "max":
        for i in range(n):
            for j in range(i, n):
                K = gaussian_kernel_block(mats[i], mats[j], gamma)
                G[i, j] = G[j, i] = 0.5 * (K.max(axis=1).mean() + K.max(axis=0).mean())
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return G


def save_gram(path, G: np.ndarray, kind: str, gamma: float, sigma0, dataset_name: str) -> None:
    """Write a gram cache: one header line, then row-major full-precision rows."""
    sig = "adaptive" if sigma0 is None else repr(float(sigma0))
    with open(path, "w") as fh:
        fh.write(
            f"!gram kernel={kind} gamma={gamma!r} sigma0={sig} "
            f"dataset={dataset_name} bags={G.shape[0]}\n"
        )
        for row in G:
            fh.write(" ".join(repr(v) for v in row) + "\n")


def load_gram(path):
    """Read a gram cache; returns (matrix, header dict)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("!gram "):
            raise ValueError(f"{path}: missing !gram header")
        meta = dict(tok.split("=", 1) for tok in header[6:].split())
        n = int(meta["bags"])
        G = np.array(
            [[float(v) for v in fh.readline().split()] for _ in range(n)]
        )
    if G.shape != (n, n):
        raise ValueError(f"{path}: expected a {n}x{n} matrix")
    return G, meta
