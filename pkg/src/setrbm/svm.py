"""Soft-margin kernel SVM trained by sequential minimal optimization.

The solver works directly on a precomputed gram matrix, so any of the
set kernels plugs in. Pair selection is deterministic (first a KKT
violator, then the partner maximizing |E_i - E_j|, with ordered
fallbacks), which keeps retraining bit-reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SvmModel", "svm_train", "svm_predict"]


@dataclass
class SvmModel:
    """Dual solution: alphas, labels, bias, and whether SMO converged."""

    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    c_svm: float
    converged: bool = True
    support: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def decision(self, kernel_row: np.ndarray) -> float:
        return float((self.alphas * self.labels) @ kernel_row + self.bias)


def svm_predict(model: SvmModel, kernel_row) -> float:
    """Decision value for a point given its kernel row against the training bags."""
    kernel_row = np.asarray(kernel_row, dtype=np.float64)
    if kernel_row.shape != model.alphas.shape:
        raise ValueError(
            f"kernel row has length {kernel_row.shape}, expected {model.alphas.shape}"
        )
    return model.decision(kernel_row)


def svm_train(
    gram,
    labels,
    c_svm: float,
    tol: float = 1e-3,
    max_passes: int | None = None,
) -> SvmModel:
    """Solve the soft-margin dual over a precomputed gram matrix.

    ``labels`` must be in {-1, +1}. Returns a model satisfying the KKT
    conditions within ``tol``; if the iteration cap is reached first the
    model carries ``converged=False`` and a warning is emitted.
    """
    K = np.asarray(gram, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = y.shape[0]
    if K.shape != (n, n):
        raise ValueError(f"gram is {K.shape}, labels have length {n}")
    if np.max(np.abs(K - K.T)) > 1e-8:
        raise ValueError("gram matrix is not symmetric")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if c_svm <= 0:
        raise ValueError("C must be positive")
    if max_passes is None:
        max_passes = max(200, 20 * n)

    alphas = np.zeros(n)
    bias = 0.0
    # E_i = f(x_i) - y_i, kept incrementally up to date
    errors = -y.copy()

    def take_step(i: int, j: int) -> bool:
        nonlocal bias
        if i == j:
            return False
        ai, aj = alphas[i], alphas[j]
        yi, yj = y[i], y[j]
        Ei, Ej = errors[i], errors[j]
        if yi != yj:
            low, high = max(0.0, aj - ai), min(c_svm, c_svm + aj - ai)
        else:
            low, high = max(0.0, ai + aj - c_svm), min(c_svm, ai + aj)
        if low >= high:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:  # gram is PSD, so eta == 0 only for duplicated rows
            return False
        aj_new = np.clip(aj - yj * (Ei - Ej) / eta, low, high)
        if abs(aj_new - aj) < 1e-12 * (aj_new + aj + 1e-12):
            return False
        ai_new = ai + yi * yj * (aj - aj_new)

        b1 = bias - Ei - yi * (ai_new - ai) * K[i, i] - yj * (aj_new - aj) * K[i, j]
        b2 = bias - Ej - yi * (ai_new - ai) * K[i, j] - yj * (aj_new - aj) * K[j, j]
        if 0.0 < ai_new < c_svm:
            new_bias = b1
        elif 0.0 < aj_new < c_svm:
            new_bias = b2
        else:
            new_bias = 0.5 * (b1 + b2)

        errors[:] += (
            yi * (ai_new - ai) * K[i] + yj * (aj_new - aj) * K[j] + (new_bias - bias)
        )
        alphas[i], alphas[j] = ai_new, aj_new
        bias = new_bias
        return True

    def examine(i: int) -> bool:
        yi, ai, Ei = y[i], alphas[i], errors[i]
        r = Ei * yi
        if not ((r < -tol and ai < c_svm) or (r > tol and ai > 0)):
            return False
        non_bound = np.nonzero((alphas > 0) & (alphas < c_svm))[0]
        if non_bound.size > 1:
            j = int(non_bound[np.argmax(np.abs(errors[non_bound] - Ei))])
            if take_step(i, j):
                return True
        for j in non_bound:
            if take_step(i, int(j)):
                return True
        for j in range(n):
            if take_step(i, j):
                return True
        return False

    passes = 0
    examine_all = True
    converged = False
    while passes < max_passes:
        passes += 1
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.nonzero((alphas > 0) & (alphas < c_svm))[0]:
                changed += examine(int(i))
        if examine_all:
            if changed == 0:
                converged = True
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    if not converged:
        warnings.warn(
            f"SMO hit the iteration cap ({max_passes} passes) before meeting the "
            f"KKT tolerance {tol}",
            RuntimeWarning,
        )
    support = np.nonzero(alphas > 1e-12)[0]
    return SvmModel(alphas, y, float(bias), float(c_svm), converged, support)
