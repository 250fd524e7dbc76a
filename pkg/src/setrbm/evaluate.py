"""Accuracy evaluation: repeated CV, significance tests, rejection curves.

Pooled accuracy follows the convention of averaging over all test-fold
examples (bags), which equals the fold-size-weighted mean of per-fold
accuracies. Significance uses a two-sided Student t test on paired
per-fold accuracies; the t distribution tail is computed from scratch
via the regularized incomplete beta function.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FoldPlan, fit_scaler, scale_bags
from .numerics import RngStream

__all__ = [
    "FoldResult",
    "EvalReport",
    "EvalError",
    "run_cv",
    "paired_t_test",
    "t_critical",
    "student_t_two_sided_p",
    "rejection_curve",
    "emit_report",
    "emit_curve_csv",
    "report_from_json",
    "compare_reports",
]


class EvalError(RuntimeError):
    """A training or prediction failure, annotated with (repeat, fold)."""


# ---------------------------------------------------------------------------
# Student's t machinery


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    MAXIT, EPS, FPMIN = 300, 1e-14, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= t) for T ~ Student-t with df degrees of freedom."""
    if df < 1:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    t = abs(float(t))
    return _reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))


def t_critical(level: float, df: int) -> float:
    """Two-sided critical value: |t| above which p < 1 - level."""
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    alpha = 1.0 - level
    lo, hi = 0.0, 1.0
    while student_t_two_sided_p(hi, df) > alpha:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("critical value search diverged")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_two_sided_p(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def paired_t_test(acc_a, acc_b, level: float = 0.95):
    """Two-sided paired Student t test; returns (t statistic, significant).

    t = mean(diff) / (sd(diff) / sqrt(n)) with the sample sd (ddof=1).
    All-zero differences give t = 0 (not significant); zero sd with a
    non-zero mean is treated as infinite t (significant).
    """
    a = np.asarray(acc_a, dtype=np.float64)
    b = np.asarray(acc_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least two paired observations")
    diff = a - b
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, False
        return math.copysign(math.inf, mean), True
    t = float(mean / (sd / math.sqrt(n)))
    p = student_t_two_sided_p(t, n - 1)
    return t, bool(p < 1.0 - level)


# ---------------------------------------------------------------------------
# Rejection curves


def rejection_curve(results):
    """(threshold, precision, recall) at 0 and every distinct confidence.

    A prediction is accepted when its confidence is >= the threshold.
    Precision over zero acceptances is 1.0 by convention; recall counts
    accepted-and-correct over all predictions, so it never increases
    with the threshold.
    """
    if not results:
        raise ValueError("empty result list")
    conf = np.array([c for c, _ in results], dtype=np.float64)
    correct = np.array([bool(ok) for _, ok in results])
    if np.any(conf < 0) or np.any(conf > 1):
        raise ValueError("confidences must lie in [0, 1]")
    total = conf.shape[0]
    points = []
    for t in sorted({0.0} | set(conf.tolist())):
        accepted = conf >= t
        n_acc = int(accepted.sum())
        n_good = int((accepted & correct).sum())
        precision = 1.0 if n_acc == 0 else n_good / n_acc
        points.append((t, precision, n_good / total))
    return points


# ---------------------------------------------------------------------------
# Cross-validation harness


@dataclass
class FoldResult:
    repeat: int
    fold: int
    records: list  # (true label, predicted label, confidence)
    accuracy: float

    @staticmethod
    def from_records(repeat: int, fold: int, records) -> "FoldResult":
        records = [(int(t), int(p), float(c)) for t, p, c in records]
        correct = sum(1 for t, p, _ in records if t == p)
        return FoldResult(repeat, fold, records, correct / len(records))


@dataclass
class EvalReport:
    model: str
    dataset: str
    folds: list = field(default_factory=list)
    t_test: dict | None = None

    @property
    def fold_accuracies(self) -> list:
        return [f.accuracy for f in self.folds]

    @property
    def pooled_accuracy(self) -> float:
        """Share of correct predictions over all test-fold bags."""
        records = [r for f in self.folds for r in f.records]
        return sum(1 for t, p, _ in records if t == p) / len(records)

    def curve(self):
        return rejection_curve(
            [(c, t == p) for f in self.folds for t, p, c in f.records]
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "dataset": self.dataset,
                "t_test": self.t_test,
                "folds": [
                    {
                        "repeat": f.repeat,
                        "fold": f.fold,
                        "accuracy": f.accuracy,
                        "records": [list(r) for r in f.records],
                    }
                    for f in self.folds
                ],
            },
            indent=1,
        )


def report_from_json(text: str) -> EvalReport:
    raw = json.loads(text)
    folds = [
        FoldResult(
            f["repeat"],
            f["fold"],
            [(int(t), int(p), float(c)) for t, p, c in f["records"]],
            f["accuracy"],
        )
        for f in raw["folds"]
    ]
    return EvalReport(raw["model"], raw["dataset"], folds, raw.get("t_test"))


def emit_report(report: EvalReport, format: str = "csv") -> str:
    """Fold-level report text; 'csv' or 'json'."""
    if format == "json":
        return report.to_json()
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    lines = ["model,dataset,repeat,fold,accuracy"]
    for f in report.folds:
        lines.append(f"{report.model},{report.dataset},{f.repeat},{f.fold},{f.accuracy!r}")
    return "\n".join(lines) + "\n"


def emit_curve_csv(report: EvalReport) -> str:
    """Rejection curve as CSV; header row only when the report is empty."""
    lines = ["threshold,precision,recall"]
    if report.folds:
        for t, p, r in report.curve():
            lines.append(f"{t!r},{p!r},{r!r}")
    return "\n".join(lines) + "\n"


def compare_reports(report: EvalReport, reference: EvalReport, level: float = 0.95) -> dict:
    """Paired t test on per-fold accuracies against a reference model."""
    t, significant = paired_t_test(
        report.fold_accuracies, reference.fold_accuracies, level
    )
    outcome = {
        "reference": reference.model,
        "level": level,
        "t": t,
        "significant": significant,
    }
    report.t_test = outcome
    return outcome


def _run_fold(args):
    from .registry import fit_predictor  # local import: keeps workers light

    spec, dataset, plan, repeat, fold, master_seed, grid = args
    try:
        test = plan.test_bags(dataset, repeat, fold)
        train = plan.train_bags(dataset, repeat, fold)
        scaler = fit_scaler(train)
        rng = RngStream(master_seed).derive(repeat * plan.k + fold)
        predictor = fit_predictor(
            spec, scale_bags(scaler, train), dataset.num_classes, rng, grid=grid
        )
        records = []
        for bag in scale_bags(scaler, test):
            label, conf = predictor.predict(bag)
            records.append((bag.label, label, conf))
        return FoldResult.from_records(repeat, fold, records)
    except Exception as exc:  # annotate and re-raise
        raise EvalError(f"repeat {repeat}, fold {fold}: {exc}") from exc


def run_cv(
    spec,
    dataset: Dataset,
    plan: FoldPlan,
    master_seed: int = 0,
    grid=None,
    jobs: int = 1,
) -> EvalReport:
    """Repeated cross-validation of one model spec over a fold plan.

    Per (repeat, fold): features are min-max scaled on the training
    bags, hyper-parameters are picked on a 20% validation split of the
    training bags, and the chosen model predicts the test fold. The
    report pools per-bag results over every test fold.
    """
    tasks = [
        (spec, dataset, plan, r, f, master_seed, grid)
        for r in range(plan.repeats)
        for f in range(plan.k)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold, tasks))
    else:
        folds = [_run_fold(t) for t in tasks]
    name = spec if isinstance(spec, str) else spec.name
    return EvalReport(name, dataset.name, folds)
