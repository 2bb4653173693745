"""Agreement of attributed writers with external evidence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy import special


@dataclass
class ValidationMetrics:
    """Macro-averaged precision and recall over papers.

    Papers with an empty truth set are excluded (``n_empty_truth``); papers
    with no predicted writers have undefined precision and are left out of
    the precision average only (``n_undefined_precision``).
    """

    precision: float
    recall: float
    n_papers: int
    per_paper: dict[str, tuple[float | None, float]] = field(default_factory=dict)
    n_empty_truth: int = 0
    n_undefined_precision: int = 0
    mismatched: list[str] = field(default_factory=list)


def precision_recall(predicted: Mapping[str, set], truth: Mapping[str, set]) -> ValidationMetrics:
    mismatched = sorted(set(predicted) ^ set(truth))
    per_paper = {}
    empty_truth = undefined = 0
    for pid in sorted(set(predicted) & set(truth)):
        pred, true = set(predicted[pid]), set(truth[pid])
        if not true:
            empty_truth += 1
            continue
        hit = len(pred & true)
        prec = hit / len(pred) if pred else None
        if prec is None:
            undefined += 1
        per_paper[pid] = (prec, hit / len(true))
    precs = [p for p, _ in per_paper.values() if p is not None]
    recs = [r for _, r in per_paper.values()]
    return ValidationMetrics(
        precision=math.fsum(precs) / len(precs) if precs else float("nan"),
        recall=math.fsum(recs) / len(recs) if recs else float("nan"),
        n_papers=len(per_paper),
        per_paper=per_paper,
        n_empty_truth=empty_truth,
        n_undefined_precision=undefined,
        mismatched=mismatched,
    )


class PearsonResult(NamedTuple):
    r: float
    p: float
    n: int


def pearson(x, y) -> PearsonResult:
    """Sample correlation with a two-sided t-test on ``n - 2`` degrees of freedom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    xc = x - math.fsum(x) / n
    yc = y - math.fsum(y) / n
    sxx = math.fsum(xc * xc)
    syy = math.fsum(yc * yc)
    if sxx == 0 or syy == 0:
        raise ValueError("zero variance")
    r = math.fsum(xc * yc) / (math.sqrt(sxx) * math.sqrt(syy))
    r = min(1.0, max(-1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        # t^2 = df r^2 / (1 - r^2), so df / (df + t^2) = 1 - r^2
        p = float(special.betainc(df / 2.0, 0.5, (1.0 - r) * (1.0 + r)))
    return PearsonResult(r, p, n)
