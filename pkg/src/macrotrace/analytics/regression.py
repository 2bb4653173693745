"""Ordinary least squares with classical inference, and the author-order models
built on it.

Author-order models regress a contribution measure on author-rank dummies,
with the first author as the reference level, so each coefficient reads as
"change relative to the first author".
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg, special

log = logging.getLogger(__name__)

# column j is treated as collinear with columns < j when its QR diagonal
# falls below this fraction of its own norm
_COLLINEAR_RTOL = 1e-10


class RankDeficientError(ValueError):
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        super().__init__("design is rank deficient; collinear columns: " + ", ".join(self.columns))


def t_two_sided_p(t, df):
    """Two-sided tail probability of Student's t, via the regularized incomplete beta."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = df / (df + t * t)
    p = special.betainc(df / 2.0, 0.5, x)
    p = np.where(np.isinf(t), 0.0, p)
    return np.clip(p, 0.0, 1.0)


def t_quantile(q: float, df: float) -> float:
    return float(special.stdtrit(df, q))


@dataclass
class RegressionResult:
    terms: tuple[str, ...]
    coef: np.ndarray
    stderr: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_observations: int
    r_squared: float
    df_resid: int

    def __getitem__(self, term: str) -> float:
        return float(self.coef[self.terms.index(term)])

    def term(self, name: str) -> dict:
        i = self.terms.index(name)
        return {
            "term": name,
            "coef": float(self.coef[i]),
            "stderr": float(self.stderr[i]),
            "t": float(self.tvalues[i]),
            "p": float(self.pvalues[i]),
            "ci_low": float(self.ci_low[i]),
            "ci_high": float(self.ci_high[i]),
        }

    def rows(self, include_intercept: bool = True) -> list[dict]:
        return [self.term(t) for t in self.terms if include_intercept or t != "intercept"]


def collinear_columns(X: np.ndarray) -> list[int]:
    """Indices of columns lying (numerically) in the span of earlier columns."""
    X = np.asarray(X, dtype=float)
    R = linalg.qr(X, mode="r")[0]
    norms = np.linalg.norm(X, axis=0)
    out = []
    for j in range(X.shape[1]):
        rjj = abs(R[j, j]) if j < R.shape[0] else 0.0
        if norms[j] == 0 or rjj <= _COLLINEAR_RTOL * norms[j]:
            out.append(j)
    return out


def ols_fit(design, response, terms: Sequence[str] | None = None, *,
            level: float = 0.95, bootstrap: int = 0, seed=None) -> RegressionResult:
    """Least-squares fit with homoskedastic standard errors.

    ``design`` must contain its own intercept column.  Confidence intervals
    and two-sided p-values use Student's t with ``n - k`` degrees of freedom.
    With ``bootstrap > 0`` the standard errors come from a residual bootstrap
    instead (intervals stay t-based).
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: design {X.shape}, response {y.shape}")
    n, k = X.shape
    if terms is None:
        terms = tuple(f"x{j}" for j in range(k))
    terms = tuple(terms)
    if len(terms) != k:
        raise ValueError("one term name per design column required")
    if n < k:
        raise ValueError(f"{n} observations for {k} columns")
    bad = collinear_columns(X)
    if bad:
        raise RankDeficientError([terms[j] for j in bad])

    Q, R = linalg.qr(X, mode="economic")
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ coef
    rss = float(resid @ resid)
    df = n - k
    Rinv = linalg.solve_triangular(R, np.eye(k))
    xtx_inv_diag = np.sum(Rinv * Rinv, axis=1)

    yscale = float(np.linalg.norm(y)) or 1.0
    perfect = np.sqrt(rss) <= 1e-12 * yscale
    if df > 0:
        sigma2 = rss / df
        if bootstrap:
            se = _bootstrap_se(X, Q, R, coef, resid, bootstrap, seed)
        else:
            se = np.sqrt(sigma2 * xtx_inv_diag)
    else:
        se = np.full(k, np.nan)

    colnorm = np.linalg.norm(X, axis=0)
    if perfect:
        # exact fit: report zero uncertainty; coefficients that are zero up to
        # rounding are not significant
        se = np.zeros(k)
        zero = np.abs(coef) * colnorm <= 1e-9 * yscale
        tvals = np.where(zero, 0.0, np.copysign(np.inf, coef))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            tvals = coef / se
    if df > 0:
        pvals = t_two_sided_p(tvals, df)
        crit = t_quantile(0.5 + level / 2.0, df)
    else:
        pvals = np.full(k, np.nan)
        crit = np.nan
    ci_low = coef - crit * se
    ci_high = coef + crit * se

    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else float("nan")
    return RegressionResult(terms, coef, se, tvals, pvals, ci_low, ci_high, n, r2, df)


def _bootstrap_se(X, Q, R, coef, resid, reps, seed):
    rng = np.random.default_rng(seed)
    fitted = X @ coef
    n = len(resid)
    draws = np.empty((reps, len(coef)))
    for b in range(reps):
        y_star = fitted + resid[rng.integers(0, n, n)]
        draws[b] = linalg.solve_triangular(R, Q.T @ y_star)
    return draws.std(axis=0, ddof=1)


# ---------------------------------------------------------------------------
# author-order models


@dataclass(frozen=True)
class AuthorRecord:
    """One author of one paper with a scalar contribution measure."""

    paper_id: str
    author_id: str
    rank: int
    team_size: int
    contribution: float
    discipline: str = ""


@dataclass(frozen=True)
class FocusRecord:
    paper_id: str
    author_id: str
    rank: int
    team_size: int
    section: str
    fraction: float


def rank_term(rank: int) -> str:
    return f"rank_{rank}"


def _rank_design(ranks, team_sizes=None):
    ranks = np.asarray(ranks)
    levels = sorted(set(ranks.tolist()) - {1})
    cols = [np.ones(len(ranks))]
    terms = ["intercept"]
    for r in levels:
        cols.append((ranks == r).astype(float))
        terms.append(rank_term(r))
    if team_sizes is not None:
        sizes = np.asarray(team_sizes)
        for t in sorted(set(sizes.tolist()))[1:]:
            cols.append((sizes == t).astype(float))
            terms.append(f"team_{t}")
    return np.column_stack(cols), terms


def author_order_model(records: Iterable[AuthorRecord], stratify_by: str = "team_size", *,
                       max_team_size: int | None = None,
                       control_team_size: bool = False) -> dict:
    """Regress contribution on rank dummies separately within each stratum.

    ``stratify_by`` is ``"team_size"`` or ``"discipline"``.  Strata without a
    first author or with fewer than two distinct ranks are skipped with a
    logged notice.
    """
    if stratify_by not in ("team_size", "discipline"):
        raise ValueError(f"cannot stratify by {stratify_by!r}")
    groups = defaultdict(list)
    for r in sorted(records, key=lambda r: (r.paper_id, r.rank)):
        if max_team_size is not None and r.team_size > max_team_size:
            continue
        groups[getattr(r, stratify_by)].append(r)
    out = {}
    for key in sorted(groups):
        rows = groups[key]
        ranks = {r.rank for r in rows}
        if len(ranks) < 2 or 1 not in ranks:
            log.warning("stratum %s=%s skipped: ranks %s", stratify_by, key, sorted(ranks))
            continue
        sizes = [r.team_size for r in rows] if control_team_size else None
        X, terms = _rank_design([r.rank for r in rows], sizes)
        X, terms = _drop_collinear_controls(X, terms)
        y = np.array([r.contribution for r in rows], dtype=float)
        out[key] = ols_fit(X, y, terms)
    return out


def _drop_collinear_controls(X, terms):
    bad = [j for j in collinear_columns(X) if terms[j].startswith("team_")]
    if not bad:
        return X, terms
    keep = [j for j in range(X.shape[1]) if j not in bad]
    return X[:, keep], [terms[j] for j in keep]


def section_order_model(records: Iterable[FocusRecord], sections: Sequence[str] | None = None, *,
                        max_team_size: int | None = None) -> dict:
    """Per section, regress focus fraction on rank dummies with team-size fixed effects.

    Sections without observations (or without both a first and a later
    author) are omitted.  Output order follows ``sections`` when given.
    """
    groups = defaultdict(list)
    for r in sorted(records, key=lambda r: (r.paper_id, r.rank, r.section)):
        if max_team_size is not None and r.team_size > max_team_size:
            continue
        groups[r.section].append(r)
    order = list(sections) if sections is not None else sorted(groups)
    out = {}
    for sec in order:
        rows = groups.get(sec)
        if not rows:
            continue
        ranks = {r.rank for r in rows}
        if len(ranks) < 2 or 1 not in ranks:
            log.warning("section %s skipped: ranks %s", sec, sorted(ranks))
            continue
        X, terms = _rank_design([r.rank for r in rows], [r.team_size for r in rows])
        X, terms = _drop_collinear_controls(X, terms)
        y = np.array([r.fraction for r in rows], dtype=float)
        out[sec] = ols_fit(X, y, terms)
    return out
