"""Section co-contribution probabilities and Ward clustering of sections."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from ..attribution import SectionContributionFlag, multi_section_records
from ..taxonomy import LABELS, SIX


@dataclass
class CoContributionMatrix:
    """``P[i, j]``: share of records contributing to ``labels[i]`` that also
    contributed to ``labels[j]``.

    Rows with zero support are NaN.  ``joint[i, j]`` holds the raw counts and
    ``support[i] == joint[i, i]``.
    """

    labels: tuple[str, ...]
    P: np.ndarray
    support: np.ndarray
    joint: np.ndarray
    n_records: int

    @property
    def defined(self) -> bool:
        return bool(np.all(np.isfinite(self.P)))

    def __getitem__(self, key):
        i, j = key
        return float(self.P[self.labels.index(i), self.labels.index(j)])


def cocontribution_from_sets(section_sets: Iterable[Iterable[str]],
                             labels: tuple[str, ...] = LABELS[SIX],
                             min_sections: int = 2) -> CoContributionMatrix:
    """Build the matrix from one set of contributed sections per author-paper.

    Sections outside ``labels`` are ignored; records with fewer than
    ``min_sections`` remaining sections are dropped.
    """
    idx = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    joint = np.zeros((n, n), dtype=np.int64)
    used = 0
    for secs in section_sets:
        ids = sorted({idx[s] for s in secs if s in idx})
        if len(ids) < min_sections:
            continue
        used += 1
        ids = np.array(ids)
        joint[np.ix_(ids, ids)] += 1
    support = np.diag(joint).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        P = joint / support[:, None]
    P[support == 0, :] = np.nan
    return CoContributionMatrix(tuple(labels), P, support, joint, used)


def cocontribution(flags, labels: tuple[str, ...] = LABELS[SIX],
                   min_sections: int = 2) -> CoContributionMatrix:
    """Co-contribution matrix from contribution flags or from precomputed
    ``(paper, author) -> sections`` mappings."""
    if isinstance(flags, Mapping):
        sets = [flags[k] for k in sorted(flags)]
    else:
        flags = list(flags)
        if flags and not isinstance(flags[0], SectionContributionFlag):
            sets = flags
        else:
            recs = multi_section_records(
                [f for f in flags if f.section in labels], min_sections)
            sets = [recs[k] for k in sorted(recs)]
    return cocontribution_from_sets(sets, labels, min_sections)


def dissimilarity(P) -> np.ndarray:
    """``1 - (P[i,j] + P[j,i]) / 2`` off the diagonal, zero on it."""
    P = np.asarray(getattr(P, "P", P), dtype=float)
    if not np.all(np.isfinite(P)):
        raise ValueError("co-contribution matrix has undefined entries")
    D = 1.0 - (P + P.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return D


def ward_linkage(D) -> np.ndarray:
    """Agglomerative Ward clustering of a square dissimilarity matrix.

    Uses the Lance-Williams update for Ward's criterion.  The result has the
    usual linkage layout: row ``s`` is ``[a, b, height, size]`` and creates
    cluster ``n + s``.  Ties go to the pair found first in index order.
    """
    D = np.array(D, dtype=float)
    n = D.shape[0]
    if D.shape != (n, n):
        raise ValueError("dissimilarity matrix must be square")
    dist = D.copy()
    ids = list(range(n))
    sizes = [1] * n
    active = list(range(n))
    Z = np.zeros((max(n - 1, 0), 4))
    for step in range(n - 1):
        best = np.inf
        bi = bj = -1
        for ai, i in enumerate(active):
            for j in active[ai + 1:]:
                if dist[i, j] < best:
                    best, bi, bj = dist[i, j], i, j
        ni, nj = sizes[bi], sizes[bj]
        for k in active:
            if k == bi or k == bj:
                continue
            nk = sizes[k]
            val = ((ni + nk) * dist[k, bi] ** 2 + (nj + nk) * dist[k, bj] ** 2
                   - nk * best ** 2) / (ni + nj + nk)
            dist[k, bi] = dist[bi, k] = np.sqrt(max(val, 0.0))
        a, b = sorted((ids[bi], ids[bj]))
        Z[step] = (a, b, best, ni + nj)
        ids[bi] = n + step
        sizes[bi] = ni + nj
        active.remove(bj)
    return Z


def cut_linkage(Z: np.ndarray, n: int, k: int) -> tuple[int, ...]:
    """Flat assignment into ``k`` clusters, numbered by smallest member."""
    if not 1 <= k <= n:
        raise ValueError(f"cannot cut {n} items into {k} clusters")
    members = {i: [i] for i in range(n)}
    for s in range(n - k):
        a, b = int(Z[s, 0]), int(Z[s, 1])
        members[n + s] = members.pop(a) + members.pop(b)
    groups = sorted(sorted(m) for m in members.values())
    out = [0] * n
    for c, g in enumerate(groups):
        for i in g:
            out[i] = c
    return tuple(out)


@dataclass
class ClusterTree:
    labels: tuple[str, ...]
    linkage: np.ndarray
    k: int
    assignment: tuple[int, ...]

    @property
    def heights(self) -> np.ndarray:
        return self.linkage[:, 2]

    @property
    def groups(self) -> list[tuple[str, ...]]:
        return [tuple(lab for lab, c in zip(self.labels, self.assignment) if c == g)
                for g in range(self.k)]

    def cut(self, k: int) -> tuple[int, ...]:
        return cut_linkage(self.linkage, len(self.labels), k)


def ward_cluster(P, k: int, labels: tuple[str, ...] | None = None) -> ClusterTree:
    """Ward clustering of sections from a co-contribution matrix, cut at ``k``."""
    if labels is None:
        labels = getattr(P, "labels", None)
    D = dissimilarity(P)
    n = D.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    if k > n:
        raise ValueError(f"k={k} exceeds the number of sections ({n})")
    Z = ward_linkage(D)
    return ClusterTree(tuple(labels), Z, k, cut_linkage(Z, n, k))
