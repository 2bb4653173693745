"""Attribute a paper's macros to its authors.

A signature defined in the paper is matched to every author whose history
already contains it.  Each matched signature is worth one unit of credit,
split equally among the authors that match it.  Shares are an author's
credit divided by the number of matched signatures.

Credit is accumulated as exact fractions and only converted to float at the
end, so results are reproducible bit for bit.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .corpus import HistoryDB, PaperMeta, history_as_of, history_excluding, signature_of
from .latex import ParsedPaper
from .taxonomy import TaxonomyConfig, canonicalize

STRICT = "strict"
FULL = "full"
HISTORY_MODES = (STRICT, FULL)

OTHER = "other"
UNSECTIONED = "unsectioned"


@dataclass(frozen=True)
class AuthorCredit:
    author_id: str
    rank: int
    matched_signatures: frozenset[str]
    fractional_count: float
    unique_count: int
    share: float


@dataclass
class AttributionResult:
    paper_id: str
    credits: dict[str, AuthorCredit]
    total_attributed: int

    @property
    def shares(self) -> dict[str, float]:
        return {a: c.share for a, c in self.credits.items()}

    def __getitem__(self, author_id: str) -> AuthorCredit:
        return self.credits[author_id]


def known_signatures(db: HistoryDB, meta: PaperMeta, paper_sigs: set[str],
                     history_mode: str = STRICT) -> dict[str, set[str]]:
    """Each author's usable history for attributing ``meta``'s paper."""
    if history_mode == STRICT:
        return {a: history_as_of(db, a, meta.date) for a in meta.authors}
    if history_mode == FULL:
        return {a: history_excluding(db, a, paper_sigs) for a in meta.authors}
    raise ValueError(f"unknown history mode {history_mode!r}")


def attribute_paper(parsed: ParsedPaper, meta: PaperMeta, db: HistoryDB,
                    history_mode: str = STRICT) -> AttributionResult:
    """Split credit for the paper's defined signatures among its authors.

    Papers where nothing matches get all-zero shares.
    """
    sigs = {signature_of(d, db.mode) for d in parsed.definitions}
    known = known_signatures(db, meta, sigs, history_mode)
    credit = {a: Fraction(0) for a in meta.authors}
    matched = {a: set() for a in meta.authors}
    total = 0
    for s in sorted(sigs):
        owners = [a for a in meta.authors if s in known[a]]
        if not owners:
            continue
        total += 1
        w = Fraction(1, len(owners))
        for a in owners:
            credit[a] += w
            matched[a].add(s)
    credits = {}
    for rank, a in enumerate(meta.authors, 1):
        share = credit[a] / total if total else Fraction(0)
        credits[a] = AuthorCredit(a, rank, frozenset(matched[a]), float(credit[a]),
                                  len(matched[a]), float(share))
    return AttributionResult(meta.paper_id, credits, total)


@dataclass
class SectionFocus:
    """Per-author distribution of attributed macro names over sections.

    ``counts[author][bucket]`` is the number of distinct attributed macro
    names used in that bucket; buckets are the taxonomy labels plus
    ``other`` (headings outside the taxonomy) and ``unsectioned`` (text before
    the first section).  ``fractions`` divide by the sum over all buckets,
    so each author's fractions sum to 1.
    """

    paper_id: str
    taxonomy: str
    labels: tuple[str, ...]
    counts: dict[str, dict[str, int]]

    @property
    def buckets(self) -> tuple[str, ...]:
        return self.labels + (OTHER, UNSECTIONED)

    @property
    def fractions(self) -> dict[str, dict[str, float]]:
        out = {}
        for a, c in self.counts.items():
            denom = sum(c.values())
            out[a] = {b: c.get(b, 0) / denom for b in self.buckets}
        return out

    def reported(self) -> dict[str, dict[str, float]]:
        """Fractions restricted to the taxonomy's labels."""
        return {a: {b: f[b] for b in self.labels} for a, f in self.fractions.items()}


def section_focus(parsed: ParsedPaper, meta: PaperMeta, db: HistoryDB,
                  taxonomy: TaxonomyConfig, history_mode: str = STRICT,
                  attribution: AttributionResult | None = None) -> SectionFocus:
    if attribution is None:
        attribution = attribute_paper(parsed, meta, db, history_mode)
    section_bucket = []
    for span in parsed.sections:
        label = canonicalize(span.raw_heading, taxonomy)
        section_bucket.append(label if label is not None else OTHER)

    # macro name -> buckets it is used in
    used_in: dict[str, set[str]] = defaultdict(set)
    for u in parsed.usages:
        bucket = UNSECTIONED if u.section_index is None else section_bucket[u.section_index]
        used_in[u.name].add(bucket)

    sig_names: dict[str, set[str]] = defaultdict(set)
    for d in parsed.definitions:
        sig_names[signature_of(d, db.mode)].add(d.name)

    counts = {}
    for a in meta.authors:
        names = set()
        for s in attribution.credits[a].matched_signatures:
            names |= sig_names[s]
        c: dict[str, int] = defaultdict(int)
        for name in names:
            for bucket in used_in.get(name, ()):
                c[bucket] += 1
        if c:
            counts[a] = dict(c)
    return SectionFocus(meta.paper_id, taxonomy.name, taxonomy.labels, counts)


@dataclass(frozen=True)
class SectionContributionFlag:
    paper_id: str
    author_id: str
    section: str
    contributed: bool


def contribution_flags(focus: SectionFocus) -> list[SectionContributionFlag]:
    """One flag per (author, taxonomy label): at least one attributed macro used there."""
    return [
        SectionContributionFlag(focus.paper_id, a, label, c.get(label, 0) >= 1)
        for a, c in focus.counts.items()
        for label in focus.labels
    ]


def contributed_sections(flags: Iterable[SectionContributionFlag]) -> dict[tuple[str, str], frozenset[str]]:
    """``(paper_id, author_id) -> sections with a true flag``."""
    out: dict[tuple[str, str], set[str]] = defaultdict(set)
    for f in flags:
        key = (f.paper_id, f.author_id)
        out.setdefault(key, set())
        if f.contributed:
            out[key].add(f.section)
    return {k: frozenset(v) for k, v in out.items()}


def multi_section_records(flags: Iterable[SectionContributionFlag], min_sections: int = 2):
    """Author-paper records that contributed to at least ``min_sections`` sections."""
    return {k: v for k, v in contributed_sections(flags).items() if len(v) >= min_sections}
