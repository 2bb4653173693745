"""Builders and independent oracles shared by the test modules."""

from __future__ import annotations

import datetime as dt
import json
import random
from fractions import Fraction
from pathlib import Path

from macrotrace.corpus import PaperMeta
from macrotrace.latex import MacroDefinition, MacroUsage, ParsedPaper, RawPaperSource, SectionSpan

FIXTURES = Path(__file__).parent / "fixtures"
D0 = dt.date(2000, 1, 1)


def day(n: int) -> dt.date:
    return D0 + dt.timedelta(days=n)


def meta(pid, date, authors, discipline="cs"):
    if isinstance(date, int):
        date = day(date)
    return PaperMeta(pid, date, tuple(authors), discipline, pid)


def parsed(pid, names, bodies=None, usages=(), headings=()):
    """A ParsedPaper built directly, bypassing the LaTeX scanner.

    ``usages`` is a list of (name, section_index) pairs; offsets are made up
    but consistent with the section spans.
    """
    bodies = bodies or {}
    defs = [MacroDefinition(n, bodies.get(n, ""), "newcommand", i, i + 1) for i, n in enumerate(names)]
    base = 1000
    sections = [SectionSpan(h, base + 100 * i + 10, base + 100 * (i + 1), i, base + 100 * i)
                for i, h in enumerate(headings)]
    uses = []
    for k, (n, s) in enumerate(usages):
        off = 500 + k if s is None else sections[s].start_offset + k % 50
        uses.append(MacroUsage(n, off, s))
    return ParsedPaper(pid, defs, uses, sections, [])


def sig(name, body=""):
    return name + "\x00" + body


def random_corpus(rng: random.Random, max_papers=10, max_authors=4, max_sigs=30):
    """Small random corpus: (list of PaperMeta, dict pid -> ParsedPaper)."""
    n_papers = rng.randint(1, max_papers)
    authors = [f"a{i}" for i in range(rng.randint(1, max_authors))]
    pool = [f"m{i}" for i in range(rng.randint(1, max_sigs))]
    metas, papers = [], {}
    for i in range(n_papers):
        pid = f"p{i:02d}"
        team = rng.sample(authors, rng.randint(1, len(authors)))
        names = sorted(rng.sample(pool, rng.randint(0, min(len(pool), 8))))
        metas.append(meta(pid, rng.randint(0, 6), team))
        papers[pid] = parsed(pid, names)
    return metas, papers


def oracle_attribution(metas, papers, target_id):
    """Brute force: rebuild each author's prior signature set from scratch.

    Returns author -> (fractional credit, matched set, share), all exact.
    """
    by_id = {m.paper_id: m for m in metas}
    target = by_id[target_id]
    target_sigs = {sig(d.name, d.body) for d in papers[target_id].definitions}
    prior = {}
    for a in target.authors:
        s = set()
        for m in metas:
            if a in m.authors and m.date < target.date:
                s |= {sig(d.name, d.body) for d in papers[m.paper_id].definitions}
        prior[a] = s
    credit = {a: Fraction(0) for a in target.authors}
    matched = {a: set() for a in target.authors}
    total = 0
    for s in target_sigs:
        holders = [a for a in target.authors if s in prior[a]]
        if holders:
            total += 1
            for a in holders:
                credit[a] += Fraction(1, len(holders))
                matched[a].add(s)
    return {a: (credit[a], matched[a], credit[a] / total if total else Fraction(0)) for a in target.authors}


def fixture_source(case_dir: Path) -> RawPaperSource:
    files = {
        p.relative_to(case_dir).as_posix(): p.read_bytes()
        for p in sorted(case_dir.rglob("*"))
        if p.is_file() and p.name != "expected.json"
    }
    return RawPaperSource(case_dir.name, "main.tex", files)


def parser_cases():
    return sorted(d for d in (FIXTURES / "parser").iterdir() if d.is_dir())


def extracted(pp: ParsedPaper) -> dict:
    return {
        "definitions": [[d.name, d.kind, d.body] for d in pp.definitions],
        "sections": [s.raw_heading for s in pp.sections],
        "usages": [[u.name, u.section_index] for u in pp.usages],
        "n_warnings": len(pp.warnings),
    }


def expected(case_dir: Path) -> dict:
    return json.loads((case_dir / "expected.json").read_text())
