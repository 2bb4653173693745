"""Corpus manifest and the per-author macro history database.

The history database maps each author to the macro signatures seen in any
paper they coauthored, stamped with the date of the first such paper.  It is
built by replaying the corpus in ``(date, paper_id)`` order, so the result
does not depend on the order of manifest lines.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .latex import MacroDefinition, ParsedPaper

NAME_BODY = "name+body"
NAME_ONLY = "name"
SIGNATURE_MODES = (NAME_BODY, NAME_ONLY)

FORMAT_VERSION = 1

_ASCII_WS = re.compile(r"[ \t\r\n\f\v]+")


class ManifestError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


class HistoryFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PaperMeta:
    paper_id: str
    date: dt.date
    authors: tuple[str, ...]
    discipline: str = ""
    source_path: str = ""
    root_file: str | None = None

    def __post_init__(self):
        if not self.paper_id:
            raise ValueError("empty paper_id")
        if not self.authors:
            raise ValueError(f"{self.paper_id}: no authors")
        if len(set(self.authors)) != len(self.authors):
            raise ValueError(f"{self.paper_id}: duplicate author ids")

    @property
    def team_size(self) -> int:
        return len(self.authors)

    def to_record(self) -> dict:
        rec = {
            "paper_id": self.paper_id,
            "date": self.date.isoformat(),
            "authors": list(self.authors),
            "discipline": self.discipline,
            "source_path": self.source_path,
        }
        if self.root_file is not None:
            rec["root_file"] = self.root_file
        return rec


@dataclass
class CorpusManifest:
    papers: list[PaperMeta]
    signature_mode: str = NAME_BODY
    taxonomy: str = "eight"
    base_dir: Path | None = None

    def __post_init__(self):
        if self.signature_mode not in SIGNATURE_MODES:
            raise ManifestError(f"unknown signature mode {self.signature_mode!r}")
        seen = set()
        for p in self.papers:
            if p.paper_id in seen:
                raise ManifestError(f"duplicate paper_id {p.paper_id!r}")
            seen.add(p.paper_id)

    def __iter__(self):
        return iter(self.papers)

    def __len__(self):
        return len(self.papers)

    def by_id(self) -> dict[str, PaperMeta]:
        return {p.paper_id: p for p in self.papers}

    def source_location(self, meta: PaperMeta) -> Path:
        path = Path(meta.source_path)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return path

    def dumps(self) -> str:
        lines = [json.dumps({"options": {"signature_mode": self.signature_mode,
                                         "taxonomy": self.taxonomy}}, sort_keys=True)]
        lines += [json.dumps(p.to_record(), sort_keys=True) for p in self.papers]
        return "\n".join(lines) + "\n"


def _parse_meta(rec, lineno: int) -> PaperMeta:
    if not isinstance(rec, dict):
        raise ManifestError("record is not an object", lineno)
    for key in ("paper_id", "date", "authors"):
        if key not in rec:
            raise ManifestError(f"missing field {key!r}", lineno)
    authors = rec["authors"]
    if not isinstance(authors, list) or not all(isinstance(a, str) and a for a in authors):
        raise ManifestError("authors must be a list of non-empty strings", lineno)
    try:
        date = dt.date.fromisoformat(rec["date"])
    except (TypeError, ValueError):
        raise ManifestError(f"bad date {rec['date']!r}", lineno) from None
    try:
        return PaperMeta(
            paper_id=str(rec["paper_id"]),
            date=date,
            authors=tuple(authors),
            discipline=str(rec.get("discipline", "")),
            source_path=str(rec.get("source_path", "")),
            root_file=rec.get("root_file"),
        )
    except ValueError as exc:
        raise ManifestError(str(exc), lineno) from None


def parse_manifest(text: str, base_dir=None) -> CorpusManifest:
    options: dict = {}
    papers = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"not valid JSON ({exc.msg})", lineno) from None
        if isinstance(rec, dict) and "options" in rec and "paper_id" not in rec:
            if papers or options:
                raise ManifestError("options header must come first", lineno)
            options = dict(rec["options"])
            continue
        meta = _parse_meta(rec, lineno)
        if meta.paper_id in seen:
            raise ManifestError(
                f"duplicate paper_id {meta.paper_id!r} (first on line {seen[meta.paper_id]})",
                lineno,
            )
        seen[meta.paper_id] = lineno
        papers.append(meta)
    return CorpusManifest(
        papers,
        signature_mode=options.get("signature_mode", NAME_BODY),
        taxonomy=options.get("taxonomy", "eight"),
        base_dir=Path(base_dir) if base_dir is not None else None,
    )


def load_manifest(path) -> CorpusManifest:
    """Read a line-delimited JSON manifest.

    An optional first line ``{"options": {...}}`` carries corpus-level
    options (``signature_mode``, ``taxonomy``).  Relative ``source_path``
    values are resolved against the manifest's directory.
    """
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), base_dir=path.parent)


def signature_of(defn: MacroDefinition, mode: str = NAME_BODY) -> str:
    """Canonical identity of a macro definition.

    Under ``name+body`` the key is the name, a NUL, and the body with ASCII
    whitespace runs collapsed and trimmed; under ``name`` it is the name.
    """
    if mode == NAME_ONLY:
        return defn.name
    if mode != NAME_BODY:
        raise ValueError(f"unknown signature mode {mode!r}")
    return defn.name + "\x00" + _ASCII_WS.sub(" ", defn.body).strip(" ")


def paper_signatures(parsed: ParsedPaper, mode: str = NAME_BODY) -> set[str]:
    return {signature_of(d, mode) for d in parsed.definitions}


@dataclass
class HistoryEntry:
    first_seen: dt.date
    n_papers: int = 1


@dataclass
class HistoryDB:
    """``entries[author][signature] -> HistoryEntry``.

    ``n_papers`` counts the author's papers that define the signature; it
    lets the full-history mode leave the paper under attribution out.
    """

    mode: str = NAME_BODY
    entries: dict[str, dict[str, HistoryEntry]] = field(default_factory=dict)
    build_order: list[str] = field(default_factory=list)
    _last_key: tuple | None = field(default=None, repr=False, compare=False)

    def add_paper(self, meta: PaperMeta, signatures: Iterable[str]) -> None:
        if self._last_key is not None:
            if (meta.date, meta.paper_id) < self._last_key:
                raise ValueError(
                    f"{meta.paper_id} is older than the last processed paper"
                )
        sigs = sorted(set(signatures))
        for author in meta.authors:
            hist = self.entries.setdefault(author, {})
            for s in sigs:
                entry = hist.get(s)
                if entry is None:
                    hist[s] = HistoryEntry(meta.date)
                else:
                    entry.n_papers += 1
        self.build_order.append(meta.paper_id)
        self._last_key = (meta.date, meta.paper_id)

    def authors(self) -> list[str]:
        return sorted(self.entries)

    def n_signatures(self) -> int:
        return len({s for h in self.entries.values() for s in h})


def build_histories(manifest, parsed_papers: Mapping[str, ParsedPaper], mode: str | None = None) -> HistoryDB:
    """Replay the corpus chronologically into a :class:`HistoryDB`.

    Every signature defined in a paper is credited to every listed author,
    so collaborators' macros enter each other's histories.
    """
    papers = list(manifest)
    if mode is None:
        mode = getattr(manifest, "signature_mode", NAME_BODY)
    db = HistoryDB(mode=mode)
    for meta in sorted(papers, key=lambda p: (p.date, p.paper_id)):
        parsed = parsed_papers.get(meta.paper_id)
        if parsed is None:
            raise KeyError(f"no parsed paper for {meta.paper_id!r}")
        db.add_paper(meta, paper_signatures(parsed, mode))
    return db


def history_as_of(db: HistoryDB, author_id: str, date: dt.date) -> set[str]:
    """Signatures the author had used strictly before ``date``."""
    hist = db.entries.get(author_id)
    if not hist:
        return set()
    return {s for s, e in hist.items() if e.first_seen < date}


def history_excluding(db: HistoryDB, author_id: str, paper_signatures: set[str]) -> set[str]:
    """Whole-career history minus what only the given paper contributed.

    Signatures defined by the excluded paper are kept only if at least one
    other paper by the author also defines them.
    """
    hist = db.entries.get(author_id)
    if not hist:
        return set()
    return {
        s for s, e in hist.items()
        if s not in paper_signatures or e.n_papers >= 2
    }


def save_db(db: HistoryDB, path) -> None:
    """Write the database as JSON lines, sorted for byte stability."""
    lines = [json.dumps({"format_version": FORMAT_VERSION, "mode": db.mode,
                         "build_order": db.build_order}, sort_keys=True)]
    for author in sorted(db.entries):
        hist = db.entries[author]
        for sig in sorted(hist):
            e = hist[sig]
            lines.append(json.dumps([author, sig, e.first_seen.isoformat(), e.n_papers]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_db(path, expected_mode: str | None = None) -> HistoryDB:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError:
            raise HistoryFormatError(f"{path}: missing header") from None
        if not isinstance(header, dict) or header.get("format_version") != FORMAT_VERSION:
            raise HistoryFormatError(
                f"{path}: format version {header.get('format_version') if isinstance(header, dict) else None!r}"
                f" is not {FORMAT_VERSION}"
            )
        mode = header.get("mode")
        if mode not in SIGNATURE_MODES:
            raise HistoryFormatError(f"{path}: unknown signature mode {mode!r}")
        if expected_mode is not None and mode != expected_mode:
            raise HistoryFormatError(
                f"{path}: database built with mode {mode!r}, corpus uses {expected_mode!r}"
            )
        db = HistoryDB(mode=mode, build_order=list(header.get("build_order", [])))
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                author, sig, first, n = json.loads(line)
                entry = HistoryEntry(dt.date.fromisoformat(first), int(n))
            except (ValueError, TypeError) as exc:
                raise HistoryFormatError(f"{path}: line {lineno}: {exc}") from None
            db.entries.setdefault(author, {})[sig] = entry
    return db
