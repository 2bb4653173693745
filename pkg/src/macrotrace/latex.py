"""Extract user-defined macros, their usages and ``\\section`` structure from
LaTeX source bundles.

Text is handled as Latin-1 decoded strings so that one character is one byte
and every offset reported here is a byte offset into the flattened source.
Only ASCII control sequences are tokenized; other bytes pass through opaquely.

The pipeline for a single paper is::

    resolve_inputs -> strip_comments -> definitions + sections + usages

and is wrapped by :func:`parse_paper`.
"""

from __future__ import annotations

import bisect
import io
import json
import posixpath
import re
import tarfile
import gzip
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

__all__ = [
    "DEFINITION_COMMANDS",
    "VERBATIM_ENVIRONMENTS",
    "RawPaperSource",
    "MacroDefinition",
    "SectionSpan",
    "MacroUsage",
    "ParsedPaper",
    "IngestError",
    "strip_comments",
    "verbatim_regions",
    "resolve_inputs",
    "extract_macro_definitions",
    "extract_sections",
    "scan_macro_usages",
    "parse_paper",
    "load_source",
]

ENCODING = "latin-1"

#: Control word -> definition kind.  Extend this mapping to recognise more
#: defining commands; the value must be one of the known kinds.
DEFINITION_COMMANDS: dict[str, str] = {
    "newcommand": "newcommand",
    "renewcommand": "renewcommand",
    "providecommand": "providecommand",
    "def": "def-family",
    "gdef": "def-family",
    "edef": "def-family",
    "xdef": "def-family",
    "DeclareMathOperator": "declare-math-operator",
    "DeclareRobustCommand": "declare-robust",
}

DEFINITION_KINDS = frozenset(DEFINITION_COMMANDS.values())

VERBATIM_ENVIRONMENTS = ("verbatim", "verbatim*", "Verbatim", "lstlisting", "minted")

# A control word is a run of ASCII letters; anything else after the
# backslash (including a newline) is a one-character control symbol.
_CS = re.compile(r"\\(?:[A-Za-z]+|.)", re.S)
_TOKEN = re.compile(r"\\(?:[A-Za-z]+|.)|%", re.S)
_BRACE = re.compile(r"\\.|[{}]", re.S)
_WS = re.compile(r"[ \t\r\n]*")
_VERB_ENV = re.compile(
    r"\\begin[ \t]*\{(" + "|".join(re.escape(e) for e in VERBATIM_ENVIRONMENTS) + r")\}"
)
_END_DOCUMENT = re.compile(r"[ \t\r\n]*\{document\}")
_FILE_ARG = re.compile(r"[ \t]*\{([^{}]*)\}")


class IngestError(Exception):
    """A paper's source bundle cannot be read at all."""


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class RawPaperSource:
    """One source bundle: relative path -> raw bytes, plus the root file."""

    paper_id: str
    root_file: str
    files: Mapping[str, bytes]

    def __post_init__(self):
        if not self.paper_id:
            raise ValueError("paper_id must be non-empty")
        if self.root_file not in self.files:
            raise IngestError(
                f"{self.paper_id}: root file {self.root_file!r} not in bundle"
            )

    def text(self, path: str) -> str:
        return self.files[path].decode(ENCODING)


@dataclass(frozen=True)
class MacroDefinition:
    name: str
    body: str
    kind: str
    byte_offset: int
    end_offset: int = -1


@dataclass(frozen=True)
class SectionSpan:
    """Body of one ``\\section``: ``[start_offset, end_offset)``.

    ``heading_offset`` is where the ``\\section`` command itself starts.
    Empty sections (a heading immediately followed by the next one) have
    ``start_offset == end_offset``.
    """

    raw_heading: str
    start_offset: int
    end_offset: int
    index: int
    heading_offset: int = -1


@dataclass(frozen=True)
class MacroUsage:
    name: str
    byte_offset: int
    section_index: int | None


@dataclass
class ParsedPaper:
    paper_id: str
    definitions: list[MacroDefinition] = field(default_factory=list)
    usages: list[MacroUsage] = field(default_factory=list)
    sections: list[SectionSpan] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "definitions": [
                [d.name, d.body, d.kind, d.byte_offset, d.end_offset]
                for d in self.definitions
            ],
            "usages": [[u.name, u.byte_offset, u.section_index] for u in self.usages],
            "sections": [
                [s.raw_heading, s.start_offset, s.end_offset, s.index, s.heading_offset]
                for s in self.sections
            ],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "ParsedPaper":
        return cls(
            paper_id=rec["paper_id"],
            definitions=[MacroDefinition(*d) for d in rec["definitions"]],
            usages=[MacroUsage(*u) for u in rec["usages"]],
            sections=[SectionSpan(*s) for s in rec["sections"]],
            warnings=list(rec["warnings"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, ensure_ascii=True)

    @classmethod
    def from_json(cls, line: str) -> "ParsedPaper":
        return cls.from_record(json.loads(line))


# ---------------------------------------------------------------------------
# low-level scanning


def _protected_regions(text: str, warnings: list[str] | None = None):
    """Return ``(comments, verbatim)`` as sorted lists of ``(start, end)``.

    A comment region runs from an unescaped ``%`` up to, not including, the
    end of its line.  Verbatim regions cover the whole environment including
    its ``\\begin``/``\\end`` and ``\\verb`` runs including delimiters.
    """
    comments: list[tuple[int, int]] = []
    verbatim: list[tuple[int, int]] = []
    n = len(text)
    pos = 0
    search = _TOKEN.search
    while True:
        m = search(text, pos)
        if m is None:
            break
        tok = m.group()
        start = m.start()
        if tok == "%":
            end = text.find("\n", start)
            if end < 0:
                end = n
            comments.append((start, end))
            pos = end
        elif tok == "\\begin":
            v = _VERB_ENV.match(text, start)
            if v is None:
                pos = m.end()
                continue
            env = v.group(1)
            close = "\\end{%s}" % env
            idx = text.find(close, v.end())
            if idx < 0:
                if warnings is not None:
                    warnings.append(f"unterminated {env} environment at offset {start}")
                end = n
            else:
                end = idx + len(close)
            verbatim.append((start, end))
            pos = end
        elif tok == "\\verb":
            j = m.end()
            if j < n and text[j] == "*":
                j += 1
            if j >= n or text[j] in " \t\r\n":
                pos = m.end()
                continue
            delim = text[j]
            idx = text.find(delim, j + 1)
            eol = text.find("\n", j + 1)
            if idx < 0 or (0 <= eol < idx):
                # LaTeX refuses a line break inside \verb
                if warnings is not None:
                    warnings.append(f"unterminated \\verb at offset {start}")
                end = n if eol < 0 else eol
            else:
                end = idx + 1
            verbatim.append((start, end))
            pos = end
        else:
            pos = m.end()
    return comments, verbatim


def _remove_regions(text: str, regions) -> str:
    if not regions:
        return text
    out = []
    last = 0
    for s, e in regions:
        out.append(text[last:s])
        last = e
    out.append(text[last:])
    return "".join(out)


def strip_comments(text: str, warnings: list[str] | None = None) -> str:
    """Remove every unescaped ``%`` and the rest of its line.

    ``\\%`` is kept, verbatim environments and ``\\verb`` are left untouched,
    and newlines are preserved.  Warnings about unterminated verbatim are
    appended to ``warnings`` when a list is given.

    >>> strip_comments("a % c\\nb")
    'a \\nb'
    """
    # removing a comment can splice tokens across a line (``\\begin%\\n{verbatim}``),
    # so iterate to a fixed point
    while True:
        local: list[str] = []
        comments, _ = _protected_regions(text, local)
        if not comments:
            break
        text = _remove_regions(text, comments)
    if warnings is not None:
        warnings.extend(local)
    return text


def verbatim_regions(text: str) -> list[tuple[int, int]]:
    """Verbatim and ``\\verb`` regions of comment-free text."""
    return _protected_regions(text)[1]


def _in_regions(pos: int, starts: list[int], regions) -> bool:
    i = bisect.bisect_right(starts, pos) - 1
    return i >= 0 and pos < regions[i][1]


def _control_sequences(text: str, regions=()) -> list[tuple[str, int, int]]:
    """All control sequences ``(name, start, end)`` outside ``regions``."""
    if not regions:
        return [(m.group()[1:], m.start(), m.end()) for m in _CS.finditer(text)]
    out = []
    pos = 0
    for rs, re_ in regions:
        for m in _CS.finditer(text, pos, rs):
            out.append((m.group()[1:], m.start(), m.end()))
        pos = re_
    for m in _CS.finditer(text, pos):
        out.append((m.group()[1:], m.start(), m.end()))
    return out


def _match_brace(text: str, j: int) -> int:
    """Index of the ``}`` closing the ``{`` at ``text[j]``, or -1."""
    depth = 0
    for m in _BRACE.finditer(text, j):
        c = m.group()
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return m.start()
    return -1


def _match_bracket(text: str, j: int) -> int:
    """Index of the ``]`` closing the ``[`` at ``text[j]``, skipping brace groups."""
    k = j + 1
    n = len(text)
    while k < n:
        c = text[k]
        if c == "\\":
            k += 2
            continue
        if c == "{":
            close = _match_brace(text, k)
            if close < 0:
                return -1
            k = close + 1
            continue
        if c == "]":
            return k
        k += 1
    return -1


def _skip_ws(text: str, j: int) -> int:
    return _WS.match(text, j).end()


# ---------------------------------------------------------------------------
# multi-file bundles


def _ends_in_open_comment(text: str) -> bool:
    tail = text[text.rfind("\n") + 1 :]
    if "%" not in tail:
        return False
    comments, _ = _protected_regions(tail)
    return bool(comments) and comments[-1][1] == len(tail)


def _bundle_path(target: str) -> str | None:
    target = target.strip()
    if not target or target.startswith("/"):
        return None
    norm = posixpath.normpath(target)
    if norm.startswith("../") or norm == "..":
        return None
    return norm


def resolve_inputs(source: RawPaperSource, warnings: list[str] | None = None) -> str:
    """Flatten ``\\input{f}`` and ``\\include{f}`` recursively.

    Targets are looked up inside the bundle as ``f.tex`` then ``f``.  Missing
    targets, targets outside the bundle and cyclic inclusions are replaced by
    empty text and reported through ``warnings``.
    """
    if warnings is None:
        warnings = []

    def expand(path: str, stack: tuple[str, ...]) -> str:
        text = source.text(path)
        if "\\in" not in text:
            return text
        comments, verbatim = _protected_regions(text)
        regions = sorted(comments + verbatim)
        out = []
        last = 0
        for name, s, e in _control_sequences(text, regions):
            if name not in ("input", "include"):
                continue
            m = _FILE_ARG.match(text, e)
            if m is None:
                continue
            target = m.group(1)
            norm = _bundle_path(target)
            child = None
            if norm is None:
                warnings.append(f"{path}: \\{name}{{{target}}} points outside the bundle")
            else:
                for cand in (norm + ".tex", norm):
                    if cand in source.files:
                        child = cand
                        break
                if child is None:
                    warnings.append(f"{path}: \\{name}{{{target}}} not found in bundle")
            content = ""
            if child is not None:
                if child in stack:
                    warnings.append(
                        f"{path}: \\{name}{{{target}}} forms an inclusion cycle"
                    )
                else:
                    content = expand(child, stack + (child,))
                    if _ends_in_open_comment(content):
                        content += "\n"
            out.append(text[last:s])
            out.append(content)
            last = m.end()
        out.append(text[last:])
        return "".join(out)

    return expand(source.root_file, (source.root_file,))


# ---------------------------------------------------------------------------
# definitions


class _Skip(Exception):
    pass


def _read_cs_name(text: str, j: int) -> tuple[str, int]:
    m = _CS.match(text, j)
    if m is None:
        raise _Skip("expected a control sequence")
    return m.group()[1:], m.end()


def _braced_or_single(text: str, j: int) -> tuple[str, int]:
    """Read a brace group (content returned) or a single token."""
    if j >= len(text):
        raise _Skip("missing body")
    if text[j] == "{":
        close = _match_brace(text, j)
        if close < 0:
            raise _Skip("unbalanced braces")
        return text[j + 1 : close], close + 1
    if text[j] == "}":
        raise _Skip("missing body")
    if text[j] == "\\":
        m = _CS.match(text, j)
        return m.group(), m.end()
    return text[j], j + 1


def _parse_command_style(text: str, j: int, optional_args: bool):
    n = len(text)
    if j < n and text[j] == "*":
        j += 1
    j = _skip_ws(text, j)
    if j >= n:
        raise _Skip("missing macro name")
    if text[j] == "{":
        close = _match_brace(text, j)
        if close < 0:
            raise _Skip("unbalanced braces")
        inner = text[j + 1 : close].strip(" \t\r\n")
        m = _CS.fullmatch(inner)
        if m is None:
            raise _Skip("macro name is not a single control sequence")
        name = inner[1:]
        j = close + 1
    elif text[j] == "\\":
        name, j = _read_cs_name(text, j)
    else:
        raise _Skip("missing macro name")
    if optional_args:
        for _ in range(2):
            k = _skip_ws(text, j)
            if k < n and text[k] == "[":
                close = _match_bracket(text, k)
                if close < 0:
                    raise _Skip("unbalanced optional argument")
                j = close + 1
            else:
                break
    j = _skip_ws(text, j)
    body, j = _braced_or_single(text, j)
    return name, body, j


def _parse_def(text: str, j: int):
    j = _skip_ws(text, j)
    if j >= len(text) or text[j] != "\\":
        raise _Skip("missing macro name")
    name, j = _read_cs_name(text, j)
    # parameter text runs to the first unescaped brace
    k = j
    n = len(text)
    while k < n and text[k] != "{":
        if text[k] == "}":
            raise _Skip("unbalanced braces")
        k += 2 if text[k] == "\\" else 1
    if k >= n:
        raise _Skip("missing body")
    close = _match_brace(text, k)
    if close < 0:
        raise _Skip("unbalanced braces")
    return name, text[k + 1 : close], close + 1


def _definitions_from_tokens(text, tokens, warnings, commands):
    defs: list[MacroDefinition] = []
    skip_until = -1
    for name, s, e in tokens:
        if s < skip_until:
            continue
        kind = commands.get(name)
        if kind is None:
            continue
        try:
            if kind == "def-family":
                mname, body, end = _parse_def(text, e)
            else:
                mname, body, end = _parse_command_style(
                    text, e, optional_args=kind != "declare-math-operator"
                )
        except _Skip as exc:
            warnings.append(f"skipped \\{name} at offset {s}: {exc}")
            continue
        defs.append(MacroDefinition(mname, body, kind, s, end))
        skip_until = end
    return defs


def _document_end(text: str, tokens) -> int:
    for name, s, e in tokens:
        if name == "end" and _END_DOCUMENT.match(text, e):
            return s
    return len(text)


class _Scan:
    """Tokens of one comment-free text, computed once and shared."""

    def __init__(self, text: str, warnings: list[str] | None = None):
        self.text = text
        self.verbatim = _protected_regions(text, warnings)[1]
        self.tokens = _control_sequences(text, self.verbatim)
        self.doc_end = _document_end(text, self.tokens)
        self.body_tokens = [t for t in self.tokens if t[1] < self.doc_end]


def extract_macro_definitions(
    text: str,
    warnings: list[str] | None = None,
    commands: Mapping[str, str] | None = None,
) -> list[MacroDefinition]:
    """Definitions made by the commands in :data:`DEFINITION_COMMANDS`.

    Bodies are returned as written.  Optional-argument brackets of
    ``\\newcommand`` and friends are consumed and dropped.  Definitions whose
    braces do not balance are skipped with a warning.
    """
    if warnings is None:
        warnings = []
    return _definitions(_Scan(text), warnings, commands)


def _definitions(scan: _Scan, warnings, commands=None):
    return _definitions_from_tokens(
        scan.text, scan.body_tokens, warnings, commands or DEFINITION_COMMANDS
    )


_HEADING_TOKEN = re.compile(r"\\([A-Za-z]+\*?|.)|[{}$~]", re.S)
_HEADING_ESCAPES = set("%&_#${}")


def _heading_repl(m: re.Match) -> str:
    tok = m.group(1)
    if tok is None:
        return " " if m.group() == "~" else ""
    if tok in _HEADING_ESCAPES:
        return tok
    if tok in ("\\", "\n", " "):
        return " "
    return ""


def _heading_text(raw: str) -> str:
    """Plain text of a heading: commands dropped, their brace arguments kept."""
    return " ".join(_HEADING_TOKEN.sub(_heading_repl, raw).split())


def _sections(scan: _Scan, definitions, warnings) -> list[SectionSpan]:
    text = scan.text
    def_spans = [(d.byte_offset, d.end_offset) for d in definitions]
    def_starts = [s for s, _ in def_spans]
    heads = []  # (heading_offset, body_start, raw_heading)
    n = len(text)
    for name, s, e in scan.body_tokens:
        if name != "section" or _in_regions(s, def_starts, def_spans):
            continue
        if heads and s < heads[-1][1]:
            continue  # inside the previous heading
        j = e
        if j < n and text[j] == "*":
            j += 1
        j = _skip_ws(text, j)
        if j < n and text[j] == "[":
            close = _match_bracket(text, j)
            if close >= 0:
                j = _skip_ws(text, close + 1)
        if j >= n or text[j] != "{":
            warnings.append(f"\\section without a braced heading at offset {s}")
            continue
        close = _match_brace(text, j)
        if close < 0 or close > scan.doc_end:
            eol = text.find("\n", j)
            if eol < 0 or eol > scan.doc_end:
                eol = scan.doc_end
            warnings.append(f"unbalanced braces in \\section heading at offset {s}")
            heads.append((s, eol, _heading_text(text[j + 1 : eol])))
        else:
            heads.append((s, close + 1, _heading_text(text[j + 1 : close])))
    spans = []
    for i, (hs, body, heading) in enumerate(heads):
        end = heads[i + 1][0] if i + 1 < len(heads) else scan.doc_end
        spans.append(SectionSpan(heading, body, max(body, end), i, hs))
    return spans


def extract_sections(text: str, warnings: list[str] | None = None) -> list[SectionSpan]:
    """One span per ``\\section``/``\\section*``.

    A span starts right after the heading group and ends at the next
    ``\\section``, at ``\\end{document}`` or at the end of the text.
    ``\\section`` inside a macro definition body is not a section.
    """
    if warnings is None:
        warnings = []
    scan = _Scan(text)
    return _sections(scan, _definitions(scan, []), warnings)


def _usages(scan: _Scan, definitions, sections) -> list[MacroUsage]:
    names = {d.name for d in definitions}
    own = {}
    for d in definitions:
        own.setdefault(d.name, []).append((d.byte_offset, d.end_offset))
    heads = [s.heading_offset for s in sections]
    out = []
    for name, s, _ in scan.body_tokens:
        if name not in names:
            continue
        if any(a <= s < b for a, b in own[name]):
            continue
        i = bisect.bisect_right(heads, s) - 1
        sec = i if i >= 0 and s < sections[i].end_offset else None
        out.append(MacroUsage(name, s, sec))
    return out


def scan_macro_usages(text: str, definitions, sections=None) -> list[MacroUsage]:
    """Occurrences of defined macro names, with their enclosing section.

    Control-word boundaries are respected (``\\ssmx`` is not ``\\ssm``).
    Occurrences inside verbatim, after ``\\end{document}``, or inside the
    macro's own definition are skipped.  ``sections`` defaults to
    :func:`extract_sections` on the same text.
    """
    scan = _Scan(text)
    if sections is None:
        sections = _sections(scan, definitions, [])
    return _usages(scan, definitions, sections)


def parse_paper(source: RawPaperSource) -> ParsedPaper:
    """Run the full extraction for one bundle."""
    warnings: list[str] = []
    try:
        flat = resolve_inputs(source, warnings)
    except (KeyError, UnicodeError) as exc:
        raise IngestError(f"{source.paper_id}: cannot read root file: {exc}") from exc
    text = strip_comments(flat, warnings)
    scan = _Scan(text)
    definitions = _definitions(scan, warnings)
    sections = _sections(scan, definitions, warnings)
    usages = _usages(scan, definitions, sections)
    return ParsedPaper(source.paper_id, definitions, usages, sections, warnings)


# ---------------------------------------------------------------------------
# reading bundles from disk

TEXT_SUFFIXES = {".tex", ".sty", ".cls", ".def", ".ltx", ".clo", ".bbl", ".txt", ""}


def _keep(path: str) -> bool:
    return Path(path).suffix.lower() in TEXT_SUFFIXES


def _guess_root(paper_id: str, files: Mapping[str, bytes]) -> str:
    tex = sorted(p for p in files if p.lower().endswith(".tex"))
    with_class = [p for p in tex if b"\\documentclass" in files[p]]
    for preferred in ("main.tex", "ms.tex", "paper.tex"):
        if preferred in with_class:
            return preferred
    if with_class:
        return with_class[0]
    if len(tex) == 1:
        return tex[0]
    if len(files) == 1:
        return next(iter(files))
    raise IngestError(f"{paper_id}: cannot determine the root file")


ARCHIVE_SUFFIXES = (".tar", ".tar.gz", ".tgz")


def load_source(paper_id: str, path, root_file: str | None = None) -> RawPaperSource:
    """Read a bundle from a directory, a (compressed) tar archive, or a single file."""
    path = Path(path)
    files: dict[str, bytes] = {}
    try:
        if path.is_dir():
            for p in sorted(path.rglob("*")):
                if p.is_file():
                    rel = p.relative_to(path).as_posix()
                    if _keep(rel):
                        files[rel] = p.read_bytes()
        elif tarfile.is_tarfile(path):
            with tarfile.open(path) as tar:
                for member in tar.getmembers():
                    if not member.isfile():
                        continue
                    rel = _bundle_path(member.name)
                    if rel is None or not _keep(rel):
                        continue
                    files[rel] = tar.extractfile(member).read()
        elif path.name.lower().endswith(ARCHIVE_SUFFIXES):
            raise IngestError(f"{paper_id}: {path} is not a readable tar archive")
        else:
            data = path.read_bytes()
            if data[:2] == b"\x1f\x8b":
                data = gzip.decompress(data)
                if tarfile.is_tarfile(io.BytesIO(data)):
                    with tarfile.open(fileobj=io.BytesIO(data)) as tar:
                        for member in tar.getmembers():
                            rel = _bundle_path(member.name)
                            if member.isfile() and rel is not None and _keep(rel):
                                files[rel] = tar.extractfile(member).read()
                    return _make_source(paper_id, files, root_file)
            name = path.name[:-3] if path.name.endswith(".gz") else path.name
            if not name.endswith(".tex"):
                name = "main.tex"
            files[name] = data
    except (OSError, tarfile.TarError, EOFError, zlib.error) as exc:
        raise IngestError(f"{paper_id}: cannot read bundle {path}: {exc}") from exc
    return _make_source(paper_id, files, root_file)


def _make_source(paper_id, files, root_file):
    if not files:
        raise IngestError(f"{paper_id}: bundle contains no LaTeX files")
    if root_file is None:
        root_file = _guess_root(paper_id, files)
    return RawPaperSource(paper_id, root_file, files)
