"""Line-delimited JSON and CSV record files exchanged between pipeline stages."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable

from .analytics.regression import AuthorRecord, FocusRecord
from .attribution import AttributionResult, SectionFocus
from .corpus import PaperMeta

ATTRIBUTION_FIELDS = (
    "paper_id", "author_id", "author_rank", "team_size", "discipline", "date",
    "unique_count", "fractional_count", "share", "total_attributed",
)
FOCUS_FIELDS = (
    "paper_id", "author_id", "author_rank", "team_size", "discipline", "taxonomy",
    "section", "count", "fraction", "contributed",
)


def write_jsonl(path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc.msg}") from None
    return out


def _cell(v):
    if isinstance(v, float):
        return "NA" if v != v else repr(v + 0.0)
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "NA"
    return v


def csv_text(rows: Iterable[dict], fields: Iterable[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    fields = list(fields)
    w.writerow(fields)
    for row in rows:
        w.writerow([_cell(row.get(f)) for f in fields])
    return buf.getvalue()


def write_csv(path, rows: Iterable[dict], fields: Iterable[str]) -> None:
    Path(path).write_text(csv_text(rows, fields), encoding="utf-8")


def attribution_rows(result: AttributionResult, meta: PaperMeta) -> list[dict]:
    return [
        {
            "paper_id": meta.paper_id,
            "author_id": c.author_id,
            "author_rank": c.rank,
            "team_size": meta.team_size,
            "discipline": meta.discipline,
            "date": meta.date.isoformat(),
            "unique_count": c.unique_count,
            "fractional_count": c.fractional_count,
            "share": c.share,
            "total_attributed": result.total_attributed,
        }
        for c in result.credits.values()
    ]


def focus_rows(focus: SectionFocus, meta: PaperMeta) -> list[dict]:
    """One row per (author with located usages, taxonomy label)."""
    rank = {a: i for i, a in enumerate(meta.authors, 1)}
    fractions = focus.fractions
    rows = []
    for a in meta.authors:
        if a not in focus.counts:
            continue
        for label in focus.labels:
            n = focus.counts[a].get(label, 0)
            rows.append({
                "paper_id": meta.paper_id,
                "author_id": a,
                "author_rank": rank[a],
                "team_size": meta.team_size,
                "discipline": meta.discipline,
                "taxonomy": focus.taxonomy,
                "section": label,
                "count": n,
                "fraction": fractions[a][label],
                "contributed": n >= 1,
            })
    return rows


def author_records(rows: Iterable[dict], measure: str = "unique_count") -> list[AuthorRecord]:
    return [
        AuthorRecord(r["paper_id"], r["author_id"], int(r["author_rank"]), int(r["team_size"]),
                     float(r[measure]), r.get("discipline", ""))
        for r in rows
    ]


def focus_records(rows: Iterable[dict]) -> list[FocusRecord]:
    return [
        FocusRecord(r["paper_id"], r["author_id"], int(r["author_rank"]), int(r["team_size"]),
                    r["section"], float(r["fraction"]))
        for r in rows
    ]
