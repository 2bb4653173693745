"""Command-line pipeline: ingest -> build-db -> attribute -> analyze / validate.

Every stage reads and writes files in one output directory::

    parsed.jsonl          parsed-paper cache, keyed by a hash of each bundle
    ingest_errors.jsonl   bundles that could not be read
    history.jsonl         per-author macro history database
    attribution.{jsonl,csv}, section_focus.{jsonl,csv}, excluded.jsonl
    fig1_coefficients.csv ... table1_metrics.csv, correlation.csv
    provenance/<command>.json

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analytics import (
    author_order_model,
    cocontribution,
    pearson,
    precision_recall,
    section_order_model,
    ward_cluster,
)
from .analytics.regression import RegressionResult
from .attribution import (
    HISTORY_MODES,
    STRICT,
    SectionContributionFlag,
    attribute_paper,
    section_focus,
)
from .corpus import (
    SIGNATURE_MODES,
    HistoryDB,
    ManifestError,
    build_histories,
    load_db,
    load_manifest,
    save_db,
)
from .latex import IngestError, ParsedPaper, load_source, parse_paper
from .records import (
    ATTRIBUTION_FIELDS,
    FOCUS_FIELDS,
    attribution_rows,
    author_records,
    focus_records,
    focus_rows,
    read_jsonl,
    write_csv,
    write_jsonl,
)
from .taxonomy import EIGHT, SIX, TaxonomyConfig, TaxonomyError, resolve

log = logging.getLogger("macrotrace")

PARSER_VERSION = "1"
EXIT_USAGE = 1
EXIT_DATA = 2

PARSED = "parsed.jsonl"
INGEST_ERRORS = "ingest_errors.jsonl"
HISTORY = "history.jsonl"
ATTRIBUTION = "attribution.jsonl"
FOCUS = "section_focus.jsonl"
EXCLUDED = "excluded.jsonl"

COEF_FIELDS = ("term", "coef", "stderr", "t", "p", "ci_low", "ci_high", "n_observations", "r_squared")


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    manifest: Path | None
    out_dir: Path
    signature_mode: str | None = None
    taxonomies: list[str] = field(default_factory=lambda: [EIGHT, SIX])
    threshold: int = 1
    history_mode: str = STRICT
    workers: int = 1
    seed: int = 0
    max_team_size: int = 8

    def provenance(self, command: str, extra: dict | None = None) -> dict:
        d = {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(self).items()}
        d.update(extra or {})
        return {"command": command, "version": __version__, "config": d}


def _write_provenance(cfg: RunConfig, command: str, extra=None):
    d = cfg.out_dir / "provenance"
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{command}.json").write_text(
        json.dumps(cfg.provenance(command, extra), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def _manifest(cfg: RunConfig):
    if cfg.manifest is None:
        raise DataError("--manifest is required")
    try:
        return load_manifest(cfg.manifest)
    except (OSError, ManifestError) as exc:
        raise DataError(f"manifest: {exc}") from None


def _signature_mode(cfg: RunConfig, manifest) -> str:
    return cfg.signature_mode or manifest.signature_mode


# ---------------------------------------------------------------------------
# ingest


def bundle_key(source) -> str:
    h = hashlib.sha256()
    h.update(f"macrotrace-parser-{PARSER_VERSION}\0{source.root_file}\0".encode())
    for name in sorted(source.files):
        data = source.files[name]
        h.update(name.encode("utf-8") + b"\0" + str(len(data)).encode() + b"\0")
        h.update(data)
    return h.hexdigest()


def _ingest_one(job):
    pid, path, root_file, old_key = job
    try:
        source = load_source(pid, path, root_file)
        key = bundle_key(source)
        if key == old_key:
            return pid, key, None, None
        return pid, key, parse_paper(source).to_record(), None
    except (IngestError, OSError, ValueError) as exc:
        return pid, None, None, str(exc)


def _pool_map(fn, jobs, workers, initializer=None, initargs=()):
    if workers <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(workers, initializer=initializer, initargs=initargs) as ex:
        return list(ex.map(fn, jobs, chunksize=chunk))


def read_cache(out_dir: Path) -> dict[str, dict]:
    path = out_dir / PARSED
    if not path.exists():
        return {}
    return {r["paper"]["paper_id"]: r for r in read_jsonl(path)}


def cmd_ingest(cfg: RunConfig) -> int:
    manifest = _manifest(cfg)
    if not len(manifest):
        raise DataError("manifest lists no papers")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    cache = read_cache(cfg.out_dir)
    jobs = [
        (m.paper_id, str(manifest.source_location(m)), m.root_file,
         cache.get(m.paper_id, {}).get("cache_key"))
        for m in manifest
    ]
    results = _pool_map(_ingest_one, jobs, cfg.workers)
    records, errors = [], []
    reused = 0
    for pid, key, rec, err in sorted(results, key=lambda r: r[0]):
        if err is not None:
            log.warning("%s: %s", pid, err)
            errors.append({"paper_id": pid, "error": err})
            continue
        if rec is None:
            rec = cache[pid]["paper"]
            reused += 1
        for w in rec["warnings"]:
            log.info("%s: %s", pid, w)
        records.append({"cache_key": key, "paper": rec})
    write_jsonl(cfg.out_dir / PARSED, records)
    write_jsonl(cfg.out_dir / INGEST_ERRORS, errors)
    _write_provenance(cfg, "ingest")
    print(f"parsed {len(records)} papers ({reused} from cache), {len(errors)} errors")
    return 0 if records else EXIT_DATA


# ---------------------------------------------------------------------------
# build-db


def _parsed_papers(cfg: RunConfig, manifest) -> dict[str, ParsedPaper]:
    cache_path = cfg.out_dir / PARSED
    if not cache_path.exists():
        raise DataError(f"{cache_path} not found; run ingest first")
    cache = read_cache(cfg.out_dir)
    ids = set(manifest.by_id())
    extra = sorted(set(cache) - ids)
    if extra:
        raise DataError(f"cache has papers not in the manifest: {', '.join(extra[:5])}")
    failed = set()
    err_path = cfg.out_dir / INGEST_ERRORS
    if err_path.exists():
        failed = {r["paper_id"] for r in read_jsonl(err_path)}
    missing = sorted(ids - set(cache) - failed)
    if missing:
        raise DataError(f"manifest papers missing from the cache: {', '.join(missing[:5])}")
    return {pid: ParsedPaper.from_record(r["paper"]) for pid, r in cache.items()}


def cmd_build_db(cfg: RunConfig) -> int:
    manifest = _manifest(cfg)
    parsed = _parsed_papers(cfg, manifest)
    usable = [m for m in manifest if m.paper_id in parsed]
    mode = _signature_mode(cfg, manifest)
    db = build_histories(usable, parsed, mode=mode)
    save_db(db, cfg.out_dir / HISTORY)
    n_papers = defaultdict(int)
    for m in usable:
        for a in m.authors:
            n_papers[a] += 1
    rows = [{"author_id": a, "n_papers": n_papers[a], "n_signatures": len(db.entries.get(a, {}))}
            for a in sorted(n_papers)]
    write_csv(cfg.out_dir / "history_summary.csv", rows, ("author_id", "n_papers", "n_signatures"))
    _write_provenance(cfg, "build-db", {"signature_mode_used": mode})
    print(f"{len(n_papers)} authors, {db.n_signatures()} signatures, {len(usable)} papers processed")
    if len(rows) <= 20:
        for r in rows:
            print(f"  {r['author_id']}: {r['n_signatures']} signatures in {r['n_papers']} papers")
    return 0


# ---------------------------------------------------------------------------
# attribute

_WORKER: dict = {}


def _init_attribute(db, taxonomies, history_mode):
    _WORKER.update(db=db, taxonomies=taxonomies, history_mode=history_mode)


def _attribute_one(job):
    rec, meta = job
    parsed = ParsedPaper.from_record(rec)
    db = _WORKER["db"]
    res = attribute_paper(parsed, meta, db, _WORKER["history_mode"])
    arows = attribution_rows(res, meta)
    frows = []
    for tax in _WORKER["taxonomies"]:
        focus = section_focus(parsed, meta, db, tax, attribution=res)
        frows += focus_rows(focus, meta)
    return meta.paper_id, res.total_attributed, arows, frows


def _taxonomies(cfg: RunConfig) -> list[TaxonomyConfig]:
    try:
        taxes = [resolve(t) for t in cfg.taxonomies]
    except TaxonomyError as exc:
        raise DataError(str(exc)) from None
    names = [t.name for t in taxes]
    if len(set(names)) != len(names):
        raise DataError(f"more than one taxonomy config for {names}")
    return taxes


def cmd_attribute(cfg: RunConfig) -> int:
    manifest = _manifest(cfg)
    db_path = cfg.out_dir / HISTORY
    if not db_path.exists():
        raise DataError(f"{db_path} not found; run build-db first")
    mode = _signature_mode(cfg, manifest)
    try:
        db = load_db(db_path, expected_mode=mode)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    taxes = _taxonomies(cfg)
    parsed = read_cache(cfg.out_dir)
    metas = manifest.by_id()
    jobs = [(parsed[pid]["paper"], metas[pid]) for pid in sorted(parsed) if pid in metas]
    results = _pool_map(_attribute_one, jobs, cfg.workers, _init_attribute,
                        (db, taxes, cfg.history_mode))
    arows, frows, excluded = [], [], []
    for pid, total, a, f in results:
        arows += a
        frows += f
        if total == 0:
            excluded.append({"paper_id": pid, "reason": "no attributed macros"})
    write_jsonl(cfg.out_dir / ATTRIBUTION, arows)
    write_csv(cfg.out_dir / "attribution.csv", arows, ATTRIBUTION_FIELDS)
    write_jsonl(cfg.out_dir / FOCUS, frows)
    write_csv(cfg.out_dir / "section_focus.csv", frows, FOCUS_FIELDS)
    write_jsonl(cfg.out_dir / EXCLUDED, excluded)
    _write_provenance(cfg, "attribute")
    print(f"attributed {len(jobs) - len(excluded)} papers, excluded {len(excluded)}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _coef_rows(results: dict[object, RegressionResult], key: str) -> list[dict]:
    rows = []
    for k, res in results.items():
        for t in res.rows(include_intercept=False):
            if not t["term"].startswith("rank_"):
                continue
            t.update({key: k, "n_observations": res.n_observations, "r_squared": res.r_squared})
            rows.append(t)
    return rows


def _load_outputs(cfg: RunConfig):
    path = cfg.out_dir / ATTRIBUTION
    if not path.exists():
        raise DataError(f"{path} not found; run attribute first")
    arows = read_jsonl(path)
    if not arows:
        raise DataError("attribution file is empty")
    fpath = cfg.out_dir / FOCUS
    frows = read_jsonl(fpath) if fpath.exists() else []
    excluded = set()
    if (cfg.out_dir / EXCLUDED).exists():
        excluded = {r["paper_id"] for r in read_jsonl(cfg.out_dir / EXCLUDED)}
    return arows, frows, excluded


def analyze_fig1(frows, out_dir, max_team_size=8):
    rows = [r for r in frows if r["taxonomy"] == EIGHT and r["team_size"] >= 2]
    sections = resolve(EIGHT).labels
    res = section_order_model(focus_records(rows), sections, max_team_size=max_team_size)
    write_csv(out_dir / "fig1_coefficients.csv", _coef_rows(res, "section"), ("section",) + COEF_FIELDS)
    return res


def analyze_fig2(frows, out_dir, k=2):
    flags = [SectionContributionFlag(r["paper_id"], r["author_id"], r["section"], r["contributed"])
             for r in frows if r["taxonomy"] == SIX]
    labels = resolve(SIX).labels
    mat = cocontribution(flags, labels)
    rows = []
    for i, lab in enumerate(labels):
        row = {"section": lab, "support": int(mat.support[i])}
        row.update({other: float(mat.P[i, j]) for j, other in enumerate(labels)})
        rows.append(row)
    write_csv(out_dir / "fig2_matrix.csv", rows, ("section",) + labels + ("support",))
    if not mat.defined:
        log.warning("fig2: some sections have no qualifying records; clustering skipped")
        return mat, None
    tree = ward_cluster(mat, k)
    write_csv(out_dir / "fig2_clusters.csv",
              [{"section": lab, "cluster": c} for lab, c in zip(labels, tree.assignment)],
              ("section", "cluster"))
    write_csv(out_dir / "fig2_linkage.csv",
              [{"step": s, "a": int(z[0]), "b": int(z[1]), "height": float(z[2]), "size": int(z[3])}
               for s, z in enumerate(tree.linkage)],
              ("step", "a", "b", "height", "size"))
    return mat, tree


def analyze_author_order(arows, excluded, out_dir, stratify_by, max_team_size=8):
    rows = [r for r in arows if r["paper_id"] not in excluded and r["team_size"] >= 2]
    res = author_order_model(author_records(rows), stratify_by,
                             max_team_size=max_team_size if stratify_by == "team_size" else None)
    name = "fig3_coefficients.csv" if stratify_by == "team_size" else "fig4_coefficients.csv"
    write_csv(out_dir / name, _coef_rows(res, stratify_by), (stratify_by,) + COEF_FIELDS)
    return res


def cmd_analyze(cfg: RunConfig, which: str = "all") -> int:
    arows, frows, excluded = _load_outputs(cfg)
    todo = ("fig1", "fig2", "fig3", "fig4") if which == "all" else (which,)
    if "fig1" in todo:
        analyze_fig1(frows, cfg.out_dir, cfg.max_team_size)
    if "fig2" in todo:
        analyze_fig2(frows, cfg.out_dir)
    if "fig3" in todo:
        analyze_author_order(arows, excluded, cfg.out_dir, "team_size", cfg.max_team_size)
    if "fig4" in todo:
        analyze_author_order(arows, excluded, cfg.out_dir, "discipline")
    _write_provenance(cfg, "analyze", {"which": which})
    print("wrote " + ", ".join(todo))
    return 0


# ---------------------------------------------------------------------------
# validate


def predicted_writers(arows, threshold: int = 1) -> dict[str, set[str]]:
    pred: dict[str, set[str]] = defaultdict(set)
    for r in arows:
        pred.setdefault(r["paper_id"], set())
        if r["unique_count"] >= threshold:
            pred[r["paper_id"]].add(r["author_id"])
    return dict(pred)


def validate_truth(arows, truth_rows, threshold: int = 1):
    pred = predicted_writers(arows, threshold)
    truth = {}
    journal = {}
    for r in truth_rows:
        truth[r["paper_id"]] = set(r["writing_authors"])
        journal[r["paper_id"]] = r.get("journal", "")
    overlap = set(pred) & set(truth)
    if not overlap:
        raise DataError("no paper appears in both predictions and truth")
    rows = []
    groups = defaultdict(list)
    for pid in truth:
        groups[journal[pid]].append(pid)
    labels = sorted(g for g in groups if g)
    for g in labels + ["Total"]:
        pids = set(truth) if g == "Total" else set(groups[g])
        m = precision_recall({p: pred[p] for p in pids if p in pred},
                             {p: truth[p] for p in pids if p in pred})
        rows.append({"journal": g, "n_papers": m.n_papers, "precision": m.precision,
                     "recall": m.recall, "n_empty_truth": m.n_empty_truth,
                     "n_undefined_precision": m.n_undefined_precision})
    total = precision_recall(pred, truth)
    return rows, total


def validate_editranks(arows, edit_rows, estimate: str = "share"):
    est = {(r["paper_id"], r["author_id"]): float(r[estimate]) for r in arows}
    xs, ys = [], []
    for r in sorted(edit_rows, key=lambda r: (r["paper_id"], r["author_id"])):
        key = (r["paper_id"], r["author_id"])
        if key in est:
            xs.append(float(r["edit_count"]))
            ys.append(est[key])
    if not xs:
        raise DataError("no author-paper record appears in both files")
    try:
        return pearson(xs, ys)
    except ValueError as exc:
        raise DataError(f"correlation undefined: {exc}") from None


def cmd_validate(cfg: RunConfig, truth: Path | None = None, editranks: Path | None = None,
                 estimate: str = "share") -> int:
    arows, _, _ = _load_outputs(cfg)
    if truth is None and editranks is None:
        raise DataError("give --truth and/or --editranks")
    if truth is not None:
        rows, total = validate_truth(arows, read_jsonl(truth), cfg.threshold)
        write_csv(cfg.out_dir / "table1_metrics.csv", rows,
                  ("journal", "n_papers", "precision", "recall", "n_empty_truth",
                   "n_undefined_precision"))
        (cfg.out_dir / "validation_mismatches.txt").write_text(
            "".join(p + "\n" for p in total.mismatched), encoding="utf-8")
        print(f"precision {total.precision:.4f} recall {total.recall:.4f} "
              f"over {total.n_papers} papers ({len(total.mismatched)} mismatched)")
    if editranks is not None:
        res = validate_editranks(arows, read_jsonl(editranks), estimate)
        write_csv(cfg.out_dir / "correlation.csv",
                  [{"estimate": estimate, "r": res.r, "p": res.p, "n": res.n}],
                  ("estimate", "r", "p", "n"))
        print(f"pearson r = {res.r:.4f}, p = {res.p:.4g}, n = {res.n}")
    _write_provenance(cfg, "validate", {"truth": str(truth) if truth else None,
                                        "editranks": str(editranks) if editranks else None,
                                        "estimate": estimate})
    return 0


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--manifest", type=Path, help="line-delimited JSON manifest")
    common.add_argument("--out", type=Path, default=Path("macrotrace-out"), dest="out_dir",
                        help="output directory (default: %(default)s)")
    common.add_argument("--signature-mode", choices=SIGNATURE_MODES,
                        help="override the manifest's signature mode")
    common.add_argument("--taxonomy", action="append", dest="taxonomies",
                        help="taxonomy name (eight, six) or config file; repeatable")
    common.add_argument("--threshold", type=int, default=1,
                        help="min attributed macros to count as a writer (default: 1)")
    common.add_argument("--history-mode", choices=HISTORY_MODES, default=STRICT)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-team-size", type=int, default=8)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="macrotrace", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ingest", parents=[common], help="parse LaTeX bundles into the cache")
    sub.add_parser("build-db", parents=[common], help="build the macro history database")
    sub.add_parser("attribute", parents=[common], help="attribute papers to authors")
    a = sub.add_parser("analyze", parents=[common], help="fit the regression and network analyses")
    a.add_argument("which", nargs="?", default="all", choices=("fig1", "fig2", "fig3", "fig4", "all"))
    v = sub.add_parser("validate", parents=[common], help="compare against external evidence")
    v.add_argument("--truth", type=Path, help="self-reported writers, JSON lines")
    v.add_argument("--editranks", type=Path, help="per-author edit counts, JSON lines")
    v.add_argument("--estimate", default="share",
                   choices=("share", "unique_count", "fractional_count"))
    d = sub.add_parser("dump-taxonomy", parents=[common], help="print a taxonomy rule table")
    d.add_argument("name", nargs="?", default=EIGHT)
    return p


def _config(args) -> RunConfig:
    if args.workers < 1:
        raise DataError("--workers must be at least 1")
    if args.manifest is not None and not args.manifest.is_file():
        raise DataError(f"manifest {args.manifest} not found")
    for attr in ("truth", "editranks"):
        path = getattr(args, attr, None)
        if path is not None and not path.is_file():
            raise DataError(f"{attr} file {path} not found")
    return RunConfig(
        manifest=args.manifest,
        out_dir=args.out_dir,
        signature_mode=args.signature_mode,
        taxonomies=args.taxonomies or [EIGHT, SIX],
        threshold=args.threshold,
        history_mode=args.history_mode,
        workers=args.workers,
        seed=args.seed,
        max_team_size=args.max_team_size,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "dump-taxonomy":
            try:
                sys.stdout.write(resolve(args.name).dumps())
            except TaxonomyError as exc:
                raise DataError(str(exc)) from None
            return 0
        cfg = _config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "build-db":
            return cmd_build_db(cfg)
        if args.command == "attribute":
            return cmd_attribute(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg, args.which)
        if args.command == "validate":
            return cmd_validate(cfg, args.truth, args.editranks, args.estimate)
    except DataError as exc:
        print(f"macrotrace: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
