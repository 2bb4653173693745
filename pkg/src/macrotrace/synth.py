"""Synthetic LaTeX corpora with known structure.

:func:`two_author_corpus` rebuilds the two-author worked example (a 2012 paper by
Huber and Lindner whose matched macros split 8 / 40).  :func:`role_corpus`
generates a larger corpus in which first authors write technical sections,
last authors write conceptual ones, and contribution declines with rank,
which lets every analysis be checked against a planted answer.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import io
import json
import tarfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusManifest, PaperMeta
from .latex import RawPaperSource

CONCEPTUAL_SECTIONS = ("Introduction", "Discussion", "Conclusion")
TECHNICAL_SECTIONS = ("Preliminaries", "Methods", "Results")

# heading variants; each canonicalizes to its key under the default six-way rules
HEADINGS = {
    "Introduction": ("Introduction", "INTRODUCTION", "Introduction and Motivation"),
    "Preliminaries": ("Preliminaries", "Background", "Related Work", "Notation"),
    "Methods": ("Methods", "Methodology", "Our Approach", "The Model"),
    "Results": ("Results", "Main Results", "Experiments", "Experimental Evaluation"),
    "Discussion": ("Discussion", "General Discussion"),
    "Conclusion": ("Conclusion", "Conclusions", "Concluding Remarks"),
}

_WORDS = (
    "the of and to in we a is that for this on with as are by be an it our which "
    "from these model data results method analysis show can using between each "
    "where given function value paper set time two case one such when also than "
    "however first order approach problem number large small under result system "
    "structure both section proposed estimate follows note since thus then"
).split()


def letters(i: int, width: int = 2) -> str:
    """Fixed-width base-26 lowercase code for ``i``."""
    out = []
    for _ in range(width):
        i, r = divmod(i, 26)
        out.append(chr(97 + r))
    if i:
        raise ValueError("index too large for width")
    return "".join(reversed(out))


@dataclass(frozen=True)
class Macro:
    name: str
    body: str

    def definition(self) -> str:
        return "\\newcommand{\\%s}{%s}" % (self.name, self.body)

    def use(self) -> str:
        return "$\\%s{}$" % self.name


def _prose(rng: np.random.Generator, n_words: int) -> str:
    idx = rng.integers(0, len(_WORDS), n_words)
    words = [_WORDS[i] for i in idx]
    for k in range(12, n_words, 15):
        words[k] = words[k] + "."
    return " ".join(words)


def render_paper(title: str, macros_defined: list[Macro], sections: list[tuple[str, list[Macro]]],
                 rng: np.random.Generator, words_per_section: int = 120,
                 preamble_usages: list[Macro] = ()) -> str:
    """LaTeX for one paper: defined macros in the preamble, then sections whose
    bodies mention the listed macros amid filler prose."""
    out = [
        "\\documentclass{article}",
        "\\usepackage{amsmath,amssymb}",
        "% macros below",
        "% \\newcommand{\\unusedold}{retired}",
    ]
    out += [m.definition() for m in macros_defined]
    out += ["\\title{%s}" % title, "\\begin{document}", "\\maketitle"]
    for m in preamble_usages:
        out.append("Abstract mentions %s here." % m.use())
    for heading, used in sections:
        star = "*" if heading.startswith("Ack") else ""
        out.append("\\section%s{%s}" % (star, heading))
        chunks = [_prose(rng, words_per_section)]
        for m in used:
            chunks.append("We write %s and continue, about 5\\%% of cases." % m.use())
            chunks.append(_prose(rng, max(8, words_per_section // 8)))
        out.append(" ".join(chunks) + " % trailing remark")
    out.append("\\end{document}")
    return "\n".join(out) + "\n"


def _bundle(pid: str, text: str) -> RawPaperSource:
    return RawPaperSource(pid, "main.tex", {"main.tex": text.encode("latin-1")})


# ---------------------------------------------------------------------------
# worked two-author example

JOINT_PAPER = "joint-2012"
SSM = Macro("ssm", "\\scriptscriptstyle\\rm")


def two_author_corpus(include_target: bool = True, novel_macros: int = 4, seed: int = 5):
    """Huber (42 papers, 26 macros) and Lindner (48 papers, 195 macros)
    before a joint 2012 paper defining 8 of Huber's and 40 of Lindner's
    macros plus ``novel_macros`` new ones.

    Returns ``(manifest, sources)``.
    """
    rng = np.random.default_rng(seed)
    huber = [SSM] + [Macro("hub" + letters(i), "\\mathrm{H%d}" % i) for i in range(1, 26)]
    lindner = [Macro("lin" + letters(i), "\\mathbf{L%d}" % i) for i in range(195)]
    papers: list[PaperMeta] = []
    sources: dict[str, RawPaperSource] = {}

    def add(pid, date, authors, defined, used):
        sections = [("Introduction", used[: len(used) // 2]), ("Methods", used[len(used) // 2:])]
        text = render_paper(pid, defined, sections, rng, words_per_section=40)
        papers.append(PaperMeta(pid, date, tuple(authors), "physics", f"papers/{pid}"))
        sources[pid] = _bundle(pid, text)

    start = dt.date(1995, 1, 1)
    for i in range(42):
        chosen = sorted({i % 26, (i * 7 + 3) % 26})
        defined = [huber[j] for j in chosen]
        add(f"huber-{i:02d}", start + dt.timedelta(days=150 * i), ["Huber"], defined, defined)
    for i, chunk in enumerate(np.array_split(np.arange(195), 48)):
        defined = [lindner[j] for j in chunk]
        add(f"lindner-{i:02d}", start + dt.timedelta(days=120 * i + 7), ["Lindner"], defined, defined)
    if include_target:
        h_used = huber[:8]
        l_used = lindner[::4][:40]
        novel = [Macro("new" + letters(i), "\\tilde{N%d}" % i) for i in range(novel_macros)]
        defined = h_used + l_used + novel
        sections = [
            ("Introduction", h_used[:3] + l_used[:5]),
            ("Methods", l_used[5:25] + h_used[3:]),
            ("Results", l_used[25:] + novel),
        ]
        text = render_paper("joint", defined, sections, rng, words_per_section=60)
        papers.append(PaperMeta(JOINT_PAPER, dt.date(2012, 6, 1), ("Huber", "Lindner"),
                                "physics", f"papers/{JOINT_PAPER}"))
        sources[JOINT_PAPER] = _bundle(JOINT_PAPER, text)
    return CorpusManifest(papers), sources


# ---------------------------------------------------------------------------
# planted role structure


@dataclass
class RoleCorpusConfig:
    n_papers: int = 400
    n_authors: int = 80
    pool_size: int = 14
    max_team_size: int = 6
    role_fidelity: float = 0.9   # P(first author technical) = P(last author conceptual)
    crossover: float = 0.05      # P(a macro also lands in a section of the other block)
    econ_fraction: float = 0.0   # share of team papers with alphabetical order and flat effort
    words_per_section: int = 120
    input_split: float = 0.2     # share of papers keeping macros in an \input'ed file
    start: dt.date = dt.date(2001, 1, 1)


def role_corpus(config: RoleCorpusConfig | None = None, seed: int = 0, **overrides):
    """Corpus with planted division of labour.

    Every author first writes a solo paper.  In team papers, rank 1 works on
    technical sections and the last author on conceptual ones (each with
    probability ``role_fidelity``); middle authors pick a block at random.
    The number of macros an author brings declines with rank, except in
    ``econ`` papers where authors are alphabetical and contribute equally.
    """
    cfg = dataclasses.replace(config or RoleCorpusConfig(), **overrides)
    rng = np.random.default_rng(seed)
    n_auth = cfg.n_authors
    names = [f"auth{i:04d}" for i in range(n_auth)]
    pools = [
        [Macro("q" + letters(a, 3) + letters(j, 1), "\\operatorname{%s_{%d}}" % (letters(a, 3), j))
         for j in range(cfg.pool_size)]
        for a in range(n_auth)
    ]
    papers: list[PaperMeta] = []
    sources: dict[str, RawPaperSource] = {}
    day = 0

    def emit(pid, authors, discipline, defined, sections, preamble_usages=()):
        nonlocal day
        text = render_paper(pid, defined, sections, rng, cfg.words_per_section, list(preamble_usages))
        date = cfg.start + dt.timedelta(days=day)
        day += 1
        files = {"main.tex": text.encode("latin-1")}
        if defined and rng.random() < cfg.input_split:
            macro_block = "\n".join(m.definition() for m in defined)
            files["macros.tex"] = ("% shared macros\n" + macro_block + "\n").encode("latin-1")
            files["main.tex"] = text.replace(macro_block, "\\input{macros}").encode("latin-1")
        papers.append(PaperMeta(pid, date, tuple(authors), discipline, f"papers/{pid}"))
        sources[pid] = RawPaperSource(pid, "main.tex", files)

    n_solo = min(n_auth, cfg.n_papers)
    for a in range(n_solo):
        k = max(2, cfg.pool_size * 2 // 3)
        pick = sorted(rng.choice(cfg.pool_size, size=k, replace=False).tolist())
        defined = [pools[a][j] for j in pick]
        tech = list(TECHNICAL_SECTIONS)
        sections = [(HEADINGS[s][0], defined[i::3]) for i, s in enumerate(tech)]
        emit(f"p{len(papers):05d}", [names[a]], "cs", defined, sections)

    sizes = np.arange(2, cfg.max_team_size + 1)
    size_w = 1.0 / sizes
    size_w /= size_w.sum()
    for _ in range(cfg.n_papers - n_solo):
        t = int(rng.choice(sizes, p=size_w))
        team = rng.choice(n_auth, size=t, replace=False).tolist()
        econ = rng.random() < cfg.econ_fraction
        if econ:
            team.sort()
        blocks = []
        n_macros = []
        for r in range(1, t + 1):
            if r == 1:
                tech = rng.random() < cfg.role_fidelity
            elif r == t:
                tech = rng.random() >= cfg.role_fidelity
            else:
                tech = rng.random() < 0.5
            if econ:
                tech = rng.random() < 0.5
            blocks.append(TECHNICAL_SECTIONS if tech else CONCEPTUAL_SECTIONS)
            n_macros.append(4 if econ else max(2, 8 - 2 * (r - 1)))

        usage: dict[str, list[Macro]] = {s: [] for s in CONCEPTUAL_SECTIONS + TECHNICAL_SECTIONS}
        defined: list[Macro] = []
        for a, block, m in zip(team, blocks, n_macros):
            pick = rng.choice(cfg.pool_size, size=min(m, cfg.pool_size), replace=False)
            other = TECHNICAL_SECTIONS if block is CONCEPTUAL_SECTIONS else CONCEPTUAL_SECTIONS
            for j in sorted(pick.tolist()):
                mac = pools[a][j]
                defined.append(mac)
                for s in rng.choice(3, size=int(rng.integers(1, 3)), replace=False).tolist():
                    usage[block[s]].append(mac)
                if rng.random() < cfg.crossover:
                    usage[other[int(rng.integers(0, 3))]].append(mac)
        order = ["Introduction", "Preliminaries", "Methods", "Results", "Discussion", "Conclusion"]
        sections = []
        for s in order:
            variants = HEADINGS[s]
            heading = variants[int(rng.integers(0, len(variants)))]
            sections.append((heading, usage[s]))
        if rng.random() < 0.3:
            sections.append(("Acknowledgments", []))
        emit(f"p{len(papers):05d}", [names[a] for a in team], "econ" if econ else "cs",
             defined, sections)
    return CorpusManifest(papers), sources


# ---------------------------------------------------------------------------
# writing corpora to disk


def write_corpus(directory, manifest: CorpusManifest, sources, tar_fraction: float = 0.0,
                 seed: int = 0) -> Path:
    """Write bundles under ``directory/papers`` and a ``manifest.jsonl``.

    A ``tar_fraction`` of bundles is written as ``.tar.gz`` archives instead
    of directories.  Returns the manifest path.
    """
    directory = Path(directory)
    rng = np.random.default_rng(seed)
    lines = [json.dumps({"options": {"signature_mode": manifest.signature_mode,
                                     "taxonomy": manifest.taxonomy}}, sort_keys=True)]
    for meta in manifest:
        src = sources[meta.paper_id]
        rec = meta.to_record()
        if rng.random() < tar_fraction:
            path = directory / "papers" / f"{meta.paper_id}.tar.gz"
            path.parent.mkdir(parents=True, exist_ok=True)
            with tarfile.open(path, "w:gz") as tar:
                for name in sorted(src.files):
                    data = src.files[name]
                    info = tarfile.TarInfo(name)
                    info.size = len(data)
                    info.mtime = 0
                    tar.addfile(info, io.BytesIO(data))
            rec["source_path"] = f"papers/{meta.paper_id}.tar.gz"
        else:
            base = directory / "papers" / meta.paper_id
            base.mkdir(parents=True, exist_ok=True)
            for name, data in sorted(src.files.items()):
                (base / name).write_bytes(data)
            rec["source_path"] = f"papers/{meta.paper_id}"
        rec["root_file"] = src.root_file
        lines.append(json.dumps(rec, sort_keys=True))
    path = directory / "manifest.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
