"""Parse a small LaTeX bundle and show what the extractor sees.

The root file pulls its macros in from a separate file, hides one \\input in a
comment, and uses a macro inside verbatim.  Only the live definitions and the
usages outside verbatim survive.
"""

from macrotrace.latex import RawPaperSource, parse_paper

ROOT = r"""\documentclass{article}
\input{macros}
% \input{old-macros}
\begin{document}
$\R^n$ shows up before any section.
\section{Introduction}
Let $f : \R \to \R$ with $\norm{f} < \eps$.
\section{Methods}
\begin{verbatim}
\norm{not counted}
\end{verbatim}
We bound $\norm{g}$ by $\eps$.
\end{document}
"""

MACROS = r"""\newcommand{\R}{\mathbb{R}}
\newcommand{\norm}[1]{\left\lVert #1 \right\rVert}
\def\eps{\varepsilon}
"""

source = RawPaperSource("demo", "main.tex", {"main.tex": ROOT.encode(), "macros.tex": MACROS.encode()})
paper = parse_paper(source)

print("definitions")
for d in paper.definitions:
    print(f"  \\{d.name:<5} {d.kind:<12} {d.body}")

print("sections")
for s in paper.sections:
    print(f"  [{s.index}] {s.raw_heading}")

print("usages")
for u in paper.usages:
    where = "before first section" if u.section_index is None else paper.sections[u.section_index].raw_heading
    print(f"  \\{u.name:<5} at byte {u.byte_offset:>4}  ({where})")

if paper.warnings:
    print("warnings:", *paper.warnings, sep="\n  ")
