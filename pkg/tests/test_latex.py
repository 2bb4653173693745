import gzip
import io
import tarfile

import pytest
from hypothesis import given, settings, strategies as st

from macrotrace.latex import (
    IngestError,
    ParsedPaper,
    RawPaperSource,
    extract_macro_definitions,
    extract_sections,
    load_source,
    parse_paper,
    resolve_inputs,
    scan_macro_usages,
    strip_comments,
    verbatim_regions,
)

from helpers import expected, extracted, fixture_source, parser_cases


def src(root_text, **others):
    files = {"main.tex": root_text.encode("latin-1")}
    files.update({k.replace("__", "/") + ".tex": v.encode("latin-1") for k, v in others.items()})
    return RawPaperSource("p", "main.tex", files)


# -- strip_comments ---------------------------------------------------------

def test_strip_comment_to_end_of_line():
    assert strip_comments("a % c\nb") == "a \nb"


def test_escaped_percent_kept():
    assert strip_comments("100\\% sure") == "100\\% sure"


def test_verbatim_left_untouched():
    t = "\\begin{verbatim}x % y\\end{verbatim}"
    assert strip_comments(t) == t


def test_verb_protects_percent():
    t = "\\verb|50%| done % gone"
    assert strip_comments(t) == "\\verb|50%| done "


def test_double_backslash_then_comment():
    assert strip_comments("a\\\\% c\nb") == "a\\\\\nb"


def test_unterminated_verbatim_warns_and_protects():
    w = []
    t = "x\n\\begin{verbatim}\n% kept"
    assert strip_comments(t, w) == t
    assert len(w) == 1


def test_verbatim_regions_cover_body():
    t = "a\\begin{lstlisting}q\\end{lstlisting}b"
    (s, e), = verbatim_regions(t)
    assert t[s:e] == "\\begin{lstlisting}q\\end{lstlisting}"


# -- resolve_inputs ---------------------------------------------------------

def test_input_single_substitution():
    s = RawPaperSource("p", "main.tex", {"main.tex": b"a \\input{b} c", "b.tex": b"B"})
    assert resolve_inputs(s) == "a B c"


def test_input_self_cycle():
    w = []
    s = RawPaperSource("p", "main.tex", {"main.tex": b"\\input{a}", "a.tex": b"\\input{a}"})
    assert resolve_inputs(s, w) == ""
    assert any("cycle" in m for m in w)


def test_input_missing():
    w = []
    assert resolve_inputs(src("\\input{missing} x"), w) == " x"
    assert len(w) == 1


def test_include_and_exact_name():
    s = RawPaperSource("p", "main.tex", {"main.tex": b"\\include{ch} \\input{x.sty}", "ch.tex": b"C", "x.sty": b"S"})
    assert resolve_inputs(s) == "C S"


def test_input_cannot_escape_bundle():
    w = []
    s = RawPaperSource("p", "main.tex", {"main.tex": b"\\input{../../etc/passwd}"})
    assert resolve_inputs(s, w) == ""
    assert w


def test_input_inside_verbatim_not_expanded():
    t = "\\begin{verbatim}\\input{b}\\end{verbatim}"
    s = RawPaperSource("p", "main.tex", {"main.tex": t.encode(), "b.tex": b"B"})
    assert resolve_inputs(s) == t


def test_missing_root_is_hard_error():
    with pytest.raises(IngestError, match="p7"):
        RawPaperSource("p7", "main.tex", {"other.tex": b""})


# -- definitions ------------------------------------------------------------

def test_ssm_definition():
    (d,) = extract_macro_definitions("\\newcommand{\\ssm}{\\scriptscriptstyle\\rm}")
    assert (d.name, d.body, d.kind) == ("ssm", "\\scriptscriptstyle\\rm", "newcommand")


def test_no_definitions():
    assert extract_macro_definitions("") == []


def test_def_and_newcommand_with_args():
    x, y = extract_macro_definitions("\\def\\x{1} \\newcommand{\\y}[1]{#1}")
    assert (x.name, x.kind, x.body) == ("x", "def-family", "1")
    assert (y.name, y.kind, y.body) == ("y", "newcommand", "#1")


def test_unbalanced_definition_skipped_with_warning():
    w = []
    assert extract_macro_definitions("\\newcommand{\\z}{oops", w) == []
    assert w


def test_extension_point_for_new_commands():
    text = "\\NewDocumentCommand{\\foo}{m}"
    assert extract_macro_definitions(text) == []
    defs = extract_macro_definitions("\\newcommand{\\foo}{f}", commands={"newcommand": "newcommand"})
    assert [d.name for d in defs] == ["foo"]


# -- sections ---------------------------------------------------------------

def test_two_section_split():
    t = "pre \\section{Intro} A \\section{Methods} B"
    a, b = extract_sections(t)
    assert (a.raw_heading, t[a.start_offset:a.end_offset]) == ("Intro", " A ")
    assert (b.raw_heading, t[b.start_offset:b.end_offset]) == ("Methods", " B")


def test_no_sections():
    assert extract_sections("no sections here") == []


def test_starred_section():
    (s,) = extract_sections("\\section*{Results and Findings} X")
    assert s.raw_heading == "Results and Findings"


def test_unbalanced_heading_reads_to_end_of_line():
    w = []
    (s,) = extract_sections("\\section{Oops {x\nbody", w)
    assert s.raw_heading == "Oops x"
    assert w


# -- usages -----------------------------------------------------------------

def test_usage_in_section_zero():
    t = "\\newcommand{\\ssm}{s}\n\\section{A}\n$\\ssm x$"
    defs = extract_macro_definitions(t)
    (u,) = scan_macro_usages(t, defs, extract_sections(t))
    assert (u.name, u.section_index) == ("ssm", 0)


def test_longer_control_word_is_not_a_usage():
    t = "\\newcommand{\\ssm}{s}\\ssmx"
    assert scan_macro_usages(t, extract_macro_definitions(t)) == []


def test_usage_before_first_section():
    t = "\\newcommand{\\k}{s}\\k\\section{A}"
    (u,) = scan_macro_usages(t, extract_macro_definitions(t), extract_sections(t))
    assert u.section_index is None


# -- parse_paper ------------------------------------------------------------

def test_minimal_paper_counts():
    t = r"""\documentclass{article}
\newcommand{\R}{\mathbb{R}}
\def\eps{\varepsilon}
\DeclareMathOperator{\tr}{tr}
\begin{document}
$\R$ in the abstract.
\section{Introduction}
Let $x \in \R$ and $\eps > 0$.
\section{Methods}
$\tr A + \eps$ % \tr
\end{document}
"""
    pp = parse_paper(src(t))
    assert (len(pp.definitions), len(pp.sections), len(pp.usages)) == (3, 2, 5)


def test_empty_root():
    pp = parse_paper(src(""))
    assert (pp.definitions, pp.sections, pp.usages) == ([], [], [])


def test_two_author_target_defines_48_or_more():
    from macrotrace.synth import JOINT_PAPER, two_author_corpus

    _, sources = two_author_corpus()
    pp = parse_paper(sources[JOINT_PAPER])
    assert len(pp.definitions) >= 48


def test_record_round_trip():
    pp = parse_paper(fixture_source(parser_cases()[0]))
    assert ParsedPaper.from_json(pp.to_json()) == pp


@pytest.mark.parametrize("case", parser_cases(), ids=lambda d: d.name)
def test_parser_fixture(case):
    assert extracted(parse_paper(fixture_source(case))) == expected(case)


# -- loading bundles --------------------------------------------------------

DOC = b"\\documentclass{article}\n\\input{m}\n\\section{A}\\x\n"
MAC = b"\\newcommand{\\x}{X}\n"


def _check(rs):
    pp = parse_paper(rs)
    assert [d.name for d in pp.definitions] == ["x"]
    assert [(u.name, u.section_index) for u in pp.usages] == [("x", 0)]


def test_load_directory(tmp_path):
    (tmp_path / "main.tex").write_bytes(DOC)
    (tmp_path / "m.tex").write_bytes(MAC)
    _check(load_source("p", tmp_path))


@pytest.mark.parametrize("mode,suffix", [("w", ".tar"), ("w:gz", ".tar.gz")])
def test_load_tar(tmp_path, mode, suffix):
    path = tmp_path / ("b" + suffix)
    with tarfile.open(path, mode) as tf:
        for name, data in (("paper.tex", DOC), ("m.tex", MAC)):
            info = tarfile.TarInfo(name)
            info.size = len(data)
            tf.addfile(info, io.BytesIO(data))
    rs = load_source("p", path)
    assert rs.root_file == "paper.tex"
    _check(rs)


def test_load_gzipped_single_file(tmp_path):
    path = tmp_path / "p.gz"
    path.write_bytes(gzip.compress(b"\\newcommand{\\x}{X}\\section{A}\\x"))
    _check(load_source("p", path))


def test_corrupt_tar_raises(tmp_path):
    path = tmp_path / "bad.tar.gz"
    path.write_bytes(b"\x1f\x8b\x08garbage")
    with pytest.raises(IngestError):
        load_source("bad", path)


def test_explicit_root(tmp_path):
    (tmp_path / "a.tex").write_bytes(b"\\documentclass{x}")
    (tmp_path / "b.tex").write_bytes(b"\\documentclass{x}\\def\\q{}")
    rs = load_source("p", tmp_path, root_file="b.tex")
    assert [d.name for d in parse_paper(rs).definitions] == ["q"]


# -- properties ---------------------------------------------------------------

FRAGMENTS = [
    "a", " ", "\n", "%", "\\%", "\\\\", "{", "}", "\\x", "\\verb|", "|", "\\verb*+", "+",
    "\\begin{verbatim}", "\\end{verbatim}", "\\begin{lstlisting}", "\\end{lstlisting}",
    "\\section{", "\\section*{S}", "\\newcommand{\\m}{", "\\def\\n{", "\\m", "\\n",
    "\\input{f}", "\\end{document}", "é",
]
latexish = st.lists(st.sampled_from(FRAGMENTS), max_size=40).map("".join)


@given(latexish)
@settings(max_examples=400, deadline=None)
def test_strip_comments_idempotent(t):
    once = strip_comments(t)
    assert strip_comments(once) == once


@given(latexish)
@settings(max_examples=200, deadline=None)
def test_parse_is_deterministic(t):
    data = t.encode("latin-1")
    a = parse_paper(RawPaperSource("p", "main.tex", {"main.tex": data, "f.tex": b"\\m"}))
    b = parse_paper(RawPaperSource("p", "main.tex", {"main.tex": bytes(data), "f.tex": b"\\m"}))
    assert a == b


@given(latexish)
@settings(max_examples=300, deadline=None)
def test_sections_partition_and_usage_names(t):
    pp = parse_paper(src(t))
    prev_end = -1
    for i, s in enumerate(pp.sections):
        assert s.index == i
        assert prev_end <= s.heading_offset < s.start_offset <= s.end_offset
        prev_end = s.end_offset
    names = {d.name for d in pp.definitions}
    assert all(u.name in names for u in pp.usages)
    for u in pp.usages:
        if u.section_index is not None:
            s = pp.sections[u.section_index]
            assert s.heading_offset <= u.byte_offset < s.end_offset


@given(st.lists(st.sampled_from(["\\mac", " x ", "\n", "{}", "$", "\\section{S}", "1", "\\macro"]), max_size=25),
       st.data())
@settings(max_examples=300, deadline=None)
def test_appending_a_letter_removes_the_usage(parts, data):
    head = "\\newcommand{\\mac}{body}\n"
    text = head + "".join(parts)
    before = parse_paper(src(text)).usages
    occurrences = [u for u in before if u.name == "mac"]
    if not occurrences:
        return
    victim = data.draw(st.sampled_from(occurrences))
    end = victim.byte_offset + len("\\mac")
    changed = text[:end] + "z" + text[end:]
    after = parse_paper(src(changed)).usages
    assert len([u for u in after if u.name == "mac"]) == len(occurrences) - 1
