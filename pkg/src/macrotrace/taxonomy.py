"""Map raw ``\\section`` headings onto canonical section categories.

Two taxonomies are supported: an eight-way one for per-section author-order
models and a six-way one for the co-contribution network.  A taxonomy is an
ordered list of ``(pattern, label)`` rules; patterns are regular expressions
searched case-insensitively in the whitespace-normalized heading and the
first match wins.

The shipped rules are a documented choice, not a published table.  The
``Conception`` category of the eight-way taxonomy has no default patterns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

EIGHT = "eight"
SIX = "six"

LABELS = {
    EIGHT: (
        "Introduction",
        "Discussion",
        "Conception",
        "Acknowledgments",
        "Methods",
        "Results",
        "Experiments",
        "Preliminaries",
    ),
    SIX: ("Introduction", "Discussion", "Conclusion", "Preliminaries", "Methods", "Results"),
}

#: Conceptual and technical groups, in the order used for reporting.
CONCEPTUAL = ("Introduction", "Discussion", "Conclusion", "Conception", "Acknowledgments")
TECHNICAL = ("Preliminaries", "Methods", "Results", "Experiments")


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True)
class TaxonomyConfig:
    name: str
    rules: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if self.name not in LABELS:
            raise TaxonomyError(f"unknown taxonomy {self.name!r}")
        allowed = set(LABELS[self.name])
        for pattern, label in self.rules:
            if label not in allowed:
                raise TaxonomyError(f"label {label!r} is not in the {self.name} taxonomy")
            try:
                re.compile(pattern)
            except re.error as exc:
                raise TaxonomyError(f"bad pattern {pattern!r}: {exc}") from exc
        object.__setattr__(
            self,
            "_compiled",
            tuple((re.compile(p, re.IGNORECASE), label) for p, label in self.rules),
        )

    @property
    def labels(self) -> tuple[str, ...]:
        return LABELS[self.name]

    def canonicalize(self, raw_heading: str) -> str | None:
        return canonicalize(raw_heading, self)

    def dumps(self) -> str:
        lines = [f"# taxonomy: {self.name}"]
        lines += [f"{label}\t{pattern}" for pattern, label in self.rules]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TaxonomyConfig":
        """Parse the line format written by :meth:`dumps`.

        Each rule line is ``LABEL<TAB>PATTERN``; ``#`` lines are comments
        except the ``# taxonomy: NAME`` header, which is required.
        """
        name = None
        rules = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*taxonomy\s*:\s*(\S+)", line)
                if m:
                    name = m.group(1)
                continue
            if "\t" not in line:
                raise TaxonomyError(f"line {lineno}: expected LABEL<TAB>PATTERN")
            label, pattern = line.split("\t", 1)
            rules.append((pattern, label.strip()))
        if name is None:
            raise TaxonomyError("missing '# taxonomy: NAME' header")
        return cls(name, tuple(rules))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TaxonomyConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def canonicalize(raw_heading: str, config: TaxonomyConfig) -> str | None:
    heading = " ".join(raw_heading.split())
    for rx, label in config._compiled:
        if rx.search(heading):
            return label
    return None


def default_rules(taxonomy_name: str, conclusion_as_discussion: bool = False) -> TaxonomyConfig:
    """Shipped rule table for ``"eight"`` or ``"six"``.

    Rule order matters: ``method`` is tried before ``result`` and ``result``
    before ``experiment``, so "Experimental Results" is a Results heading.
    Under the eight-way taxonomy conclusions are unmapped unless
    ``conclusion_as_discussion`` is set.
    """
    if taxonomy_name not in LABELS:
        raise TaxonomyError(f"unknown taxonomy {taxonomy_name!r}")
    eight = taxonomy_name == EIGHT
    rules = [(r"\bintroduc", "Introduction"), (r"\bdiscussion", "Discussion")]
    if not eight:
        rules.append((r"\bconclu(sion|ding)", "Conclusion"))
    elif conclusion_as_discussion:
        rules.append((r"\bconclu(sion|ding)", "Discussion"))
    if eight:
        rules.append((r"\backnowledg", "Acknowledgments"))
    rules += [
        (r"\b(method|approach|model|algorithm)", "Methods"),
        (r"\b(result|finding)", "Results"),
        (r"\b(experiment|evaluation)", "Experiments" if eight else "Results"),
        (r"\b(preliminar|background|related work|notation)", "Preliminaries"),
    ]
    return TaxonomyConfig(taxonomy_name, tuple(rules))


def resolve(name_or_path) -> TaxonomyConfig:
    """A default taxonomy by name, or a config file by path."""
    if str(name_or_path) in LABELS:
        return default_rules(str(name_or_path))
    path = Path(name_or_path)
    if not path.exists():
        raise TaxonomyError(f"no taxonomy named or stored at {name_or_path!r}")
    return TaxonomyConfig.load(path)
