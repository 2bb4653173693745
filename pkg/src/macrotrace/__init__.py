"""Infer who wrote what in coauthored LaTeX papers from authors' macro habits."""

__version__ = "0.1.0"

from .latex import (  # noqa: E402
    MacroDefinition,
    MacroUsage,
    ParsedPaper,
    RawPaperSource,
    SectionSpan,
    extract_macro_definitions,
    extract_sections,
    load_source,
    parse_paper,
    resolve_inputs,
    scan_macro_usages,
    strip_comments,
)
from .corpus import (  # noqa: E402
    CorpusManifest,
    HistoryDB,
    PaperMeta,
    build_histories,
    history_as_of,
    load_db,
    load_manifest,
    save_db,
    signature_of,
)
from .attribution import (  # noqa: E402
    AttributionResult,
    SectionFocus,
    attribute_paper,
    contribution_flags,
    section_focus,
)
from .taxonomy import TaxonomyConfig, canonicalize, default_rules  # noqa: E402
