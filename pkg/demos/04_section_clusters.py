"""Find which paper sections tend to be written by the same person.

A synthetic corpus plants two roles: one author per paper writes the
technical sections, another the conceptual ones.  Section focus turns each
author's macro usages into per-section flags, the flags become a
co-contribution matrix, and Ward clustering splits the sections in two.
"""

import numpy as np

from macrotrace.analytics import cocontribution, ward_cluster
from macrotrace.attribution import contribution_flags, section_focus
from macrotrace.corpus import build_histories
from macrotrace.latex import parse_paper
from macrotrace.synth import role_corpus
from macrotrace.taxonomy import default_rules

manifest, sources = role_corpus(seed=3)
papers = {pid: parse_paper(s) for pid, s in sources.items()}
db = build_histories(manifest, papers)
six = default_rules("six")

flags = []
for m in manifest:
    if m.team_size >= 2:
        flags += contribution_flags(section_focus(papers[m.paper_id], m, db, six))

mat = cocontribution(flags)
labels = mat.labels
print("P(column | row), row = section an author contributed to")
print(" " * 14 + "".join(f"{l[:6]:>8}" for l in labels))
for i, row in enumerate(labels):
    print(f"{row:<14}" + "".join(f"{v:8.2f}" for v in mat.P[i]) + f"   n={mat.support[i]}")

tree = ward_cluster(mat, 2)
print("\nmerge heights:", np.round(tree.heights, 3))
for g in tree.groups:
    print("cluster:", ", ".join(g))
