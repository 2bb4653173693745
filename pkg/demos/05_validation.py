"""Score predicted writers against self-reports and edit counts.

Predicted writing teams are compared with what authors said about their own
papers, and macro shares are correlated with edit counts from a shared
editor.  All numbers here are made up for illustration.
"""

from macrotrace.analytics import pearson, precision_recall

predicted = {"p1": {"A", "B"}, "p2": {"A", "B"}, "p3": {"A", "B"}}
reported = {"p1": {"A", "B"}, "p2": {"B", "C"}, "p3": {"A"}}
m = precision_recall(predicted, reported)
for pid, (p, r) in sorted(m.per_paper.items()):
    print(f"{pid}: precision {p:.2f}  recall {r:.2f}")
print(f"mean precision {m.precision:.3f}, mean recall {m.recall:.3f} over {m.n_papers} papers\n")

edits = [412, 35, 220, 97, 15, 310, 64, 128, 51, 188, 9, 256, 73, 140]
shares = [0.75, 0.125, 0.5, 0.25, 0, 0.625, 0.375, 0.125, 0.25, 0.5, 0.0625, 0.4375, 0.5, 0.1875]
res = pearson(edits, shares)
print(f"edit count vs macro share: r = {res.r:.3f}, p = {res.p:.2g}, n = {res.n}")
