from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, strategies as st

from macrotrace.analytics import pearson, precision_recall

from test_regression import t_tail_oracle

THREE = (
    {"p1": {"A", "B"}, "p2": {"A", "B"}, "p3": {"A", "B"}},
    {"p1": {"A", "B"}, "p2": {"B", "C"}, "p3": {"A"}},
)

# edit counts and attributed shares for 14 author-paper records
EDITS = [412, 35, 220, 97, 15, 310, 64, 128, 51, 188, 9, 256, 73, 140]
SHARES = ["0.75", "0.125", "0.5", "0.25", "0", "0.625", "0.375", "0.125",
          "0.25", "0.5", "0.0625", "0.4375", "0.5", "0.1875"]


def pearson_closed_form(x, y):
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    r2 = sxy * sxy / (sxx * syy)
    with mpmath.workdps(50):
        r = mpmath.sqrt(mpmath.mpf(r2.numerator) / r2.denominator)
        r = r if sxy >= 0 else -r
        t = r * mpmath.sqrt((n - 2) / (1 - r * r))
        return float(r), t, n - 2


def test_identical_sets():
    m = precision_recall({"p": {"A", "B"}}, {"p": {"A", "B"}})
    assert (m.precision, m.recall) == (1.0, 1.0)


def test_half_overlap():
    m = precision_recall({"p": {"A", "B"}}, {"p": {"B", "C"}})
    assert (m.precision, m.recall) == (0.5, 0.5)


def test_three_paper_average():
    m = precision_recall(*THREE)
    assert m.per_paper == {"p1": (1.0, 1.0), "p2": (0.5, 0.5), "p3": (0.5, 1.0)}
    assert abs(m.precision - 2 / 3) < 1e-12
    assert abs(m.recall - 5 / 6) < 1e-12
    assert m.n_papers == 3


def test_exclusions_and_mismatches():
    pred = {"a": {"X"}, "b": set(), "c": {"X"}, "only_pred": {"Y"}}
    truth = {"a": {"X"}, "b": {"X"}, "c": set(), "only_truth": {"Z"}}
    m = precision_recall(pred, truth)
    assert m.mismatched == ["only_pred", "only_truth"]
    assert m.n_empty_truth == 1 and m.n_undefined_precision == 1
    assert m.precision == 1.0 and m.recall == 0.5 and m.n_papers == 2


sets = st.sets(st.sampled_from("ABCDE"), max_size=5)


@given(st.dictionaries(st.sampled_from(["p1", "p2", "p3", "p4"]), st.tuples(sets, sets), min_size=1))
def test_metric_bounds(data):
    m = precision_recall({k: v[0] for k, v in data.items()}, {k: v[1] for k, v in data.items()})
    for v in (m.precision, m.recall):
        assert v != v or 0 <= v <= 1
    both_one = m.precision == 1 and m.recall == 1
    exact = all(a == b and b for a, b in data.values())
    if exact:
        assert both_one
    if both_one and m.n_empty_truth == 0 and m.n_undefined_precision == 0:
        assert exact


def test_pearson_identity_and_negative():
    x = [1.0, 2.0, 4.0, 7.0]
    assert pearson(x, x).r == pytest.approx(1.0, abs=1e-15)
    assert pearson(x, [-2 * v + 7 for v in x]).r == pytest.approx(-1.0, abs=1e-15)


def test_fourteen_point_fixture():
    res = pearson(EDITS, [float(s) for s in SHARES])
    r, t, df = pearson_closed_form(EDITS, SHARES)
    assert res.n == 14
    assert abs(res.r - r) < 1e-12
    assert abs(res.p - t_tail_oracle(t, df)) < 1e-6


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [5, 5, 5])
    with pytest.raises(ValueError):
        pearson([1, 2], [3, 4])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])


floats = st.integers(-8000, 8000).map(lambda v: v / 8)


@given(st.lists(st.tuples(floats, floats), min_size=3, max_size=30),
       st.floats(0.01, 100), st.floats(-100, 100))
def test_pearson_affine(points, scale, shift):
    x = [p[0] for p in points]
    y = [p[1] for p in points]
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    base = pearson(x, y)
    assume(abs(base.r) < 0.999999)
    moved = pearson([scale * v + shift for v in x], y)
    flipped = pearson(x, [-scale * v + shift for v in y])
    assert moved.r == pytest.approx(base.r, abs=1e-7)
    assert flipped.r == pytest.approx(-base.r, abs=1e-7)
    assert 0 <= base.p <= 1
