import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sentipipe import metrics as m
from sentipipe.metrics import ConfusionMatrix, MetricsError, UndefinedMetricWarning

# counts as printed with the source evaluation (rows truth, columns prediction)
PUBLISHED_CM = [[708, 12, 23], [48, 629, 35], [56, 17, 424]]

counts3 = arrays(np.int64, (3, 3), elements=st.integers(0, 500)).filter(lambda a: a.sum() > 0)


@st.composite
def square_counts(draw):
    k = draw(st.integers(2, 6))
    return draw(arrays(np.int64, (k, k), elements=st.integers(0, 300)).filter(lambda a: a.sum() > 0))


def quiet(fn, *a):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        return fn(*a)


# --- confusion matrix -----------------------------------------------------


def test_perfect_predictions_diagonal():
    cm = m.confusion_from_predictions([0, 1, 2, 2], [0, 1, 2, 2])
    assert cm.to_list() == [[1, 0, 0], [0, 1, 0], [0, 0, 2]]


def test_single_pair():
    assert m.confusion_from_predictions([0], [1]).to_list() == [[0, 1, 0], [0, 0, 0], [0, 0, 0]]


def test_tally_matches_brute_force():
    rng = np.random.default_rng(0)
    t, p = rng.integers(0, 3, 500), rng.integers(0, 3, 500)
    ref = [[sum(1 for a, b in zip(t, p) if a == i and b == j) for j in range(3)] for i in range(3)]
    assert m.confusion_from_predictions(t, p).to_list() == ref


def test_confusion_errors():
    with pytest.raises(MetricsError, match="2 truths but 1"):
        m.confusion_from_predictions([0, 1], [0])
    with pytest.raises(MetricsError, match="outside"):
        m.confusion_from_predictions([0, 3], [0, 1])
    with pytest.raises(MetricsError):
        ConfusionMatrix(np.array([[1, -1], [0, 0]]))
    with pytest.raises(MetricsError):
        m.accuracy(np.zeros((3, 3), int))


def test_tp_fp_fn_tn():
    cm = ConfusionMatrix(np.array(PUBLISHED_CM))
    assert cm.tp().tolist() == [708, 629, 424]
    assert cm.fp().tolist() == [104, 29, 58]
    assert cm.fn().tolist() == [35, 83, 73]
    assert (cm.tp() + cm.fp() + cm.fn() + cm.tn() == 1952).all()


# --- scalar metrics -------------------------------------------------------


def test_published_matrix_accuracy_and_error():
    assert m.accuracy(PUBLISHED_CM) == pytest.approx(1761 / 1952, abs=1e-12)
    assert m.accuracy(PUBLISHED_CM) == pytest.approx(0.9022, abs=1e-4)
    assert m.error_rate(PUBLISHED_CM) == pytest.approx(0.0978, abs=1e-4)


def test_published_matrix_negative_class():
    neg = m.class_metrics(PUBLISHED_CM)[0]
    assert neg.label == "negative" and neg.support == 743
    assert neg.recall == pytest.approx(708 / 743, abs=1e-12)
    assert neg.precision == pytest.approx(708 / 812, abs=1e-12)
    assert neg.specificity == pytest.approx((1952 - 708 - 104 - 35) / (1952 - 743), abs=1e-12)


def test_published_matrix_macro_is_mean_of_class_f1():
    per = m.class_metrics(PUBLISHED_CM)
    micro, macro, weighted = m.micro_macro_f1(PUBLISHED_CM)
    f1 = [2 * p.precision * p.recall / (p.precision + p.recall) for p in per]
    assert macro == pytest.approx(sum(f1) / 3, abs=1e-12)
    assert weighted == pytest.approx((743 * f1[0] + 712 * f1[1] + 497 * f1[2]) / 1952, abs=1e-12)
    assert micro == pytest.approx(m.accuracy(PUBLISHED_CM), abs=1e-12)


@pytest.mark.parametrize("cm, acc", [(np.eye(3, dtype=int) * 4, 1.0), ([[0, 2, 1], [3, 0, 1], [1, 1, 0]], 0.0)])
def test_accuracy_extremes(cm, acc):
    assert m.accuracy(cm) == acc
    assert m.error_rate(cm) == 1 - acc


def test_all_wrong_2x2():
    assert m.error_rate([[0, 4], [2, 0]]) == 1.0


def test_diagonal_everything_one():
    cm = np.diag([5, 3, 9])
    for c in m.class_metrics(cm):
        assert (c.precision, c.recall, c.f1, c.specificity) == (1.0, 1.0, 1.0, 1.0)
    assert m.micro_macro_f1(cm) == (1.0, 1.0, 1.0)


def test_absent_class_convention():
    cm = [[3, 1, 0], [2, 4, 0], [0, 0, 0]]
    with pytest.warns(UndefinedMetricWarning):
        per = m.class_metrics(cm)
    assert (per[2].precision, per[2].recall, per[2].f1, per[2].specificity) == (0.0, 0.0, 0.0, 1.0)


# --- properties -----------------------------------------------------------


@given(square_counts())
def test_identities_and_ranges(c):
    acc = m.accuracy(c)
    micro, macro, weighted = quiet(m.micro_macro_f1, c)
    assert abs(micro - acc) <= 1e-12
    assert abs(m.error_rate(c) - (1 - acc)) <= 1e-12
    for cls in quiet(m.class_metrics, c):
        for v in (cls.precision, cls.recall, cls.f1, cls.specificity):
            assert 0 <= v <= 1
    assert 0 <= macro <= 1 and 0 <= weighted <= 1


@given(counts3, st.integers(2, 9))
def test_scale_invariance(c, k):
    a, b = quiet(m.evaluate, c), quiet(m.evaluate, c * k)
    assert a.accuracy == pytest.approx(b.accuracy, abs=1e-12)
    for x, y in zip(a.classes, b.classes):
        assert (x.precision, x.recall, x.f1, x.specificity) == pytest.approx((y.precision, y.recall, y.f1, y.specificity),
                                                                           abs=1e-12)


@given(counts3, st.permutations([0, 1, 2]))
def test_class_permutation(c, perm):
    perm = list(perm)
    pc = c[np.ix_(perm, perm)]
    a, b = quiet(m.evaluate, c), quiet(m.evaluate, pc)
    for i, j in enumerate(perm):
        assert b.classes[i].f1 == pytest.approx(a.classes[j].f1, abs=1e-12)
        assert b.classes[i].specificity == pytest.approx(a.classes[j].specificity, abs=1e-12)
    assert (b.accuracy, b.micro_f1) == pytest.approx((a.accuracy, a.micro_f1), abs=1e-12)
    assert b.macro_f1 == pytest.approx(a.macro_f1, abs=1e-12)


# --- ROC ------------------------------------------------------------------


def test_roc_perfect_and_constant():
    assert m.roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]).auc == 1.0
    r = m.roc_curve([1, 0, 1, 0], [0.5] * 4)
    assert r.auc == 0.5
    assert r.points() == [(0.0, 0.0), (1.0, 1.0)]


def test_roc_shape():
    r = m.roc_curve([1, 0, 1, 1, 0], [0.9, 0.9, 0.7, 0.3, 0.1])
    assert r.points()[0] == (0.0, 0.0) and r.points()[-1] == (1.0, 1.0)
    assert np.all(np.diff(r.fpr) >= 0) and np.all(np.diff(r.tpr) >= 0)
    assert r.thresholds[1:].tolist() == [0.9, 0.7, 0.3, 0.1]


def test_roc_needs_both_classes():
    with pytest.raises(MetricsError):
        m.roc_curve([1, 1], [0.2, 0.3])


@given(st.lists(st.tuples(st.booleans(), st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.9, 1.0])), min_size=2, max_size=60)
       .filter(lambda xs: 0 < sum(f for f, _ in xs) < len(xs)))
def test_roc_matches_pairwise(pairs):
    flags, scores = zip(*pairs)
    auc = m.roc_curve(flags, scores).auc
    assert abs(auc - m.auc_pairwise(flags, scores)) <= 1e-12
    assert abs(m.roc_curve(flags, np.exp(3 * np.array(scores))).auc - auc) <= 1e-12


def test_one_vs_rest_absent_class():
    aucs = m.one_vs_rest_auc([0, 0, 1, 1], np.array([[0.8, 0.1, 0.1], [0.6, 0.3, 0.1], [0.2, 0.7, 0.1],
                                                     [0.3, 0.6, 0.1]]))
    assert aucs == [1.0, 1.0, None]


# --- report ---------------------------------------------------------------

PUBLISHED_TEXT = """\
             precision    recall  f1-score   specif.     auc  support

negative          0.87      0.95      0.91      0.91       -      743
neutral           0.96      0.88      0.92      0.98       -      712
positive          0.88      0.85      0.87      0.96       -      497

accuracy                              0.90                       1952
micro avg                             0.90                       1952
macro avg                             0.90                       1952
weighted avg                          0.90                       1952
error rate                            0.10
"""


def test_render_report_snapshot():
    text, js = m.render_report(m.evaluate(PUBLISHED_CM))
    assert text == PUBLISHED_TEXT
    d = json.loads(js)
    assert set(d) == {"classes", "accuracy", "micro_f1", "macro_f1", "weighted_f1", "error_rate", "total",
                      "confusion_matrix"}
    assert d["accuracy"] == 1761 / 1952
    assert set(d["classes"][0]) == {"label", "precision", "recall", "f1", "specificity", "support", "auc"}


def test_render_report_deterministic_and_diagonal():
    rep = m.evaluate_predictions([0, 1, 2, 0], [0, 1, 2, 0], np.eye(3)[[0, 1, 2, 0]])
    a, b = m.render_report(rep), m.render_report(rep)
    assert a == b
    for line in a[0].splitlines()[2:5]:
        assert line.split()[1:6] == ["1.00"] * 5
