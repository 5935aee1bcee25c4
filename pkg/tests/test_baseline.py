import json

import numpy as np
import pytest

from sentipipe import baseline as bl
from sentipipe import numerics as nx
from sentipipe import shapley as sh
from sentipipe.corpus import CleanComment, DatasetSplit, Label, LabeledComment
from sentipipe.numerics import check_gradients
from sentipipe.xlnet import Vocab, build_vocab
from sentipipe.xlnet.vocab import RESERVED


def item(i, text, label):
    return LabeledComment(CleanComment.from_text(f"b{i}", text), Label(label), 0.0)


def two_word_corpus():
    return [item(i, ["bad", "good"][i % 2], 2 * (i % 2)) for i in range(20)]


def test_separable_corpus():
    train = two_word_corpus()
    model = bl.train_logistic(DatasetSplit(train, [], [], 0, (0.8, 0.1, 0.1)))
    assert all(p.predicted == int(c.label) for p, c in zip(bl.predict_batch(model, train), train))
    assert model.history[-1] < model.history[0]


def test_heavy_l2_gives_uniform():
    train = [item(i, ["bad", "meh", "good"][i % 3], i % 3) for i in range(30)]
    model = bl.train_logistic(train, l2=1e4, lr=1e-4, epochs=2000)
    assert np.abs(model.weights).max() < 1e-3
    np.testing.assert_allclose(bl.predict(model, ["good"]).probabilities, [1 / 3] * 3, atol=1e-3)


def test_empty_split():
    with pytest.raises(ValueError):
        bl.train_logistic([])


def test_deterministic():
    a = bl.train_logistic(two_word_corpus(), epochs=50, seed=1)
    b = bl.train_logistic(two_word_corpus(), epochs=50, seed=1)
    assert a.weights.tobytes() == b.weights.tobytes()


def _model(W, b=(0.0, 0.0, 0.0)):
    vocab = Vocab(RESERVED + ("flu", "save"))
    full = np.zeros((3, 6))
    full[:, 4:] = W
    return bl.LinearModel(vocab, full, np.array(b, float))


def test_zero_model_uniform():
    p = bl.predict(_model(np.zeros((3, 2))), ["flu", "save"])
    np.testing.assert_array_equal(p.probabilities, [1 / 3] * 3)


def test_single_token_analytic():
    model = _model(np.array([[2.0, 0.0], [0.0, 0.0], [-1.0, 1.0]]), b=(0.5, 0.0, 0.0))
    z = np.array([2.5, 0.0, -1.0])
    want = np.exp(z) / np.exp(z).sum()
    np.testing.assert_allclose(bl.predict(model, ["flu"]).probabilities, want, atol=1e-15)
    assert bl.predict(model, ["flu"]).predicted == 0


def test_batch_equals_single():
    model = _model(np.random.default_rng(0).normal(size=(3, 2)))
    items = [["flu"], ["save", "save"], ["flu", "unknown"], []]
    batch = bl.predict_batch(model, items)
    assert [p.logits.tolist() for p in batch] == [bl.predict(model, t).logits.tolist() for t in items]


def test_reserved_ids_are_not_features():
    vocab = build_vocab(["flu"])
    X = bl.featurize(["flu flu <cls> zzz"], vocab)
    assert X[0].tolist() == [0, 0, 0, 0, 2]


def test_logistic_loss_gradients():
    rng = np.random.default_rng(1)
    X = rng.poisson(1.0, size=(8, 6)).astype(float)
    y = rng.integers(0, 3, 8)
    W = nx.Parameter("W", rng.normal(size=(3, 6)))
    b = nx.Parameter("b", rng.normal(size=3))
    rep = check_gradients(lambda: bl.logistic_loss(X, y, W, b, 0.1), [W, b])
    assert rep.passed, rep.max_rel_err


def test_save_load(tmp_path):
    model = _model(np.random.default_rng(2).normal(size=(3, 2)), b=(0.1, 0.2, 0.3))
    model.save(tmp_path / "b.ckpt")
    back = bl.LinearModel.load(tmp_path / "b.ckpt")
    assert back.vocab == model.vocab
    assert back.weights.tobytes() == model.weights.tobytes() and back.bias.tobytes() == model.bias.tobytes()


def test_exact_shapley_closed_form():
    model = _model(np.array([[1.5, -0.25], [0.0, 0.75], [-2.0, 3.0]]))
    for c in range(3):
        att = sh.explain(model, ["flu", "save", "flu"], method="exact", mode="logit", target_class=c)
        np.testing.assert_allclose(att.phi, [model.weights[c, 4], model.weights[c, 5], model.weights[c, 4]],
                                   atol=1e-12)


def test_bundled_baseline_is_recorded(bundled_run):
    report = json.loads((bundled_run / "baseline_metrics.json").read_text())
    xl = json.loads((bundled_run / "metrics.json").read_text())
    assert report["total"] == xl["total"] == 60
    assert 0 < report["accuracy"] < 1
