"""Bag-of-words multinomial logistic regression.

Serves as the comparison model in reports and, because its class scores are
linear in token counts, as a closed-form oracle for Shapley attributions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .xlnet.model import Prediction, make_prediction
from .xlnet.vocab import RESERVED, Vocab, build_vocab, model_tokens

log = logging.getLogger(__name__)


@dataclass
class LinearModel:
    vocab: Vocab
    weights: np.ndarray  # (n_classes, vocab_size); reserved columns stay zero
    bias: np.ndarray
    history: list = field(default_factory=list)

    @property
    def n_classes(self):
        return len(self.bias)

    def features(self, tokens_or_ids) -> np.ndarray:
        return featurize([tokens_or_ids], self.vocab)[0]

    def class_scores(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def save(self, path):
        nx.save_checkpoint(path, "baseline", {"vocab": self.vocab.to_json(), "n_classes": self.n_classes},
                           {"weights": self.weights, "bias": self.bias})

    @classmethod
    def load(cls, path):
        header, t = nx.load_checkpoint(path)
        if header.get("kind") != "baseline":
            raise nx.CheckpointError(f"{path}: not a baseline checkpoint")
        vocab = Vocab.from_json(header["config"]["vocab"])
        k = header["config"]["n_classes"]
        nx.checkpoint.check_shapes(path, t, {"weights": (k, len(vocab)), "bias": (k,)})
        return cls(vocab, t["weights"], t["bias"])


def _ids(item, vocab):
    if isinstance(item, np.ndarray):
        return item
    if isinstance(item, str):
        item = item.split()
    elif hasattr(item, "clean"):
        item = item.clean.tokens
    elif hasattr(item, "tokens"):
        item = item.tokens
    return np.array([vocab.id(t) for t in model_tokens(item)], dtype=np.int64)


def featurize(items, vocab: Vocab) -> np.ndarray:
    """Token counts per vocabulary entry; reserved ids (PAD, UNK, MASK, CLS) are not features."""
    X = np.zeros((len(items), len(vocab)))
    for r, item in enumerate(items):
        ids = _ids(item, vocab)
        np.add.at(X[r], ids, 1.0)
    X[:, : len(RESERVED)] = 0.0
    return X


def logistic_loss(X, y, W, b, l2):
    """Mean cross-entropy plus (l2 / 2) * ||W||^2, built on the tape."""
    logits = nx.add(nx.matmul(nx.as_tensor(X), nx.transpose(W, (1, 0))), b)
    loss = nx.cross_entropy(logits, y)
    if l2:
        loss = nx.add(loss, nx.scale(nx.sum_all(nx.mul(W, W)), 0.5 * l2))
    return loss


def train_logistic(splits, l2: float = 1e-3, epochs: int = 3000, lr: float = 2.0, seed: int = 0,
                   n_classes: int = 3, min_freq: int = 1, tol: float = 1e-7) -> LinearModel:
    """Full-batch gradient descent from zero weights.

    ``seed`` is recorded for provenance; starting from zeros makes the fit
    deterministic on its own.
    """
    train = splits.train if hasattr(splits, "train") else splits
    if not train:
        raise ValueError("empty training split")
    vocab = build_vocab(train, min_freq)
    X = featurize(train, vocab)
    y = np.array([int(c.label) for c in train])
    W = nx.Parameter("weights", np.zeros((n_classes, len(vocab))))
    b = nx.Parameter("bias", np.zeros(n_classes))
    history, prev = [], np.inf
    for epoch in range(epochs):
        W.zero_grad()
        b.zero_grad()
        loss = logistic_loss(X, y, W, b, l2)
        nx.backward(loss)
        W.data = W.data - lr * W.grad
        b.data = b.data - lr * b.grad
        history.append(loss.item())
        if abs(prev - loss.item()) < tol:
            break
        prev = loss.item()
    W.data[:, : len(RESERVED)] = 0.0
    log.info("logistic baseline: %d epochs, final loss %.5f, seed %d", len(history), history[-1], seed)
    return LinearModel(vocab, W.data.copy(), b.data.copy(), history)


def predict(model: LinearModel, tokens) -> Prediction:
    return make_prediction(model.class_scores(model.features(tokens)))


def predict_batch(model: LinearModel, items) -> list[Prediction]:
    return [predict(model, item) for item in items]
