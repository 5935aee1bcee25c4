"""Permutation-LM pretraining and classification fine-tuning."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..numerics import AdamW, backward
from .masks import build_plm_masks, sample_permutation
from .model import ModelConfig, XLNetClassifier, classification_loss, plm_loss
from .vocab import PAD, build_vocab, encode_batch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-4
    batch_size: int = 12
    epochs: int = 10
    max_len: int = 50
    seed: int = 0
    verbose: int = 1
    weight_decay: float = 0.01
    min_freq: int = 1

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        if not self.lr > 0:
            errors.append("lr must be > 0")
        if self.batch_size < 1:
            errors.append("batch_size must be >= 1")
        if self.epochs < 1:
            errors.append("epochs must be >= 1")
        if self.max_len < 2:
            errors.append("max_len must be >= 2")
        return errors

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float | None
    steps: int = 0


@dataclass
class FineTuneResult:
    model: XLNetClassifier
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def history_json(self) -> list[dict]:
        return [{"epoch": r.epoch, "train_loss": r.train_loss, "val_accuracy": r.val_accuracy} for r in self.history]


def _labels(items):
    return np.array([int(c.label) for c in items], dtype=np.int64)


def accuracy_on(model: XLNetClassifier, ids, labels, batch_size=64) -> float:
    if len(labels) == 0:
        return float("nan")
    hits = 0
    for i in range(0, len(labels), batch_size):
        preds = model.classify_forward(ids[i: i + batch_size])
        hits += sum(p.predicted == y for p, y in zip(preds, labels[i: i + batch_size]))
    return hits / len(labels)


def _trim(ids):
    # drop all-pad columns on the right; pads are masked, so results are unchanged
    n = max(1, int((ids != PAD).sum(axis=1).max()))
    return ids[:, :n]


def new_model(train, model_config: dict | None = None, train_config: TrainConfig | None = None) -> XLNetClassifier:
    """Vocabulary from the training split only, then a freshly initialised model."""
    tc = train_config or TrainConfig()
    vocab = build_vocab(train, tc.min_freq)
    cfg = ModelConfig(vocab_size=len(vocab), max_len=tc.max_len, **(model_config or {}))
    return XLNetClassifier(cfg, vocab, seed=tc.seed)


def fine_tune(splits, model: XLNetClassifier | None = None, train_config: TrainConfig | None = None,
              model_config: dict | None = None) -> FineTuneResult:
    """AdamW over shuffled mini-batches; keeps the parameters of the best validation epoch."""
    tc = train_config or TrainConfig()
    if not splits.train:
        raise ValueError("empty training split")
    if model is None:
        model = new_model(splits.train, model_config, tc)
    L = model.config.max_len
    x_train = encode_batch(splits.train, model.vocab, L)
    y_train = _labels(splits.train)
    x_val = encode_batch(splits.val, model.vocab, L)
    y_val = _labels(splits.val)

    opt = AdamW(model.parameters(), lr=tc.lr, weight_decay=tc.weight_decay)
    rng = np.random.default_rng(tc.seed)
    result = FineTuneResult(model)
    best_acc, best_state = -1.0, None
    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(len(y_train))
        losses, steps = [], 0
        for i in range(0, len(order), tc.batch_size):
            idx = order[i: i + tc.batch_size]
            opt.zero_grad()
            loss = classification_loss(_trim(x_train[idx]), y_train[idx], model.params, model.config)
            backward(loss)
            opt.step()
            losses.append(loss.item())
            steps += 1
        val_acc = accuracy_on(model, x_val, y_val) if len(y_val) else None
        rec = EpochRecord(epoch, float(np.mean(losses)), val_acc, steps)
        result.history.append(rec)
        if tc.verbose:
            log.info("epoch %d  train_loss %.4f  val_acc %s", epoch, rec.train_loss,
                     "n/a" if val_acc is None else f"{val_acc:.4f}")
        score = -rec.train_loss if val_acc is None else val_acc
        if best_state is None or score > best_acc:
            best_acc, best_state, result.best_epoch = score, model.state_dict(), epoch
    model.load_state_dict(best_state)
    return result


def plm_batch_masks(ids, config: ModelConfig, rng):
    """One sampled factorization order per row; pads go last and are never targets."""
    masks = []
    for row in ids:
        n = int((row != PAD).sum())
        z = np.concatenate([sample_permutation(n, rng), np.arange(n, len(row))])
        masks.append(build_plm_masks(z, config.plm_target_fraction, n_real=n))
    return masks


def pretrain(comments, model: XLNetClassifier, train_config: TrainConfig | None = None) -> list[dict]:
    """Permutation language modelling on unlabeled comments; returns per-epoch mean loss."""
    tc = train_config or TrainConfig()
    ids = encode_batch(list(comments), model.vocab, model.config.max_len)
    ids = ids[(ids != PAD).sum(axis=1) > 1]
    if len(ids) == 0:
        raise ValueError("no comments with tokens to pretrain on")
    opt = AdamW(model.parameters(), lr=tc.lr, weight_decay=tc.weight_decay)
    rng = np.random.default_rng(tc.seed)
    history = []
    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(len(ids))
        losses = []
        for i in range(0, len(order), tc.batch_size):
            batch = _trim(ids[order[i: i + tc.batch_size]])
            masks = plm_batch_masks(batch, model.config, rng)
            opt.zero_grad()
            loss = plm_loss(batch, masks, model.params, model.config)
            backward(loss)
            opt.step()
            losses.append(loss.item())
        history.append({"epoch": epoch, "plm_loss": float(np.mean(losses))})
        if tc.verbose:
            log.info("pretrain epoch %d  plm_loss %.4f", epoch, history[-1]["plm_loss"])
    return history
