"""Word-level vocabulary and fixed-length encoding."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

PAD, UNK, MASK, CLS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<mask>", "<cls>")


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    min_freq: int = 1

    def __post_init__(self):
        if self.tokens[:4] != RESERVED:
            raise ValueError("vocabulary must start with the reserved tokens")
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})
        if len(self._ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def token(self, i: int) -> str:
        return self.tokens[i]

    def to_json(self) -> str:
        return json.dumps({"min_freq": self.min_freq, "tokens": list(self.tokens[4:])})

    @classmethod
    def from_json(cls, s: str) -> "Vocab":
        d = json.loads(s)
        return cls(RESERVED + tuple(d["tokens"]), d["min_freq"])


def model_tokens(tokens) -> list[str]:
    """Model-side tokenization: drop the ``!``/``?`` that preprocessing keeps for the lexicon scorer."""
    out = []
    for t in tokens:
        t = t.replace("!", "").replace("?", "")
        if t:
            out.append(t)
    return out


def _tokens_of(item):
    if isinstance(item, str):
        return model_tokens(item.split())
    if hasattr(item, "tokens"):
        return model_tokens(item.tokens)
    if hasattr(item, "clean"):
        return model_tokens(item.clean.tokens)
    return model_tokens(item)


def build_vocab(comments, min_freq: int = 1) -> Vocab:
    """Tokens seen at least ``min_freq`` times, most frequent first, ties alphabetical."""
    counts = Counter()
    n = 0
    for c in comments:
        counts.update(t for t in _tokens_of(c) if t not in RESERVED)
        n += 1
    if n == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, k in counts.items() if k >= min_freq), key=lambda t: (-counts[t], t))
    return Vocab(RESERVED + tuple(kept), min_freq)


def encode(comment, vocab: Vocab, max_len: int = 50) -> np.ndarray:
    """[CLS] + token ids, truncated to ``max_len``, right-padded with PAD."""
    ids = [CLS] + [vocab.id(t) for t in _tokens_of(comment)]
    ids = ids[:max_len]
    out = np.full(max_len, PAD, dtype=np.int64)
    out[: len(ids)] = ids
    return out


def encode_batch(comments, vocab: Vocab, max_len: int = 50) -> np.ndarray:
    if not comments:
        return np.zeros((0, max_len), dtype=np.int64)
    return np.stack([encode(c, vocab, max_len) for c in comments])
