"""Lexicon-and-rule sentiment scorer used to label comments.

The rule set is the VADER one: per-word valence from a lexicon, adjusted by
degree modifiers in a three-word window, negation, ALL-CAPS emphasis, "but"
re-weighting and ``!``/``?`` amplification, then squashed into [-1, 1].
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .corpus import Label

B_INCR = 0.293
B_DECR = -0.293

NEGATORS = frozenset([
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt",
    "ain't", "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't",
    "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither",
    "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't",
    "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing", "nowhere",
    "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
    "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't",
    "without", "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite",
])

_UP = [
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably",
    "decidedly", "deeply", "effing", "enormous", "enormously", "entirely", "especially",
    "exceptional", "exceptionally", "extreme", "extremely", "fabulously", "flipping",
    "flippin", "frackin", "fracking", "fricking", "frickin", "frigging", "friggin", "fully",
    "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more", "most",
    "particularly", "purely", "quite", "really", "remarkably", "so", "substantially",
    "thoroughly", "total", "totally", "tremendous", "tremendously", "uber", "unbelievably",
    "unusually", "utter", "utterly", "very",
]
_DOWN = [
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of",
    "less", "little", "marginal", "marginally", "occasional", "occasionally", "partly",
    "scarce", "scarcely", "slight", "slightly", "somewhat", "sort of", "sorta", "sortof",
    "sort-of",
]
BOOSTERS = {**{w: B_INCR for w in _UP}, **{w: B_DECR for w in _DOWN}}

# multiword expressions whose valence overrides the word's own
SPECIAL_CASES = {
    "the shit": 3, "the bomb": 3, "bad ass": 1.5, "badass": 1.5, "bus stop": 0.0,
    "yeah right": -2, "kiss of death": -1.5, "to die for": 3, "beating heart": 3.5,
}


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    valence: Mapping[str, float]
    boosters: Mapping[str, float] = field(default_factory=lambda: dict(BOOSTERS))
    negators: frozenset = NEGATORS

    def __len__(self):
        return len(self.valence)


@dataclass(frozen=True)
class ScorerConfig:
    alpha: float = 15.0
    caps_boost: float = 0.733
    negation_scalar: float = -0.74
    exclaim_increment: float = 0.292
    exclaim_max: int = 4
    question_increment: float = 0.18
    question_cap: float = 0.96
    but_pre: float = 0.5
    but_post: float = 1.5
    pos_threshold: float = 0.05
    neg_threshold: float = -0.05

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.pos_threshold > 0 > self.neg_threshold:
            raise ValueError("thresholds must satisfy pos_threshold > 0 > neg_threshold")


@dataclass(frozen=True)
class PolarityScores:
    pos: float
    neu: float
    neg: float
    compound: float


def load_lexicon(path) -> Lexicon:
    """Parse ``token<TAB>valence`` lines; extra tab-separated columns are ignored."""
    valence = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2 or not parts[0]:
                raise LexiconError(f"{path}:{lineno}: expected 'token<TAB>valence'")
            try:
                v = float(parts[1])
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: bad valence {parts[1]!r}") from None
            if not -4.0 <= v <= 4.0:
                raise LexiconError(f"{path}:{lineno}: valence {v} outside [-4, 4]")
            valence[parts[0]] = v
    return Lexicon(valence)


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    return load_lexicon(resources.files("sentipipe") / "data" / "vader_lexicon.tsv")


_EMOJI_NAME = re.compile(r":([a-z0-9]+(?:_[a-z0-9]+)*):")


def _spell_emoji_names(text: str) -> str:
    # ":thumbs_up:" -> "thumbs up" so emoji names reach the lexicon as words
    return _EMOJI_NAME.sub(lambda m: m.group(1).replace("_", " "), text)


def _strip_punct(token: str) -> str:
    stripped = token.strip(string.punctuation)
    # two characters or fewer: probably an emoticon such as ":)"
    return token if len(stripped) <= 2 else stripped


def tokenize(text: str) -> list[str]:
    return [_strip_punct(w) for w in text.split()]


def _is_negated(word: str, negators) -> bool:
    return word in negators or "n't" in word


class _Scorer:
    def __init__(self, words, lexicon: Lexicon, config: ScorerConfig):
        self.words = words
        self.lower = [w.lower() for w in words]
        self.lex = lexicon
        self.cfg = config
        n_caps = sum(w.isupper() for w in words)
        # emphasis only counts when some, not all, words are shouted
        self.cap_diff = 0 < len(words) - n_caps < len(words)

    def booster_scalar(self, j: int, valence: float) -> float:
        w = self.lower[j]
        if w not in self.lex.boosters:
            return 0.0
        s = self.lex.boosters[w]
        if valence < 0:
            s = -s
        if self.words[j].isupper() and self.cap_diff:
            s += self.cfg.caps_boost if valence > 0 else -self.cfg.caps_boost
        return s

    def negation(self, valence: float, k: int, i: int) -> float:
        lw, neg = self.lower, self.cfg.negation_scalar
        if k == 0:
            if _is_negated(lw[i - 1], self.lex.negators):
                valence *= neg
        elif k == 1:
            if lw[i - 2] == "never" and lw[i - 1] in ("so", "this"):
                valence *= 1.25
            elif lw[i - 2] == "without" and lw[i - 1] == "doubt":
                pass
            elif _is_negated(lw[i - 2], self.lex.negators):
                valence *= neg
        else:
            if (lw[i - 3] == "never" and lw[i - 2] in ("so", "this")) or lw[i - 1] in ("so", "this"):
                valence *= 1.25
            elif lw[i - 3] == "without" and "doubt" in (lw[i - 2], lw[i - 1]):
                pass
            elif _is_negated(lw[i - 3], self.lex.negators):
                valence *= neg
        return valence

    def special_cases(self, valence: float, i: int) -> float:
        lw = self.lower
        before = [
            f"{lw[i - 1]} {lw[i]}",
            f"{lw[i - 2]} {lw[i - 1]} {lw[i]}",
            f"{lw[i - 2]} {lw[i - 1]}",
            f"{lw[i - 3]} {lw[i - 2]} {lw[i - 1]}",
            f"{lw[i - 3]} {lw[i - 2]}",
        ]
        for seq in before:
            if seq in SPECIAL_CASES:
                valence = SPECIAL_CASES[seq]
                break
        if len(lw) - 1 > i and f"{lw[i]} {lw[i + 1]}" in SPECIAL_CASES:
            valence = SPECIAL_CASES[f"{lw[i]} {lw[i + 1]}"]
        if len(lw) - 1 > i + 1 and f"{lw[i]} {lw[i + 1]} {lw[i + 2]}" in SPECIAL_CASES:
            valence = SPECIAL_CASES[f"{lw[i]} {lw[i + 1]} {lw[i + 2]}"]
        for gram in (before[3], before[4], before[2]):
            if gram in self.lex.boosters:
                valence += self.lex.boosters[gram]
        return valence

    def least(self, valence: float, i: int) -> float:
        lw = self.lower
        if i > 0 and lw[i - 1] == "least" and lw[i - 1] not in self.lex.valence:
            if i == 1 or lw[i - 2] not in ("at", "very"):
                valence *= self.cfg.negation_scalar
        return valence

    def word_valence(self, i: int) -> float:
        lw, lex = self.lower, self.lex.valence
        item = lw[i]
        if item in self.lex.boosters:
            return 0.0
        if item == "kind" and i + 1 < len(lw) and lw[i + 1] == "of":
            return 0.0
        if item not in lex:
            return 0.0
        valence = lex[item]
        if item == "no" and i != len(lw) - 1 and lw[i + 1] in lex:
            valence = 0.0
        if (i > 0 and lw[i - 1] == "no") or (i > 1 and lw[i - 2] == "no") or (
            i > 2 and lw[i - 3] == "no" and lw[i - 1] in ("or", "nor")
        ):
            valence = lex[item] * self.cfg.negation_scalar
        if self.words[i].isupper() and self.cap_diff:
            valence += self.cfg.caps_boost if valence > 0 else -self.cfg.caps_boost
        for k in range(3):
            j = i - (k + 1)
            if i > k and lw[j] not in lex:
                s = self.booster_scalar(j, valence)
                if s != 0 and k == 1:
                    s *= 0.95
                elif s != 0 and k == 2:
                    s *= 0.9
                valence += s
                valence = self.negation(valence, k, i)
                if k == 2:
                    valence = self.special_cases(valence, i)
        return self.least(valence, i)


def _punctuation_amplifier(text: str, cfg: ScorerConfig) -> float:
    ep = min(text.count("!"), cfg.exclaim_max) * cfg.exclaim_increment
    qm = text.count("?")
    if qm <= 1:
        qa = 0.0
    elif qm <= 3:
        qa = qm * cfg.question_increment
    else:
        qa = cfg.question_cap
    return ep + qa


def word_sentiments(text: str, lexicon: Lexicon | None = None, config: ScorerConfig | None = None) -> list[float]:
    """Adjusted valence of every word, after the "but" re-weighting."""
    lexicon = lexicon or default_lexicon()
    config = config or ScorerConfig()
    words = tokenize(_spell_emoji_names(text).strip())
    scorer = _Scorer(words, lexicon, config)
    sentiments = [scorer.word_valence(i) for i in range(len(words))]
    if "but" in scorer.lower:
        b = scorer.lower.index("but")
        sentiments = [
            s * config.but_pre if i < b else s * config.but_post if i > b else s
            for i, s in enumerate(sentiments)
        ]
    return sentiments


def polarity_scores(text: str, lexicon: Lexicon | None = None, config: ScorerConfig | None = None) -> PolarityScores:
    config = config or ScorerConfig()
    sentiments = word_sentiments(text, lexicon, config)
    if not sentiments:
        return PolarityScores(0.0, 0.0, 0.0, 0.0)

    total = math.fsum(sentiments)
    amp = _punctuation_amplifier(_spell_emoji_names(text), config)
    if total > 0:
        total += amp
    elif total < 0:
        total -= amp
    compound = max(-1.0, min(1.0, total / math.sqrt(total * total + config.alpha)))

    pos_sum = sum(s + 1 for s in sentiments if s > 0)
    neg_sum = sum(s - 1 for s in sentiments if s < 0)
    neu_count = sum(1 for s in sentiments if s == 0)
    if pos_sum > abs(neg_sum):
        pos_sum += amp
    elif pos_sum < abs(neg_sum):
        neg_sum -= amp
    denom = pos_sum + abs(neg_sum) + neu_count
    return PolarityScores(
        pos=abs(pos_sum / denom), neu=abs(neu_count / denom), neg=abs(neg_sum / denom), compound=compound
    )


def to_label(scores: PolarityScores | float, config: ScorerConfig | None = None) -> Label:
    config = config or ScorerConfig()
    c = scores.compound if isinstance(scores, PolarityScores) else float(scores)
    if c >= config.pos_threshold:
        return Label.POSITIVE
    if c <= config.neg_threshold:
        return Label.NEGATIVE
    return Label.NEUTRAL
