"""Staged comment normalization: translation hook, emoji names, entity and
special-character stripping, stopwords and a rule-based lemmatizer."""

from __future__ import annotations

import csv
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping, Protocol

from .corpus import CleanComment, RawComment

STAGES = (
    "translate",
    "demojize",
    "strip_entities",
    "strip_special",
    "lowercase",
    "remove_stopwords",
    "lemmatize",
)
DEFAULT_STAGES = STAGES


class StageError(Exception):
    def __init__(self, comment_id, stage, cause):
        super().__init__(f"comment {comment_id}: stage {stage!r} failed: {cause}")
        self.comment_id = comment_id
        self.stage = stage
        self.cause = cause


class ConfigError(ValueError):
    pass


# --- bundled tables -------------------------------------------------------


def _data_path(name):
    return resources.files("sentipipe") / "data" / name


def load_word_list(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(w.strip() for w in f if w.strip())


def load_lemma_exceptions(path) -> dict[str, str]:
    table = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>lemma'")
            table[parts[0]] = parts[1]
    return table


def load_emoji_table(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as f:
        return {chr(int(row["codepoint_hex"], 16)): row["name"] for row in csv.DictReader(f)}


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return load_word_list(_data_path("stopwords.txt"))


@lru_cache(maxsize=None)
def default_lemma_exceptions() -> Mapping[str, str]:
    return load_lemma_exceptions(_data_path("lemma_exceptions.tsv"))


@lru_cache(maxsize=None)
def emoji_table() -> Mapping[str, str]:
    return load_emoji_table(_data_path("emoji.csv"))


# --- translation ----------------------------------------------------------


class TranslationClient(Protocol):
    def translate(self, text: str, lang_hint: str | None) -> str: ...


class IdentityTranslator:
    def translate(self, text, lang_hint=None):
        return text


class DictionaryTranslator:
    """Word-by-word lookup; unknown words pass through unchanged."""

    def __init__(self, table: Mapping[str, str]):
        self.table = dict(table)

    def translate(self, text, lang_hint=None):
        return " ".join(self.table.get(w, w) for w in text.split())


def translate(text: str, lang_hint: str | None = None, client: TranslationClient | None = None) -> str:
    return (client or IdentityTranslator()).translate(text, lang_hint)


# --- character-level stages -----------------------------------------------


def demojize(text: str, table: Mapping[str, str] | None = None) -> str:
    table = emoji_table() if table is None else table
    out = []
    for i, ch in enumerate(text):
        name = table.get(ch)
        if name is None:
            out.append(ch)
            continue
        if out and not out[-1][-1:].isspace():
            out.append(" ")
        out.append(f":{name}:")
        if i + 1 < len(text) and not text[i + 1].isspace():
            out.append(" ")
    return "".join(out)


_URL = r"(?:[a-zA-Z][a-zA-Z0-9+.\-]*://\S+|www\.\S+)"
_EMAIL = r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+"
_MENTION = r"@\w+"
_ENTITY_RE = re.compile(f"{_URL}|{_EMAIL}|{_MENTION}")


def _collapse(text: str) -> str:
    return " ".join(text.split())


def strip_entities(text: str) -> str:
    return _collapse(_ENTITY_RE.sub(" ", text))


_SPECIAL_RE = re.compile(r"[^A-Za-z0-9 ':_!?]")


def strip_special(text: str) -> str:
    """Keep ASCII letters, digits, space and ' : _ ! ?; accents are folded first."""
    folded = unicodedata.normalize("NFKD", text)
    folded = "".join(ch for ch in folded if not unicodedata.combining(ch))
    folded = re.sub(r"\s", " ", folded)
    return _collapse(_SPECIAL_RE.sub("", folded))


def lowercase(text: str) -> str:
    return text.lower()


# --- token-level stages ---------------------------------------------------


def _bare(token: str) -> str:
    # "this???" should match the stopword "this"
    return token.rstrip("!?") or token


def remove_stopwords(tokens, stopwords=None):
    stopwords = default_stopwords() if stopwords is None else stopwords
    return [t for t in tokens if _bare(t) not in stopwords]


_VOWELS = set("aeiouy")
_KEEP_DOUBLE = set("lsz")


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in _KEEP_DOUBLE:
        return stem[:-1]
    return stem


def _is_cons(stem: str, i: int) -> bool:
    ch = stem[i]
    if ch in "aeiou":
        return False
    return ch != "y" or i == 0 or not _is_cons(stem, i - 1)


def _measure(stem: str) -> int:
    """Number of vowel-consonant runs: tr=0, hop=1, report=2."""
    pattern = "".join("c" if _is_cons(stem, i) else "v" for i in range(len(stem)))
    return len(re.findall(r"v+c+", pattern))


def _cvc(stem: str) -> bool:
    return (len(stem) >= 3 and _is_cons(stem, -3 % len(stem)) and not _is_cons(stem, len(stem) - 2)
            and _is_cons(stem, len(stem) - 1) and stem[-1] not in "wxy")


def _strip_verbal(word: str, suffix: str) -> str | None:
    stem = word[: -len(suffix)]
    if len(stem) < 3 or not (_VOWELS & set(stem)):
        return None
    short = _undouble(stem)
    if short != stem:
        return short
    # put back a dropped final e: creat -> create, hop -> hope, com -> come
    if stem.endswith(("at", "bl", "iz")) or (_measure(stem) == 1 and _cvc(stem)):
        return stem + "e"
    return stem


def _lemma_once(word: str, exceptions: Mapping[str, str]) -> str:
    if word in exceptions:
        return exceptions[word]
    n = len(word)
    if word.endswith("'s") and n > 2:
        return word[:-2]
    if word.endswith("'") and n > 1:
        return word[:-1]
    if word.endswith(("ies", "ied")) and n > 4:
        return word[:-3] + "y"
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith(("xes", "zzes", "ches", "shes")) and n > 4:
        return word[:-2]
    if word.endswith("uses") and n >= 7:
        return word[:-2]
    if word.endswith("s") and n > 3 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ing"):
        stem = _strip_verbal(word, "ing")
        if stem:
            return stem
    if word.endswith("ed"):
        stem = _strip_verbal(word, "ed")
        if stem:
            return stem
    return word


def lemmatize(token: str, exceptions: Mapping[str, str] | None = None) -> str:
    """Exception table first, then ordered suffix rules, repeated to a fixed point.

    Every rule shortens the token and never empties it, so the loop ends and
    the result is stable under a second application.
    """
    exceptions = default_lemma_exceptions() if exceptions is None else exceptions
    word = token
    while True:
        nxt = _lemma_once(word, exceptions)
        if nxt == word or not nxt:
            return word
        word = nxt


# --- pipeline -------------------------------------------------------------


@dataclass
class PipelineConfig:
    stages: tuple[str, ...] = DEFAULT_STAGES
    stopword_list: frozenset[str] = field(default_factory=default_stopwords)
    lemma_exceptions: Mapping[str, str] = field(default_factory=default_lemma_exceptions)
    translation: str = "identity"
    translation_table: Mapping[str, str] = field(default_factory=dict)
    client: TranslationClient | None = None

    def __post_init__(self):
        self.stages = tuple(self.stages)
        errors = self.validate()
        if errors:
            raise ConfigError("; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            errors.append(f"unknown stage(s): {', '.join(unknown)}")
        dupes = sorted({s for s in self.stages if self.stages.count(s) > 1})
        if dupes:
            errors.append(f"stage(s) listed more than once: {', '.join(dupes)}")
        if self.translation not in ("identity", "dictionary", "external"):
            errors.append(f"unknown translation client {self.translation!r}")
        if self.translation == "external" and self.client is None:
            errors.append("translation 'external' needs a client instance")
        return errors

    def translator(self) -> TranslationClient:
        if self.translation == "dictionary":
            return DictionaryTranslator(self.translation_table)
        if self.translation == "external":
            return self.client
        return IdentityTranslator()


def _run_stage(stage, text, raw, config, translator):
    if stage == "translate":
        return translator.translate(text, raw.lang_hint)
    if stage == "demojize":
        return demojize(text)
    if stage == "strip_entities":
        return strip_entities(text)
    if stage == "strip_special":
        return strip_special(text)
    if stage == "lowercase":
        return lowercase(text)
    if stage == "remove_stopwords":
        stop = config.stopword_list
        if "lemmatize" in config.stages:
            # inflected forms of stopwords ("doing") go too, so a second pass is a no-op
            keep = [t for t in text.split()
                    if _bare(t) not in stop and lemmatize(_bare(t), config.lemma_exceptions) not in stop]
        else:
            keep = remove_stopwords(text.split(), stop)
        return " ".join(keep)
    if stage == "lemmatize":
        return " ".join(lemmatize(t, config.lemma_exceptions) for t in text.split())
    raise ConfigError(f"unknown stage {stage!r}")


def run_stages(raw: RawComment, config: PipelineConfig, stages) -> str:
    translator = config.translator()
    text = raw.text
    for stage in stages:
        try:
            text = _run_stage(stage, text, raw, config, translator)
        except StageError:
            raise
        except Exception as e:
            raise StageError(raw.id, stage, e) from e
    return _collapse(text)


def run_pipeline(raw: RawComment, config: PipelineConfig | None = None) -> CleanComment:
    config = config or PipelineConfig()
    return CleanComment.from_text(raw.id, run_stages(raw, config, config.stages))


def labeling_text(raw: RawComment, config: PipelineConfig | None = None) -> str:
    """Text handed to the lexicon scorer: translated and demojized, nothing destructive."""
    config = config or PipelineConfig()
    stages = [s for s in config.stages if s in ("translate", "demojize")]
    return run_stages(raw, config, stages)
