import csv

import pytest
from hypothesis import given, strategies as st

from sentipipe import textprep as tp
from sentipipe.textprep import PipelineConfig, StageError

from conftest import raw


# --- translation ----------------------------------------------------------


def test_identity_translation():
    assert tp.translate("hola", "es") == "hola"


def test_dictionary_translation():
    client = tp.DictionaryTranslator({"hola": "hello"})
    assert tp.translate("hola amigo", "es", client) == "hello amigo"
    assert tp.translate("", "es", client) == ""


def test_failing_client_is_a_stage_error():
    class Broken:
        def translate(self, text, lang_hint):
            raise ConnectionError("timeout")

    cfg = PipelineConfig(translation="external", client=Broken())
    with pytest.raises(StageError) as e:
        tp.run_pipeline(raw("hola", id="c77"), cfg)
    assert e.value.comment_id == "c77" and e.value.stage == "translate"
    assert "timeout" in str(e.value)


# --- character stages -----------------------------------------------------


def test_demojize_reads_bundled_table(fixtures):
    path = tp._data_path("emoji.csv")
    with open(path, newline="", encoding="utf-8") as f:
        names = {chr(int(r["codepoint_hex"], 16)): r["name"] for r in csv.DictReader(f)}
    assert tp.demojize("ok 👍") == f"ok :{names['👍']}:" == "ok :thumbs_up:"
    assert tp.demojize("plain text") == "plain text"


def test_emoji_names_are_slugs():
    for name in tp.emoji_table().values():
        assert name == name.lower() and " " not in name


@given(st.text())
def test_demojize_idempotent(s):
    once = tp.demojize(s)
    assert tp.demojize(once) == once


def test_demojize_separates_adjacent_emoji():
    assert tp.demojize("yes👍👍") == "yes :thumbs_up: :thumbs_up:"


@pytest.mark.parametrize("text, want", [
    ("see https://x.y/z now", "see now"),
    ("mail a@b.com or @bob", "mail or"),
    ("no entities here", "no entities here"),
    ("go to www.example.org today", "go to today"),
])
def test_strip_entities(text, want):
    assert tp.strip_entities(text) == want


@pytest.mark.parametrize("text, want", [
    ("wow#$ %great", "wow great"),
    (":thumbs_up: stays", ":thumbs_up: stays"),
    ("really?!", "really?!"),
    ("it's fine", "it's fine"),
])
def test_strip_special(text, want):
    assert tp.strip_special(text) == want


def test_strip_special_folds_accents():
    assert tp.strip_special("café naïve") == "cafe naive"


# --- token stages ---------------------------------------------------------


def test_remove_stopwords():
    assert tp.remove_stopwords(["the", "virus", "is", "spreading"], {"the", "is"}) == ["virus", "spreading"]
    assert tp.remove_stopwords([], {"the"}) == []
    assert tp.remove_stopwords(["flu", "season"], {"the"}) == ["flu", "season"]


def test_negators_are_not_stopwords():
    stop = tp.default_stopwords()
    for w in ("not", "no", "never", "nor"):
        assert w not in stop


@pytest.mark.parametrize("word, lemma", [
    ("viruses", "virus"), ("was", "be"), ("flu", "flu"), ("cities", "city"), ("classes", "class"),
    ("spreading", "spread"), ("hopping", "hop"), ("stopped", "stop"), ("worried", "worry"),
    ("coming", "come"), ("scared", "scare"), ("children", "child"), ("news", "news"), ("is", "be"),
])
def test_lemmatize(word, lemma):
    assert tp.lemmatize(word) == lemma


@given(st.text("abcdeiklnorsuyz'", min_size=1, max_size=12))
def test_lemmatize_never_empty_and_idempotent(word):
    lemma = tp.lemmatize(word)
    assert lemma
    assert tp.lemmatize(lemma) == lemma


def test_exception_table_first():
    assert tp.lemmatize("mice", {"mice": "mouse"}) == "mouse"


def test_malformed_exception_file(tmp_path):
    p = tmp_path / "ex.tsv"
    p.write_text("good\tgood\nbad line\n")
    with pytest.raises(ValueError, match=":2:"):
        tp.load_lemma_exceptions(p)


# --- pipeline -------------------------------------------------------------


def test_pipeline_example():
    cfg = PipelineConfig(stopword_list=frozenset({"the"}))
    out = tp.run_pipeline(raw("Check https://a.b 👍 The flu!!"), cfg)
    assert out.clean_text == "check :thumbs_up: flu!!"
    assert out.tokens == ("check", ":thumbs_up:", "flu!!")


def test_default_pipeline_on_example():
    assert tp.run_pipeline(raw("Check https://a.b 👍 The flu!!")).clean_text == "check :thumbs_up: flu!!"


def test_empty_stage_config_normalizes_whitespace():
    cfg = PipelineConfig(stages=())
    assert tp.run_pipeline(raw("  Two   Words\there "), cfg).clean_text == "Two Words here"


def test_default_stage_order():
    assert tp.DEFAULT_STAGES == ("translate", "demojize", "strip_entities", "strip_special", "lowercase",
                                 "remove_stopwords", "lemmatize")


def test_dictionary_translation_in_pipeline():
    cfg = PipelineConfig(translation="dictionary", translation_table={"hola": "hello", "malo": "bad"})
    assert tp.run_pipeline(raw("hola malo", lang_hint="es"), cfg).clean_text == "hello bad"


@pytest.mark.parametrize("kw", [
    {"stages": ("lowercase", "explode")},
    {"stages": ("lowercase", "lowercase")},
    {"translation": "carrier_pigeon"},
    {"translation": "external"},
])
def test_bad_config(kw):
    with pytest.raises(tp.ConfigError):
        PipelineConfig(**kw)


def test_labeling_text_keeps_case_and_punctuation():
    assert tp.labeling_text(raw("The doctors are GREAT!! 👍 https://x.y")) == "The doctors are GREAT!! :thumbs_up: https://x.y"


def test_sample_fixture_tokens_charset(fixtures):
    from sentipipe.corpus import load_comments_csv

    allowed = set("abcdefghijklmnopqrstuvwxyz0123456789:_'!?")
    for c in load_comments_csv(fixtures / "sample_comments.csv"):
        out = tp.run_pipeline(c)
        assert out.tokens == tuple(out.clean_text.split())
        assert all(set(t) <= allowed for t in out.tokens), out.tokens


_unicode = st.text(st.characters(blacklist_categories=("Cs",)), max_size=60)
_mixed = st.lists(st.sampled_from(["The", "doctors", "WORRIED", "😷", "👍", "@bob", "https://a.b/c", "a@b.co",
                                   "going", "flu!!", "cities", "not", "é", "??", "#", "it's", "  "]),
                  max_size=12).map(" ".join)


@given(st.one_of(_unicode, _mixed))
def test_pipeline_idempotent_and_total(text):
    cfg = PipelineConfig()
    once = tp.run_pipeline(raw(text), cfg)
    once.clean_text.encode("utf-8")
    twice = tp.run_pipeline(raw(once.clean_text), cfg)
    assert twice.clean_text == once.clean_text
    assert tp.run_pipeline(raw(text), cfg) == once


@pytest.mark.parametrize("stage", tp.STAGES)
@given(text=st.one_of(_unicode, _mixed))
def test_each_stage_idempotent(stage, text):
    cfg = PipelineConfig(stages=(stage,))
    once = tp.run_pipeline(raw(text), cfg).clean_text
    assert tp.run_pipeline(raw(once), cfg).clean_text == once
