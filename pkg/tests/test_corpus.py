import hashlib
from collections import Counter
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from sentipipe.corpus import (
    CleanComment,
    CorpusError,
    Label,
    LabeledComment,
    RawComment,
    deduplicate,
    load_comments_csv,
    load_labeled_csv,
    save_labeled_csv,
    stratified_split,
)

from conftest import raw

HEADER = "comment_id,video_id,author,published_at,like_count,lang_hint,text\n"
# sha256 of the newline-joined ids of tests/fixtures/sample_comments.csv
SAMPLE_ID_DIGEST = "bf0edfb19ed34aadf238826ed399ce181996fd57d266c8d71ce41b2ed2972dee"


def labeled(i, label, text=None):
    r = raw(text or f"comment number {i}", id=f"id{i}")
    return LabeledComment(CleanComment.from_text(r.id, r.text.lower()), label, 0.0, r)


def balanced(n):
    return [labeled(i, Label(i % 3)) for i in range(n)]


# --- loading --------------------------------------------------------------


def test_load_three_rows_in_order(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text(HEADER + "".join(f"c{i},v,a,2025-01-0{i}T00:00:00Z,{i},en,text {i}\n" for i in (1, 2, 3)))
    res = load_comments_csv(p)
    assert [c.id for c in res] == ["c1", "c2", "c3"]
    assert res.skipped == 0
    assert res[1].like_count == 2 and res[1].published_at.day == 2


def test_row_missing_text_is_skipped(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text(HEADER + "c1,v,a,2025-01-01T00:00:00Z,0,,hello\nc2,v,a,2025-01-01T00:00:00Z,0,,\n")
    res = load_comments_csv(p)
    assert [c.id for c in res] == ["c1"]
    assert res.skipped == 1


def test_malformed_rows_counted(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text(HEADER + "c1,v,a,not-a-date,0,,hi\nc2,v,a,2025-01-01T00:00:00Z,-3,,hi\n"
                 "c3,v,a,2025-01-01T00:00:00Z,0,,   \nc4,v,a,2025-01-01T00:00:00Z,0,,fine\n")
    res = load_comments_csv(p)
    assert [c.id for c in res] == ["c4"]
    assert res.skipped == 3


def test_sample_fixture_digest(fixtures):
    res = load_comments_csv(fixtures / "sample_comments.csv")
    assert len(res) == 20 and res.skipped == 0
    ids = "\n".join(c.id for c in res)
    assert hashlib.sha256(ids.encode()).hexdigest() == SAMPLE_ID_DIGEST
    spanish = next(c for c in res if c.id == "s04")
    assert spanish.lang_hint == "es"


@pytest.mark.parametrize("body, msg", [
    (None, "no such file"),
    ("comment_id,text\nc1,hi\n", "missing"),
    (HEADER, "no valid rows"),
])
def test_load_errors(tmp_path, body, msg):
    p = tmp_path / "c.csv"
    if body is not None:
        p.write_text(body)
    with pytest.raises(CorpusError, match=msg):
        load_comments_csv(p)


# --- dedupe ---------------------------------------------------------------


def test_dedupe_keeps_first():
    a1, a2, b = raw("same", "a1"), raw("same", "a2"), raw("other", "b")
    assert deduplicate([a1, a2, b]) == [a1, b]


def test_dedupe_whitespace_and_case():
    out = deduplicate([raw("Hi ", "x"), raw("hi", "y")])
    assert [c.id for c in out] == ["x"]


def test_dedupe_empty():
    assert deduplicate([]) == []


def test_dedupe_sample_fixture(fixtures):
    assert len(deduplicate(load_comments_csv(fixtures / "sample_comments.csv").comments)) == 19


@given(st.lists(st.sampled_from(["a", "A ", " b", "B", "c  c", "C C", "d"]), max_size=12))
def test_dedupe_idempotent(texts):
    items = [raw(t, f"i{n}") for n, t in enumerate(texts)]
    once = deduplicate(items)
    assert deduplicate(once) == once
    assert [c.id for c in once] == sorted((c.id for c in once), key=lambda s: int(s[1:]))


# --- split ----------------------------------------------------------------


def test_split_ten_of_one_class():
    data = [labeled(i, Label.NEUTRAL) for i in range(10)]
    sp = stratified_split(data, (0.8, 0.1, 0.1), seed=0)
    assert (len(sp.train), len(sp.val), len(sp.test)) == (8, 1, 1)


def test_split_deterministic():
    data = balanced(60)
    a = stratified_split(data, seed=7)
    b = stratified_split(data, seed=7)
    for part in ("train", "val", "test"):
        assert [c.id for c in getattr(a, part)] == [c.id for c in getattr(b, part)]
    c = stratified_split(data, seed=8)
    assert [x.id for x in a.test] != [x.id for x in c.test]


def test_split_9758_matches_scripted_count():
    data = balanced(9758)
    sp = stratified_split(data, (0.8, 0.1, 0.1), seed=3)
    # class sizes 3253/3253/3252; 10% of each floors to 325
    for part, want in (("test", {0: 325, 1: 325, 2: 325}), ("val", {0: 325, 1: 325, 2: 325}),
                       ("train", {0: 2603, 1: 2603, 2: 2602})):
        assert Counter(int(c.label) for c in getattr(sp, part)) == want


def test_split_rejects_tiny_class():
    data = [labeled(i, Label(i % 2)) for i in range(20)] + [labeled(20, Label.POSITIVE), labeled(21, Label.POSITIVE)]
    with pytest.raises(CorpusError, match="positive"):
        stratified_split(data)


@pytest.mark.parametrize("ratios", [(0.5, 0.5, 0.1), (1.0, 0.0, 0.0), (0.8, 0.2)])
def test_split_rejects_bad_ratios(ratios):
    with pytest.raises(CorpusError):
        stratified_split(balanced(30), ratios)


@given(st.lists(st.integers(0, 2), min_size=0, max_size=60), st.integers(0, 2**32),
       st.sampled_from([(0.8, 0.1, 0.1), (0.6, 0.2, 0.2), (0.34, 0.33, 0.33)]))
def test_split_partitions(labels, seed, ratios):
    data = [labeled(i, Label(c)) for i, c in enumerate(labels + [0, 0, 0, 1, 1, 1, 2, 2, 2])]
    sp = stratified_split(data, ratios, seed)
    ids = [set(c.id for c in getattr(sp, p)) for p in ("train", "val", "test")]
    assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])
    assert ids[0] | ids[1] | ids[2] == {c.id for c in data}
    counts = Counter(int(c.label) for c in data)
    for c, n in counts.items():
        ideal = (n * ratios[2], n * ratios[1])
        got = (sum(1 for x in sp.test if x.label == c), sum(1 for x in sp.val if x.label == c))
        assert abs(got[0] - ideal[0]) <= 1 and abs(got[1] - ideal[1]) <= 1


# --- persistence ----------------------------------------------------------


def test_save_empty_is_header_only(tmp_path):
    p = tmp_path / "l.csv"
    save_labeled_csv([], p)
    assert p.read_text() == "comment_id,video_id,author,published_at,like_count,lang_hint,text,clean_text,compound,label\n"
    assert len(load_labeled_csv(p)) == 0


def test_single_record_round_trip(tmp_path):
    r = RawComment("x1", "v9", "zoë", datetime(2025, 1, 6, 8, 30, tzinfo=timezone.utc), 42, "en",
                   'He said "no, never" 😷')
    item = LabeledComment(CleanComment.from_text("x1", "say never :face_with_medical_mask:"), Label.NEGATIVE,
                          -0.3412376512543242, r)
    p = tmp_path / "l.csv"
    save_labeled_csv([item], p)
    assert load_labeled_csv(p).comments == [item]


def test_save_to_missing_dir(tmp_path):
    with pytest.raises(CorpusError):
        save_labeled_csv([], tmp_path / "nope" / "l.csv")


_text = st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).filter(lambda s: s.strip())
_clean = st.lists(st.text("abcxyz019:_'", min_size=1, max_size=6), max_size=5).map(" ".join)


@st.composite
def records(draw):
    n = draw(st.integers(0, 100))
    out = []
    base = datetime(2025, 1, 1, tzinfo=timezone.utc)
    for i in range(n):
        r = RawComment(f"r{i}", draw(st.sampled_from(["v1", "v2"])), draw(st.text("abc ", max_size=4)),
                       base + timedelta(seconds=draw(st.integers(0, 10**7))), draw(st.integers(0, 10**6)),
                       draw(st.sampled_from([None, "en", "es", "pt-BR"])), draw(_text))
        clean = draw(_clean)
        out.append(LabeledComment(CleanComment.from_text(r.id, clean), draw(st.sampled_from(list(Label))),
                                  draw(st.floats(-1, 1)), r))
    return out


@given(records())
def test_round_trip_property(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("rt") / "l.csv"
    save_labeled_csv(data, p)
    back = load_labeled_csv(p)
    assert back.skipped == 0
    assert back.comments == data
