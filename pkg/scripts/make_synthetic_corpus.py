"""Regenerate the bundled planted-signal comment corpus.

Each comment carries at most one sentiment word, optionally preceded by a
negator that flips it ("not bad" is positive, "not safe" negative). Word
presence alone therefore cannot separate the classes; word context can.
Every generated comment is kept only if the lexicon scorer agrees with the
planted label, so the pipeline's own labeling reproduces it.

    python scripts/make_synthetic_corpus.py src/sentipipe/data/synthetic_comments.csv
"""

import csv
import sys
from datetime import datetime, timedelta

import numpy as np

from sentipipe import lexicon
from sentipipe.corpus import RAW_COLUMNS, Label, RawComment
from sentipipe.textprep import PipelineConfig, labeling_text, run_pipeline

POSITIVE = ["good", "safe", "save", "help"]
NEGATIVE = ["bad", "fear", "flu", "sick"]
NEGATORS = ["not", "never"]
FILLER = ["virus", "hmpv", "news", "china", "hospital", "report", "doctors", "winter", "video", "update"]
DECOR = ["", "", "", "!", "?", " 👍", " 😷", " https://news.example/hmpv", " @reporter", "!!"]


def _sentence(rng, kind):
    n_before = 1
    n_after = int(rng.integers(0, 2))
    before = list(rng.choice(FILLER, n_before))
    after = list(rng.choice(FILLER, n_after))
    if kind == "neutral":
        core = list(rng.choice(FILLER, int(rng.integers(1, 3))))
        if rng.random() < 0.35:
            core.insert(0, str(rng.choice(NEGATORS)))
    else:
        polarity, negated = kind
        pool = POSITIVE if (polarity == "pos") != negated else NEGATIVE
        core = [str(rng.choice(pool))]
        if negated:
            core.insert(0, str(rng.choice(NEGATORS)))
    words = before + core + after
    text = " ".join(words)
    if rng.random() < 0.15:
        text = text.capitalize()
    return text + str(rng.choice(DECOR))


def _planted(kind):
    if kind == "neutral":
        return Label.NEUTRAL
    return Label.POSITIVE if kind[0] == "pos" else Label.NEGATIVE


def generate(n=600, seed=20250107):
    rng = np.random.default_rng(seed)
    kinds = (["neutral"] * 2 + [("pos", False), ("pos", True), ("neg", False), ("neg", True)])
    weights = np.array([0.1, 0.1, 0.3, 0.1, 0.3, 0.1])
    cfg = PipelineConfig()
    t0 = datetime(2025, 1, 3, 8, 0, 0)
    rows, seen = [], set()
    per_class = {lab: 0 for lab in Label}
    quota = {Label.NEUTRAL: n // 5, Label.POSITIVE: 2 * n // 5, Label.NEGATIVE: n - n // 5 - 2 * n // 5}
    while len(rows) < n:
        kind = kinds[rng.choice(len(kinds), p=weights)]
        label = _planted(kind)
        if per_class[label] >= quota[label]:
            continue
        text = _sentence(rng, kind)
        raw = RawComment(f"c{len(rows):04d}", f"v{int(rng.integers(0, 12)):02d}", f"user{int(rng.integers(0, 400))}",
                         t0 + timedelta(minutes=7 * len(rows)), int(rng.integers(0, 60)), "en", text)
        key = run_pipeline(raw, cfg).clean_text
        if key in seen:
            continue
        scored = lexicon.to_label(lexicon.polarity_scores(labeling_text(raw, cfg)))
        if scored != label:
            continue
        seen.add(key)
        per_class[label] += 1
        rows.append(raw)
    return rows


def main(path):
    rows = generate()
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        for r in rows:
            w.writerow([r.id, r.video_id, r.author, r.published_at.isoformat(), r.like_count, r.lang_hint, r.text])
    print(f"wrote {len(rows)} comments to {path}")


if __name__ == "__main__":
    main(sys.argv[1])
