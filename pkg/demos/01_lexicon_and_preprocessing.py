# %% [markdown]
# # Labeling comments with the lexicon scorer
#
# Comments arrive as raw text with emoji, mentions and links. Labels come from
# the rule-based scorer run on lightly normalised text; the model sees the
# fully cleaned tokens.

# %%
from datetime import datetime, timezone

from sentipipe import lexicon, textprep
from sentipipe.corpus import RawComment


def comment(text, id="demo"):
    return RawComment(id, "v1", "someone", datetime(2025, 1, 5, tzinfo=timezone.utc), 0, None, text)


# %% [markdown]
# Valence, negation, boosters, caps and exclamation marks all move the compound score.

# %%
for text in ("The vaccine is good", "The vaccine is not good", "The vaccine is VERY good!!!",
             "Masks help, but the fear is still there.", "I am so scared of this flu 😱"):
    s = lexicon.polarity_scores(textprep.labeling_text(comment(text)))
    print(f"{s.compound:+.4f}  {lexicon.to_label(s).slug:<8}  {text}")

# %% [markdown]
# The cleaning pipeline runs its stages in a fixed order. Negators survive
# stopword removal, so "not safe" keeps its meaning for the classifier.

# %%
raw = comment("@WHO The hospitals were NOT safe 😷 https://t.co/x #covid")
print(textprep.labeling_text(raw))
print(textprep.run_pipeline(raw).tokens)

# %%
cfg = textprep.PipelineConfig(stages=("demojize", "lowercase"))
print(textprep.run_pipeline(raw, cfg).tokens)
