# %% [markdown]
# # Which words drove a prediction?
#
# Shapley values split a prediction among the tokens of a comment. Absent
# tokens are replaced by the mask token, so every coalition is a valid input.

# %%
import numpy as np

from sentipipe import shapley

# %% [markdown]
# A small game first: three players, where the value is 1 only if player 0 and
# one other player are present. Player 0 earns the most and the total matches.

# %%
game = shapley.Game(lambda S: float(0 in S and len(S) >= 2), 3)
att = shapley.exact_shapley(game)
print(att.phi, att.phi.sum(), att.gap)

# %% [markdown]
# Exact enumeration costs 2^n evaluations. Sampling over orderings converges
# towards it and reports a standard error per token.

# %%
rng = np.random.default_rng(0)
w = rng.normal(size=10)
game = shapley.Game(lambda S: float(np.tanh(sum(w[i] for i in S))), 10)
exact = shapley.exact_shapley(game).phi
for m in (10, 100, 1000, 10000):
    est = shapley.permutation_shapley(game, m_samples=m, seed=1)
    print(m, np.abs(est.phi - exact).max().round(4), est.stderr.max().round(4))

# %% [markdown]
# On a trained model, `explain` takes a token list (or a cleaned comment).
# Train one quickly with the CLI workflow, then attribute a comment.

# %%
import tempfile
from dataclasses import replace
from pathlib import Path

from sentipipe import cli
from sentipipe.config import RunConfig
from sentipipe.xlnet import XLNetClassifier

out = Path(tempfile.mkdtemp())
cfg = replace(RunConfig(), out_dir=str(out))
for command in ("preprocess", "label", "split", "finetune"):
    cli.execute(cfg, command)
model = XLNetClassifier.load(out / "model.ckpt")
att = shapley.explain(model, "hospital fear flu not safe doctor news help".split(), method="permutation",
                      m_samples=500, seed=0)
print(shapley.force_report(att)[0])
