# %% [markdown]
# # Training the classifier on the bundled corpus
#
# Label the bundled 600-comment corpus, split it by class, fine-tune the
# two-stream encoder and compare it with a bag-of-words logistic baseline.

# %%
import numpy as np

from sentipipe import baseline, corpus, lexicon, metrics, textprep
from sentipipe.config import RunConfig
from sentipipe.xlnet import fine_tune, new_model

cfg = RunConfig()
raws = corpus.deduplicate(corpus.load_comments_csv(cfg.input_path).comments)
pipe = cfg.pipeline_config()
data = []
for r in raws:
    s = lexicon.polarity_scores(textprep.labeling_text(r, pipe))
    data.append(corpus.LabeledComment(textprep.run_pipeline(r, pipe), lexicon.to_label(s), s.compound, r))
splits = corpus.stratified_split(data, cfg.split.ratios, cfg.split.seed)
print(len(splits.train), len(splits.val), len(splits.test))

# %%
result = fine_tune(splits, new_model(splits.train, cfg.model_dict(), cfg.train), cfg.train)
for rec in result.history:
    print(rec.epoch, round(rec.train_loss, 4), rec.val_accuracy)
print("best epoch", result.best_epoch)

# %%
truth = [int(c.label) for c in splits.test]
preds = result.model.predict_batch(splits.test)
rep = metrics.evaluate_predictions(truth, [p.predicted for p in preds], np.array([p.probabilities for p in preds]))
print(metrics.render_report(rep)[0])

# %%
b = cfg.baseline
lin = baseline.train_logistic(splits, l2=b.l2, epochs=b.epochs, lr=b.lr, seed=cfg.train.seed)
base = metrics.evaluate_predictions(truth, [p.predicted for p in baseline.predict_batch(lin, splits.test)])
print(f"encoder {rep.accuracy:.3f}  baseline {base.accuracy:.3f}")
