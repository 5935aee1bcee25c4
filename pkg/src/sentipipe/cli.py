"""``sentipipe <command> --config <path> [--out DIR] [--seed N] [--verbose]``

Commands read and write fixed artifact names inside the output directory:

    preprocess  input CSV            -> preprocessed.csv
    label       preprocessed.csv     -> labeled.csv
    split       labeled.csv          -> split.json
    pretrain    labeled.csv, split   -> pretrained.ckpt, pretrain_history.json
    finetune    labeled.csv, split   -> model.ckpt, history.json, baseline.ckpt
    evaluate    model.ckpt, ...      -> metrics.json, metrics.txt, baseline_metrics.json
    explain     model.ckpt, ...      -> attributions.json, attributions.txt
    report      metrics.json, ...    -> report.md
    all         every stage in order (pretrain only when enabled)

Each invocation also writes ``manifest-<command>.json``.
"""

from __future__ import annotations

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import hashlib  # noqa: E402
import json  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__, baseline, corpus, lexicon, metrics, shapley, textprep  # noqa: E402
from .config import ConfigError, RunConfig, load_config  # noqa: E402
from .xlnet import TrainConfig, XLNetClassifier, fine_tune, new_model, pretrain  # noqa: E402

log = logging.getLogger("sentipipe")

COMMANDS = ("preprocess", "label", "split", "pretrain", "finetune", "evaluate", "explain", "report", "all")

ARTIFACTS = {
    "preprocessed": "preprocessed.csv",
    "labeled": "labeled.csv",
    "split": "split.json",
    "pretrained": "pretrained.ckpt",
    "pretrain_history": "pretrain_history.json",
    "model": "model.ckpt",
    "history": "history.json",
    "baseline": "baseline.ckpt",
    "metrics": "metrics.json",
    "metrics_text": "metrics.txt",
    "baseline_metrics": "baseline_metrics.json",
    "attributions": "attributions.json",
    "attributions_text": "attributions.txt",
    "report": "report.md",
}


class PrerequisiteError(RuntimeError):
    pass


class RunFailure(RuntimeError):
    def __init__(self, stage, cause):
        self.stage, self.cause = stage, cause
        super().__init__(f"[{stage}] {cause}")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


@dataclass
class Run:
    config: RunConfig
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)

    @property
    def out(self):
        return self.config.out_path

    def path(self, key):
        return os.path.join(self.out, ARTIFACTS[key])

    def need(self, key, stage):
        p = self.path(key)
        if not os.path.isfile(p):
            raise PrerequisiteError(f"{stage} needs {ARTIFACTS[key]} in {self.out}; run an earlier command first")
        if ARTIFACTS[key] not in self.outputs:  # produced earlier in this run: not an input
            self.inputs.setdefault(ARTIFACTS[key], file_digest(p))
        return p

    def wrote(self, key):
        self.outputs[ARTIFACTS[key]] = file_digest(self.path(key))


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(obj, indent=2) + "\n")


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


# --- stages ---------------------------------------------------------------


def do_preprocess(run: Run):
    cfg = run.config
    src = cfg.input_path
    if not os.path.isfile(src):
        raise PrerequisiteError(f"input CSV not found: {src}")
    run.inputs["input"] = file_digest(src)
    loaded = corpus.load_comments_csv(src)
    unique = corpus.deduplicate(loaded.comments)
    pipe = cfg.pipeline_config()
    pairs = [(raw, textprep.run_pipeline(raw, pipe)) for raw in unique]
    corpus.save_clean_csv(pairs, run.path("preprocessed"))
    run.wrote("preprocessed")
    run.details["preprocess"] = {"read": len(loaded), "skipped": loaded.skipped,
                                 "duplicates": len(loaded) - len(unique), "kept": len(pairs)}
    log.info("preprocess: %d rows kept (%d skipped, %d duplicates)", len(pairs), loaded.skipped,
             len(loaded) - len(unique))


def do_label(run: Run):
    cfg = run.config
    pairs = corpus.load_clean_csv(run.need("preprocessed", "label"))
    pipe = cfg.pipeline_config()
    lex = lexicon.default_lexicon()
    out = []
    for raw, clean in pairs:
        s = lexicon.polarity_scores(textprep.labeling_text(raw, pipe), lex, cfg.scorer)
        out.append(corpus.LabeledComment(clean, lexicon.to_label(s, cfg.scorer), s.compound, raw))
    corpus.save_labeled_csv(out, run.path("labeled"))
    run.wrote("labeled")
    counts = {lab.slug: sum(c.label == lab for c in out) for lab in corpus.Label}
    run.details["label"] = counts
    log.info("label: %s", counts)


def _labeled(run, stage):
    res = corpus.load_labeled_csv(run.need("labeled", stage))
    if res.skipped:
        raise corpus.CorpusError(f"{ARTIFACTS['labeled']} has {res.skipped} unreadable rows")
    return res.comments


def do_split(run: Run):
    cfg = run.config
    data = _labeled(run, "split")
    sp = corpus.stratified_split(data, cfg.split.ratios, cfg.split.seed)
    _write_json(run.path("split"), {"seed": sp.seed, "ratios": list(sp.ratios),
                                     "train": [c.id for c in sp.train], "val": [c.id for c in sp.val],
                                     "test": [c.id for c in sp.test]})
    run.wrote("split")
    run.details["split"] = {"train": len(sp.train), "val": len(sp.val), "test": len(sp.test)}


def _splits(run, stage) -> corpus.DatasetSplit:
    data = _labeled(run, stage)
    with open(run.need("split", stage), encoding="utf-8") as f:
        ids = json.load(f)
    by_id = {c.id: c for c in data}
    missing = [i for part in ("train", "val", "test") for i in ids[part] if i not in by_id]
    if missing:
        raise corpus.CorpusError(f"split.json names {len(missing)} ids absent from labeled.csv (e.g. {missing[0]})")
    return corpus.DatasetSplit(*[[by_id[i] for i in ids[p]] for p in ("train", "val", "test")],
                               seed=ids["seed"], ratios=tuple(ids["ratios"]))


def _pretrain_config(cfg: RunConfig) -> TrainConfig:
    p = cfg.pretrain
    return TrainConfig(lr=p.lr, batch_size=p.batch_size, epochs=p.epochs, max_len=cfg.train.max_len, seed=p.seed,
                       verbose=cfg.train.verbose, weight_decay=cfg.train.weight_decay, min_freq=cfg.train.min_freq)


def do_pretrain(run: Run):
    cfg = run.config
    sp = _splits(run, "pretrain")
    model = new_model(sp.train, cfg.model_dict(), cfg.train)
    history = pretrain([c.clean for c in sp.train], model, _pretrain_config(cfg))
    model.save(run.path("pretrained"), extra={"stage": "pretrain"})
    _write_json(run.path("pretrain_history"), history)
    run.wrote("pretrained")
    run.wrote("pretrain_history")


def do_finetune(run: Run):
    cfg = run.config
    sp = _splits(run, "finetune")
    if cfg.pretrain.enabled:
        model = XLNetClassifier.load(run.need("pretrained", "finetune"))
    else:
        model = new_model(sp.train, cfg.model_dict(), cfg.train)
    result = fine_tune(sp, model, cfg.train)
    result.model.save(run.path("model"), extra={"best_epoch": result.best_epoch})
    _write_json(run.path("history"), result.history_json())
    run.wrote("model")
    run.wrote("history")
    run.details["finetune"] = {"best_epoch": result.best_epoch}
    if cfg.baseline.enabled:
        b = cfg.baseline
        lin = baseline.train_logistic(sp, l2=b.l2, epochs=b.epochs, lr=b.lr, seed=cfg.train.seed,
                                      min_freq=cfg.train.min_freq)
        lin.save(run.path("baseline"))
        run.wrote("baseline")


def _score(preds, items):
    truths = [int(c.label) for c in items]
    return metrics.evaluate_predictions(truths, [p.predicted for p in preds],
                                        np.array([p.probabilities for p in preds]).reshape(len(preds), -1))


def do_evaluate(run: Run):
    sp = _splits(run, "evaluate")
    model = XLNetClassifier.load(run.need("model", "evaluate"))
    if not sp.test:
        raise corpus.CorpusError("test split is empty")
    rep = _score(model.predict_batch(sp.test), sp.test)
    text, js = metrics.render_report(rep)
    _write_text(run.path("metrics"), js)
    _write_text(run.path("metrics_text"), text)
    run.wrote("metrics")
    run.wrote("metrics_text")
    run.details["evaluate"] = {"accuracy": rep.accuracy}
    if run.config.baseline.enabled and os.path.isfile(run.path("baseline")):
        lin = baseline.LinearModel.load(run.need("baseline", "evaluate"))
        brep = _score(baseline.predict_batch(lin, sp.test), sp.test)
        _write_text(run.path("baseline_metrics"), metrics.render_report(brep)[1])
        run.wrote("baseline_metrics")
        run.details["evaluate"]["baseline_accuracy"] = brep.accuracy
    log.info("evaluate: %s", run.details["evaluate"])


def do_explain(run: Run):
    e = run.config.explain
    sp = _splits(run, "explain")
    if e.model == "baseline":
        model = baseline.LinearModel.load(run.need("baseline", "explain"))
    else:
        model = XLNetClassifier.load(run.need("model", "explain"))
    if e.comment_ids:
        by_id = {c.id: c for c in sp.train + sp.val + sp.test}
        unknown = [i for i in e.comment_ids if i not in by_id]
        if unknown:
            raise corpus.CorpusError(f"explain.comment_ids not in the dataset: {', '.join(unknown)}")
        chosen = [by_id[i] for i in e.comment_ids]
    else:
        chosen = sp.test[: e.count]
    records, texts = [], []
    for c in chosen:
        att = shapley.explain(model, c, e.method, e.samples, e.seed, e.mode)
        text, js = shapley.force_report(att)
        records.append(json.loads(js))
        texts.append(text)
    _write_json(run.path("attributions"), records)
    _write_text(run.path("attributions_text"), "\n".join(texts))
    run.wrote("attributions")
    run.wrote("attributions_text")


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def do_report(run: Run):
    m = _read_json(run.need("metrics", "report"))
    lines = ["# sentipipe run report", ""]
    hist_path = run.path("history")
    if os.path.isfile(hist_path):
        run.need("history", "report")
        lines += ["## Fine-tuning history", "", "| epoch | train loss | val accuracy |", "|---|---|---|"]
        for r in _read_json(hist_path):
            va = "-" if r["val_accuracy"] is None else f"{r['val_accuracy']:.4f}"
            lines.append(f"| {r['epoch']} | {r['train_loss']:.4f} | {va} |")
        lines.append("")
    lines += ["## Test metrics", "", "| model | accuracy | macro F1 | weighted F1 | error rate |", "|---|---|---|---|---|"]
    rows = [("xlnet", m)]
    if os.path.isfile(run.path("baseline_metrics")):
        rows.append(("bag-of-words logistic", _read_json(run.need("baseline_metrics", "report"))))
    for name, r in rows:
        lines.append(f"| {name} | {r['accuracy']:.4f} | {r['macro_f1']:.4f} | {r['weighted_f1']:.4f} | "
                     f"{r['error_rate']:.4f} |")
    lines += ["", "| class | precision | recall | f1 | specificity | auc | support |", "|---|---|---|---|---|---|---|"]
    for c in m["classes"]:
        auc = "-" if c["auc"] is None else f"{c['auc']:.2f}"
        lines.append(f"| {c['label']} | {c['precision']:.2f} | {c['recall']:.2f} | {c['f1']:.2f} | "
                     f"{c['specificity']:.2f} | {auc} | {c['support']} |")
    if "confusion_matrix" in m:
        lines += ["", "Confusion matrix (rows = truth, columns = prediction, order "
                  + ", ".join(c["label"] for c in m["classes"]) + "):", ""]
        lines += ["    " + " ".join(f"{v:5d}" for v in row) for row in m["confusion_matrix"]]
    if os.path.isfile(run.path("attributions")):
        lines += ["", "## Token attributions", ""]
        for a in _read_json(run.need("attributions", "report")):
            top = sorted(a["tokens"], key=lambda t: (-abs(t["phi"]), t["position"]))[:5]
            words = ", ".join(f"{t['token']} ({t['phi']:+.3f})" for t in top) or "none"
            lines.append(f"- {a['comment_id']} -> {a['class']} ({a['method']}): {words}")
    _write_text(run.path("report"), "\n".join(lines) + "\n")
    run.wrote("report")


STAGES = {
    "preprocess": do_preprocess, "label": do_label, "split": do_split, "pretrain": do_pretrain,
    "finetune": do_finetune, "evaluate": do_evaluate, "explain": do_explain, "report": do_report,
}


def plan(config: RunConfig, command: str) -> list[str]:
    if command != "all":
        return [command]
    return [s for s in STAGES if s != "pretrain" or config.pretrain.enabled]


def execute(config: RunConfig, command: str) -> Run:
    """Run ``command``; raises RunFailure naming the failing stage. The manifest is written either way."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    run = Run(config, command)
    os.makedirs(run.out, exist_ok=True)
    t0 = time.perf_counter()
    status, failed, error = "ok", None, None
    try:
        for stage in plan(config, command):
            failed = stage
            STAGES[stage](run)
            run.stages.append(stage)
        failed = None
    except Exception as e:
        status, error = "failed", f"{type(e).__name__}: {e}"
        raise RunFailure(failed, e) from e
    finally:
        write_manifest(run, status, failed, error, time.perf_counter() - t0)
    return run


def manifest_dict(run: Run, status: str, stage: str | None, error: str | None, wall: float) -> dict:
    return {
        "command": run.command,
        "version": __version__,
        "status": status,
        "failed_stage": stage,
        "error": error,
        "stages": run.stages,
        "config_digest": run.config.digest(),
        "seeds": run.config.seeds(),
        "digests": {"inputs": dict(sorted(run.inputs.items())), "outputs": dict(sorted(run.outputs.items()))},
        "details": run.details,
        "wall_time_s": round(wall, 3),
    }


def write_manifest(run: Run, status="ok", stage=None, error=None, wall=0.0) -> str:
    path = os.path.join(run.out, f"manifest-{run.command}.json")
    _write_json(path, manifest_dict(run, status, stage, error, wall))
    return path


def build_parser():
    ap = argparse.ArgumentParser(prog="sentipipe", description="Comment sentiment pipeline: "
                                 "lexicon labeling, a small XLNet-style classifier, metrics and Shapley attributions.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides out_dir in the config)")
    ap.add_argument("--seed", type=int, help="override every seed in the config")
    ap.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.verbose:
        logging.getLogger("sentipipe").setLevel(logging.INFO)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"sentipipe: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            print("sentipipe: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return 2
        cfg = cfg.with_seed(args.seed)
    if args.out:
        from dataclasses import replace

        cfg = replace(cfg, out_dir=os.path.abspath(args.out))
    if not args.verbose and cfg.train.verbose:
        # verbose 1 in the training section: per-epoch progress lines
        logging.getLogger("sentipipe.xlnet").setLevel(logging.INFO)
    try:
        run = execute(cfg, args.command)
    except RunFailure as e:
        print(f"sentipipe: {args.command} failed at stage {e.stage}: {e.cause}", file=sys.stderr)
        return 1
    print(f"sentipipe {args.command}: ok ({', '.join(run.stages)}) -> {run.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
