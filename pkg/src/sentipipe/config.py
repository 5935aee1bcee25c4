"""Run configuration for the command-line workflow.

A JSON file with optional sections; anything omitted takes its default
(training defaults: lr 2e-4, batch 12, 10 epochs, max_len 50). Relative paths
resolve against the config file's directory. Validation collects every problem
before failing.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

from . import textprep
from .lexicon import ScorerConfig
from .xlnet.train import TrainConfig

SECTIONS = ("pipeline", "scorer", "split", "model", "train", "pretrain", "baseline", "explain")
TOP_LEVEL = ("input", "out_dir") + SECTIONS
BUNDLED = "bundled"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class PipelineSection:
    stages: tuple = textprep.STAGES
    stopwords_path: str | None = None
    lemma_exceptions_path: str | None = None
    translation: str = "identity"
    translation_table: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SplitSection:
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0


@dataclass(frozen=True)
class ModelSection:
    d_model: int = 32
    n_heads: int = 2
    n_layers: int = 2
    plm_target_fraction: float = 0.25
    d_ff: int | None = None


@dataclass(frozen=True)
class PretrainSection:
    enabled: bool = False
    lr: float = 2e-4
    batch_size: int = 12
    epochs: int = 1
    seed: int = 0


@dataclass(frozen=True)
class BaselineSection:
    enabled: bool = True
    l2: float = 1e-3
    epochs: int = 3000
    lr: float = 2.0


@dataclass(frozen=True)
class ExplainSection:
    method: str = "permutation"
    samples: int = 200
    seed: int = 0
    mode: str = "probability"
    count: int = 5
    comment_ids: tuple | None = None
    model: str = "xlnet"


_SECTION_TYPES = {
    "pipeline": PipelineSection, "scorer": ScorerConfig, "split": SplitSection, "model": ModelSection,
    "train": TrainConfig, "pretrain": PretrainSection, "baseline": BaselineSection, "explain": ExplainSection,
}


@dataclass(frozen=True)
class RunConfig:
    input: str = BUNDLED
    out_dir: str = "sentipipe-out"
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    split: SplitSection = field(default_factory=SplitSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    pretrain: PretrainSection = field(default_factory=PretrainSection)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    explain: ExplainSection = field(default_factory=ExplainSection)
    base_dir: str = field(default=".", compare=False)

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.normpath(os.path.join(self.base_dir, path))

    @property
    def input_path(self) -> str:
        if self.input == BUNDLED:
            from importlib import resources

            return str(resources.files("sentipipe") / "data" / "synthetic_comments.csv")
        return self.resolve(self.input)

    @property
    def out_path(self) -> str:
        return self.resolve(self.out_dir)

    def pipeline_config(self) -> textprep.PipelineConfig:
        p = self.pipeline
        kw = {"stages": tuple(p.stages), "translation": p.translation, "translation_table": dict(p.translation_table)}
        if p.stopwords_path:
            kw["stopword_list"] = textprep.load_word_list(self.resolve(p.stopwords_path))
        if p.lemma_exceptions_path:
            kw["lemma_exceptions"] = textprep.load_lemma_exceptions(self.resolve(p.lemma_exceptions_path))
        return textprep.PipelineConfig(**kw)

    def model_dict(self) -> dict:
        return asdict(self.model)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(
            self,
            split=replace(self.split, seed=seed),
            train=replace(self.train, seed=seed),
            pretrain=replace(self.pretrain, seed=seed),
            explain=replace(self.explain, seed=seed),
        )

    def seeds(self) -> dict:
        return {"split": self.split.seed, "train": self.train.seed, "pretrain": self.pretrain.seed,
                "explain": self.explain.seed}

    def to_dict(self) -> dict:
        d = {"input": self.input, "out_dir": self.out_dir}
        for name in SECTIONS:
            sec = asdict(getattr(self, name))
            d[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return "sha256:" + hashlib.sha256(blob).hexdigest()


def _check_type(errors, where, value, kind):
    ok = {
        int: isinstance(value, int) and not isinstance(value, bool),
        float: isinstance(value, (int, float)) and not isinstance(value, bool),
        bool: isinstance(value, bool),
        str: isinstance(value, str),
    }.get(kind, True)
    if not ok:
        errors.append(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
    return ok


_FIELD_KINDS = {"int": int, "float": float, "bool": bool, "str": str}


def _type_name(t) -> str:
    return t.__name__ if isinstance(t, type) else str(t)


def _build_section(name, raw, errors):
    cls = _SECTION_TYPES[name]
    if not isinstance(raw, dict):
        errors.append(f"{name}: expected an object")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for key, value in raw.items():
        if key not in known:
            errors.append(f"{name}.{key}: unknown field")
            continue
        tname = _type_name(known[key].type)
        kind = _FIELD_KINDS.get(tname.split(" |")[0])
        if value is None and "None" in tname:
            kw[key] = None
            continue
        if kind is not None and not _check_type(errors, f"{name}.{key}", value, kind):
            continue
        kw[key] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kw)
    except (ValueError, TypeError) as e:
        for msg in (m.strip() for m in str(e).split(";")):
            head = msg.split(" ", 1)[0]
            errors.append(f"{name}.{msg}" if head in known else f"{name}: {msg}")
        return cls()


def _validate_semantics(cfg: RunConfig, errors, check_paths=True):
    p = cfg.pipeline
    bad = [s for s in p.stages if s not in textprep.STAGES]
    if bad:
        errors.append(f"pipeline.stages: unknown stage(s) {', '.join(map(str, bad))}")
    if p.translation not in ("identity", "dictionary"):
        errors.append("pipeline.translation: must be 'identity' or 'dictionary' "
                      "(external clients are only available through the library API)")
    r = cfg.split.ratios
    if len(r) != 3 or any(not isinstance(x, (int, float)) or x <= 0 for x in r) or abs(sum(r) - 1) > 1e-9:
        errors.append("split.ratios: need three positive numbers summing to 1")
    m = cfg.model
    for key in ("d_model", "n_heads", "n_layers"):
        if getattr(m, key) < (0 if key == "n_layers" else 1):
            errors.append(f"model.{key}: must be positive")
    if m.n_heads >= 1 and m.d_model % m.n_heads:
        errors.append("model.d_model: must be divisible by model.n_heads")
    if not 0 < m.plm_target_fraction <= 1:
        errors.append("model.plm_target_fraction: must be in (0, 1]")
    pre = cfg.pretrain
    if not pre.lr > 0:
        errors.append("pretrain.lr: must be > 0")
    if pre.batch_size < 1 or pre.epochs < 1:
        errors.append("pretrain: batch_size and epochs must be >= 1")
    b = cfg.baseline
    if b.l2 < 0 or not b.lr > 0 or b.epochs < 1:
        errors.append("baseline: need l2 >= 0, lr > 0, epochs >= 1")
    e = cfg.explain
    if e.method not in ("exact", "permutation", "kernel"):
        errors.append("explain.method: must be exact, permutation or kernel")
    if e.mode not in ("probability", "logit"):
        errors.append("explain.mode: must be probability or logit")
    if e.model not in ("xlnet", "baseline"):
        errors.append("explain.model: must be xlnet or baseline")
    if e.samples < 1 or e.count < 0:
        errors.append("explain: samples must be >= 1 and count >= 0")
    for key in ("split", "train", "pretrain", "explain"):
        if getattr(cfg, key).seed < 0:
            errors.append(f"{key}.seed: must be a non-negative integer")
    if check_paths:
        if cfg.input != BUNDLED and not os.path.isfile(cfg.input_path):
            errors.append(f"input: file not found: {cfg.input_path}")
        for key in ("stopwords_path", "lemma_exceptions_path"):
            path = getattr(p, key)
            if path and not os.path.isfile(cfg.resolve(path)):
                errors.append(f"pipeline.{key}: file not found: {cfg.resolve(path)}")
        parent = os.path.dirname(os.path.abspath(cfg.out_path))
        if not os.path.isdir(parent):
            errors.append(f"out_dir: parent directory does not exist: {parent}")


def config_from_dict(raw: dict, base_dir: str = ".", check_paths: bool = True) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])
    errors = []
    for key in raw:
        if key not in TOP_LEVEL:
            errors.append(f"{key}: unknown top-level field")
    kw = {"base_dir": base_dir}
    for key in ("input", "out_dir"):
        if key in raw:
            if raw[key] is None and key == "input":
                kw[key] = BUNDLED
            elif _check_type(errors, key, raw[key], str):
                kw[key] = raw[key]
    for name in SECTIONS:
        if name in raw:
            kw[name] = _build_section(name, raw[name], errors)
    cfg = RunConfig(**kw)
    _validate_semantics(cfg, errors, check_paths)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: not valid JSON ({e})"]) from None
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))


def dump_config(cfg: RunConfig, path=None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    return text
