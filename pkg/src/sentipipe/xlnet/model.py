"""Two-stream self-attention encoder with a classification head."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import numerics as nx
from ..numerics import Parameter
from .masks import PermutationMask
from .vocab import CLS, MASK, PAD, Vocab


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 32
    n_heads: int = 2
    n_layers: int = 2
    max_len: int = 50
    n_classes: int = 3
    plm_target_fraction: float = 0.25
    d_ff: int | None = None
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if self.max_len < 2:
            raise ValueError("max_len must be at least 2")
        if not 0 < self.plm_target_fraction <= 1:
            raise ValueError("plm_target_fraction must be in (0, 1]")

    @property
    def ff_dim(self) -> int:
        return self.d_ff or 4 * self.d_model

    def to_dict(self):
        return asdict(self)


@dataclass
class StreamState:
    """Final content stream ``h`` (B, L, d) and query stream ``g`` (B, L, d).

    ``g`` is only meaningful at PLM target positions; ``targets`` holds
    (batch, position) index pairs.
    """

    h: nx.Tensor
    g: nx.Tensor | None
    targets: np.ndarray | None = None

    def g_targets(self):
        B, L, d = self.g.shape
        flat = self.targets[:, 0] * L + self.targets[:, 1]
        return nx.take(nx.reshape(self.g, (B * L, d)), flat, axis=0)


@dataclass(frozen=True)
class Prediction:
    logits: np.ndarray
    probabilities: np.ndarray
    predicted: int


def _uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_params(config: ModelConfig, seed: int = 0) -> dict[str, Parameter]:
    """Uniform(+-1/sqrt(fan_in)) for embeddings and linear maps, zeros for biases, ones for gains."""
    rng = np.random.default_rng(seed)
    dt = nx.default_dtype()
    d, f = config.d_model, config.ff_dim
    p = {}

    def add(name, arr):
        p[name] = Parameter(name, arr)

    # an embedding is a linear map from a one-hot input: fan_in is the table height
    add("tok_emb", _uniform(rng, (config.vocab_size, d), config.vocab_size, dt))
    add("pos_emb", _uniform(rng, (config.max_len, d), config.max_len, dt))
    add("query_init", _uniform(rng, (d,), d, dt))
    for layer in range(config.n_layers):
        pre = f"layer{layer}."
        for w in ("wq", "wk", "wv", "wo"):
            add(pre + w, _uniform(rng, (d, d), d, dt))
            add(pre + "b" + w[1], np.zeros(d, dt))
        add(pre + "ln1_g", np.ones(d, dt))
        add(pre + "ln1_b", np.zeros(d, dt))
        add(pre + "ff_w1", _uniform(rng, (d, f), d, dt))
        add(pre + "ff_b1", np.zeros(f, dt))
        add(pre + "ff_w2", _uniform(rng, (f, d), f, dt))
        add(pre + "ff_b2", np.zeros(d, dt))
        add(pre + "ln2_g", np.ones(d, dt))
        add(pre + "ln2_b", np.zeros(d, dt))
    add("lm_bias", np.zeros(config.vocab_size, dt))
    add("cls_w", _uniform(rng, (d, config.n_classes), d, dt))
    add("cls_b", np.zeros(config.n_classes, dt))
    return p


def param_shapes(config: ModelConfig) -> dict[str, tuple]:
    return {k: v.shape for k, v in init_params(config).items()}


# --- blocks ---------------------------------------------------------------


def _linear(x, w, b):
    return nx.add(nx.matmul(x, w), b)


def _split_heads(x, n_heads):
    B, L, d = x.shape
    return nx.transpose(nx.reshape(x, (B, L, n_heads, d // n_heads)), (0, 2, 1, 3))


def _merge_heads(x):
    B, H, L, dh = x.shape
    return nx.reshape(nx.transpose(x, (0, 2, 1, 3)), (B, L, H * dh))


def attention(q_src, kv_src, mask, params, pre, n_heads, probs_out=None):
    """Multi-head scaled dot-product attention. ``mask`` is (B, Lq, Lk) boolean."""
    q = _split_heads(_linear(q_src, params[pre + "wq"], params[pre + "bq"]), n_heads)
    k = _split_heads(_linear(kv_src, params[pre + "wk"], params[pre + "bk"]), n_heads)
    v = _split_heads(_linear(kv_src, params[pre + "wv"], params[pre + "bv"]), n_heads)
    dh = q.shape[-1]
    scores = nx.scale(nx.matmul(q, nx.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    weights = nx.softmax(scores, axis=-1, mask=mask[:, None, :, :])
    if probs_out is not None:
        probs_out.append(weights.data)
    out = _merge_heads(nx.matmul(weights, v))
    return _linear(out, params[pre + "wo"], params[pre + "bo"])


def _post_block(x, delta, params, pre, eps):
    x = nx.layer_norm(nx.add(x, delta), params[pre + "ln1_g"], params[pre + "ln1_b"], eps)
    ff = _linear(nx.gelu(_linear(x, params[pre + "ff_w1"], params[pre + "ff_b1"])),
                 params[pre + "ff_w2"], params[pre + "ff_b2"])
    return nx.layer_norm(nx.add(x, ff), params[pre + "ln2_g"], params[pre + "ln2_b"], eps)


def embed(ids, params):
    """Token embeddings times sqrt(d_model), plus learned positions."""
    B, L = ids.shape
    d = params["tok_emb"].shape[1]
    pos = nx.take(params["pos_emb"], np.arange(L), axis=0)
    return nx.add(nx.scale(nx.gather(params["tok_emb"], ids), math.sqrt(d)), pos)


def query_init(ids, params):
    """Query stream start: a shared learned vector plus position, no token content."""
    L = ids.shape[1]
    pos = nx.take(params["pos_emb"], np.arange(L), axis=0)
    return nx.add(pos, params["query_init"])


def key_padding(ids) -> np.ndarray:
    return (ids != PAD)[:, None, :]


def stack_masks(masks, ids):
    """Batch (B, L, L) content and query masks, restricted to non-pad keys."""
    keys = key_padding(ids)
    content = np.stack([m.content_mask for m in masks]) & keys
    query = np.stack([m.query_mask for m in masks]) & keys
    targets = np.array([(b, t) for b, m in enumerate(masks) for t in m.targets], dtype=np.int64).reshape(-1, 2)
    return content, query, targets


def two_stream_forward(ids, masks, params, config: ModelConfig, probs_out=None) -> StreamState:
    """Run both streams through every layer with shared weights.

    ``masks`` is a list of PermutationMask (one per row of ``ids``). The
    content stream attends under the content mask; the query stream at each
    position attends to content strictly earlier in the factorization order.
    """
    ids = np.asarray(ids)
    if isinstance(masks, PermutationMask):
        masks = [masks]
    content, query, targets = stack_masks(masks, ids)
    h = embed(ids, params)
    # broadcast the (L, d) query start over the batch
    g = nx.add(query_init(ids, params), nx.Tensor(np.zeros(h.shape, h.data.dtype)))
    for layer in range(config.n_layers):
        pre = f"layer{layer}."
        h_att = attention(h, h, content, params, pre, config.n_heads, probs_out)
        g_att = attention(g, h, query, params, pre, config.n_heads, probs_out)
        h = _post_block(h, h_att, params, pre, config.ln_eps)
        g = _post_block(g, g_att, params, pre, config.ln_eps)
    return StreamState(h, g, targets)


def content_forward(ids, params, config: ModelConfig, probs_out=None) -> nx.Tensor:
    """Content stream only, fully bidirectional over non-pad positions."""
    ids = np.asarray(ids)
    B, L = ids.shape
    mask = np.broadcast_to(key_padding(ids), (B, L, L))
    h = embed(ids, params)
    for layer in range(config.n_layers):
        pre = f"layer{layer}."
        h = _post_block(h, attention(h, h, mask, params, pre, config.n_heads, probs_out), params, pre, config.ln_eps)
    return h


def classify_logits(ids, params, config: ModelConfig) -> nx.Tensor:
    h = content_forward(ids, params, config)
    cls = nx.take(h, 0, axis=1)
    return _linear(cls, params["cls_w"], params["cls_b"])


def plm_logits(state: StreamState, params):
    g = state.g_targets()
    return nx.add(nx.matmul(g, nx.transpose(params["tok_emb"], (1, 0))), params["lm_bias"])


def plm_loss(ids, masks, params, config: ModelConfig) -> nx.Tensor:
    """Mean cross-entropy of query-stream predictions at the target positions."""
    ids = np.asarray(ids)
    state = two_stream_forward(ids, masks, params, config)
    if len(state.targets) == 0:
        raise ValueError("batch has no PLM targets")
    truth = ids[state.targets[:, 0], state.targets[:, 1]]
    return nx.cross_entropy(plm_logits(state, params), truth)


def classification_loss(ids, labels, params, config: ModelConfig) -> nx.Tensor:
    return nx.cross_entropy(classify_logits(ids, params, config), np.asarray(labels))


def _softmax_rows(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def make_prediction(logits: np.ndarray) -> Prediction:
    logits = np.asarray(logits, dtype=np.float64)
    # np.argmax returns the first maximum: lowest class index wins ties
    return Prediction(logits, _softmax_rows(logits), int(np.argmax(logits)))


class XLNetClassifier:
    """Parameters, vocabulary and config bundled for training and inference."""

    def __init__(self, config: ModelConfig, vocab: Vocab | None = None, seed: int = 0, params=None):
        self.config = config
        self.vocab = vocab
        self.params = params if params is not None else init_params(config, seed)

    def parameters(self):
        return list(self.params.values())

    def state_dict(self):
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state):
        for k, arr in state.items():
            self.params[k].data = np.array(arr, dtype=self.params[k].data.dtype)

    def classify_forward(self, ids) -> Prediction | list[Prediction]:
        ids = np.asarray(ids)
        single = ids.ndim == 1
        logits = classify_logits(ids[None] if single else ids, self.params, self.config).data
        preds = [make_prediction(row) for row in logits]
        return preds[0] if single else preds

    def encode(self, comments):
        from .vocab import encode_batch

        return encode_batch(list(comments), self.vocab, self.config.max_len)

    def predict_batch(self, comments, batch_size: int = 64) -> list[Prediction]:
        comments = list(comments)
        out = []
        for i in range(0, len(comments), batch_size):
            out.extend(self.classify_forward(self.encode(comments[i: i + batch_size])))
        return out

    def save(self, path, extra=None):
        from ..numerics import save_checkpoint

        cfg = {"model": self.config.to_dict(), "vocab": self.vocab.to_json() if self.vocab else None}
        save_checkpoint(path, "xlnet", cfg, self.state_dict(), extra)

    @classmethod
    def load(cls, path):
        from ..numerics.checkpoint import CheckpointError, check_shapes, load_checkpoint

        header, tensors = load_checkpoint(path)
        if header.get("kind") != "xlnet":
            raise CheckpointError(f"{path}: not an xlnet checkpoint")
        config = ModelConfig(**header["config"]["model"])
        check_shapes(path, tensors, param_shapes(config))
        vocab = Vocab.from_json(header["config"]["vocab"]) if header["config"]["vocab"] else None
        model = cls(config, vocab)
        model.load_state_dict(tensors)
        return model


__all__ = [
    "CLS", "MASK", "ModelConfig", "Prediction", "StreamState", "XLNetClassifier",
    "classify_logits", "content_forward", "init_params", "plm_loss", "two_stream_forward",
]
