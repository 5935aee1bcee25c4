"""Shapley-value token attributions.

Players are the real token positions of one encoded comment (CLS and padding
excluded). A coalition keeps its tokens and replaces every other player with
the MASK id, so sequence length and positions never change. Three estimators
share one memoized value function: exact enumeration, permutation sampling and
kernel-weighted least squares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Label
from .xlnet.vocab import CLS, MASK, PAD

EXACT_LIMIT = 15


class ShapleyError(ValueError):
    pass


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class ValueFunction:
    """v(S) for one instance: the explained class's probability (or logit) with
    non-members replaced by ``baseline_id``.

    ``predict_logits`` maps an int array (B, L) to logits (B, K).
    """

    def __init__(self, predict_logits, ids, target_class: int | None = None, baseline_id: int = MASK,
                 mode: str = "probability", batch_size: int = 256):
        if mode not in ("probability", "logit"):
            raise ShapleyError(f"mode must be 'probability' or 'logit', got {mode!r}")
        self.predict_logits = predict_logits
        self.ids = np.asarray(ids, dtype=np.int64).copy()
        self.ids.setflags(write=False)
        self.positions = np.flatnonzero((self.ids != PAD) & (self.ids != CLS))
        self.baseline_id = baseline_id
        self.mode = mode
        self.batch_size = batch_size
        self._cache: dict[int, float] = {}
        if target_class is None:
            target_class = int(np.argmax(self._outputs(self.ids[None])[0]))
        self.target_class = int(target_class)

    @property
    def n(self) -> int:
        return len(self.positions)

    def _outputs(self, batch):
        z = np.asarray(self.predict_logits(batch), dtype=np.float64)
        return _softmax(z) if self.mode == "probability" else z

    def masked_ids(self, mask: int) -> np.ndarray:
        row = self.ids.copy()
        for j, pos in enumerate(self.positions):
            if not (mask >> j) & 1:
                row[pos] = self.baseline_id
        return row

    def evaluate_masks(self, masks) -> np.ndarray:
        """Values for integer bitmasks (bit j set = player j present); memoized."""
        masks = [int(m) for m in masks]
        todo = sorted({m for m in masks if m not in self._cache})
        for i in range(0, len(todo), self.batch_size):
            chunk = todo[i: i + self.batch_size]
            out = self._outputs(np.stack([self.masked_ids(m) for m in chunk]))[:, self.target_class]
            if not np.all(np.isfinite(out)):
                raise ShapleyError("value function returned a non-finite value")
            self._cache.update(zip(chunk, out.tolist()))
        return np.array([self._cache[m] for m in masks])

    def evaluate(self, coalition) -> float:
        mask = 0
        for j in coalition:
            mask |= 1 << int(j)
        return float(self.evaluate_masks([mask])[0])


class Game:
    """Wrap an arbitrary set function ``fn(frozenset) -> float`` over n players."""

    def __init__(self, fn, n: int, target_class: int = 0):
        self.fn, self._n, self.target_class = fn, n, target_class
        self._cache: dict[int, float] = {}

    @property
    def n(self):
        return self._n

    def evaluate_masks(self, masks) -> np.ndarray:
        out = []
        for m in masks:
            m = int(m)
            if m not in self._cache:
                val = float(self.fn(frozenset(j for j in range(self._n) if (m >> j) & 1)))
                if not math.isfinite(val):
                    raise ShapleyError("value function returned a non-finite value")
                self._cache[m] = val
            out.append(self._cache[m])
        return np.array(out)

    def evaluate(self, coalition) -> float:
        return float(self.evaluate_masks([sum(1 << int(j) for j in set(coalition))])[0])


@dataclass
class Attribution:
    phi: np.ndarray
    base_value: float
    explained_value: float
    target_class: int
    method: str
    stderr: np.ndarray | None = None
    samples: int | None = None
    seed: int | None = None
    tokens: list[str] | None = None
    positions: list[int] | None = None
    comment_id: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        """Efficiency residual: sum(phi) - (v(N) - v(empty))."""
        return float(self.phi.sum() - (self.explained_value - self.base_value))


def _check_n(vf, n):
    if n is None:
        n = vf.n
    if n != vf.n:
        raise ShapleyError(f"n={n} but the value function has {vf.n} players")
    return n


def _ends(vf, n):
    base, full = vf.evaluate_masks([0, (1 << n) - 1])
    return float(base), float(full)


def exact_shapley(vf, n: int | None = None) -> Attribution:
    """Full enumeration of all 2^n coalitions."""
    n = _check_n(vf, n)
    if n > EXACT_LIMIT:
        raise ShapleyError(f"exact Shapley over {n} tokens needs 2^{n} evaluations (limit {EXACT_LIMIT}); "
                           "use method 'permutation' or 'kernel'")
    if n == 0:
        base, _ = _ends(vf, 0)
        return Attribution(np.zeros(0), base, base, vf.target_class, "exact")
    masks = np.arange(1 << n)
    vals = vf.evaluate_masks(masks)
    size = np.array([bin(m).count("1") for m in masks])
    w = np.array([math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)])
    phi = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(w[size[without]] * (vals[without | bit] - vals[without]))
    return Attribution(phi, float(vals[0]), float(vals[-1]), vf.target_class, "exact")


def permutation_shapley(vf, n: int | None = None, m_samples: int = 200, seed: int = 0) -> Attribution:
    """Mean marginal contribution over ``m_samples`` seeded uniform orderings."""
    n = _check_n(vf, n)
    if m_samples < 1:
        raise ShapleyError("m_samples must be >= 1")
    rng = np.random.default_rng(seed)
    orders = np.array([rng.permutation(n) for _ in range(m_samples)], dtype=np.int64).reshape(m_samples, n)
    chains = np.zeros((m_samples, n + 1), dtype=np.int64)
    for k in range(n):
        chains[:, k + 1] = chains[:, k] | (1 << orders[:, k])
    vals = vf.evaluate_masks(chains.reshape(-1)).reshape(m_samples, n + 1)
    contrib = np.zeros((m_samples, n))
    np.put_along_axis(contrib, orders, np.diff(vals, axis=1), axis=1)
    phi = contrib.mean(axis=0)
    stderr = contrib.std(axis=0, ddof=1) / math.sqrt(m_samples) if m_samples > 1 else np.zeros(n)
    base, full = _ends(vf, n)
    return Attribution(phi, base, full, vf.target_class, "permutation", stderr, m_samples, seed)


def kernel_weight(n: int, s: int) -> float:
    """Shapley kernel for a coalition of size s (0 < s < n)."""
    return (n - 1) / (math.comb(n, s) * s * (n - s))


def _sample_coalitions(n, m, rng):
    # sizes drawn in proportion to their total kernel weight, members uniform within a size
    sizes = np.arange(1, n)
    size_mass = np.array([(n - 1) / (s * (n - s)) for s in sizes])
    q_size = size_mass / size_mass.sum()
    out, weights = [], []
    for s in rng.choice(sizes, size=m, p=q_size):
        members = rng.choice(n, size=int(s), replace=False)
        out.append(int(np.sum(1 << members.astype(np.int64))))
        q = q_size[s - 1] / math.comb(n, int(s))
        weights.append(kernel_weight(n, int(s)) / q)
    return out, np.array(weights)


def kernel_regression(masks, weights, values, n, base, full) -> np.ndarray:
    """Weighted least squares for phi with sum(phi) = full - base enforced exactly.

    Rows are coalitions (bitmasks) with weights and values; the constraint is
    eliminated by substituting phi[n-1] = (full - base) - sum(phi[:n-1]).
    """
    delta = full - base
    if n == 1:
        return np.array([delta])
    Z = ((np.asarray(masks, dtype=np.int64)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    X = Z[:, :-1] - Z[:, -1:]
    y = np.asarray(values) - base - Z[:, -1] * delta
    sw = np.sqrt(np.asarray(weights, dtype=np.float64))
    A, b = X * sw[:, None], y * sw
    if np.linalg.matrix_rank(A) < n - 1:
        raise ShapleyError("kernel regression system is singular; draw more coalitions")
    head, *_ = np.linalg.lstsq(A, b, rcond=None)
    return np.r_[head, delta - head.sum()]


def kernel_shap(vf, n: int | None = None, m_samples: int = 200, seed: int = 0) -> Attribution:
    """Kernel-weighted regression over sampled coalitions.

    When ``m_samples`` covers every proper coalition (2^n - 2) they are all
    enumerated instead, which makes the regression reproduce exact values.
    """
    n = _check_n(vf, n)
    if m_samples < n + 2:
        raise ShapleyError(f"kernel SHAP needs m_samples >= n + 2 = {n + 2}")
    base, full = _ends(vf, n)
    if n >= 2 and m_samples >= (1 << n) - 2:
        masks = list(range(1, (1 << n) - 1))
        weights = np.array([kernel_weight(n, bin(m).count("1")) for m in masks])
    elif n >= 2:
        masks, weights = _sample_coalitions(n, m_samples, np.random.default_rng(seed))
    else:
        masks, weights = [], np.zeros(0)
    values = vf.evaluate_masks(masks) if masks else np.zeros(0)
    phi = kernel_regression(masks, weights, values, n, base, full)
    return Attribution(phi, base, full, vf.target_class, "kernel", None, m_samples, seed)


METHODS = {"exact": exact_shapley, "permutation": permutation_shapley, "kernel": kernel_shap}


def attribute(vf, method: str = "permutation", m_samples: int = 200, seed: int = 0) -> Attribution:
    if method not in METHODS:
        raise ShapleyError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    if method == "exact":
        return exact_shapley(vf)
    return METHODS[method](vf, m_samples=m_samples, seed=seed)


# --- model adapters -------------------------------------------------------


def xlnet_logits(model):
    from .xlnet.model import classify_logits

    return lambda ids: classify_logits(ids, model.params, model.config).data


def linear_logits(model):
    from .baseline import featurize

    return lambda ids: model.class_scores(featurize(list(np.asarray(ids)), model.vocab))


def explain(model, comment, method: str = "permutation", m_samples: int = 200, seed: int = 0,
            mode: str = "probability", target_class: int | None = None, max_len: int | None = None) -> Attribution:
    """Attribute one comment's prediction to its tokens.

    ``model`` is an XLNetClassifier or a baseline LinearModel; ``comment`` a
    CleanComment, LabeledComment or token list.
    """
    from .xlnet.vocab import encode, model_tokens

    clean = getattr(comment, "clean", comment)
    tokens = list(getattr(clean, "tokens", clean))
    if hasattr(model, "params"):
        predict, L = xlnet_logits(model), max_len or model.config.max_len
    else:
        predict, L = linear_logits(model), max_len or len(model_tokens(tokens)) + 1
    ids = encode(tokens, model.vocab, L)
    ids = ids[: max(1, int((ids != PAD).sum()))]  # trailing pads are masked out anyway
    vf = ValueFunction(predict, ids, target_class, mode=mode)
    att = attribute(vf, method, m_samples, seed)
    shown = model_tokens(tokens)[: vf.n]
    att.tokens = shown
    att.positions = [int(p) for p in vf.positions]
    att.comment_id = getattr(comment, "id", None)
    return att


# --- reports --------------------------------------------------------------


def _class_name(c):
    try:
        return Label(c).slug
    except ValueError:
        return f"class{c}"


def attribution_dict(att: Attribution, tokens=None) -> dict:
    tokens = list(tokens if tokens is not None else (att.tokens or [f"t{i}" for i in range(len(att.phi))]))
    if len(tokens) != len(att.phi):
        raise ShapleyError(f"{len(tokens)} tokens but {len(att.phi)} attributions")
    positions = att.positions or list(range(1, len(tokens) + 1))
    rows = []
    for i, (tok, phi) in enumerate(zip(tokens, att.phi)):
        row = {"token": tok, "position": int(positions[i]), "phi": float(phi)}
        if att.stderr is not None:
            row["stderr"] = float(att.stderr[i])
        rows.append(row)
    d = {"comment_id": att.comment_id, "class": _class_name(att.target_class), "method": att.method,
         "base_value": att.base_value, "explained_value": att.explained_value, "tokens": rows}
    if att.seed is not None and att.method != "exact":
        d["seed"] = att.seed
    if att.samples is not None:
        d["samples"] = att.samples
    return d


def force_report(att: Attribution, tokens=None, tol: float = 0.0) -> tuple[str, str]:
    """Text and JSON views of one attribution.

    The summary lists tokens by |phi| descending; the inline view keeps
    sentence order. ``[-]`` marks tokens pushing the explained class's
    output down, ``[+]`` tokens pushing it up.
    """
    d = attribution_dict(att, tokens)
    rows = d["tokens"]
    head = (f"comment {d['comment_id'] or '-'}  class {d['class']}  method {d['method']}\n"
            f"base value {att.base_value:.4f} -> explained value {att.explained_value:.4f}\n")
    influential = [r for r in rows if abs(r["phi"]) > tol]
    if not influential:
        text = head + "no influential tokens\n"
    else:
        ranked = sorted(influential, key=lambda r: (-abs(r["phi"]), r["position"]))
        width = max(len(r["token"]) for r in ranked)
        lines = [head, "by influence:"]
        for r in ranked:
            mark = "[-]" if r["phi"] < 0 else "[+]"
            lines.append(f"  {mark} {r['token']:<{width}}  {r['phi']:+.4f}")
        inline = " ".join(r["token"] if abs(r["phi"]) <= tol else
                          f"{r['token']}[{'-' if r['phi'] < 0 else '+'}]" for r in rows)
        lines += ["in order:", "  " + inline]
        text = "\n".join(lines) + "\n"
    return text, json.dumps(d, indent=2) + "\n"
