"""Factorization orders and the two attention masks they induce."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PermutationMask:
    """``mask[i, j]`` is True when position i may attend to position j."""

    order: np.ndarray
    content_mask: np.ndarray
    query_mask: np.ndarray
    targets: np.ndarray


def sample_permutation(length: int, rng_seed, pin_first: bool = True) -> np.ndarray:
    """Seeded Fisher-Yates over positions; position 0 (CLS) stays first when pinned."""
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    z = list(range(length))
    lo = 1 if pin_first else 0
    for i in range(length - 1, lo, -1):
        j = int(rng.integers(lo, i + 1))
        z[i], z[j] = z[j], z[i]
    return np.array(z, dtype=np.int64)


def ranks(order) -> np.ndarray:
    order = np.asarray(order)
    r = np.empty(len(order), dtype=np.int64)
    r[order] = np.arange(len(order))
    return r


def build_plm_masks(order, target_fraction: float = 0.25, n_real: int | None = None,
                    exclude=(0,)) -> PermutationMask:
    """Masks for one sequence.

    ``order`` lists positions in factorization order. Targets are the last
    ceil(fraction * n_real) real (non-pad) positions of that order, never a
    position in ``exclude``. Pad positions are expected after the real ones
    in ``order``.
    """
    order = np.asarray(order, dtype=np.int64)
    L = len(order)
    if sorted(order.tolist()) != list(range(L)):
        raise ValueError("order is not a permutation")
    n_real = L if n_real is None else n_real
    r = ranks(order)
    content = r[None, :] <= r[:, None]
    query = r[None, :] < r[:, None]
    real_in_order = [p for p in order.tolist() if p < n_real]
    eligible = [p for p in real_in_order if p not in exclude]
    k = min(math.ceil(target_fraction * n_real), len(eligible))
    targets = np.array(eligible[len(eligible) - k:] if k else [], dtype=np.int64)
    return PermutationMask(order, content, query, targets)
