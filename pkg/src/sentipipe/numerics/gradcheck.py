"""Central finite-difference check of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import GradientError, backward


@dataclass
class GradCheckReport:
    max_rel_err: float
    tolerance: float
    n_checked: int
    worst: tuple[str, tuple] | None
    per_param: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def rel_err(a: float, n: float, floor: float = 1e-6) -> float:
    return abs(a - n) / max(abs(a), abs(n), floor)


def check_gradients(loss_fn, params, h=1e-5, tolerance=1e-4, max_coords=None, seed=0, floor=1e-6,
                    analytic=None) -> GradCheckReport:
    """Compare analytic gradients of ``loss_fn()`` with (f(x+h) - f(x-h)) / 2h.

    ``loss_fn`` must rebuild the graph on each call. Every coordinate is checked
    unless a parameter has more than ``max_coords`` entries, in which case a
    seeded sample is used. ``analytic`` (name -> array) overrides the tape
    gradient, which is how a corrupted gradient is fed in for harness tests.
    """
    params = list(params)
    for p in params:
        if p.data.dtype != np.float64:
            raise GradientError("gradient checks need float64 parameters")
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data).all():
        raise GradientError("non-finite loss")
    backward(loss)
    grads = {p.name: (analytic or {}).get(p.name, p.grad).copy() for p in params}

    rng = np.random.default_rng(seed)
    worst, worst_at, n = 0.0, None, 0
    per_param = {}
    for p in params:
        size = p.data.size
        if max_coords is not None and size > max_coords:
            coords = rng.choice(size, size=max_coords, replace=False)
        else:
            coords = range(size)
        flat = p.data.reshape(-1)
        pmax = 0.0
        for c in coords:
            old = flat[c]
            flat[c] = old + h
            fp = loss_fn().item()
            flat[c] = old - h
            fm = loss_fn().item()
            flat[c] = old
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise GradientError(f"non-finite loss while perturbing {p.name}")
            num = (fp - fm) / (2 * h)
            e = rel_err(grads[p.name].reshape(-1)[c], num, floor)
            n += 1
            pmax = max(pmax, e)
            if e > worst or worst_at is None:
                worst = max(worst, e)
                worst_at = (p.name, np.unravel_index(c, p.shape))
        per_param[p.name] = pmax
    return GradCheckReport(worst, tolerance, n, worst_at, per_param)
