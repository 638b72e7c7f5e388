"""Boundary verification between the trainer and the assessment core.

Rebuilds the torch model from a portable weight export and compares
its float64 forward pass against the core's numpy inference on random
feature windows. A deviation at or above 1e-5 signals a schema or
frame-convention mismatch.
"""

from __future__ import annotations

import numpy as np

from uavrisk.flight import ContextFeatures, FeatureFrame
from uavrisk.power import TcnWeights, load_weights, tcn_forward

from .model import rebuild_torch, torch_predict

DEVIATION_LIMIT = 1e-5


class BoundaryError(Exception):
    pass


def random_window(rng, length):
    """Plausible raw feature window (T, 5) plus a context pair."""
    bx = rng.normal(0.0, 4.0, length)
    by = rng.normal(0.0, 2.0, length)
    vz = rng.normal(0.0, 1.2, length)
    airspeed = np.sqrt(bx ** 2 + by ** 2 + vz ** 2)
    alpha = rng.uniform(-0.4, 0.4, length)
    feats = np.column_stack([airspeed, bx, by, vz, alpha])
    ctx = np.array([rng.uniform(1.0, 1.3), rng.uniform(0.0, 1.5)])
    return feats, ctx


def cross_check_inference(weights_or_path, n_windows: int = 1000,
                          seed: int = 2718, swap_body_axes: bool = False):
    """Max relative deviation between trainer-side and core inference.

    `swap_body_axes` deliberately feeds the torch side a mirrored
    convention; it exists for the negative test of this very check.
    """
    if isinstance(weights_or_path, TcnWeights):
        weights = weights_or_path
    else:
        weights = load_weights(weights_or_path)
    model = rebuild_torch(weights)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_windows):
        length = int(rng.integers(1, weights.receptive_field + 10))
        feats, ctx = random_window(rng, length)
        core = tcn_forward(weights, [FeatureFrame(*row) for row in feats],
                           ContextFeatures(*ctx))
        torch_feats = feats[-weights.receptive_field:]
        if swap_body_axes:
            torch_feats = torch_feats[:, [0, 2, 1, 3, 4]]
        ours = float(torch_predict(model, weights, torch_feats, ctx)[-1])
        rel = abs(ours - core) / max(abs(core), 1e-9)
        worst = max(worst, rel)
    if not swap_body_axes and worst >= DEVIATION_LIMIT:
        raise BoundaryError(
            f"trainer/core inference deviates by {worst:.3e} "
            f"(limit {DEVIATION_LIMIT:g}); schema or convention mismatch")
    return worst
