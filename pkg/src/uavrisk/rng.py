"""Deterministic random-stream derivation.

Every stochastic component draws from a counter-based Philox generator
keyed by (master_seed, stream_index). Streams are independent of each
other and of scheduling order, which is what makes parallel Monte Carlo
runs reproducible for any worker count. The algorithm name and library
version are pinned into output metadata so results can be reproduced
across installs.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy-philox4x64"


def rng_identity() -> dict:
    return {"algorithm": RNG_ALGORITHM, "provider": "numpy",
            "provider_version": np.__version__}


def substream(master_seed: int, stream_index: int) -> np.random.Generator:
    """Generator for stream `stream_index` under `master_seed`."""
    key = np.array([np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(stream_index & 0xFFFFFFFFFFFFFFFF)])
    return np.random.Generator(np.random.Philox(key=key))


def mix_seed(master_seed: int, salt: int) -> int:
    """Derive a child 64-bit master seed (splitmix64 finalizer)."""
    z = (master_seed + 0x9E3779B97F4A7C15 * (salt + 1)) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)
