"""Seeded random streams.

Every trial owns a generator derived from ``(master_seed, trial_index)``
through :class:`numpy.random.SeedSequence`, so streams are independent and
replayable no matter which worker executes the trial.
"""

from __future__ import annotations

import numpy as np

_DOUBLE_STEPS = 2**53


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial,))
    return np.random.Generator(np.random.PCG64(seq))


def open_uniform(rng: np.random.Generator, size: int | None = None):
    """Uniform draw(s) on the open interval (0, 1).

    ``Generator.random`` can return exactly 0.0, which breaks log-based
    inverse transforms; this uses the midpoints of a 2**53 grid instead.
    """
    k = rng.integers(0, _DOUBLE_STEPS, size=size, dtype=np.int64)
    return (k + 0.5) / _DOUBLE_STEPS
