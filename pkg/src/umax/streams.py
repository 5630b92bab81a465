"""Deterministic random streams.

Every random quantity in the package is drawn from a ``numpy`` PCG64
generator seeded by a :class:`numpy.random.SeedSequence`. Child streams are
addressed by a path of integers appended to the parent's spawn key, so a
stream depends only on ``(master_seed, path)`` and never on how work is
scheduled.
"""

from __future__ import annotations

import numpy as np

__all__ = ["root", "child", "generator", "trial_stream"]


def root(master_seed: int) -> np.random.SeedSequence:
    if isinstance(master_seed, bool) or int(master_seed) != master_seed or not 0 <= master_seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {master_seed}")
    return np.random.SeedSequence(int(master_seed))


def child(seq: np.random.SeedSequence, *path: int) -> np.random.SeedSequence:
    """Sub-stream of ``seq`` addressed by ``path``; does not mutate ``seq``."""
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + tuple(int(p) for p in path))


def generator(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seq))


def trial_stream(master_seed: int, trial: int) -> np.random.SeedSequence:
    """Stream of trial ``trial``: the SeedSequence hash of ``master_seed`` with spawn key ``(trial,)``."""
    return child(root(master_seed), trial)
