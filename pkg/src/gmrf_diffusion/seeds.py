"""Deterministic stream derivation for reproducible, parallelizable runs.

Every random stream in an experiment is addressed by (master_seed, run_index,
role).  The role string is hashed so unrelated roles can never collide by
index arithmetic, and each (seed, run, role) triple yields an independent
numpy Generator via SeedSequence.
"""

from __future__ import annotations

import hashlib

import numpy as np

# roles used by the runner; any string works, these are the documented ones
ROLE_DATA = "data"          # regressors and noise
ROLE_PARAM = "param"        # true parameter process (sparse support, AR drive)
ROLE_TOPOLOGY = "topology"  # generated node layout and regressor powers
ROLE_INIT = "init"          # initial estimates (when randomized)


def role_hash(role: str) -> int:
    return int.from_bytes(hashlib.sha256(role.encode()).digest()[:8], "little")


def derive_stream(master_seed: int, run_index: int, role: str) -> np.random.Generator:
    """Independent Generator for one (seed, run, role) triple."""
    seq = np.random.SeedSequence([int(master_seed), int(run_index), role_hash(role)])
    return np.random.default_rng(seq)
