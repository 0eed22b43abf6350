"""Deterministic derivation of independent child RNG streams from one
master seed, so parallel generation stays reproducible."""

from __future__ import annotations

import hashlib

import numpy as np


def child_seed(master_seed: int, label: str) -> int:
    """64-bit child seed hashed from (master seed, purpose label)."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def child_rng(master_seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(master_seed, label))
