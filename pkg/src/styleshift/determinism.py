"""Seeding helpers for reproducible single-worker runs."""

import hashlib
import random

import numpy as np
import torch


def derive_seed(base_seed: int, *tags) -> int:
    """Stable sub-seed for a named purpose.

    Hashing keeps stage seeds independent of the order stages run in, so
    resuming a pipeline mid-way re-derives the same stream.
    """
    key = f"{base_seed}:" + ":".join(str(t) for t in tags)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def parameter_checksum(module: torch.nn.Module) -> float:
    """Cheap fingerprint of all parameters, for no-mutation assertions."""
    with torch.no_grad():
        return float(sum(p.double().abs().sum().item() for p in module.parameters()))
