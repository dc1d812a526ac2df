"""Random small exchange instances for exhaustive checks."""
from __future__ import annotations

import random

from .model import GaeInstance, require_valid

PARTY_NAMES = "WXYZ"


def _subset(rng: random.Random, parties: list[str]) -> frozenset:
    while True:
        picked = frozenset(p for p in parties if rng.random() < 0.5)
        if picked:
            return picked


def random_instance(
    rng: random.Random,
    max_parties: int = 4,
    max_assets: int = 3,
    held_probability: float = 0.2,
) -> GaeInstance:
    """A valid instance with at least one asset exchanged on ledger 1."""
    n = rng.randint(2, max_parties)
    parties = list(PARTY_NAMES[:n])
    transfers, held = [], []
    for ledger, prefix in ((1, "A"), (2, "B")):
        for i in range(rng.randint(1, max_assets)):
            name = f"{prefix}{i}"
            io = _subset(rng, parties)
            must_move = ledger == 1 and i == 0
            if not must_move and rng.random() < held_probability:
                held.append((ledger, name, io))
                continue
            fo = _subset(rng, parties)
            while fo == io:
                fo = _subset(rng, parties)
            transfers.append((ledger, name, io, fo))
    return require_valid(GaeInstance.from_transfers(transfers, held, parties))


def instance_corpus(seed: int, count: int, **kwargs) -> list[GaeInstance]:
    rng = random.Random(seed)
    return [random_instance(rng, **kwargs) for _ in range(count)]
