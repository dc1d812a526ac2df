"""Verification gates run by honest parties before they commit further."""
from __future__ import annotations

from typing import Mapping

from ..ledger import LedgerState
from ..model import GaeInstance
from .schedule import TimeoutSchedule

POST_STEP_2 = "post-step-2"
POST_STEP_3 = "post-step-3"


def lock_hashes(ledgers: Mapping[int, LedgerState], instance: GaeInstance) -> set:
    return {
        ledgers[a.ledger].locks[a].hashes
        for a in instance.exchanged_assets()
        if a in ledgers[a.ledger].locks
    }


def verify_locks(
    instance: GaeInstance,
    ledgers: Mapping[int, LedgerState],
    phase: str,
    schedule: TimeoutSchedule,
    hash_value: bytes | None = None,
) -> bool:
    """True iff every exchanged asset of the checked ledgers is locked as planned.

    Checks exactly three things per lock: the hash, the recipient set against
    the final owners, and the timeout against the schedule.  Without an
    explicit ``hash_value`` all locks must simply share one hash.
    """
    if phase == POST_STEP_2:
        checked = sorted(instance.exchange1)
    elif phase == POST_STEP_3:
        checked = instance.exchanged_assets()
    else:
        raise ValueError(f"unknown verification phase {phase!r}")
    expected = (hash_value,) if hash_value is not None else None
    for a in checked:
        state = ledgers[a.ledger]
        entry = state.locks.get(a)
        if entry is None or state.clock >= entry.expiry:
            return False
        if expected is None:
            expected = entry.hashes
        if len(entry.hashes) != 1 or entry.hashes != expected:
            return False
        if entry.recipients != instance.final_owners(a):
            return False
        if entry.expiry - entry.created != schedule.offset(a):
            return False
    return True
