"""Lock timeouts per asset."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..ledger import LOCK_MODES, PER_ASSET
from ..model import AssetId, GaeInstance, derive_gkt, initial_owner_union


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class TimeoutSchedule:
    base: int
    offsets: Mapping[AssetId, int]
    mode: str = PER_ASSET

    def offset(self, asset: AssetId) -> int:
        return self.offsets[asset]

    def rows(self) -> list[tuple[AssetId, int]]:
        return sorted(self.offsets.items())


def _check_base(T: int) -> None:
    if T < 4 or T % 4:
        raise ScheduleError(f"T must be a positive multiple of 4, got {T}")


def build_schedule(instance: GaeInstance, T: int, mode: str = PER_ASSET) -> TimeoutSchedule:
    """Ledger-1 locks get T.  Ledger-2 locks get T/2, or T/4 in per-asset mode
    when one of the takers also holds the secret, so that the secret holders
    must claim early enough for everybody else to follow."""
    _check_base(T)
    if mode not in LOCK_MODES:
        raise ScheduleError(f"unknown lock mode {mode!r}")
    o1 = initial_owner_union(instance)
    takers = derive_gkt(instance, 2).takers
    offsets = {a: T for a in instance.exchange1}
    for a in instance.exchange2:
        if mode == PER_ASSET and takers[a] & o1:
            offsets[a] = T // 4
        else:
            offsets[a] = T // 2
    return TimeoutSchedule(T, offsets, mode)


def classic_schedule(instance: GaeInstance, T: int) -> TimeoutSchedule:
    """T on ledger 1 and T/2 on ledger 2, the textbook two-party timing."""
    _check_base(T)
    offsets = {a: T for a in instance.exchange1}
    offsets.update({a: T // 2 for a in instance.exchange2})
    return TimeoutSchedule(T, offsets, PER_ASSET)
