"""Party behaviours and strategy profiles."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import PartyId, fmt_parties


class Kind(enum.Enum):
    HONEST = "honest"
    ABORT_AT = "abort_at"
    WITHHOLD_SECRET = "withhold"
    COLLUDE_RELOCK = "collude_relock"
    MPC_DELAY = "mpc_delay"
    MPC_ABORT = "mpc_abort"


@dataclass(frozen=True)
class Strategy:
    kind: Kind = Kind.HONEST
    step: int = 0
    partners: frozenset = frozenset()
    ticks: int = 0
    # collusion timing: partner relocks after letting a correct lock lapse
    # instead of never locking correctly in the first place
    after_lapse: bool = False

    def __str__(self) -> str:
        if self.kind is Kind.ABORT_AT:
            return f"abort_at({self.step})"
        if self.kind is Kind.MPC_DELAY:
            return f"mpc_delay({self.ticks})"
        if self.kind is Kind.COLLUDE_RELOCK:
            suffix = ";lapse" if self.after_lapse else ""
            return f"collude_relock({fmt_parties(self.partners)}{suffix})"
        return self.kind.value

    @property
    def honest(self) -> bool:
        return self.kind is Kind.HONEST


HONEST = Strategy()


def abort_at(step: int) -> Strategy:
    return Strategy(Kind.ABORT_AT, step=step)


def withhold() -> Strategy:
    return Strategy(Kind.WITHHOLD_SECRET)


def collude_relock(partners: Iterable[PartyId], after_lapse: bool = False) -> Strategy:
    return Strategy(Kind.COLLUDE_RELOCK, partners=frozenset(partners), after_lapse=after_lapse)


def mpc_delay(ticks: int) -> Strategy:
    return Strategy(Kind.MPC_DELAY, ticks=ticks)


def mpc_abort() -> Strategy:
    return Strategy(Kind.MPC_ABORT)


_STRATEGY_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_strategy(text: str) -> Strategy:
    m = _STRATEGY_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse strategy {text!r}")
    name, arg = m.group(1), m.group(2)
    if name == "honest" and arg is None:
        return HONEST
    if name == "withhold" and arg is None:
        return withhold()
    if name == "mpc_abort" and arg is None:
        return mpc_abort()
    if name == "abort_at" and arg:
        return abort_at(int(arg))
    if name == "mpc_delay" and arg:
        return mpc_delay(int(arg))
    if name == "collude_relock" and arg:
        parties, _, flag = arg.partition(";")
        if flag.strip() not in ("", "lapse"):
            raise ValueError(f"unknown collusion flag {flag!r}")
        members = [p.strip() for p in parties.split(",") if p.strip()]
        if not members:
            raise ValueError("collude_relock needs at least one partner")
        return collude_relock(members, after_lapse=flag.strip() == "lapse")
    raise ValueError(f"cannot parse strategy {text!r}")


@dataclass(frozen=True)
class StrategyProfile:
    assignment: Mapping[PartyId, Strategy]

    def __getitem__(self, party: PartyId) -> Strategy:
        return self.assignment.get(party, HONEST)

    def __hash__(self):
        return hash(tuple(sorted((p, s) for p, s in self.assignment.items())))

    def __eq__(self, other):
        if not isinstance(other, StrategyProfile):
            return NotImplemented
        return self.normalized() == other.normalized()

    def normalized(self) -> tuple:
        return tuple(sorted((p, s) for p, s in self.assignment.items() if not s.honest))

    def deviators(self) -> list[PartyId]:
        return [p for p, s in sorted(self.assignment.items()) if not s.honest]

    def partners(self) -> frozenset:
        out: set = set()
        for s in self.assignment.values():
            if s.kind is Kind.COLLUDE_RELOCK:
                out |= s.partners
        return frozenset(out)

    def is_honest(self, party: PartyId) -> bool:
        return self[party].honest and party not in self.partners()

    def honest_parties(self, parties: Iterable[PartyId]) -> list[PartyId]:
        partners = self.partners()
        return [p for p in sorted(parties) if self[p].honest and p not in partners]

    def describe(self) -> str:
        devs = self.normalized()
        if not devs:
            return "all-honest"
        return " ".join(f"{p}={s}" for p, s in devs)


def all_honest(parties: Iterable[PartyId] = ()) -> StrategyProfile:
    return StrategyProfile({p: HONEST for p in parties})


def profile(**assignment: Strategy) -> StrategyProfile:
    return StrategyProfile(dict(assignment))
