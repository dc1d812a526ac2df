"""Strategy library, profile enumeration and payoff comparison."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .ledger import PER_ASSET
from .model import ExchangeKind, GaeInstance, PartyId, classify, initial_owner_union
from .protocols import HTLC, HTLC_MK, HTLC_MS, MPHTLC, RUNNERS, build_plan, build_schedule
from .protocols.schedule import classic_schedule
from .strategies import (
    HONEST,
    Kind,
    Strategy,
    StrategyProfile,
    abort_at,
    collude_relock,
    mpc_abort,
    mpc_delay,
    withhold,
)


class StrategyError(ValueError):
    pass


def counterparties(instance: GaeInstance, party: PartyId) -> list[PartyId]:
    """Parties that hand over an asset the given party is taking."""
    out: set = set()
    for a in instance.exchanged_assets():
        io, fo = instance.initial_owners(a), instance.final_owners(a)
        if party in fo and party not in io:
            out |= io
    out.discard(party)
    return sorted(out)


def _has_victim(instance: GaeInstance, colluder: PartyId, partners: frozenset) -> bool:
    coalition = partners | {colluder}
    for a in instance.exchanged_assets():
        fo = instance.final_owners(a)
        if colluder in fo and instance.initial_owners(a) & partners and fo - coalition:
            return True
    return False


def _plan(instance: GaeInstance, protocol: str, T: int = 8):
    if protocol == MPHTLC:
        schedule = build_schedule(instance, T, PER_ASSET)
    else:
        schedule = classic_schedule(instance, T)
    return build_plan(instance, protocol, schedule, PER_ASSET)


def delay_parameters(T: int) -> list[int]:
    return sorted({1, max(1, T // 4), T})


def strategy_library(instance: GaeInstance, protocol: str, party: PartyId, T: int = 8) -> list[Strategy]:
    """Non-honest strategies worth trying for one party, in a fixed order.

    Strategies that cannot change anything for this party (aborting at a step
    where it does nothing, colluding with nobody who could help) are left out.
    """
    plan = _plan(instance, protocol, T)
    out: list[Strategy] = [abort_at(n) for n in plan.acting_steps(party)]
    if protocol == HTLC:
        holders = set().union(*(instance.io1[a] for a in instance.exchange1))
    else:
        holders = initial_owner_union(instance)
    if party in holders:
        out.append(withhold())
        if protocol == MPHTLC:
            out += [mpc_delay(d) for d in delay_parameters(T)]
            out.append(mpc_abort())
    if protocol != HTLC:
        for q in counterparties(instance, party):
            partners = frozenset({q})
            if _has_victim(instance, party, partners):
                out.append(collude_relock(partners))
                out.append(collude_relock(partners, after_lapse=True))
    return out


def validate_strategy(instance: GaeInstance, protocol: str, party: PartyId, strategy: Strategy, T: int = 8) -> None:
    if party not in instance.parties:
        raise StrategyError(f"unknown party {party}")
    if strategy.kind is Kind.ABORT_AT:
        count = _plan(instance, protocol, T).step_count()
        if not 1 <= strategy.step <= count:
            raise StrategyError(f"step {strategy.step} outside 1..{count}")
    if strategy.kind is Kind.MPC_DELAY and strategy.ticks < 0:
        raise StrategyError("delay must be non-negative")
    if strategy.kind is Kind.COLLUDE_RELOCK:
        allowed = set(counterparties(instance, party))
        for q in strategy.partners:
            if q not in allowed:
                raise StrategyError(f"{q} is not a counterparty of {party}")


def enumerate_profiles(
    instance: GaeInstance, protocol: str, bound: int, T: int = 8
) -> Iterator[StrategyProfile]:
    """Every profile with at most ``bound`` deviators, fewest deviators first."""
    parties = sorted(instance.parties)
    if bound > len(parties):
        raise ValueError(f"bound {bound} exceeds the {len(parties)} parties")
    library = {p: strategy_library(instance, protocol, p, T) for p in parties}
    for k in range(bound + 1):
        for group in itertools.combinations(parties, k):
            for choice in itertools.product(*(library[p] for p in group)):
                assignment = {p: HONEST for p in parties}
                assignment.update(zip(group, choice))
                yield StrategyProfile(assignment)


def payoffs(final1: Mapping, final2: Mapping, parties) -> dict[PartyId, Fraction]:
    """Unit-valued assets split evenly between their co-owners."""
    out = {p: Fraction(0) for p in parties}
    for owners in list(final1.values()) + list(final2.values()):
        share = Fraction(1, len(owners))
        for p in owners:
            if p in out:
                out[p] += share
    return out


@dataclass(frozen=True)
class DeviationResult:
    party: PartyId
    strategy: Strategy
    honest_payoff: Fraction
    deviating_payoff: Fraction

    @property
    def improves(self) -> bool:
        return self.deviating_payoff > self.honest_payoff


def evaluate_deviation(
    instance: GaeInstance, T: int, deviator: PartyId, deviation: Strategy, seed: int = 0
) -> DeviationResult:
    """Compare the deviator's payoff under MPHTLC with and without its deviation."""
    cls = classify(instance)
    if cls.kind is not ExchangeKind.FULL_GCLS_MIX or deviator not in cls.s12 | cls.s21:
        raise StrategyError(f"{deviator} is not part of a cross-ledger swap in this instance")
    run = RUNNERS[MPHTLC]
    base = run(instance, T, strategies=StrategyProfile({}), seed=seed)
    dev = run(instance, T, strategies=StrategyProfile({deviator: deviation}), seed=seed)
    parties = sorted(instance.parties)
    return DeviationResult(
        deviator,
        deviation,
        payoffs(base.final1, base.final2, parties)[deviator],
        payoffs(dev.final1, dev.final2, parties)[deviator],
    )


# -- named attacks --------------------------------------------------------------

ATTACKS = {
    "ms_collusion": False,
    "mk_withhold_relock": True,
}

_ATTACK_RE = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)\s*$")


def attack_profile(name: str, colluder: PartyId, partner: PartyId) -> StrategyProfile:
    if name not in ATTACKS:
        raise StrategyError(f"unknown attack {name!r}")
    return StrategyProfile({colluder: collude_relock({partner}, after_lapse=ATTACKS[name])})


def parse_attack(text: str) -> tuple[str, StrategyProfile]:
    m = _ATTACK_RE.match(text)
    if not m:
        raise StrategyError(f"cannot parse attack {text!r}")
    name, colluder, partner = m.groups()
    return f"{name}({colluder},{partner})", attack_profile(name, colluder, partner)


def collusion_playbook(instance: GaeInstance, protocol: str) -> list[tuple[str, StrategyProfile]]:
    """Documented collude-and-relock profiles that fit the instance.

    One entry per (attack, secret holder, counterparty) triple where the
    counterparty could hand the colluder an asset meant to be shared.
    """
    if protocol not in (HTLC_MS, HTLC_MK, MPHTLC):
        raise StrategyError(f"no collusion playbook for {protocol}")
    names = {HTLC_MS: ["ms_collusion"], HTLC_MK: ["mk_withhold_relock"],
             MPHTLC: ["ms_collusion", "mk_withhold_relock"]}[protocol]
    out = []
    for name in names:
        for w in sorted(initial_owner_union(instance)):
            for y in counterparties(instance, w):
                if _has_victim(instance, w, frozenset({y})):
                    out.append((f"{name}({w},{y})", attack_profile(name, w, y)))
    return out
