"""Exchange model: parties, assets, ownership maps and the derived set algebra.

An exchange instance describes two ledgers, the parties that hold accounts on
both, and the initial and final owner sets of every asset.  Everything here is
an immutable value and every function is pure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

PartyId = str
OwnershipMap = Mapping["AssetId", frozenset]

LEDGERS = (1, 2)


@dataclass(frozen=True, order=True)
class AssetId:
    ledger: int
    name: str

    def __str__(self) -> str:
        return f"L{self.ledger}:{self.name}"


def fmt_parties(parties: Iterable[PartyId]) -> str:
    return ",".join(sorted(parties))


def fmt_set(parties: Iterable[PartyId]) -> str:
    return "{" + fmt_parties(parties) + "}"


@dataclass(frozen=True, eq=True)
class GaeInstance:
    """Two-ledger exchange: parties, assets, exchange sets and ownership maps.

    ``io1``/``fo1`` map the ledger-1 assets to their initial/final owner sets,
    ``io2``/``fo2`` likewise for ledger 2.  Owner sets are frozensets.
    """

    parties: frozenset
    assets1: frozenset
    assets2: frozenset
    exchange1: frozenset
    exchange2: frozenset
    io1: Mapping[AssetId, frozenset] = field(hash=False)
    io2: Mapping[AssetId, frozenset] = field(hash=False)
    fo1: Mapping[AssetId, frozenset] = field(hash=False)
    fo2: Mapping[AssetId, frozenset] = field(hash=False)

    def assets(self, ledger: int) -> frozenset:
        return self.assets1 if ledger == 1 else self.assets2

    def exchange(self, ledger: int) -> frozenset:
        return self.exchange1 if ledger == 1 else self.exchange2

    def io(self, ledger: int) -> Mapping[AssetId, frozenset]:
        return self.io1 if ledger == 1 else self.io2

    def fo(self, ledger: int) -> Mapping[AssetId, frozenset]:
        return self.fo1 if ledger == 1 else self.fo2

    def initial_owners(self, asset: AssetId) -> frozenset:
        return self.io(asset.ledger)[asset]

    def final_owners(self, asset: AssetId) -> frozenset:
        return self.fo(asset.ledger)[asset]

    def exchanged_assets(self) -> list[AssetId]:
        return sorted(self.exchange1) + sorted(self.exchange2)

    def all_assets(self) -> list[AssetId]:
        return sorted(self.assets1) + sorted(self.assets2)

    @classmethod
    def from_transfers(
        cls,
        transfers: Iterable[tuple[int, str, Iterable[PartyId], Iterable[PartyId]]],
        held: Iterable[tuple[int, str, Iterable[PartyId]]] = (),
        parties: Iterable[PartyId] | None = None,
    ) -> "GaeInstance":
        """Build an instance from ``(ledger, name, initial, final)`` transfer rows.

        ``held`` lists assets that stay put (outside both exchange sets).  When
        ``parties`` is omitted it is the union of every owner set mentioned.
        No validation happens here; see :func:`validate_instance`.
        """
        io = {1: {}, 2: {}}
        fo = {1: {}, 2: {}}
        exchange = {1: set(), 2: set()}
        seen = set()
        for ledger, name, initial, final in transfers:
            a = AssetId(ledger, name)
            io[ledger][a] = frozenset(initial)
            fo[ledger][a] = frozenset(final)
            exchange[ledger].add(a)
            seen |= io[ledger][a] | fo[ledger][a]
        for ledger, name, owners in held:
            a = AssetId(ledger, name)
            io[ledger][a] = frozenset(owners)
            fo[ledger][a] = frozenset(owners)
            seen |= io[ledger][a]
        return cls(
            parties=frozenset(parties) if parties is not None else frozenset(seen),
            assets1=frozenset(io[1]),
            assets2=frozenset(io[2]),
            exchange1=frozenset(exchange[1]),
            exchange2=frozenset(exchange[2]),
            io1=io[1],
            io2=io[2],
            fo1=fo[1],
            fo2=fo[2],
        )

    def relabel(self, parties: Mapping[PartyId, PartyId], assets: Mapping[str, str]) -> "GaeInstance":
        """Apply a bijective renaming of parties and asset names."""

        def ren_asset(a: AssetId) -> AssetId:
            return AssetId(a.ledger, assets.get(a.name, a.name))

        def ren_map(m):
            return {ren_asset(a): frozenset(parties[p] for p in owners) for a, owners in m.items()}

        return GaeInstance(
            parties=frozenset(parties[p] for p in self.parties),
            assets1=frozenset(map(ren_asset, self.assets1)),
            assets2=frozenset(map(ren_asset, self.assets2)),
            exchange1=frozenset(map(ren_asset, self.exchange1)),
            exchange2=frozenset(map(ren_asset, self.exchange2)),
            io1=ren_map(self.io1),
            io2=ren_map(self.io2),
            fo1=ren_map(self.fo1),
            fo2=ren_map(self.fo2),
        )


# -- validation ---------------------------------------------------------------

EMPTY_PARTY_ID = "empty party id"
MISSING_OWNERSHIP = "missing ownership entry"
WRONG_LEDGER = "asset on wrong ledger"
EXCHANGE_NOT_SUBSET = "exchange set not a subset of assets"
EMPTY_OWNER_SET = "empty owner set"
UNKNOWN_PARTY = "owner not in party set"
FO_EQUALS_IO = "FO equals IO for exchanged asset"
FO_DIFFERS_OUTSIDE = "FO differs from IO outside exchange set"


@dataclass(frozen=True)
class Violation:
    clause: str
    ledger: int | None = None
    asset: str | None = None
    party: PartyId | None = None

    def __str__(self) -> str:
        where = []
        if self.ledger is not None:
            where.append(f"L{self.ledger}")
        if self.asset is not None:
            where.append(self.asset)
        if self.party is not None:
            where.append(f"party {self.party}")
        return self.clause + (f" ({' '.join(where)})" if where else "")


class InvalidInstance(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(map(str, violations)))


def validate_instance(instance: GaeInstance) -> list[Violation]:
    """Return every broken well-formedness clause; an empty list means valid."""
    out: list[Violation] = []
    for p in sorted(instance.parties):
        if not p:
            out.append(Violation(EMPTY_PARTY_ID, party=p))
    for ledger in LEDGERS:
        assets = instance.assets(ledger)
        io, fo = instance.io(ledger), instance.fo(ledger)
        for a in sorted(assets):
            if a.ledger != ledger:
                out.append(Violation(WRONG_LEDGER, ledger, a.name))
        for a in sorted(instance.exchange(ledger) - assets):
            out.append(Violation(EXCHANGE_NOT_SUBSET, ledger, a.name))
        for a in sorted(assets):
            for name, m in (("IO", io), ("FO", fo)):
                if a not in m:
                    out.append(Violation(f"{MISSING_OWNERSHIP} {name}", ledger, a.name))
        for a in sorted(assets):
            initial, final = io.get(a), fo.get(a)
            for owners in (initial, final):
                if owners is None:
                    continue
                if not owners:
                    out.append(Violation(EMPTY_OWNER_SET, ledger, a.name))
                for p in sorted(owners - instance.parties):
                    out.append(Violation(UNKNOWN_PARTY, ledger, a.name, p))
            if initial is None or final is None:
                continue
            if a in instance.exchange(ledger):
                if final and final == initial:
                    out.append(Violation(FO_EQUALS_IO, ledger, a.name))
            elif final != initial:
                out.append(Violation(FO_DIFFERS_OUTSIDE, ledger, a.name))
    # identical violations can be produced by an empty IO and FO at once
    return list(dict.fromkeys(out))


def require_valid(instance: GaeInstance) -> GaeInstance:
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstance(violations)
    return instance


# -- givers, keepers, takers ----------------------------------------------------

@dataclass(frozen=True)
class GktPartition:
    givers: Mapping[AssetId, frozenset]
    keepers: Mapping[AssetId, frozenset]
    takers: Mapping[AssetId, frozenset]


def derive_gkt(instance: GaeInstance, ledger: int) -> GktPartition:
    io, fo = instance.io(ledger), instance.fo(ledger)
    givers, keepers, takers = {}, {}, {}
    for a in sorted(instance.exchange(ledger)):
        givers[a] = io[a] - fo[a]
        keepers[a] = io[a] & fo[a]
        takers[a] = fo[a] - io[a]
    return GktPartition(givers, keepers, takers)


class ExchangeKind(enum.Enum):
    ONLY_GULT = "ONLY_GULT"
    GCLR_AND_GULT = "GCLR_AND_GULT"
    FULL_GCLS_MIX = "FULL_GCLS_MIX"


@dataclass(frozen=True)
class ExchangeClassification:
    s12: frozenset
    s21: frozenset
    kind: ExchangeKind


def _union(sets: Iterable[frozenset]) -> frozenset:
    out: frozenset = frozenset()
    for s in sets:
        out |= s
    return out


def classify(instance: GaeInstance) -> ExchangeClassification:
    g1, g2 = derive_gkt(instance, 1), derive_gkt(instance, 2)
    s12 = (_union(g1.givers.values()) | _union(g1.keepers.values())) & _union(g2.takers.values())
    s21 = (_union(g2.givers.values()) | _union(g2.keepers.values())) & _union(g1.takers.values())
    if not s12 and not s21:
        kind = ExchangeKind.ONLY_GULT
    elif not s12 or not s21:
        kind = ExchangeKind.GCLR_AND_GULT
    else:
        kind = ExchangeKind.FULL_GCLS_MIX
    return ExchangeClassification(s12, s21, kind)


def initial_owner_union(instance: GaeInstance) -> frozenset:
    """Initial co-owners of the ledger-1 exchange set (the secret holders)."""
    return _union(instance.io1[a] for a in instance.exchange1)


# -- atomicity ------------------------------------------------------------------

class Verdict(enum.Enum):
    ALL_FINAL = "ALL_FINAL"
    ALL_INITIAL = "ALL_INITIAL"
    VIOLATED = "VIOLATED"


@dataclass(frozen=True)
class AtomicityVerdict:
    party: PartyId
    verdict: Verdict


class UnknownParty(KeyError):
    pass


def relevant_assets(instance: GaeInstance, party: PartyId) -> list[AssetId]:
    """Every asset the party initially or finally co-owns, on both ledgers."""
    return [
        a
        for a in instance.all_assets()
        if party in instance.initial_owners(a) or party in instance.final_owners(a)
    ]


def check_atomicity(
    instance: GaeInstance,
    final1: OwnershipMap,
    final2: OwnershipMap,
    party: PartyId,
) -> AtomicityVerdict:
    if party not in instance.parties:
        raise UnknownParty(party)
    finals = {1: final1, 2: final2}
    relevant = relevant_assets(instance, party)
    if not relevant:
        return AtomicityVerdict(party, Verdict.ALL_INITIAL)
    # an unmoved asset outside the exchange sets matches both clauses, so a
    # party that only holds such assets reads as ALL_FINAL
    if all(finals[a.ledger][a] == instance.final_owners(a) for a in relevant):
        verdict = Verdict.ALL_FINAL
    elif all(finals[a.ledger][a] == instance.initial_owners(a) for a in relevant):
        verdict = Verdict.ALL_INITIAL
    else:
        verdict = Verdict.VIOLATED
    return AtomicityVerdict(party, verdict)
