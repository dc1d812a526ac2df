"""One simulated ledger: co-owned assets, hash-time locks, a logical clock.

Operations are functions from a :class:`LedgerState` to a new state.  A
rejected transaction raises a :class:`LedgerError` and leaves the input state
untouched; callers that want the rejection on the record use
:func:`record_rejection`.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .model import AssetId, PartyId, fmt_parties

SINGLE = "single-transaction"
PER_ASSET = "per-asset"
LOCK_MODES = (SINGLE, PER_ASSET)


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class ConsentRecord:
    party: PartyId
    payload_digest: bytes


@dataclass(frozen=True)
class LockEntry:
    asset: AssetId
    hashes: tuple
    recipients: frozenset
    expiry: int
    consents: frozenset
    created: int
    # preimages already supplied against a multi-hash lock
    revealed: tuple = ()
    # classic two-party locks only accept claims from a named recipient
    designated: bool = False

    @property
    def hash(self) -> bytes:
        return self.hashes[0]

    def pending(self) -> tuple:
        done = {digest(p) for p in self.revealed}
        return tuple(h for h in self.hashes if h not in done)


@dataclass(frozen=True)
class Event:
    tick: int
    ledger: str
    kind: str
    asset: str
    details: str

    def line(self) -> str:
        return f"{self.tick}|{self.ledger}|{self.kind}|{self.asset}|{self.details}"

    @classmethod
    def parse(cls, line: str) -> "Event":
        tick, ledger, kind, asset, details = line.rstrip("\n").split("|", 4)
        return cls(int(tick), ledger, kind, asset, details)

    def fields(self) -> dict[str, str]:
        out = {}
        for token in self.details.split():
            key, _, value = token.partition("=")
            out[key] = value
        return out


@dataclass(frozen=True)
class LedgerState:
    ledger: int
    owners: Mapping[AssetId, frozenset]
    locks: Mapping[AssetId, LockEntry] = field(default_factory=dict)
    clock: int = 0
    events: tuple = ()

    @property
    def label(self) -> str:
        return f"L{self.ledger}"

    def _log(self, kind: str, asset: str, details: str) -> tuple:
        return self.events + (Event(self.clock, self.label, kind, asset, details),)


def new_ledger(ledger: int, owners: Mapping[AssetId, frozenset], clock: int = 0) -> LedgerState:
    return LedgerState(ledger, dict(owners), {}, clock, ())


# -- errors ----------------------------------------------------------------------

class LedgerError(Exception):
    reason = "LedgerError"

    def __init__(self, asset: AssetId | None = None, detail: str = ""):
        self.asset = asset
        self.detail = detail
        msg = self.reason
        if asset is not None:
            msg += f"({asset.name}" + (f", {detail}" if detail else "") + ")"
        super().__init__(msg)


class MissingConsent(LedgerError):
    reason = "MissingConsent"

    def __init__(self, asset: AssetId, party: PartyId):
        self.party = party
        super().__init__(asset, party)


class AlreadyLocked(LedgerError):
    reason = "AlreadyLocked"


class ExpiryInPast(LedgerError):
    reason = "ExpiryInPast"


class HashMismatch(LedgerError):
    reason = "HashMismatch"


class LockExpired(LedgerError):
    reason = "LockExpired"


class NotLocked(LedgerError):
    reason = "NotLocked"


class NotExpired(LedgerError):
    reason = "NotExpired"


class UnknownAsset(LedgerError):
    reason = "UnknownAsset"


class NotRecipient(LedgerError):
    reason = "NotRecipient"


# -- consent -----------------------------------------------------------------------

def lock_payload(
    ledger: int, asset: AssetId, hashes: Sequence[bytes], recipients: Iterable[PartyId], expiry: int
) -> bytes:
    """Digest of the exact lock a co-owner signs off on."""
    text = "|".join(
        [
            "lock",
            f"L{ledger}",
            asset.name,
            ",".join(h.hex() for h in hashes),
            fmt_parties(recipients),
            str(expiry),
        ]
    )
    return digest(text.encode())


def consent(party: PartyId, ledger: int, asset: AssetId, hashes, recipients, expiry) -> ConsentRecord:
    return ConsentRecord(party, lock_payload(ledger, asset, tuple(hashes), recipients, expiry))


# -- operations --------------------------------------------------------------------

def _as_hashes(hash_value) -> tuple:
    if isinstance(hash_value, (bytes, bytearray)):
        return (bytes(hash_value),)
    return tuple(hash_value)


def _keyed(name: str, asset: AssetId, batch: bool) -> str:
    return f"{name}@{asset.name}" if batch else name


def lock_assets(
    state: LedgerState,
    assets: Iterable[AssetId],
    hash_value,
    recipients: Mapping[AssetId, Iterable[PartyId]],
    expiry: Mapping[AssetId, int],
    consents: Iterable[ConsentRecord],
    mode: str = PER_ASSET,
    submitter: PartyId = "",
    designated: bool = False,
) -> LedgerState:
    """Lock assets under one hash (or a tuple of hashes, all of which must be revealed).

    Every current co-owner of each asset must have consented to that asset's
    exact payload.  Nothing is committed if any asset fails.
    """
    assets = sorted(assets)
    hashes = _as_hashes(hash_value)
    consents = frozenset(consents)
    signed = {(c.party, c.payload_digest) for c in consents}
    entries = []
    for a in assets:
        if a not in state.owners:
            raise UnknownAsset(a)
        if a in state.locks:
            raise AlreadyLocked(a)
        if expiry[a] <= state.clock:
            raise ExpiryInPast(a)
        to = frozenset(recipients[a])
        payload = lock_payload(state.ledger, a, hashes, to, expiry[a])
        for owner in sorted(state.owners[a]):
            if (owner, payload) not in signed:
                raise MissingConsent(a, owner)
        mine = frozenset(c for c in consents if c.payload_digest == payload)
        entries.append(LockEntry(a, hashes, to, expiry[a], mine, state.clock, (), designated))
    locks = dict(state.locks)
    for e in entries:
        locks[e.asset] = e
    hash_text = ",".join(h.hex() for h in hashes)

    def describe(es: list[LockEntry], batch: bool) -> str:
        parts = [f"by={submitter}", f"hash={hash_text}"]
        for e in es:
            parts.append(f"{_keyed('to', e.asset, batch)}={fmt_parties(e.recipients)}")
            parts.append(f"{_keyed('expiry', e.asset, batch)}={e.expiry}")
            parts.append(f"{_keyed('consents', e.asset, batch)}={fmt_parties(c.party for c in e.consents)}")
        return " ".join(parts)

    events = state.events
    if mode == SINGLE and len(entries) > 1:
        events += (
            Event(state.clock, state.label, "lock", ",".join(a.name for a in assets), describe(entries, True)),
        )
    else:
        for e in entries:
            events += (Event(state.clock, state.label, "lock", e.asset.name, describe([e], False)),)
    return replace(state, locks=locks, events=events)


def claim_assets(
    state: LedgerState,
    assets: Iterable[AssetId],
    preimage,
    submitter: PartyId,
    mode: str = PER_ASSET,
) -> LedgerState:
    """Supply preimage(s) against live locks.

    ``preimage`` is bytes or a sequence of bytes.  A lock with several hashes
    transfers only once all of them have been revealed; a partial reveal is
    logged as a ``reveal`` event.
    """
    assets = sorted(assets)
    preimages = _as_hashes(preimage)
    updated = []
    for a in assets:
        entry = state.locks.get(a)
        if entry is None:
            raise NotLocked(a)
        if state.clock >= entry.expiry:
            raise LockExpired(a)
        if entry.designated and submitter not in entry.recipients:
            raise NotRecipient(a, submitter)
        pending = entry.pending()
        fresh = tuple(p for p in preimages if digest(p) in pending)
        if not fresh:
            raise HashMismatch(a)
        updated.append(replace(entry, revealed=entry.revealed + fresh))
    owners = dict(state.owners)
    locks = dict(state.locks)
    done, partial = [], []
    for e in updated:
        if e.pending():
            locks[e.asset] = e
            partial.append(e)
        else:
            del locks[e.asset]
            owners[e.asset] = e.recipients
            done.append(e)
    events = state.events
    for e in partial:
        new = [p for p in e.revealed if p in preimages]
        events += (
            Event(state.clock, state.label, "reveal", e.asset.name,
                  f"by={submitter} preimage={','.join(p.hex() for p in new)}"),
        )
    if done:
        pre = ",".join(p.hex() for p in preimages)
        if mode == SINGLE and len(done) > 1:
            tos = " ".join(f"to@{e.asset.name}={fmt_parties(e.recipients)}" for e in done)
            events += (
                Event(state.clock, state.label, "claim", ",".join(e.asset.name for e in done),
                      f"by={submitter} preimage={pre} {tos}"),
            )
        else:
            for e in done:
                events += (
                    Event(state.clock, state.label, "claim", e.asset.name,
                          f"by={submitter} preimage={pre} to={fmt_parties(e.recipients)}"),
                )
    return replace(state, owners=owners, locks=locks, events=events)


def unlock_assets(state: LedgerState, assets: Iterable[AssetId], submitter: PartyId) -> LedgerState:
    assets = sorted(assets)
    for a in assets:
        entry = state.locks.get(a)
        if entry is None:
            raise NotLocked(a)
        if state.clock < entry.expiry:
            raise NotExpired(a)
    locks = {a: e for a, e in state.locks.items() if a not in assets}
    events = state.events
    for a in assets:
        events += (
            Event(state.clock, state.label, "unlock", a.name,
                  f"by={submitter} owners={fmt_parties(state.owners[a])}"),
        )
    return replace(state, locks=locks, events=events)


def read_lock(state: LedgerState, asset: AssetId) -> LockEntry | None:
    return state.locks.get(asset)


def advance_clock(state: LedgerState, ticks: int = 1) -> LedgerState:
    if ticks < 1:
        raise ValueError(f"clock can only move forward, got {ticks}")
    return replace(state, clock=state.clock + ticks)


def record_rejection(
    state: LedgerState, op: str, assets: Iterable[AssetId], submitter: PartyId, error: LedgerError
) -> LedgerState:
    names = ",".join(a.name for a in sorted(assets))
    return replace(
        state,
        events=state._log("reject", names, f"op={op} by={submitter} reason={error.reason}"),
    )


# -- replay ------------------------------------------------------------------------

def replay(ledger: int, initial: Mapping[AssetId, frozenset], events: Iterable[Event]) -> dict:
    """Rebuild the owner map of one ledger from its event log.

    Only committed ``claim`` events move ownership; locks, reveals, unlocks and
    rejections leave owners alone.
    """
    owners = dict(initial)
    label = f"L{ledger}"
    for ev in events:
        if ev.ledger != label or ev.kind != "claim":
            continue
        f = ev.fields()
        names = ev.asset.split(",")
        for name in names:
            key = "to" if len(names) == 1 else f"to@{name}"
            owners[AssetId(ledger, name)] = frozenset(p for p in f[key].split(",") if p)
    return owners
