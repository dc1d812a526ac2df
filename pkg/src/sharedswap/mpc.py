"""Fair multi-party computation, simulated by a trusted in-process coordinator.

Two computations are modelled: the joint hash over every participant's secret
and the later joint release of the preimage.  The coordinator enforces
all-or-nothing delivery and a hard release deadline by construction; nothing
here is real cryptographic MPC.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .ledger import Event, digest
from .model import PartyId, fmt_parties

MIN_SECRET_BYTES = 16
LEN_PREFIX_BYTES = 4


class EmptySecret(ValueError):
    pass


class DuplicateParty(ValueError):
    pass


class DeadlinePassed(Exception):
    pass


@dataclass(frozen=True)
class PartySecret:
    party: PartyId
    value: bytes = field(repr=False)

    def __post_init__(self):
        if not self.value:
            raise EmptySecret(self.party)
        if len(self.value) < MIN_SECRET_BYTES:
            raise ValueError(f"secret of {self.party} shorter than {MIN_SECRET_BYTES} bytes")


def fresh_secret(rng, party: PartyId, size: int = 32) -> PartySecret:
    return PartySecret(party, bytes(rng.getrandbits(8) for _ in range(size)))


def combine(secrets: Iterable[PartySecret]) -> bytes:
    """Length-prefixed concatenation of the secrets in party order.

    The prefix keeps the identity combiner injective: without it ``ab|c`` and
    ``a|bc`` would collide.
    """
    secrets = list(secrets)
    if not secrets:
        raise ValueError("no secrets to combine")
    by_party: dict[PartyId, PartySecret] = {}
    for s in secrets:
        if s.party in by_party:
            raise DuplicateParty(s.party)
        by_party[s.party] = s
    out = bytearray()
    for p in sorted(by_party):
        value = by_party[p].value
        out += len(value).to_bytes(LEN_PREFIX_BYTES, "big")
        out += value
    return bytes(out)


class Phase(enum.Enum):
    COLLECTING = "COLLECTING"
    COMPLETE_F1 = "COMPLETE_F1"
    RELEASED_F2 = "RELEASED_F2"
    ABORTED = "ABORTED"


@dataclass(frozen=True)
class Behavior:
    kind: str = "honest"
    ticks: int = 0

    def __str__(self) -> str:
        return f"delay({self.ticks})" if self.kind == "delay" else self.kind


HONEST = Behavior()
ABORT = Behavior("abort")


def delay(ticks: int) -> Behavior:
    if ticks < 0:
        raise ValueError("delay must be non-negative")
    return Behavior("delay", ticks)


@dataclass(frozen=True)
class MpcSession:
    participants: tuple
    release_deadline: int
    phase: Phase = Phase.COLLECTING
    hash_output: bytes | None = None
    preimage_output: bytes | None = field(default=None, repr=False)
    release_tick: int | None = None
    holders: frozenset = frozenset()
    transcript: tuple = ()
    # coordinator-private; never appears in the transcript
    _secrets: tuple = field(default=(), repr=False, compare=False)

    def knows_preimage(self, party: PartyId) -> bool:
        return self.phase is Phase.RELEASED_F2 and party in self.holders

    def view(self, party: PartyId) -> tuple:
        """Events observable by one participant (the broadcast transcript)."""
        return self.transcript if party in self.participants else ()


def new_session(participants: Iterable[PartyId], release_deadline: int) -> MpcSession:
    return MpcSession(tuple(sorted(set(participants))), release_deadline)


def _behaviour(behaviors: Mapping[PartyId, Behavior] | None, p: PartyId) -> Behavior:
    return (behaviors or {}).get(p, HONEST)


def _event(tick: int, kind: str, details: str) -> Event:
    return Event(tick, "mpc", kind, "-", details)


def run_f1(
    session: MpcSession,
    secrets: Mapping[PartyId, PartySecret],
    behaviors: Mapping[PartyId, Behavior] | None = None,
    tick: int = 0,
) -> MpcSession:
    if session.phase is not Phase.COLLECTING:
        raise ValueError(f"F1 needs phase COLLECTING, session is {session.phase.value}")
    missing = [p for p in session.participants if p not in secrets]
    if missing:
        raise ValueError(f"no secret for {fmt_parties(missing)}")
    aborting = [p for p in session.participants if _behaviour(behaviors, p).kind == "abort"]
    if aborting:
        ev = _event(tick, "abort", f"stage=F1 by={fmt_parties(aborting)}")
        return replace(session, phase=Phase.ABORTED, transcript=session.transcript + (ev,))
    ordered = tuple(secrets[p] for p in session.participants)
    h = digest(combine(ordered))
    ev = _event(tick, "F1", f"participants={fmt_parties(session.participants)} hash={h.hex()}")
    return replace(
        session,
        phase=Phase.COMPLETE_F1,
        hash_output=h,
        transcript=session.transcript + (ev,),
        _secrets=ordered,
    )


def run_f2(
    session: MpcSession,
    current_tick: int,
    behaviors: Mapping[PartyId, Behavior] | None = None,
) -> MpcSession:
    """Release the combined preimage to every participant, or to nobody.

    A delaying participant postpones delivery; the coordinator never delivers
    after ``release_deadline``.
    """
    if session.phase is not Phase.COMPLETE_F1:
        raise ValueError(f"F2 needs phase COMPLETE_F1, session is {session.phase.value}")
    if current_tick > session.release_deadline:
        raise DeadlinePassed(f"tick {current_tick} is past deadline {session.release_deadline}")
    aborting = [p for p in session.participants if _behaviour(behaviors, p).kind == "abort"]
    if aborting:
        ev = _event(current_tick, "abort", f"stage=F2 by={fmt_parties(aborting)}")
        return replace(session, phase=Phase.ABORTED, transcript=session.transcript + (ev,))
    wait = max((_behaviour(behaviors, p).ticks for p in session.participants), default=0)
    release = min(current_tick + wait, session.release_deadline)
    x = combine(session._secrets)
    assert digest(x) == session.hash_output
    ev = _event(release, "F2", f"holders={fmt_parties(session.participants)} deadline={session.release_deadline}")
    return replace(
        session,
        phase=Phase.RELEASED_F2,
        preimage_output=x,
        release_tick=release,
        holders=frozenset(session.participants),
        transcript=session.transcript + (ev,),
    )


def preimage_unguessable(
    hash_value: bytes,
    participants: Sequence[PartyId],
    known: Mapping[PartyId, bytes],
    guesses: Iterable[bytes],
) -> bool:
    """True when no dictionary guess for the unknown secrets reproduces ``hash_value``.

    The known secrets are slotted in as-is and every combination of guesses
    fills the remaining slots.  A desk-scale proxy for the entropy requirement
    on the combiner, not a proof.
    """
    missing = [p for p in participants if p not in known]
    guesses = [g for g in guesses if g]
    if not missing:
        candidates = [()]
    else:
        candidates = itertools.product(guesses, repeat=len(missing))
    for fill in candidates:
        values = dict(known)
        values.update(zip(missing, fill))
        parts = bytearray()
        for p in sorted(participants):
            v = values[p]
            parts += len(v).to_bytes(LEN_PREFIX_BYTES, "big") + v
        if digest(bytes(parts)) == hash_value:
            return False
    return True
