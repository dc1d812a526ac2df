"""Tick-driven execution shared by every protocol variant.

A run owns two ledger states and, for the MPC-based protocol, one MPC
session.  Setup steps are scripted per protocol; after the last lock step the
run advances one tick at a time and lets every party act on what it can see
until no lock is left to claim or unlock.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .. import mpc
from ..ledger import (
    PER_ASSET,
    SINGLE,
    Event,
    LedgerError,
    LedgerState,
    LockEntry,
    claim_assets,
    consent,
    digest,
    lock_assets,
    new_ledger,
    record_rejection,
    replay,
    unlock_assets,
)
from ..model import (
    AssetId,
    AtomicityVerdict,
    GaeInstance,
    PartyId,
    Verdict,
    check_atomicity,
    fmt_parties,
    initial_owner_union,
)
from ..strategies import Kind, Strategy, StrategyProfile
from .schedule import TimeoutSchedule
from .verify import POST_STEP_2, POST_STEP_3, verify_locks

HTLC = "HTLC"
HTLC_MS = "HTLC_MS"
HTLC_MK = "HTLC_MK"
MPHTLC = "MPHTLC"
PROTOCOLS = (HTLC, HTLC_MS, HTLC_MK, MPHTLC)

# action key -> (step number, ledger); the claim steps run ledger 2 first
_MPHTLC_STEPS = (("secret", 1, None), ("lock1", 2, 1), ("lock2", 3, 2),
                 ("release", 4, None), ("claim2", 5, 2), ("claim1", 6, 1))
_CLASSIC_STEPS = (("secret", 1, None), ("lock1", 2, 1), ("lock2", 3, 2),
                  ("claim2", 4, 2), ("claim1", 5, 1))

DEFAULT_MARGIN = 1


class ShapeError(ValueError):
    """The instance does not have the shape a protocol variant requires."""


@dataclass(frozen=True)
class Step:
    number: int
    action: str
    ledger: int | None
    assets: tuple
    parties: tuple

    def line(self) -> str:
        where = f"L{self.ledger}" if self.ledger else "-"
        names = ",".join(a.name for a in self.assets) or "-"
        return f"{self.number}|{self.action}|{where}|{names}|{fmt_parties(self.parties)}"


@dataclass(frozen=True)
class ProtocolPlan:
    protocol: str
    lock_mode: str
    schedule: TimeoutSchedule
    steps: tuple

    def step_number(self, action: str) -> int:
        for s in self.steps:
            if s.action == action:
                return s.number
        raise KeyError(action)

    def step_count(self) -> int:
        return len(self.steps)

    def acting_steps(self, party: PartyId) -> list[int]:
        return [s.number for s in self.steps if party in s.parties]


def build_plan(instance: GaeInstance, protocol: str, schedule: TimeoutSchedule, lock_mode: str) -> ProtocolPlan:
    o1 = tuple(sorted(initial_owner_union(instance)))
    ae1, ae2 = tuple(sorted(instance.exchange1)), tuple(sorted(instance.exchange2))

    def owners(assets, m) -> tuple:
        out: set = set()
        for a in assets:
            out |= m[a]
        return tuple(sorted(out))

    parties = {
        "secret": o1,
        "lock1": owners(ae1, instance.io1),
        "lock2": owners(ae2, instance.io2),
        "release": o1,
        "claim2": owners(ae2, instance.fo2),
        "claim1": owners(ae1, instance.fo1),
    }
    if protocol == HTLC_MK:
        # every secret holder has to reveal on ledger 2 for the claim to land
        parties["claim2"] = tuple(sorted(set(parties["claim2"]) | set(o1)))
    assets = {"lock1": ae1, "lock2": ae2, "claim2": ae2, "claim1": ae1}
    table = _MPHTLC_STEPS if protocol == MPHTLC else _CLASSIC_STEPS
    steps = tuple(Step(n, action, ledger, assets.get(action, ()), parties[action]) for action, n, ledger in table)
    return ProtocolPlan(protocol, lock_mode, schedule, steps)


@dataclass(frozen=True)
class RunOutcome:
    protocol: str
    plan: ProtocolPlan
    profile: StrategyProfile
    final1: Mapping[AssetId, frozenset]
    final2: Mapping[AssetId, frozenset]
    events: tuple
    verdicts: tuple
    honest: frozenset
    hash_value: bytes | None = None
    preimages: tuple = field(default=(), repr=False)

    def verdict(self, party: PartyId) -> Verdict:
        for v in self.verdicts:
            if v.party == party:
                return v.verdict
        raise KeyError(party)

    def violated_honest(self) -> list[PartyId]:
        return [v.party for v in self.verdicts if v.party in self.honest and v.verdict is Verdict.VIOLATED]

    def any_violated(self) -> bool:
        return any(v.verdict is Verdict.VIOLATED for v in self.verdicts)

    def lines(self) -> list[str]:
        return [e.line() for e in self.events]


@dataclass
class _Target:
    colluder: PartyId
    sub: frozenset
    coalition: frozenset
    after_lapse: bool


class Run:
    """Mutable bookkeeping for one protocol execution."""

    def __init__(
        self,
        instance: GaeInstance,
        plan: ProtocolPlan,
        profile: StrategyProfile,
        seed: int = 0,
        atomic: Iterable[str] = (),
        margin: int = DEFAULT_MARGIN,
    ):
        self.inst = instance
        self.plan = plan
        self.schedule = plan.schedule
        self.mode = plan.lock_mode
        self.profile = profile
        self.rng = random.Random(seed)
        self.atomic = frozenset(atomic)
        self.margin = margin
        self.parties = sorted(instance.parties)
        self.o1 = frozenset(initial_owner_union(instance))
        self.ledgers: dict[int, LedgerState] = {1: new_ledger(1, instance.io1), 2: new_ledger(2, instance.io2)}
        self.events: list[Event] = []
        self.t = 0
        self.known: dict[PartyId, dict[bytes, int]] = {p: {} for p in self.parties}
        self.public: dict[bytes, int] = {}
        self.own_secret: dict[PartyId, bytes] = {}
        self.expected: dict[AssetId, tuple] = {}
        self.gate_failed: set = set()
        self.session: mpc.MpcSession | None = None
        self.release_at: int | None = None
        self.partners = profile.partners()
        self.colluders = {p: profile[p] for p in self.parties if profile[p].kind is Kind.COLLUDE_RELOCK}
        self.targets: dict[AssetId, _Target] = self._find_targets()
        self.relocked: set = set()
        self.dead: set = set()
        self.horizon = 10 * self.schedule.base + 20

    # -- roles -----------------------------------------------------------------

    def _find_targets(self) -> dict[AssetId, _Target]:
        out = {}
        for d, s in self.colluders.items():
            coalition = frozenset({d}) | s.partners
            for a in self.inst.exchanged_assets():
                fo = self.inst.final_owners(a)
                if a in out or d not in fo or not (self.inst.initial_owners(a) & s.partners):
                    continue
                sub = fo & coalition
                if sub != fo:
                    out[a] = _Target(d, sub, coalition, s.after_lapse)
        return out

    def coalition(self, p: PartyId) -> bool:
        return p in self.colluders or p in self.partners

    def active(self, p: PartyId, action: str) -> bool:
        s = self.profile[p]
        return not (s.kind is Kind.ABORT_AT and self.plan.step_number(action) >= s.step)

    def ever_aborts(self, p: PartyId) -> bool:
        return self.profile[p].kind is Kind.ABORT_AT

    # -- plumbing -------------------------------------------------------------

    def _sync(self) -> None:
        for n, state in self.ledgers.items():
            if state.clock != self.t:
                self.ledgers[n] = replace(state, clock=self.t)

    def apply(self, ledger: int, op: str, assets, submitter: PartyId, fn: Callable[[LedgerState], LedgerState]) -> bool:
        old = self.ledgers[ledger]
        try:
            new = fn(old)
            ok = True
        except LedgerError as err:
            new = record_rejection(old, op, assets, submitter, err)
            ok = False
        self.events.extend(new.events[len(old.events):])
        self.ledgers[ledger] = new
        return ok

    def offchain(self, kind: str, asset: str, details: str) -> None:
        self.events.append(Event(self.t, "offchain", kind, asset, details))

    def learn(self, p: PartyId, pre: bytes, tick: int) -> None:
        if pre not in self.known[p] or self.known[p][pre] > tick:
            self.known[p][pre] = tick

    def visible(self, p: PartyId) -> set:
        out = {pre for pre, tk in self.known[p].items() if tk <= self.t}
        out |= {pre for pre, tk in self.public.items() if tk + 1 <= self.t}
        return out

    def seen_public(self, p: PartyId, pre: bytes) -> bool:
        return pre in self.public and pre in self.visible(p)

    # -- locking ------------------------------------------------------------------

    def recipients_for(self, a: AssetId) -> frozenset:
        tgt = self.targets.get(a)
        if tgt is not None and not tgt.after_lapse:
            return tgt.sub
        return self.inst.final_owners(a)

    def willing(self, p: PartyId, a: AssetId, action: str, recipients: frozenset) -> bool:
        if not self.active(p, action):
            return False
        if recipients != self.inst.final_owners(a):
            tgt = self.targets.get(a)
            return tgt is not None and p in tgt.coalition
        return self.coalition(p) or p not in self.gate_failed

    def lock_step(self, ledger: int, action: str, designated: bool = False) -> None:
        assets = sorted(self.inst.exchange(ledger))
        if not assets:
            return
        recipients = {a: self.recipients_for(a) for a in assets}
        expiry = {a: self.t + self.schedule.offset(a) for a in assets}
        consents = {}
        volunteers = {}
        for a in assets:
            hashes = self.expected[a]
            owners = sorted(self.inst.initial_owners(a))
            ready = [p for p in owners if self.willing(p, a, action, recipients[a])]
            consents[a] = [consent(p, ledger, a, hashes, recipients[a], expiry[a]) for p in ready]
            tgt = self.targets.get(a)
            if tgt is not None and not tgt.after_lapse:
                # the colluding owner drives the tampered lock
                ready = [p for p in ready if p in tgt.coalition] or ready
            volunteers[a] = ready
        if self.mode == SINGLE and len(assets) > 1 and self.plan.protocol == MPHTLC:
            hashes = self.expected[assets[0]]
            submitter = next((volunteers[a][0] for a in assets if volunteers[a]), None)
            if submitter is None:
                return
            every = [c for a in assets for c in consents[a]]
            self.apply(ledger, "lock", assets, submitter, lambda s: lock_assets(
                s, assets, hashes, recipients, expiry, every, SINGLE, submitter, designated))
        else:
            for a in assets:
                if not volunteers[a]:
                    continue
                submitter = volunteers[a][0]
                self.apply(ledger, "lock", [a], submitter, lambda s, a=a, sub=submitter: lock_assets(
                    s, [a], self.expected[a], {a: recipients[a]}, {a: expiry[a]}, consents[a],
                    PER_ASSET, sub, designated))
        for a, tgt in self.targets.items():
            if a.ledger == ledger and a not in self.ledgers[ledger].locks:
                self.dead.add(a)

    def locks_match(self, ledger: int) -> bool:
        """Every exchanged asset of ``ledger`` is locked as the plan says."""
        state = self.ledgers[ledger]
        for a in sorted(self.inst.exchange(ledger)):
            e = state.locks.get(a)
            if e is None or not self.correct(e) or self.t >= e.expiry:
                return False
        return True

    def correct(self, e: LockEntry) -> bool:
        a = e.asset
        return (
            e.recipients == self.inst.final_owners(a)
            and e.hashes == self.expected.get(a)
            and e.expiry - e.created == self.schedule.offset(a)
        )

    def gate(self, parties: Iterable[PartyId], action: str, passed: bool) -> None:
        for p in parties:
            if self.active(p, action) and not self.coalition(p) and not passed:
                self.gate_failed.add(p)

    # -- claim phase -----------------------------------------------------------------

    def withholding(self, p: PartyId) -> bool:
        """A lapse-colluder stays silent until its targets have been relocked and taken."""
        for a, tgt in self.targets.items():
            if tgt.colluder != p or not tgt.after_lapse or a in self.dead:
                continue
            if self.ledgers[a.ledger].owners[a] == self.inst.initial_owners(a):
                return True
        return False

    def submission(self, p: PartyId, e: LockEntry) -> tuple[list, bool]:
        need = e.pending()
        vis = sorted(pre for pre in self.visible(p) if digest(pre) in need)
        complete = {digest(pre) for pre in vis} >= set(need)
        return vis, complete

    def l2_settled(self) -> bool:
        state = self.ledgers[2]
        return all(state.owners[a] == self.inst.fo2[a] for a in self.inst.exchange2)

    def wants(self, p: PartyId, ledger: int, e: LockEntry) -> bool:
        if not self.active(p, f"claim{ledger}"):
            return False
        subm, complete = self.submission(p, e)
        if not subm:
            return False
        a = e.asset
        s = self.profile[p]
        tgt = self.targets.get(a)
        if p in self.colluders:
            if tgt is not None and tgt.colluder == p:
                return e.recipients == tgt.sub and complete
            if self.withholding(p):
                return False
        elif p not in self.partners and p in self.gate_failed:
            return False
        if self.coalition(p) and p not in e.recipients:
            # colluders only claim what pays themselves
            return False
        if s.kind in (Kind.WITHHOLD_SECRET,) and not all(self.seen_public(p, pre) for pre in subm):
            return False
        if not self.correct(e):
            return False
        if e.designated and p not in e.recipients:
            return False
        # on ledger 2 a correct lock pays its recipients whoever submits the
        # preimage, so whoever holds it settles every one it can
        if ledger == 2:
            if self.plan.protocol == HTLC_MK and self.own_secret.get(p) in subm:
                return True
            return complete
        if not complete:
            return False
        # ledger 1 waits until the preimage is out in the open (or nothing is left on ledger 2)
        if not (all(self.seen_public(p, pre) for pre in subm) or self.l2_settled()):
            return False
        last_call = self.t == e.expiry - 1 and p in self.inst.initial_owners(a)
        return p in e.recipients or last_call

    def claim(self, p: PartyId, ledger: int, entries: list[LockEntry]) -> None:
        pres: set = set()
        for e in entries:
            pres.update(self.submission(p, e)[0])
        pres_t = tuple(sorted(pres))
        assets = [e.asset for e in entries]
        mode = SINGLE if len(entries) > 1 else PER_ASSET
        if self.apply(ledger, "claim", assets, p, lambda s: claim_assets(s, assets, pres_t, p, mode)):
            for pre in pres_t:
                self.public.setdefault(pre, self.t)
                self.learn(p, pre, self.t)

    def claim_pass(self, ledger: int) -> None:
        for p in self.parties:
            live = [e for _, e in sorted(self.ledgers[ledger].locks.items()) if self.t < e.expiry]
            wanted = [e for e in live if self.wants(p, ledger, e)]
            if not wanted:
                continue
            if self.mode == SINGLE and self.plan.protocol == MPHTLC and p not in self.colluders:
                extra = [e for e in live if e not in wanted and self.correct(e) and self.submission(p, e)[1]]
                self.claim(p, ledger, sorted(wanted + extra, key=lambda e: e.asset))
            else:
                for e in wanted:
                    if e.asset in self.ledgers[ledger].locks:
                        self.claim(p, ledger, [self.ledgers[ledger].locks[e.asset]])

    def relock_pass(self) -> None:
        for a, tgt in sorted(self.targets.items()):
            if not tgt.after_lapse or a in self.dead or a in self.relocked:
                continue
            state = self.ledgers[a.ledger]
            e = state.locks.get(a)
            if e is None:
                if state.owners[a] != self.inst.initial_owners(a):
                    self.dead.add(a)
                continue
            if self.t < e.expiry:
                continue
            movers = [p for p in sorted(self.inst.initial_owners(a) & tgt.coalition)
                      if p != tgt.colluder or p in self.partners]
            movers = [p for p in movers if not self.ever_aborts(p)]
            if not movers:
                self.dead.add(a)
                continue
            mover = movers[0]
            self.apply(a.ledger, "unlock", [a], mover, lambda s: unlock_assets(s, [a], mover))
            expiry = self.t + (e.expiry - e.created)
            signers = [p for p in sorted(self.inst.initial_owners(a)) if p in tgt.coalition and not self.ever_aborts(p)]
            consents = [consent(p, a.ledger, a, e.hashes, tgt.sub, expiry) for p in signers]
            self.relocked.add(a)
            ok = self.apply(a.ledger, "lock", [a], mover, lambda s: lock_assets(
                s, [a], e.hashes, {a: tgt.sub}, {a: expiry}, consents, PER_ASSET, mover))
            if not ok:
                self.dead.add(a)

    def unlock_pass(self) -> None:
        for ledger in (1, 2):
            for a, e in sorted(self.ledgers[ledger].locks.items()):
                if self.t < e.expiry:
                    continue
                owners = [p for p in sorted(self.inst.initial_owners(a)) if not self.ever_aborts(p)]
                if owners:
                    self.apply(ledger, "unlock", [a], owners[0], lambda s: unlock_assets(s, [a], owners[0]))

    def busy(self) -> bool:
        if self.release_at is not None and self.release_at > self.t:
            return True
        for state in self.ledgers.values():
            for e in state.locks.values():
                if e.expiry > self.t:
                    return True
                if any(not self.ever_aborts(p) for p in self.inst.initial_owners(e.asset)):
                    return True
        return False

    def on_tick(self) -> None:
        """Protocol-specific scheduled work at the start of a tick."""

    def claim_phase(self) -> None:
        while True:
            self._sync()
            self.on_tick()
            self.relock_pass()
            self.claim_pass(2)
            self.claim_pass(1)
            self.unlock_pass()
            if not self.busy() or self.t >= self.horizon:
                break
            self.t += 1

    def step(self) -> None:
        self.t += 1
        self._sync()

    # -- result --------------------------------------------------------------------------

    def outcome(self, hash_value: bytes | None = None) -> RunOutcome:
        final1 = dict(self.ledgers[1].owners)
        final2 = dict(self.ledgers[2].owners)
        events = tuple(self.events)
        for ledger, initial, final in ((1, self.inst.io1, final1), (2, self.inst.io2, final2)):
            if replay(ledger, initial, events) != final:
                raise RuntimeError(f"event log of L{ledger} does not replay to the final state")
        verdicts = tuple(check_atomicity(self.inst, final1, final2, p) for p in self.parties)
        honest = frozenset(self.profile.honest_parties(self.parties))
        pres = tuple(sorted(set(self.public)))
        return RunOutcome(self.plan.protocol, self.plan, self.profile, final1, final2, events,
                          verdicts, honest, hash_value, pres)


def verdict_lines(verdicts: Iterable[AtomicityVerdict]) -> list[str]:
    return [f"{v.party}|{v.verdict.value}" for v in verdicts]


def mpc_behaviour(run: Run, p: PartyId, action: str) -> mpc.Behavior:
    s: Strategy = run.profile[p]
    if not run.active(p, action):
        return mpc.ABORT
    if action == "release":
        if s.kind is Kind.MPC_ABORT or p in run.gate_failed:
            return mpc.ABORT
        if s.kind is Kind.MPC_DELAY:
            return mpc.delay(s.ticks)
    return mpc.HONEST


__all__ = [
    "HTLC", "HTLC_MS", "HTLC_MK", "MPHTLC", "PROTOCOLS", "ProtocolPlan", "RunOutcome", "Run",
    "ShapeError", "Step", "build_plan", "verdict_lines", "mpc_behaviour", "POST_STEP_2", "POST_STEP_3",
    "verify_locks",
]
