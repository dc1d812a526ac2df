"""Multi-party HTLC: one jointly computed hash, released by a fair MPC."""
from __future__ import annotations

from typing import Iterable

from .. import mpc
from ..ledger import PER_ASSET, Event
from ..model import GaeInstance, require_valid
from ..strategies import StrategyProfile
from .engine import DEFAULT_MARGIN, MPHTLC, Run, RunOutcome, ShapeError, build_plan, mpc_behaviour
from .schedule import build_schedule
from .verify import POST_STEP_2, POST_STEP_3, lock_hashes, verify_locks


class _MpRun(Run):
    def on_tick(self) -> None:
        if self.release_at != self.t or self.session is None:
            return
        x = self.session.preimage_output
        self.events.append(self.session.transcript[-1])
        for p in self.session.holders:
            self.learn(p, x, self.t)
        self._share(x)

    def _share(self, x: bytes) -> None:
        sharers = [
            p for p in sorted(self.o1)
            if self.profile.is_honest(p) and self.active(p, "claim2") and p not in self.gate_failed
        ]
        if not sharers:
            return
        for a in sorted(self.inst.exchange2):
            fo = self.inst.fo2[a]
            if a.name not in self.atomic or fo & self.o1:
                continue
            self.offchain("share", a.name, f"by={sharers[0]} to={','.join(sorted(fo))}")
            for q in fo:
                self.learn(q, x, self.t)


def release_deadline(run: Run) -> int:
    """Earliest planned ledger-2 expiry (ledger 1 if nothing moves there) minus the margin."""
    ae2 = sorted(run.inst.exchange2)
    if ae2:
        first = 2 + min(run.schedule.offset(a) for a in ae2)
    else:
        first = 1 + min(run.schedule.offset(a) for a in run.inst.exchange1)
    return first - run.margin


def run_mphtlc(
    instance: GaeInstance,
    T: int,
    lock_mode: str = PER_ASSET,
    strategies: StrategyProfile | None = None,
    seed: int = 0,
    atomic: Iterable[str] = (),
    margin: int = DEFAULT_MARGIN,
) -> RunOutcome:
    require_valid(instance)
    if not instance.exchange1:
        raise ShapeError("nothing is exchanged on ledger 1, so there is no secret holder")
    strategies = strategies or StrategyProfile({})
    schedule = build_schedule(instance, T, lock_mode)
    plan = build_plan(instance, MPHTLC, schedule, lock_mode)
    run = _MpRun(instance, plan, strategies, seed, atomic, margin)
    o1 = sorted(run.o1)

    # t0: joint hash
    secrets = {p: mpc.fresh_secret(run.rng, p) for p in o1}
    session = mpc.new_session(o1, release_deadline(run))
    session = mpc.run_f1(session, secrets, {p: mpc_behaviour(run, p, "secret") for p in o1}, tick=0)
    run.events.extend(session.transcript)
    if session.phase is mpc.Phase.ABORTED:
        return run.outcome()
    h = session.hash_output
    for a in instance.exchanged_assets():
        run.expected[a] = (h,)

    # t1: lock ledger 1
    run.step()
    run.lock_step(1, "lock1")

    # t2: ledger-2 owners check ledger 1, then lock under the hash they found there
    run.step()
    seen = lock_hashes(run.ledgers, instance)
    run.gate(sorted(run.plan.steps[2].parties), "lock2",
             verify_locks(instance, run.ledgers, POST_STEP_2, schedule))
    if len(seen) == 1:
        (found,) = seen
        for a in instance.exchange2:
            run.expected[a] = found
    run.lock_step(2, "lock2")

    # t3: secret holders check both ledgers, then release
    run.step()
    run.gate(o1, "release", verify_locks(instance, run.ledgers, POST_STEP_3, schedule, h))
    behaviours = {p: mpc_behaviour(run, p, "release") for p in o1}
    before = len(session.transcript)
    try:
        session = mpc.run_f2(session, run.t, behaviours)
    except mpc.DeadlinePassed:
        run.events.append(Event(run.t, "mpc", "abort", "-", f"stage=F2 reason=DeadlinePassed deadline={session.release_deadline}"))
        session = None
    if session is not None:
        if session.phase is mpc.Phase.ABORTED:
            run.events.extend(session.transcript[before:])
        else:
            run.session = session
            run.release_at = session.release_tick
    run.claim_phase()
    return run.outcome(h)
