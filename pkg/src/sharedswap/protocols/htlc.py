"""The classic two-party HTLC and its two naive multi-owner extensions.

The extensions are kept deliberately faithful to their flawed designs so the
attacks against them can be reproduced.
"""
from __future__ import annotations

from ..ledger import digest
from ..model import GaeInstance, fmt_parties, require_valid
from ..strategies import StrategyProfile
from .engine import HTLC, HTLC_MK, HTLC_MS, Run, RunOutcome, ShapeError, build_plan
from .schedule import classic_schedule

SECRET_BYTES = 32


def _secret(run: Run) -> bytes:
    return bytes(run.rng.getrandbits(8) for _ in range(SECRET_BYTES))


def _lock_both(run: Run, designated: bool = False) -> None:
    run.step()
    run.lock_step(1, "lock1", designated)
    run.step()
    run.gate(run.plan.steps[2].parties, "lock2", run.locks_match(1))
    run.lock_step(2, "lock2", designated)
    run.step()
    run.claim_phase()


def _prepare(instance: GaeInstance, protocol: str, T: int, strategies, seed: int) -> Run:
    require_valid(instance)
    plan = build_plan(instance, protocol, classic_schedule(instance, T), "per-asset")
    return Run(instance, plan, strategies or StrategyProfile({}), seed)


def _check_swap_shape(instance: GaeInstance) -> None:
    if len(instance.exchange1) != 1 or len(instance.exchange2) != 1:
        raise ShapeError("classic HTLC moves exactly one asset on each ledger")
    for a in instance.exchanged_assets():
        if len(instance.initial_owners(a)) != 1 or len(instance.final_owners(a)) != 1:
            raise ShapeError(f"asset {a.name} must have a single owner before and after")


def _check_shared_shape(instance: GaeInstance) -> None:
    if len(instance.exchange2) != 1:
        raise ShapeError("the counterparty must lock exactly one asset on ledger 2")
    if len(instance.exchange1) < 1:
        raise ShapeError("nothing is exchanged on ledger 1")
    run_o1 = set()
    for a in instance.exchange1:
        run_o1 |= instance.io1[a]
    if len(run_o1) < 2:
        raise ShapeError("the multi-owner variants need at least two secret holders")


def run_htlc(instance: GaeInstance, T: int, strategies: StrategyProfile | None = None, seed: int = 0) -> RunOutcome:
    _check_swap_shape(instance)
    run = _prepare(instance, HTLC, T, strategies, seed)
    (m,) = instance.exchange1
    (owner,) = instance.io1[m]
    if not run.active(owner, "secret"):
        return run.outcome()
    s = _secret(run)
    run.own_secret[owner] = s
    run.learn(owner, s, 0)
    h = digest(s)
    run.offchain("commit", "-", f"by={owner} hash={h.hex()}")
    for a in instance.exchanged_assets():
        run.expected[a] = (h,)
    _lock_both(run, designated=True)
    return run.outcome(h)


def run_htlc_ms(instance: GaeInstance, T: int, strategies: StrategyProfile | None = None, seed: int = 0) -> RunOutcome:
    """Co-owners agree on one secret off-chain; every one of them knows it."""
    _check_shared_shape(instance)
    run = _prepare(instance, HTLC_MS, T, strategies, seed)
    holders = sorted(run.o1)
    if not all(run.active(p, "secret") for p in holders):
        return run.outcome()
    s = _secret(run)
    h = digest(s)
    for p in holders:
        run.own_secret[p] = s
        run.learn(p, s, 0)
    run.offchain("agree", "-", f"parties={fmt_parties(holders)} hash={h.hex()}")
    for a in instance.exchanged_assets():
        run.expected[a] = (h,)
    _lock_both(run)
    return run.outcome(h)


def run_htlc_mk(instance: GaeInstance, T: int, strategies: StrategyProfile | None = None, seed: int = 0) -> RunOutcome:
    """Every co-owner keeps its own secret.

    A ledger-1 asset is locked under the hashes of its own co-owners, the
    ledger-2 asset under every co-owner's hash; it transfers once all of them
    have been revealed.
    """
    _check_shared_shape(instance)
    run = _prepare(instance, HTLC_MK, T, strategies, seed)
    holders = sorted(run.o1)
    if not all(run.active(p, "secret") for p in holders):
        return run.outcome()
    hashes = {}
    for p in holders:
        s = _secret(run)
        run.own_secret[p] = s
        run.learn(p, s, 0)
        hashes[p] = digest(s)
        run.offchain("commit", "-", f"by={p} hash={hashes[p].hex()}")
    for a in sorted(instance.exchange1):
        run.expected[a] = tuple(hashes[p] for p in sorted(instance.io1[a]))
    for a in instance.exchange2:
        run.expected[a] = tuple(hashes[p] for p in holders)
    _lock_both(run)
    return run.outcome()
