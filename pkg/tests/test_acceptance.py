"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""
import itertools
import random
import sys
import time
from contextlib import nullcontext
from dataclasses import replace

from conftest import GOLDEN_DIR, scenario, scenario_names
from sharedswap import mpc
from sharedswap.adversary import enumerate_profiles, evaluate_deviation, strategy_library
from sharedswap.generate import instance_corpus
from sharedswap.ledger import (
    PER_ASSET,
    LockExpired,
    advance_clock,
    claim_assets,
    consent,
    digest,
    lock_assets,
    new_ledger,
    replay,
    unlock_assets,
)
from sharedswap.model import AssetId, ExchangeKind, Verdict, derive_gkt, initial_owner_union
from sharedswap.protocols import MPHTLC, build_schedule, run_mphtlc
from sharedswap.report import LINES, emit_report, event_lines, run_scenario

CORPUS_SEED = 7
CORPUS_SIZE = 200


def _announce(capsys, number, title, ok, elapsed, limit, detail=""):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({elapsed:.2f}s, limit {limit}s)"
    if detail:
        line += f" - {detail}"
    with capsys.disabled() if capsys is not None else nullcontext():
        print("\n" + line)
    return line


def _check(capsys, number, title, limit, body):
    start = time.perf_counter()
    problems = body()
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < limit
    detail = "; ".join(problems[:5]) if problems else ""
    if elapsed >= limit:
        detail = (detail + "; " if detail else "") + "over time limit"
    _announce(capsys, number, title, ok, elapsed, limit, detail)
    assert ok, detail


def _rows(inst):
    out = {}
    for ledger in (1, 2):
        part = derive_gkt(inst, ledger)
        for a in inst.exchange(ledger):
            out[a.name] = tuple("".join(sorted(s)) for s in (part.givers[a], part.keepers[a], part.takers[a]))
    return out


# -- 1 --------------------------------------------------------------------------

COMPLEX_TABLE = {
    "Currency": ("X", "Y", "WZ"),
    "Security": ("TU", "", "V"),
    "Diamond": ("Z", "", "V"),
    "Car": ("", "T", "UW"),
    "House": ("Z", "", "TXY"),
}
BASIC_TABLE = {
    "basic_ult": (ExchangeKind.ONLY_GULT, {"M": ("X", "", "Y"), "N": ("Z", "", "W")}),
    "basic_clr": (ExchangeKind.GCLR_AND_GULT, {"M": ("X", "", "Y"), "N": ("Z", "", "X")}),
    "basic_cls": (ExchangeKind.FULL_GCLS_MIX, {"M": ("X", "", "Y"), "N": ("Y", "", "X")}),
}


def _classification():
    problems = []
    complex_report = run_scenario(scenario("complex_exchange"))
    if _rows(complex_report.scenario.instance) != COMPLEX_TABLE:
        problems.append("complex exchange rows differ")
    if complex_report.classification.kind is not ExchangeKind.FULL_GCLS_MIX:
        problems.append("complex exchange kind")
    for name, (kind, rows) in BASIC_TABLE.items():
        r = run_scenario(scenario(name))
        if r.classification.kind is not kind or _rows(r.scenario.instance) != rows:
            problems.append(f"{name} mismatch")
    return problems


def test_criterion_1_classification(capsys):
    _check(capsys, 1, "classification fidelity", 1, _classification)


# -- 2 --------------------------------------------------------------------------

SIX_STEPS = ["mpc|F1", "L1|lock", "L2|lock", "mpc|F2", "L2|claim", "L1|claim"]


def _step_order(events):
    seen = []
    for e in events:
        key = f"{e.ledger}|{e.kind}"
        if key in SIX_STEPS and key not in seen:
            seen.append(key)
    return seen


def _happy_paths():
    problems = []
    for name in ("shared_swap", "two_givers"):
        report = run_scenario(scenario(name))
        text = emit_report(report, LINES)
        if text != (GOLDEN_DIR / f"{name}.lines").read_text():
            problems.append(f"{name} log differs from golden")
        (run,) = report.runs
        if {v.verdict for v in run.outcome.verdicts} != {Verdict.ALL_FINAL}:
            problems.append(f"{name} not all ALL_FINAL")
        if _step_order(run.outcome.events) != SIX_STEPS:
            problems.append(f"{name} step order {_step_order(run.outcome.events)}")
    return problems


def test_criterion_2_happy_paths(capsys):
    _check(capsys, 2, "MPHTLC happy paths", 1, _happy_paths)


# -- 3 --------------------------------------------------------------------------

def _attacks():
    problems = []
    for name in ("ms_collusion", "mk_withhold_relock", "two_givers_ms_collusion"):
        s = scenario(name)
        (run,) = run_scenario(s).runs
        if not any(v.verdict is Verdict.VIOLATED for v in run.outcome.verdicts):
            problems.append(f"{name} under {s.protocol} violated nobody")
        (mp,) = run_scenario(replace(s, protocol=MPHTLC)).runs
        bad = [v.party for v in mp.outcome.verdicts if v.verdict is Verdict.VIOLATED]
        if bad:
            problems.append(f"{name} under MPHTLC violated {bad}")
    for name in ("ms_collusion_mphtlc", "mk_withhold_relock_mphtlc"):
        (run,) = run_scenario(scenario(name)).runs
        if run.outcome.any_violated():
            problems.append(f"{name} violated")
    return problems


def test_criterion_3_attack_reproduction(capsys):
    _check(capsys, 3, "attack reproduction", 1, _attacks)


# -- 4 --------------------------------------------------------------------------

def _claim_one():
    runs = violating = 0
    holders_all_dishonest = 0
    examples = []
    for i, inst in enumerate(instance_corpus(CORPUS_SEED, CORPUS_SIZE)):
        o1 = initial_owner_union(inst)
        for prof in enumerate_profiles(inst, MPHTLC, 2, 8):
            out = run_mphtlc(inst, 8, PER_ASSET, strategies=prof)
            runs += 1
            bad = out.violated_honest()
            if not bad:
                continue
            violating += 1
            if not o1 & out.honest:
                holders_all_dishonest += 1
            if len(examples) < 3:
                examples.append(f"instance {i} {prof.describe()} violates {','.join(bad)}")
    if not violating:
        return []
    return [f"{violating} of {runs} runs leave an honest party VIOLATED",
            f"{holders_all_dishonest} of them have no honest secret holder"] + examples


def test_criterion_4_claim_one_at_desk_scale(capsys):
    _check(capsys, 4, "no honest party VIOLATED under MPHTLC (bound 2)", 300, _claim_one)


# -- 5 --------------------------------------------------------------------------

def _mpc_suite():
    problems = []
    behaviours = [mpc.HONEST, mpc.ABORT, mpc.delay(0), mpc.delay(1), mpc.delay(2), mpc.delay(8)]
    rng = random.Random(5)
    for n in (1, 2, 3):
        parties = "WXY"[:n]
        secrets = {p: mpc.fresh_secret(rng, p) for p in parties}
        for f1 in itertools.product(behaviours, repeat=n):
            s = mpc.run_f1(mpc.new_session(parties, 5), secrets, dict(zip(parties, f1)))
            if s.phase is mpc.Phase.ABORTED:
                continue
            for f2 in itertools.product(behaviours, repeat=n):
                out = mpc.run_f2(s, 2, dict(zip(parties, f2)))
                if out.holders not in (frozenset(), frozenset(parties)):
                    problems.append(f"partial delivery {out.holders}")
    for _ in range(1000):
        n = rng.randint(1, 4)
        parties = "WXYZ"[:n]
        secrets = {p: mpc.fresh_secret(rng, p, rng.randint(16, 48)) for p in parties}
        out = mpc.run_f2(mpc.run_f1(mpc.new_session(parties, 3), secrets), 0)
        if digest(out.preimage_output) != out.hash_output:
            problems.append("F2 output does not hash to F1 output")
    secrets = {p: mpc.fresh_secret(rng, p) for p in "WX"}
    for d in range(0, 17):
        for start in range(0, 7):
            s = mpc.run_f1(mpc.new_session("WX", 6), secrets)
            out = mpc.run_f2(s, start, {"W": mpc.delay(d)})
            if out.release_tick > 6:
                problems.append(f"delivered at {out.release_tick} past deadline 6")
    return problems


def test_criterion_5_mpc_contract(capsys):
    _check(capsys, 5, "MPC fairness, consistency, timeliness", 30, _mpc_suite)


# -- 6 --------------------------------------------------------------------------

def _schedule():
    problems = []
    for inst in instance_corpus(61, 100):
        o1 = initial_owner_union(inst)
        sched = build_schedule(inst, 8, PER_ASSET)
        for a in inst.exchange1:
            if sched.offset(a) != 8:
                problems.append(f"{a} got {sched.offset(a)}")
        for a in inst.exchange2:
            want = 2 if (inst.fo2[a] - inst.io2[a]) & o1 else 4
            if sched.offset(a) != want:
                problems.append(f"{a} got {sched.offset(a)} want {want}")
    m = AssetId(1, "M")
    h = digest(b"k" * 32)
    state = new_ledger(1, {m: frozenset("X")})
    state = lock_assets(state, [m], h, {m: "Y"}, {m: 4}, [consent("X", 1, m, (h,), "Y", 4)])
    at_expiry = advance_clock(state, 4)
    try:
        claim_assets(at_expiry, [m], b"k" * 32, "Y")
        problems.append("claim at expiry succeeded")
    except LockExpired:
        pass
    if unlock_assets(at_expiry, [m], "X").locks:
        problems.append("unlock at expiry failed")
    return problems


def test_criterion_6_timeout_schedule(capsys):
    _check(capsys, 6, "timeout schedule and expiry boundaries", 10, _schedule)


# -- 7 --------------------------------------------------------------------------

def _deviations():
    problems = []
    s = scenario("shared_swap")
    for party in sorted(s.instance.parties):
        for strategy in strategy_library(s.instance, MPHTLC, party, s.T):
            res = evaluate_deviation(s.instance, s.T, party, strategy, s.seed)
            if res.improves:
                problems.append(f"{party}={strategy} gains {res.deviating_payoff} > {res.honest_payoff}")
    return problems


def test_criterion_7_no_profitable_deviation(capsys):
    _check(capsys, 7, "single deviations never pay", 10, _deviations)


# -- 8 --------------------------------------------------------------------------

def _blocks(text):
    """Split a machine-format report into one chunk per run."""
    chunks, current = [], None
    for line in text.splitlines():
        if line.startswith("profile|"):
            current = []
            chunks.append(current)
        if current is not None:
            current.append(line)
    return chunks


def _replay():
    problems = []
    for name in scenario_names():
        s = scenario(name)
        if s.classify_only:
            continue
        report = run_scenario(s)
        again = run_scenario(s)
        if emit_report(report, LINES) != emit_report(again, LINES):
            problems.append(f"{name} not byte-identical")
        golden = (GOLDEN_DIR / f"{name}.lines").read_text()
        blocks = _blocks(golden) if report.enumerated else [golden.splitlines()]
        if len(blocks) != len(report.runs):
            problems.append(f"{name} has {len(blocks)} logged runs, expected {len(report.runs)}")
            continue
        for block, run in zip(blocks, report.runs):
            events = event_lines("\n".join(block))
            if (replay(1, s.instance.io1, events) != dict(run.outcome.final1)
                    or replay(2, s.instance.io2, events) != dict(run.outcome.final2)):
                problems.append(f"{name} {run.profile.describe()} replays differently")
    return problems


def test_criterion_8_determinism_and_replay(capsys):
    _check(capsys, 8, "determinism and replay", 10, _replay)


if __name__ == "__main__":
    failed = 0
    for fn in (test_criterion_1_classification, test_criterion_2_happy_paths,
               test_criterion_3_attack_reproduction, test_criterion_4_claim_one_at_desk_scale,
               test_criterion_5_mpc_contract, test_criterion_6_timeout_schedule,
               test_criterion_7_no_profitable_deviation, test_criterion_8_determinism_and_replay):
        try:
            fn(None)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
