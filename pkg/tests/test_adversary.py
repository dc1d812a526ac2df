import itertools
from fractions import Fraction
from math import prod

import pytest

from sharedswap.adversary import (
    StrategyError,
    collusion_playbook,
    counterparties,
    enumerate_profiles,
    evaluate_deviation,
    parse_attack,
    payoffs,
    strategy_library,
    validate_strategy,
)
from sharedswap.model import AssetId, GaeInstance, Verdict
from sharedswap.protocols import HTLC, HTLC_MK, HTLC_MS, MPHTLC, RUNNERS, run_mphtlc
from sharedswap.strategies import (
    HONEST,
    StrategyProfile,
    abort_at,
    collude_relock,
    mpc_abort,
    mpc_delay,
    parse_strategy,
    withhold,
)

S = frozenset


def shared_swap():
    return GaeInstance.from_transfers([(1, "M", "XW", "Y"), (2, "N", "Y", "XW")])


def two_givers():
    return GaeInstance.from_transfers([(1, "M", "X", "Y"), (1, "R", "W", "Y"), (2, "N", "Y", "XW")])


@pytest.mark.parametrize("text", ["honest", "abort_at(3)", "withhold", "mpc_delay(2)", "mpc_abort",
                                  "collude_relock(Y)", "collude_relock(Y;lapse)"])
def test_strategy_text_round_trip(text):
    assert str(parse_strategy(text)) == text


def test_library_contents():
    lib = strategy_library(shared_swap(), MPHTLC, "W")
    assert abort_at(1) in lib and withhold() in lib and mpc_abort() in lib
    assert [s for s in lib if s.kind.name == "MPC_DELAY"] == [mpc_delay(1), mpc_delay(2), mpc_delay(8)]
    assert collude_relock({"Y"}) in lib and collude_relock({"Y"}, after_lapse=True) in lib
    # Y holds no secret, locks N and claims M
    assert strategy_library(shared_swap(), MPHTLC, "Y") == [abort_at(3), abort_at(6)]
    assert counterparties(shared_swap(), "X") == ["Y"]


@pytest.mark.parametrize("protocol", [MPHTLC, HTLC_MS, HTLC_MK])
@pytest.mark.parametrize("inst", [shared_swap(), two_givers()], ids=["shared", "two-givers"])
def test_enumeration_counts(inst, protocol):
    parties = sorted(inst.parties)
    k = {p: len(strategy_library(inst, protocol, p)) for p in parties}
    for bound in range(len(parties) + 1):
        profiles = list(enumerate_profiles(inst, protocol, bound))
        expected = sum(prod(k[p] for p in group)
                       for size in range(bound + 1) for group in itertools.combinations(parties, size))
        assert len(profiles) == expected
        assert len({p.normalized() for p in profiles}) == expected
    assert expected == prod(k[p] + 1 for p in parties)


def test_enumeration_edges():
    (only,) = enumerate_profiles(shared_swap(), MPHTLC, 0)
    assert only.normalized() == ()
    assert only["X"] == HONEST
    first = list(enumerate_profiles(shared_swap(), MPHTLC, 1))
    assert any(p.normalized() == (("W", collude_relock({"Y"})),) for p in first)
    with pytest.raises(ValueError):
        list(enumerate_profiles(shared_swap(), MPHTLC, 4))


def test_validate_strategy():
    inst = shared_swap()
    validate_strategy(inst, MPHTLC, "W", abort_at(6))
    with pytest.raises(StrategyError):
        validate_strategy(inst, MPHTLC, "W", abort_at(7))
    with pytest.raises(StrategyError):
        validate_strategy(inst, HTLC_MS, "W", abort_at(6))
    with pytest.raises(StrategyError):
        validate_strategy(inst, MPHTLC, "W", collude_relock({"X"}))
    with pytest.raises(StrategyError):
        validate_strategy(inst, MPHTLC, "Q", HONEST)


def test_payoffs_split_evenly():
    out = payoffs({AssetId(1, "M"): S("Y")}, {AssetId(2, "N"): S("XW")}, "WXYZ")
    assert out == {"W": Fraction(1, 2), "X": Fraction(1, 2), "Y": Fraction(1), "Z": Fraction(0)}


def test_playbook_shapes():
    names = [n for n, _ in collusion_playbook(shared_swap(), HTLC_MS)]
    assert "ms_collusion(W,Y)" in names
    assert all(n.startswith("ms_collusion") for n in names)
    mk = [n for n, _ in collusion_playbook(shared_swap(), HTLC_MK)]
    assert "mk_withhold_relock(W,Y)" in mk
    with pytest.raises(StrategyError):
        collusion_playbook(shared_swap(), HTLC)


def test_second_shape_collusion_gives_two_assets():
    inst = two_givers()
    book = dict(collusion_playbook(inst, HTLC_MS))
    out = RUNNERS[HTLC_MS](inst, 8, book["ms_collusion(W,Y)"])
    assert out.final1[AssetId(1, "M")] == out.final1[AssetId(1, "R")] == {"Y"}
    assert out.final2[AssetId(2, "N")] == {"W"}
    assert out.verdict("X") is Verdict.VIOLATED


@pytest.mark.parametrize("inst", [shared_swap(), two_givers()], ids=["shared", "two-givers"])
def test_playbook_is_harmless_under_mphtlc(inst):
    for name, prof in collusion_playbook(inst, MPHTLC):
        out = run_mphtlc(inst, 8, strategies=prof)
        assert not out.any_violated(), name


def test_parse_attack():
    name, prof = parse_attack(" ms_collusion( W , Y ) ")
    assert name == "ms_collusion(W,Y)"
    assert prof.normalized() == (("W", collude_relock({"Y"})),)
    for bad in ("ms_collusion(W)", "nope(W,Y)"):
        with pytest.raises(StrategyError):
            parse_attack(bad)


def test_deviation_examples():
    inst = shared_swap()
    res = evaluate_deviation(inst, 8, "W", withhold())
    assert res.deviating_payoff <= res.honest_payoff == Fraction(1, 2)
    assert not evaluate_deviation(inst, 8, "X", abort_at(2)).improves
    same = evaluate_deviation(inst, 8, "X", HONEST)
    assert same.deviating_payoff == same.honest_payoff
    ult = GaeInstance.from_transfers([(1, "M", "X", "Y"), (2, "N", "Z", "W")])
    with pytest.raises(StrategyError):
        evaluate_deviation(ult, 8, "X", withhold())


def test_profile_describe_and_partners():
    prof = StrategyProfile({"W": collude_relock({"Y"}), "X": HONEST})
    assert prof.describe() == "W=collude_relock(Y)"
    assert prof.honest_parties("WXY") == ["X"]
    assert StrategyProfile({}).describe() == "all-honest"
