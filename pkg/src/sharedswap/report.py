"""Run a scenario and render what happened."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .adversary import enumerate_profiles, payoffs
from .ledger import Event
from .model import ExchangeClassification, GaeInstance, classify, derive_gkt, fmt_parties, initial_owner_union
from .protocols import MPHTLC, RUNNERS, RunOutcome, build_schedule, classic_schedule
from .scenario import Scenario
from .strategies import StrategyProfile

TEXT = "text"
LINES = "lines"
FORMATS = (TEXT, LINES)


@dataclass(frozen=True)
class ProfileRun:
    profile: StrategyProfile
    outcome: RunOutcome
    payoffs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Report:
    scenario: Scenario
    classification: ExchangeClassification
    gkt: tuple
    schedule: tuple
    runs: tuple = ()
    enumerated: bool = False

    def honest_violation(self) -> bool:
        return any(r.outcome.violated_honest() for r in self.runs)


def gkt_rows(instance: GaeInstance) -> tuple:
    rows = []
    for ledger in (1, 2):
        part = derive_gkt(instance, ledger)
        for a in sorted(instance.exchange(ledger)):
            rows.append((a, part.givers[a], part.keepers[a], part.takers[a]))
    return tuple(rows)


def _schedule(s: Scenario):
    if s.protocol == MPHTLC:
        return build_schedule(s.instance, s.T, s.lock_mode)
    return classic_schedule(s.instance, s.T)


def _run(s: Scenario, profile: StrategyProfile) -> RunOutcome:
    if s.protocol == MPHTLC:
        return RUNNERS[MPHTLC](s.instance, s.T, s.lock_mode, profile, seed=s.seed, atomic=s.atomic)
    return RUNNERS[s.protocol](s.instance, s.T, profile, seed=s.seed)


def run_scenario(s: Scenario) -> Report:
    cls = classify(s.instance)
    gkt = gkt_rows(s.instance)
    if s.classify_only:
        return Report(s, cls, gkt, ())
    schedule = tuple(_schedule(s).rows())
    parties = sorted(s.instance.parties)
    if s.enumerate_bound is not None:
        profiles = list(enumerate_profiles(s.instance, s.protocol, s.enumerate_bound, s.T))
    else:
        profiles = [s.profile()]
    runs = []
    for prof in profiles:
        out = _run(s, prof)
        runs.append(ProfileRun(prof, out, payoffs(out.final1, out.final2, parties)))
    return Report(s, cls, gkt, schedule, tuple(runs), s.enumerate_bound is not None)


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _text(report: Report) -> list[str]:
    s = report.scenario
    cls = report.classification
    out = [f"warning: {w}" for w in s.warnings]
    out += [
        "== classification",
        f"kind: {cls.kind.value}",
        f"s12: {{{fmt_parties(cls.s12)}}}",
        f"s21: {{{fmt_parties(cls.s21)}}}",
        f"O1: {{{fmt_parties(initial_owner_union(s.instance))}}}",
        "== givers / keepers / takers",
    ]
    for a, g, k, t in report.gkt:
        out.append(f"L{a.ledger} {a.name}: G={{{fmt_parties(g)}}} K={{{fmt_parties(k)}}} T={{{fmt_parties(t)}}}")
    if s.classify_only:
        return out
    out.append(f"== schedule ({s.protocol}, T={s.T}, {s.lock_mode})")
    for a, offset in report.schedule:
        out.append(f"L{a.ledger} {a.name}: {offset}")
    if report.runs:
        out.append("== steps")
        out += [st.line() for st in report.runs[0].outcome.plan.steps]
    for r in report.runs:
        out.append(f"== run: {r.profile.describe()}")
        out += r.outcome.lines()
        out.append("-- verdicts")
        for v in r.outcome.verdicts:
            mark = "" if v.party in r.outcome.honest else " (deviating)"
            out.append(f"{v.party}|{v.verdict.value}{mark}")
        out.append("-- payoffs")
        out += [f"{p}|{_frac(x)}" for p, x in sorted(r.payoffs.items())]
    return out


def _lines(report: Report) -> list[str]:
    s = report.scenario
    cls = report.classification
    out = [f"warning|{w}" for w in s.warnings]
    out += [
        f"class|kind|{cls.kind.value}",
        f"class|s12|{fmt_parties(cls.s12)}",
        f"class|s21|{fmt_parties(cls.s21)}",
    ]
    for a, g, k, t in report.gkt:
        out.append(f"gkt|L{a.ledger}|{a.name}|G={fmt_parties(g)}|K={fmt_parties(k)}|T={fmt_parties(t)}")
    for a, offset in report.schedule:
        out.append(f"schedule|L{a.ledger}|{a.name}|{offset}")
    for r in report.runs:
        if report.enumerated:
            out.append(f"profile|{r.profile.describe()}")
        for p, strategy in r.profile.normalized():
            out.append(f"strategy|{p}|{strategy}")
        out += r.outcome.lines()
        out += [f"verdict|{v.party}|{v.verdict.value}" for v in r.outcome.verdicts]
    return out


def emit_report(report: Report, fmt: str = TEXT) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    body = _text(report) if fmt == TEXT else _lines(report)
    return "\n".join(body) + "\n"


_LEDGER_FIELDS = {"L1", "L2", "mpc", "offchain"}


def event_lines(text: str) -> list[Event]:
    """Pick the event records back out of a machine-format report."""
    out = []
    for line in text.splitlines():
        head = line.split("|", 2)
        if len(head) == 3 and head[0].isdigit() and head[1] in _LEDGER_FIELDS:
            out.append(Event.parse(line))
    return out
