"""Scenario files: an exchange instance plus everything needed to run it.

    # two owners of M swap it for N
    parties: W, X, Y
    L1: M: {X,W} -> {Y}
    L2: N: {Y} -> {X,W}
    L1: Gold: {X}            (held, not exchanged)
    protocol: MPHTLC
    T: 8
    lock_mode: per-asset
    strategy W = withhold
    attack = ms_collusion(W,Y)
    enumerate bound=2
    atomic: N
    seed: 0
    classify_only: true
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .adversary import StrategyError, parse_attack
from .ledger import LOCK_MODES, PER_ASSET
from .model import GaeInstance, fmt_parties, validate_instance
from .protocols import MPHTLC, PROTOCOLS
from .strategies import Strategy, StrategyProfile, parse_strategy

DEFAULT_T = 8
NO_PROTOCOL_WARNING = f"no protocol given, defaulting to {MPHTLC}"


class ScenarioError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Scenario:
    instance: GaeInstance
    protocol: str = MPHTLC
    T: int = DEFAULT_T
    lock_mode: str = PER_ASSET
    strategies: tuple = ()
    attack: str | None = None
    enumerate_bound: int | None = None
    atomic: frozenset = frozenset()
    seed: int = 0
    classify_only: bool = False
    comments: tuple = ()
    # (ledger, name, initial, final-or-None) in file order, for rendering
    rows: tuple = field(default=(), compare=False)
    warnings: tuple = field(default=(), compare=False)

    def profile(self) -> StrategyProfile:
        assignment: dict[str, Strategy] = {}
        if self.attack:
            _, prof = parse_attack(self.attack)
            assignment.update(prof.assignment)
        assignment.update(dict(self.strategies))
        return StrategyProfile(assignment)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def with_bound(self, bound: int) -> "Scenario":
        return replace(self, enumerate_bound=bound)


_SET = r"\{([^{}]*)\}"
_ASSET_RE = re.compile(rf"^L([12])\s*:\s*([^:\s]+)\s*:\s*{_SET}\s*(?:->\s*{_SET})?\s*$")
_KEY_RE = re.compile(r"^([A-Za-z_]+)\s*:\s*(.*)$")
_STRATEGY_RE = re.compile(r"^strategy\s+(\S+)\s*=\s*(.+)$")
_ATTACK_RE = re.compile(r"^attack\s*=\s*(.+)$")
_ENUM_RE = re.compile(r"^enumerate(?:\s+bound\s*=\s*(\d+))?\s*$")


def _names(text: str, lineno: int) -> list[str]:
    out = [p.strip() for p in text.split(",")]
    if out == [""]:
        return []
    if any(not p for p in out):
        raise ScenarioError(lineno, "empty party name in set")
    return out


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioError(lineno, f"{what} must be an integer, got {text!r}") from None


def parse_scenario(text: str) -> Scenario:
    comments: list[str] = []
    rows: list[tuple] = []
    asset_line: dict[tuple, int] = {}
    strategies: dict[str, Strategy] = {}
    parties: list[str] | None = None
    opts: dict = {}
    saw_body = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if not saw_body:
                comments.append(line[1:].strip())
            continue
        saw_body = True
        m = _ASSET_RE.match(line)
        if m:
            ledger, name = int(m.group(1)), m.group(2)
            if (ledger, name) in asset_line:
                raise ScenarioError(lineno, f"asset {name} listed twice on L{ledger}")
            asset_line[(ledger, name)] = lineno
            initial = frozenset(_names(m.group(3), lineno))
            final = frozenset(_names(m.group(4), lineno)) if m.group(4) is not None else None
            rows.append((ledger, name, initial, final))
            continue
        m = _STRATEGY_RE.match(line)
        if m:
            party = m.group(1)
            if party in strategies:
                raise ScenarioError(lineno, f"second strategy for {party}")
            try:
                strategies[party] = parse_strategy(m.group(2))
            except ValueError as err:
                raise ScenarioError(lineno, str(err)) from None
            continue
        m = _ATTACK_RE.match(line)
        if m:
            try:
                opts["attack"], _ = parse_attack(m.group(1))
            except StrategyError as err:
                raise ScenarioError(lineno, str(err)) from None
            continue
        m = _ENUM_RE.match(line)
        if m:
            opts["enumerate_bound"] = _int(m.group(1), lineno, "bound") if m.group(1) else 1
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ScenarioError(lineno, f"cannot parse {line!r}")
        key, value = m.group(1), m.group(2).strip()
        if key == "parties":
            parties = _names(value, lineno)
            if len(set(parties)) != len(parties):
                raise ScenarioError(lineno, "duplicate party")
        elif key == "protocol":
            if value not in PROTOCOLS:
                raise ScenarioError(lineno, f"unknown protocol {value!r}")
            opts["protocol"] = value
        elif key == "T":
            opts["T"] = _int(value, lineno, "T")
            if opts["T"] < 4 or opts["T"] % 4:
                raise ScenarioError(lineno, "T must be a positive multiple of 4")
        elif key == "lock_mode":
            if value not in LOCK_MODES:
                raise ScenarioError(lineno, f"lock_mode must be one of {', '.join(LOCK_MODES)}")
            opts["lock_mode"] = value
        elif key == "atomic":
            opts["atomic"] = frozenset(_names(value, lineno))
        elif key == "seed":
            opts["seed"] = _int(value, lineno, "seed")
        elif key == "classify_only":
            if value not in ("true", "false"):
                raise ScenarioError(lineno, "classify_only must be true or false")
            opts["classify_only"] = value == "true"
        else:
            raise ScenarioError(lineno, f"unknown key {key!r}")

    if not rows:
        raise ScenarioError(None, "no assets")
    transfers = [(l, n, i, f) for l, n, i, f in rows if f is not None]
    held = [(l, n, i) for l, n, i, f in rows if f is None]
    instance = GaeInstance.from_transfers(transfers, held, parties)
    problems = validate_instance(instance)
    if problems:
        first = problems[0]
        where = asset_line.get((first.ledger, first.asset))
        raise ScenarioError(where, "; ".join(map(str, problems)))
    for p in strategies:
        if p not in instance.parties:
            raise ScenarioError(None, f"strategy for unknown party {p}")
    warnings = []
    if "protocol" not in opts:
        warnings.append(NO_PROTOCOL_WARNING)
    return Scenario(
        instance=instance,
        strategies=tuple(sorted(strategies.items())),
        comments=tuple(comments),
        rows=tuple(rows),
        warnings=tuple(warnings),
        **opts,
    )


def _set(parties: Iterable[str]) -> str:
    return "{" + fmt_parties(parties) + "}"


def render_scenario(s: Scenario) -> str:
    out = [f"# {c}" if c else "#" for c in s.comments]
    out.append(f"parties: {', '.join(sorted(s.instance.parties))}")
    rows = s.rows or tuple(
        (a.ledger, a.name, s.instance.initial_owners(a),
         s.instance.final_owners(a) if a in s.instance.exchange(a.ledger) else None)
        for a in s.instance.all_assets()
    )
    for ledger, name, initial, final in rows:
        if final is None:
            out.append(f"L{ledger}: {name}: {_set(initial)}")
        else:
            out.append(f"L{ledger}: {name}: {_set(initial)} -> {_set(final)}")
    out.append(f"protocol: {s.protocol}")
    out.append(f"T: {s.T}")
    out.append(f"lock_mode: {s.lock_mode}")
    for party, strategy in s.strategies:
        out.append(f"strategy {party} = {strategy}")
    if s.attack:
        out.append(f"attack = {s.attack}")
    if s.enumerate_bound is not None:
        out.append(f"enumerate bound={s.enumerate_bound}")
    if s.atomic:
        out.append(f"atomic: {', '.join(sorted(s.atomic))}")
    out.append(f"seed: {s.seed}")
    if s.classify_only:
        out.append("classify_only: true")
    return "\n".join(out) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
