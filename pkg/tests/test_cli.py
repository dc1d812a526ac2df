import pytest

from conftest import GOLDEN_DIR, SCENARIO_DIR, scenario, scenario_names
from sharedswap.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATED, main
from sharedswap.ledger import replay
from sharedswap.report import LINES, TEXT, emit_report, event_lines, run_scenario

ATTACKS = {"ms_collusion", "mk_withhold_relock", "two_givers_ms_collusion"}


def command_for(name: str) -> str:
    s = scenario(name)
    if s.classify_only:
        return "classify"
    return "enumerate" if s.enumerate_bound is not None else "run"


def cli(capsys, *args):
    code = main(list(map(str, args)))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.mark.parametrize("name", scenario_names())
def test_golden_lines(name, capsys):
    code, out, _ = cli(capsys, command_for(name), SCENARIO_DIR / f"{name}.scn", "--format", LINES)
    assert out == (GOLDEN_DIR / f"{name}.lines").read_text()
    assert code == (EXIT_VIOLATED if name in ATTACKS else EXIT_OK)


@pytest.mark.parametrize("name", scenario_names())
def test_reports_are_deterministic(name):
    s = scenario(name)
    for fmt in (TEXT, LINES):
        assert emit_report(run_scenario(s), fmt) == emit_report(run_scenario(s), fmt)


@pytest.mark.parametrize("name", [n for n in scenario_names() if not scenario(n).classify_only])
def test_machine_log_replays(name):
    s = scenario(name)
    report = run_scenario(s)
    for run in report.runs:
        text = "\n".join(run.outcome.lines())
        events = event_lines(text)
        assert replay(1, s.instance.io1, events) == dict(run.outcome.final1)
        assert replay(2, s.instance.io2, events) == dict(run.outcome.final2)


def test_classification_only_report(capsys):
    code, out, _ = cli(capsys, "run", SCENARIO_DIR / "basic_cls.scn")
    assert code == EXIT_OK
    assert "== classification" in out and "kind: FULL_GCLS_MIX" in out
    assert "== schedule" not in out and "== run" not in out


def test_text_report_sections(capsys):
    code, out, _ = cli(capsys, "run", SCENARIO_DIR / "ms_collusion.scn")
    assert code == EXIT_VIOLATED
    for heading in ("== classification", "== givers / keepers / takers", "== schedule", "== steps",
                    "== run: W=collude_relock(Y)", "-- verdicts", "-- payoffs"):
        assert heading in out
    assert "X|VIOLATED" in out and "W|VIOLATED (deviating)" in out


def test_classify_command_skips_running(capsys):
    code, out, _ = cli(capsys, "classify", SCENARIO_DIR / "ms_collusion.scn", "--format", LINES)
    assert code == EXIT_OK
    assert all(line.split("|")[0] in ("class", "gkt") for line in out.splitlines())


def test_enumerate_bound_flag(capsys):
    code, out, _ = cli(capsys, "enumerate", SCENARIO_DIR / "shared_swap.scn", "--bound", 0, "--format", LINES)
    assert code == EXIT_OK
    assert [line for line in out.splitlines() if line.startswith("profile|")] == ["profile|all-honest"]


def test_seed_changes_secrets_only(capsys):
    path = SCENARIO_DIR / "shared_swap.scn"
    _, a, _ = cli(capsys, "run", path, "--format", LINES)
    _, b, _ = cli(capsys, "run", path, "--format", LINES, "--seed", 5)
    _, c, _ = cli(capsys, "run", path, "--format", LINES, "--seed", 5)
    assert a != b and b == c
    strip = [line.split("|")[:3] for line in a.splitlines()]
    assert strip == [line.split("|")[:3] for line in b.splitlines()]


def test_missing_protocol_warning_in_report(tmp_path, capsys):
    path = tmp_path / "bare.scn"
    path.write_text("parties: X, Y\nL1: M: {X} -> {Y}\nL2: N: {Y} -> {X}\n")
    code, out, _ = cli(capsys, "run", path, "--format", LINES)
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("warning|no protocol given")


def test_error_exits(tmp_path, capsys):
    code, _, err = cli(capsys, "run", tmp_path / "absent.scn")
    assert code == EXIT_ERROR and "absent.scn" in err
    bad = tmp_path / "bad.scn"
    bad.write_text("parties: X, Y\nL1: M: {X} -> {X}\n")
    code, _, err = cli(capsys, "run", bad)
    assert code == EXIT_ERROR and "line 2" in err
    shape = tmp_path / "shape.scn"
    shape.write_text("parties: W, X, Y\nL1: M: {X,W} -> {Y}\nL2: N: {Y} -> {X,W}\nprotocol: HTLC\n")
    code, _, err = cli(capsys, "run", shape)
    assert code == EXIT_ERROR and err
