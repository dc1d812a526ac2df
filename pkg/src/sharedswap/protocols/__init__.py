from .engine import (
    HTLC,
    HTLC_MK,
    HTLC_MS,
    MPHTLC,
    PROTOCOLS,
    ProtocolPlan,
    RunOutcome,
    ShapeError,
    Step,
    build_plan,
    verdict_lines,
)
from .htlc import run_htlc, run_htlc_mk, run_htlc_ms
from .mphtlc import release_deadline, run_mphtlc
from .schedule import ScheduleError, TimeoutSchedule, build_schedule, classic_schedule
from .verify import POST_STEP_2, POST_STEP_3, verify_locks

RUNNERS = {
    HTLC: run_htlc,
    HTLC_MS: run_htlc_ms,
    HTLC_MK: run_htlc_mk,
    MPHTLC: run_mphtlc,
}

__all__ = [
    "HTLC", "HTLC_MK", "HTLC_MS", "MPHTLC", "PROTOCOLS", "POST_STEP_2", "POST_STEP_3",
    "ProtocolPlan", "RUNNERS", "RunOutcome", "ScheduleError", "ShapeError", "Step",
    "TimeoutSchedule", "build_plan", "build_schedule", "classic_schedule", "release_deadline",
    "run_htlc", "run_htlc_mk", "run_htlc_ms", "run_mphtlc", "verdict_lines", "verify_locks",
]
