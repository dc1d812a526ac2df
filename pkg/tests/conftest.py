from importlib import resources
from pathlib import Path

from hypothesis import strategies as st

from sharedswap.model import GaeInstance, validate_instance
from sharedswap.scenario import load_scenario

SCENARIO_DIR = Path(str(resources.files("sharedswap") / "scenarios"))
GOLDEN_DIR = Path(__file__).parent / "golden"
NAMES = "VWXYZ"


def scenario(name: str):
    return load_scenario(SCENARIO_DIR / f"{name}.scn")


def scenario_names() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.scn"))


@st.composite
def instances(draw, max_parties: int = 5, max_assets: int = 4, min_l1_moves: int = 0):
    """Valid instances drawn directly rather than by rejection."""
    n = draw(st.integers(2, max_parties))
    parties = list(NAMES[:n])
    owners = st.frozensets(st.sampled_from(parties), min_size=1)
    transfers, held = [], []
    for ledger, prefix in ((1, "A"), (2, "B")):
        count = draw(st.integers(max(1, min_l1_moves) if ledger == 1 else 0, max_assets))
        for i in range(count):
            io = draw(owners)
            moves = (ledger == 1 and i < min_l1_moves) or draw(st.booleans())
            if moves:
                fo = draw(owners.filter(lambda s, io=io: s != io))
                transfers.append((ledger, f"{prefix}{i}", io, fo))
            else:
                held.append((ledger, f"{prefix}{i}", io))
    inst = GaeInstance.from_transfers(transfers, held, parties)
    assert not validate_instance(inst)
    return inst


def involved(inst: GaeInstance) -> set:
    out: set = set()
    for a in inst.exchanged_assets():
        out |= inst.initial_owners(a) | inst.final_owners(a)
    return out
