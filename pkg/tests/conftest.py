import json
from functools import lru_cache
from pathlib import Path

import pytest

from finverify.layoutio import load_layout
from finverify.techdb import load_tech

ROOT = Path(__file__).resolve().parents[1]
FIX = ROOT / "fixtures"

# fixture file -> top cell
GOLDEN = {
    "inv.json": "INV",
    "nand4.json": "NAND4",
    "inv_tiled_2x2.json": "INV_2X2",
    "nand4_tiled.json": "NAND4_2X2",
}


@lru_cache(maxsize=None)
def _tech():
    return load_tech()


@lru_cache(maxsize=None)
def flat(name: str, top: str):
    return load_layout(FIX / name, _tech()).flatten(top)


@pytest.fixture(scope="session")
def tech():
    return _tech()


@pytest.fixture(scope="session")
def mutations():
    return json.loads((FIX / "mutations" / "manifest.json").read_text())


# one "PASS/FAIL criterion N" line per acceptance check, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
