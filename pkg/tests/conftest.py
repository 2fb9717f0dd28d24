from pathlib import Path

import pytest

from quantsem.kb import load_seed_kb
from quantsem.oracle import MockBackend, Oracle, ReplayBackend, Transcript, parse_mock_table

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def kb():
    return load_seed_kb()


@pytest.fixture(scope="session")
def frozen_kb():
    return load_seed_kb().snapshot()


def mock_oracle(table: str) -> Oracle:
    return Oracle(MockBackend(parse_mock_table(table)), Transcript())


def replay_oracle() -> Oracle:
    text = (GOLDEN / "transcript.jsonl").read_text(encoding="utf-8")
    import json

    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    return Oracle(ReplayBackend(), Transcript(records=records))


@pytest.fixture
def golden():
    return GOLDEN


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
