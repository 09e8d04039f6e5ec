from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# criterion id -> (description, passed); filled by test_acceptance
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def dataset_root() -> Path:
    return FIXTURES / "dataset"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        desc, ok = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"AC{cid:>2} {'PASS' if ok else 'FAIL'}  {desc}")
