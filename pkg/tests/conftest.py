import pytest

from spocsim.harness import DEFAULT_SYNTH, ScenarioConfig

# criterion lines collected by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_cfg():
    """Two days of one-minute slots: enough structure, fast to simulate."""
    return ScenarioConfig(synth={**DEFAULT_SYNTH, "n_slots": 2880}, seed=7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
