import pytest

from swarm_sop.geometry import EavesdropperDisc, NodePosition
from swarm_sop.protocol import Scenario, SystemConfig

# acceptance verdicts collected by test_acceptance.py, echoed in the summary
VERDICTS: dict = {}


def baseline_scenario(r_c: float = 300.0, eve=True) -> Scenario:
    return Scenario(
        source=NodePosition(300, 300, 25),
        destination=NodePosition(600, 300, 0),
        swarm=NodePosition(350, 300, 60),
        eavesdropper=NodePosition(600, 400, 0) if eve else None,
        disc=EavesdropperDisc(r_c),
    )


@pytest.fixture
def scenario():
    return baseline_scenario()


@pytest.fixture
def cfg():
    return SystemConfig()


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[k])
