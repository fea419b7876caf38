import pytest

from mtsim import Hierarchy, WorkloadSpec, Zipf, generate
from mtsim.engine import MigrationEngine

ACCEPTANCE_LINES = []

# Every engine run in the session is checked for read conservation.
RUN_AUDIT = {"runs": 0, "violations": 0}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    if RUN_AUDIT["runs"]:
        terminalreporter.write_line(
            f"read conservation audit: {RUN_AUDIT['runs']} simulations, "
            f"{RUN_AUDIT['violations']} violations")


@pytest.fixture(scope="session", autouse=True)
def audit_conservation():
    original = MigrationEngine.run

    def audited(self, trace, measure_from=0):
        m = original(self, trace, measure_from)
        RUN_AUDIT["runs"] += 1
        if m.ssd_reads + m.dram_hits + m.nvm_hits != m.read_ops:
            RUN_AUDIT["violations"] += 1
            raise AssertionError(f"read conservation violated: {m}")
        return m

    MigrationEngine.run = audited
    yield
    MigrationEngine.run = original


@pytest.fixture(scope="session")
def small_zipf():
    return generate(WorkloadSpec(Zipf(1.0), 500, 20_000, 0.8, 3))


@pytest.fixture
def tiny_hierarchy():
    return Hierarchy.from_blocks(8, 32, 1000)
