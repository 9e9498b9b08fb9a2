import pytest

from aileen.harness import PHASES, CurriculumConfig, bootstrap
from aileen.relfact import parse_case
from aileen.sage import ConceptMemory

EXAMPLE_A = "(isa o2 CVRed) (isa o2 CVCylinder) (isa o2 RRed)"
EXAMPLE_B = "(isa o3 CVRed) (isa o3 CVCube) (isa o3 RRed)"
EXAMPLE_C = "(isa o7 CVRed) (isa o7 CVSphere) (isa o7 RRed)"
QUERY_SCENE = "(isa o4 CVRed) (isa o4 CVBox) (isa o5 CVGreen) (isa o5 CVCylinder)"


@pytest.fixture
def red_memory():
    memory = ConceptMemory()
    memory.create("RRed")
    memory.store(parse_case(EXAMPLE_A), "RRed")
    memory.store(parse_case(EXAMPLE_B), "RRed")
    return memory


@pytest.fixture(scope="session")
def trained():
    """Memory and semantic map trained on every phase."""
    return bootstrap(CurriculumConfig(phase="action"), PHASES)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
