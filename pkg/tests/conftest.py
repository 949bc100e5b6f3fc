import numpy as np
import pytest

from trafficassign import paper_network

CRITERIA: dict[int, list[tuple[bool, str]]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA.setdefault(number, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        parts = CRITERIA[number]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def static_net():
    return paper_network(gamma=0.15, dt=3600.0, horizon=3600.0, demand_end=None)


@pytest.fixture(scope="session")
def dynamic_net():
    return paper_network()
