import pytest

from infocommodity import MarketParams, OuParams

BRIDGE = dict(kappa=0.2, theta=1.2, psi=0.4, x0=0.5)
SURFACE = dict(kappa=0.15, theta=0.5, psi=0.15, x0=0.6, sigma=0.25, r=0.05)


@pytest.fixture
def bridge_ou():
    return OuParams(**BRIDGE)


@pytest.fixture
def surface_mp():
    return MarketParams.from_values(**SURFACE)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
