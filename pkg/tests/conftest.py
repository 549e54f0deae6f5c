import numpy as np
import pytest

from junctionsim.meanfield import BcsSolution
from junctionsim.model import JunctionSpec

HALF = 1 / np.sqrt(2)


@pytest.fixture
def two_site():
    """Single-site regions with u = v = 1/sqrt(2), g12 = 0.1, volume 2."""
    spec = JunctionSpec(1, 1, t_hop=0.0, mu=0.0, g11=1.0, g22=1.0, g12=0.1)
    sols = (BcsSolution.from_amplitudes([HALF], [HALF], region=1),
            BcsSolution.from_amplitudes([HALF], [HALF], region=2))
    return spec, sols


@pytest.fixture
def six_site():
    """Weakly coupled 3 + 3 chain used for real-time runs."""
    return JunctionSpec(3, 3, t_hop=1.0, mu=0.0, g11=0.5, g22=0.5, g12=0.05)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
