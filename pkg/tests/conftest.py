import pytest

from optolattice.lattice import ChainParams, build_chain
from optolattice.spectra import eigenspectrum

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def working_point():
    return ChainParams(g_plus=0.242, g_minus=1.0, j_hop=0.5, kappa=1.0, gamma=1e-4, n_cells=10)


@pytest.fixture(scope="session")
def working_report(working_point):
    return eigenspectrum(build_chain(working_point))


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    _ACCEPTANCE.append(f"{status}  {name}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
