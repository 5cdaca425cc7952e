import sys

import pytest

from boundqed.angular import required_kappas
from boundqed.constants import ALPHA
from boundqed.selfenergy import SelfEnergyEngine
from boundqed.spectrum import DiracBasis, build_spectrum
from boundqed.splinebasis import build_basis

# A deliberately small basis: enough for structural checks, cheap to build.
SMALL = dict(n_points=14, order=6, n_waves=3)


def small_engine(Z, radius=None, threads=1, n_waves=SMALL["n_waves"]):
    R = 40.0 / (Z * ALPHA) if radius is None else radius
    basis = DiracBasis(build_basis(SMALL["n_points"], SMALL["order"], R))
    kappas = required_kappas(-1, n_waves - 1)
    bound = build_spectrum(basis, Z, kappas)
    free = build_spectrum(basis, 0, kappas)
    return SelfEnergyEngine(bound, free, n_waves, threads=threads)


@pytest.fixture(scope="session")
def engine10():
    return small_engine(10)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERIA_LINES", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
