"""Acceptance criteria, one test and one PASS/FAIL line per criterion.

Physics criteria run the production configuration (N=28, k=9, s=7, box
40/(Z alpha)); they take several minutes in total.
"""
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from boundqed import cli
from boundqed.analysis import fit_c, reference_rows
from boundqed.spectrum import DiracBasis, build_spectrum, sommerfeld_energy
from boundqed.splinebasis import build_basis
from boundqed.constants import ALPHA

# -- pinned tolerances and targets ---------------------------------------------------------
EIGEN_RTOL = 1e-6
FIRST_ORDER_EVEN = {0: 0.1269, 2: 0.1615, 4: 0.1659, 6: 0.1672}
FIRST_ORDER_ODD = {1: 0.1769, 3: 0.1715, 5: 0.1702}
FIRST_ORDER_RTOL = 0.03
MOHR_Z10 = 0.1566
MOHR_RTOL = 0.10
HIGH_Z = {70: -0.2283, 80: -0.4474, 92: -0.9712}
HIGH_Z_RTOL = 0.10
LOW_Z_G = {3: -2.101, 10: -2.601, 20: -2.568}
LOW_Z_G_ALLORDER = {3: -4.50, 10: -4.9016, 20: -4.1217}
LOW_Z_RTOL = 0.15
C_RANGE = (-1.3, -0.7)
SIGN_RATIO_RANGE = (0.50, 0.70)
STABLE_MAX_PCT = 12.0
UNSTABLE_MIN_PCT = 10.0
BENCHMARK_Z = sorted(reference_rows())

PRODUCTION = cli.RunConfig(n_points=28, order=9, n_waves=7, box_coeff=40.0)


CRITERIA_LINES = {}


def report(n, ok, detail):
    """Record the one-line verdict; conftest prints all of them after the run."""
    CRITERIA_LINES[n] = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    return ok


class Physics:
    """Lazily computed production results, shared by the criteria."""

    def __init__(self):
        self._runs = {}

    def run(self, Z, order=9):
        key = (Z, order)
        if key not in self._runs:
            mode = "all" if (Z == 10 and order == 9) else "sese"
            self._runs[key] = cli.compute_z(PRODUCTION, Z, order=order, mode=mode)
        return self._runs[key]

    def shift(self, Z, order=9):
        return self.run(Z, order).exact.delta_e


@pytest.fixture(scope="session")
def physics():
    return Physics()


def test_criterion_1_dirac_eigenvalues():
    worst = 0.0
    for Z in (1, 10, 50, 92):
        basis = DiracBasis(build_basis(28, 9, 40.0 / (Z * ALPHA)))
        spectra = build_spectrum(basis, Z, [-1, 1, -2])
        for kappa, offset, n in ((-1, 0, 1), (-1, 1, 2), (1, 0, 2), (-2, 0, 2)):
            E = spectra[kappa].lowest_positive(offset).energy
            worst = max(worst, abs(E / sommerfeld_energy(Z, n, kappa) - 1))
    ok = report(1, worst < EIGEN_RTOL, f"max relative error {worst:.2e}, limit {EIGEN_RTOL:g}")
    assert ok


def test_criterion_2_first_order_z10(physics):
    ser = physics.run(10).first_order
    sums = ser.partial_sums
    dev = {l: abs(sums[l] / v - 1) for l, v in {**FIRST_ORDER_EVEN, **FIRST_ORDER_ODD}.items()}
    worst = max(dev.values())
    lim_dev = abs(ser.limit / MOHR_Z10 - 1)
    ok = worst <= FIRST_ORDER_RTOL and lim_dev <= MOHR_RTOL
    report(2, ok, f"partial sums {np.round(sums, 4).tolist()} eV, worst deviation {worst:.3g}; "
                  f"extrapolated {ser.limit:.4g} eV vs {MOHR_Z10}, deviation {lim_dev:.3g}")
    assert ok


def test_criterion_3_high_z(physics):
    got = {Z: physics.shift(Z) for Z in HIGH_Z}
    dev = {Z: abs(got[Z] / HIGH_Z[Z] - 1) for Z in HIGH_Z}
    ok = all(d <= HIGH_Z_RTOL for d in dev.values())
    report(3, ok, "; ".join(f"Z={Z}: {got[Z]:.4g} eV vs {HIGH_Z[Z]} (dev {dev[Z]:.3g})" for Z in HIGH_Z))
    assert ok


def test_criterion_4_low_z_g(physics):
    g = {Z: physics.run(Z).exact.g for Z in LOW_Z_G}
    within = all(abs(g[Z] / LOW_Z_G[Z] - 1) <= LOW_Z_RTOL for Z in LOW_Z_G)
    closer = all(abs(g[Z] - LOW_Z_G[Z]) < abs(g[Z] - LOW_Z_G_ALLORDER[Z]) for Z in LOW_Z_G)
    ok = within and closer
    report(4, ok, "; ".join(f"Z={Z}: G={g[Z]:.4g} vs {LOW_Z_G[Z]} / {LOW_Z_G_ALLORDER[Z]}" for Z in LOW_Z_G))
    assert ok


def test_criterion_5_quadratic_log_coefficient(physics):
    g = {Z: physics.run(Z).exact.g for Z in BENCHMARK_Z if 3 <= Z <= 20}
    fit = fit_c(g)
    ok = C_RANGE[0] <= fit.C <= C_RANGE[1]
    report(5, ok, f"C = {fit.C:.4g} +- {fit.spread:.3g} over Z={list(fit.z_set)}, target {C_RANGE}")
    assert ok


def test_criterion_6_sign_approximation(physics):
    run = physics.run(92)
    ratio = run.sign.delta_e / run.exact.delta_e
    ok = SIGN_RATIO_RANGE[0] <= ratio <= SIGN_RATIO_RANGE[1]
    report(6, ok, f"sign-only {run.sign.delta_e:.4g} eV / exact {run.exact.delta_e:.4g} eV = {ratio:.3g}")
    assert ok


def test_criterion_7_spline_order_stability(physics):
    def dev(Z):
        hi, lo = physics.shift(Z, 9), physics.shift(Z, 4)
        return 100.0 * abs(lo - hi) / abs(hi)

    stable = {Z: dev(Z) for Z in BENCHMARK_Z}
    unstable = {Z: dev(Z) for Z in (1, 2)}
    ok = (all(d <= STABLE_MAX_PCT for d in stable.values())
          and all(d > UNSTABLE_MIN_PCT for d in unstable.values()))
    worst = max(stable, key=stable.get)
    report(7, ok, f"max k=4/k=9 deviation for Z>=3 is {stable[worst]:.3g}% at Z={worst}; "
                  f"Z=1: {unstable[1]:.3g}%, Z=2: {unstable[2]:.3g}%")
    assert ok


PROPERTY_TESTS = [
    "tests/test_splinebasis.py::test_partition_of_unity",
    "tests/test_splinebasis.py::test_gauss_rule_exact_on_each_interval",
    "tests/test_splinebasis.py::test_quadrature_of_spline_products",
    "tests/test_angular.py::test_threej_orthogonality",
    "tests/test_angular.py::test_angular_oracle",
    "tests/test_bessel.py::test_wronskian",
    "tests/test_selfenergy.py::test_degenerate_branch_is_exactly_zero",
    "tests/test_selfenergy.py::test_renormalized_vanishes_without_nucleus",
    "tests/test_selfenergy.py::test_parallel_reduction_is_bit_identical",
]


def test_criterion_8_property_suites_standalone():
    root = Path(__file__).resolve().parents[1]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *PROPERTY_TESTS], cwd=root, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = report(8, proc.returncode == 0, tail)
    assert ok, proc.stdout[-3000:]
