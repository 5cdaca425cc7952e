import numpy as np
import pytest
from scipy import integrate

from boundqed.constants import ALPHA, M_E_EV
from boundqed.selfenergy import (DELTA_ZERO, KernelGrid, _kernel_tables, bessel_jl, bessel_nl,
                                 bound_se_partial, energy_factors, extrapolate_partial_sums,
                                 free_counterterm_partial, renormalized_se)
from boundqed.sese import sese_irreducible
from boundqed.spectrum import BasisMismatchError, DiracBasis, build_spectrum
from boundqed.selfenergy import SelfEnergyEngine
from boundqed.splinebasis import build_basis

from conftest import small_engine


def test_degenerate_branch_is_exactly_zero():
    E = np.array([-1.2, 0.7, 0.9, 0.9 + 0.5 * DELTA_ZERO, 1.4])
    dlog, sgn = energy_factors(E, 0.9)
    assert dlog[2] == 0.0 and sgn[2] == 0.0
    assert dlog[3] == 0.0 and sgn[3] == 0.0
    assert np.all(dlog[[0, 1, 4]] != 0.0)
    assert list(sgn[[0, 1, 4]]) == [-1.0, 1.0, 1.0]
    assert np.all(np.isfinite(dlog))


def test_log_factor_is_continuous_towards_zero():
    dlog, _ = energy_factors(np.array([1e-12, -1e-12]), 0.0)
    assert np.all(np.abs(dlog) < 1e-10)


@pytest.mark.parametrize("D,l", [(0.5, 0), (2.0, 1), (0.02, 3)])
def test_kernel_double_integral_against_adaptive_quadrature(D, l):
    Z = 30
    b = DiracBasis(build_basis(20, 7, 15.0 / (Z * ALPHA)))
    g = KernelGrid(b)
    f = lambda x: x ** 2 * np.exp(-2 * Z * ALPHA * x)
    _, _, u, v = _kernel_tables(l, np.array([D]), g.r_all)
    val = g.double_integral(f(g.r), f(g.r_all), u[l][0], v[l][0])
    R = b.large.radius

    def k(r1, r2):
        lo, hi = min(r1, r2), max(r1, r2)
        return f(r1) * f(r2) * D * bessel_jl(l, D * lo) * bessel_nl(l, D * hi)

    inner = lambda r1: (integrate.quad(lambda r2: k(r1, r2), 0, r1, limit=200)[0]
                        + integrate.quad(lambda r2: k(r1, r2), r1, R, limit=200)[0])
    ref = integrate.quad(inner, 0, R, limit=200, points=[1 / (Z * ALPHA)])[0]
    assert val == pytest.approx(ref, rel=1e-7)


def test_counterterm_weights_are_complete(engine10):
    O = engine10.overlaps(-1)
    a = engine10.bound.reference(-1)
    assert np.sum(O[a.index] ** 2) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("Z", [1e-9, 1e-8])
def test_renormalized_vanishes_without_nucleus(Z):
    eng = small_engine(Z, radius=40.0)
    ser = eng.partial_waves(eng.bound.reference(-1))
    for t in ser.terms:
        assert abs(t.bound) > 1.0                       # eV, not small on its own
        assert abs(t.renormalized) < 1e-6 * abs(t.bound)


def test_renormalized_is_linear_in_small_Z():
    r1 = small_engine(1e-6, radius=40.0)
    r2 = small_engine(1e-5, radius=40.0)
    v1 = r1.partial_waves(r1.bound.reference(-1)).values
    v2 = r2.partial_waves(r2.bound.reference(-1)).values
    assert np.allclose(v2 / v1, 10.0, rtol=1e-2)


def test_parallel_reduction_is_bit_identical():
    serial = small_engine(10, threads=1)
    parallel = small_engine(10, threads=8)
    a1, a8 = serial.bound.reference(-1), parallel.bound.reference(-1)
    s1, s8 = serial.partial_waves(a1), parallel.partial_waves(a8)
    assert np.array_equal(s1.values, s8.values)
    r1, r8 = sese_irreducible(a1, serial), sese_irreducible(a8, parallel)
    assert np.array_equal(r1.table, r8.table)
    assert r1.delta_e == r8.delta_e


def test_partial_term_helpers_agree_with_series(engine10):
    a = engine10.bound.reference(-1)
    ser = renormalized_se(a, a, engine10)
    for l in range(engine10.n_waves):
        b = bound_se_partial(a, a, a.energy, l, engine10)
        c = free_counterterm_partial(a, a, l, engine10)
        assert b.bound - c.counterterm == pytest.approx(ser.terms[l].renormalized, rel=1e-12, abs=1e-12)


def test_different_kappa_gives_zero(engine10):
    a = engine10.bound.reference(-1)
    p = engine10.bound.reference(1)
    assert bound_se_partial(a, p, a.energy, 1, engine10).bound == 0.0
    assert free_counterterm_partial(a, p, 1, engine10).counterterm == 0.0


def test_requires_three_waves():
    eng = small_engine(10, n_waves=2)
    with pytest.raises(ValueError):
        renormalized_se(eng.bound.reference(-1), eng.bound.reference(-1), eng)


def test_mismatched_spectra_rejected():
    b1 = DiracBasis(build_basis(14, 6, 100.0))
    b2 = DiracBasis(build_basis(14, 6, 120.0))
    with pytest.raises(BasisMismatchError):
        SelfEnergyEngine(build_spectrum(b1, 10, [-1]), build_spectrum(b2, 0, [-1]), 3)
    with pytest.raises(ValueError):
        SelfEnergyEngine(build_spectrum(b1, 10, [-1]), build_spectrum(b1, 10, [-1]), 3)


def test_foreign_state_rejected(engine10):
    other = small_engine(20)
    with pytest.raises(BasisMismatchError):
        engine10.partial_waves(other.bound.reference(-1))


def test_extrapolation_recovers_model_series():
    ls = np.arange(8)
    x = 1.0 / (ls + 1.0)
    sums = np.where(ls % 2 == 0, 0.17 - 0.3 * x + 0.2 * x ** 2, 0.19 + 0.1 * x - 0.5 * x ** 2)
    limit, err, even, odd = extrapolate_partial_sums(sums)
    assert even == pytest.approx(0.17, abs=1e-13)
    assert odd == pytest.approx(0.19, abs=1e-13)
    assert limit == pytest.approx(0.18, abs=1e-13)
    assert err == pytest.approx(0.01, abs=1e-13)


def test_series_units_are_ev(engine10):
    a = engine10.bound.reference(-1)
    bt = engine10.bound_rows(-1, a.index)
    ser = engine10.partial_waves(a)
    assert ser.terms[0].bound_log == pytest.approx(M_E_EV * bt.log[0, a.index], rel=1e-14)
