import numpy as np
import pytest

from boundqed.cache import SpectrumCache, channel_key
from boundqed.constants import ALPHA
from boundqed.spectrum import (BasisMismatchError, Channel, DiracBasis, SpuriousStateError,
                               build_spectrum, check_spurious, overlap, solve_channel,
                               sommerfeld_energy)
from boundqed.splinebasis import build_basis


def _basis(Z, N=28, k=9):
    return DiracBasis(build_basis(N, k, 40.0 / (Z * ALPHA)))


def test_sommerfeld_nonrelativistic_limit():
    Z = 1e-3
    for n in (1, 2, 3):
        assert 1 - sommerfeld_energy(Z, n, -1) == pytest.approx((Z * ALPHA) ** 2 / (2 * n * n), rel=1e-6)


def test_sommerfeld_degeneracy():
    # 2s1/2 and 2p1/2 share the same Dirac energy
    assert sommerfeld_energy(50, 2, -1) == pytest.approx(sommerfeld_energy(50, 2, 1), rel=1e-15)


@pytest.mark.parametrize("Z", [10, 92])
def test_low_levels_match_sommerfeld(Z):
    b = _basis(Z)
    for kappa, n0 in ((-1, 1), (1, 2), (-2, 2)):
        ch = solve_channel(b, Z, kappa)
        E = ch.lowest_positive().energy
        assert abs(E / sommerfeld_energy(Z, n0, kappa) - 1) < 1e-6


def test_dimension_and_orthonormality():
    b = _basis(10)
    ch = solve_channel(b, 10, -1)
    assert len(ch) == b.dimension == 33 + 34
    O = ch.overlaps_with(ch)
    assert np.allclose(O, np.eye(len(ch)), atol=1e-10)


def test_free_spectrum_has_empty_gap_and_symmetric_counts():
    b = _basis(10)
    ch = solve_channel(b, 0, -1)
    assert not np.any(np.abs(ch.energies) < 1 - 1e-9)
    assert ch.kind == "free"


def test_spurious_state_detection():
    b = _basis(10)
    ch = solve_channel(b, 10, -1)
    energies = ch.energies.copy()
    energies[ch.n_negative] = 0.98  # an extra level far below 1s
    fake = Channel(-1, 10.0, energies, ch.p_coef, ch.q_coef, b)
    with pytest.raises(SpuriousStateError):
        check_spurious(fake)


def test_spectrum_set_lookup_and_mismatch():
    b1, b2 = _basis(10), _basis(20)
    s1 = build_spectrum(b1, 10, [-1, 1])
    s2 = build_spectrum(b2, 20, [-1])
    assert s1.counts == {-1: 67, 1: 67}
    with pytest.raises(KeyError):
        s1[-2]
    with pytest.raises(BasisMismatchError):
        overlap(s1.reference(), s2.reference())
    assert overlap(s1[-1][3], s1[1][3]) == 0.0


def test_cache_round_trip(tmp_path):
    b = _basis(10)
    cache = SpectrumCache(tmp_path)
    fresh = build_spectrum(b, 10, [-1, 1], cache=cache)
    assert cache.misses == 2 and cache.hits == 0
    again = build_spectrum(b, 10, [-1, 1], cache=cache)
    assert cache.hits == 2
    for k in (-1, 1):
        assert np.array_equal(fresh[k].energies, again[k].energies)
        assert np.array_equal(fresh[k].p_coef, again[k].p_coef)
        assert np.array_equal(fresh[k].q_coef, again[k].q_coef)


def test_cache_key_sensitivity():
    base = channel_key(_basis(10), 10, -1)
    variants = [channel_key(_basis(10), 11, -1), channel_key(_basis(10), 10, 1),
                channel_key(_basis(10, N=30), 10, -1), channel_key(_basis(10, k=8), 10, -1),
                channel_key(DiracBasis(build_basis(28, 9, 41.0 / (10 * ALPHA))), 10, -1),
                channel_key(DiracBasis(build_basis(28, 9, 40.0 / (10 * ALPHA), scheme="linear")), 10, -1)]
    assert len(set(variants + [base])) == len(variants) + 1
