import numpy as np
import pytest

from boundqed.analysis import (G0, REFERENCE, comparison_table, deviation_percent, fit_c,
                               g_quadratic_log, g_reference, plot_rows, reference_rows)
from boundqed.constants import ALPHA


def test_expansion_limit_and_example():
    assert g_reference(1e-9) == pytest.approx(G0, abs=1e-6)
    za = 3 * ALPHA
    assert g_reference(3) == pytest.approx(2.29953 - 8 / 27 * za * np.log(za ** -2) ** 3, rel=1e-15)
    assert g_reference(3) == pytest.approx(-0.597, abs=5e-4)


def test_expansion_turning_point():
    # d/dx [x L^3] = L^2 (L - 6) with L = ln x^-2: falls until Z alpha = e^-3, rises after
    g = g_reference(np.arange(1, 31))
    turn = np.exp(-3.0) / ALPHA
    z = np.arange(1, 30)
    assert np.all(np.diff(g)[z + 1 <= np.floor(turn)] < 0)
    assert np.all(np.diff(g)[z >= np.ceil(turn)] > 0)
    assert 6 < turn < 7


def test_quadratic_log_reduces_to_expansion():
    for Z in range(1, 93):
        assert g_quadratic_log(Z, 0.0) == g_reference(Z)


def test_fit_round_trip():
    g = {Z: float(g_quadratic_log(Z, -0.5)) for Z in range(3, 21)}
    fit = fit_c(g)
    assert fit.C == pytest.approx(-0.5, abs=1e-12)
    assert fit.spread < 1e-12
    for Z, c in fit.per_z.items():
        assert g_quadratic_log(Z, c) == pytest.approx(g[Z], abs=1e-13)


def test_fit_window_and_errors():
    g = {3: -2.0, 50: -2.4}
    assert fit_c(g).z_set == (3,)
    with pytest.raises(ValueError):
        fit_c({50: -2.4})


def test_benchmark_column_gives_c_near_minus_one():
    g = {z: r["G_benchmark"] for z, r in reference_rows().items()}
    fit = fit_c(g)
    assert -1.3 <= fit.C <= -0.7


def test_allorder_column_needs_much_larger_c():
    g = {z: r["G_allorder"] for z, r in reference_rows().items()}
    fit = fit_c(g)
    assert abs(fit.C) > 1.5


def test_deviation_convention():
    assert deviation_percent(-0.2314, -0.2283) == pytest.approx(1.34, abs=0.01)
    assert deviation_percent(-0.4688e-3, -0.7525e-3) == pytest.approx(60.5, abs=0.1)
    assert deviation_percent(1.0, 1.0) == 0.0
    assert deviation_percent(None, 1.0) is None


def test_comparison_table_identity_gives_zero():
    refs = {z: {"dE_x": v} for z, v in {3: -1.0, 10: -2.0}.items()}
    rows = comparison_table({3: -1.0, 10: -2.0}, refs)
    assert [r.deviations["dE_x"] for r in rows] == [0.0, 0.0]


def test_comparison_table_default_references():
    rows = {r.Z: r for r in comparison_table({70: -0.2314})}
    assert rows[70].deviations["dE_highz"] == pytest.approx(1.34, abs=0.01)
    assert rows[3].computed is None and rows[3].deviations["dE_allorder"] is None


def test_embedded_table_consistency():
    assert REFERENCE["version"] == 1
    rows = reference_rows()
    assert sorted(rows) == [3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 50, 70, 80, 92]
    # the benchmark dE and G columns agree through the G normalization
    from boundqed.sese import g_function
    for z, r in rows.items():
        assert g_function(r["dE_benchmark"], z) == pytest.approx(r["G_benchmark"], rel=3e-3)


def test_plot_rows_columns():
    rows = plot_rows({10: -2.6}, -1.0)
    r10 = [r for r in rows if r[0] == 10][0]
    assert r10[1] == -2.6 and r10[2] == -4.9016
    assert r10[3] == pytest.approx(float(g_reference(10)))
    assert r10[4] == pytest.approx(float(g_quadratic_log(10, -1.0)))
