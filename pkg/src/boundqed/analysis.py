"""Comparison with the low-Z expansion of G and with published values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import ALPHA

__all__ = ["G0", "g_reference", "g_quadratic_log", "FitResult", "fit_c",
           "REFERENCE", "ComparisonRow", "comparison_table", "plot_rows",
           "deviation_percent"]

G0 = 2.29953
CUBIC = 8.0 / 27.0

# Published loop-after-loop results for the 1s state, point nucleus, in eV.
# "dE_highz" and "dE_allorder" are two independent all-order evaluations (the
# first only at high Z); "dE_benchmark" and "G_benchmark" are B-spline
# partial-wave values obtained with N=28, k=9 and seven multipoles.
REFERENCE = {
    "version": 1,
    "sources": {
        "dE_highz": "all-order loop-after-loop calculation, Z = 70, 80, 92",
        "dE_allorder": "all-order loop-after-loop calculation, 3 <= Z <= 92",
        "G_allorder": "G values of the same all-order calculation",
        "dE_benchmark": "B-spline partial-wave renormalization benchmark",
        "G_benchmark": "G values of the same benchmark",
        "first_order_z10": "one-loop 1s self-energy at Z = 10; 'exact' is Mohr's value",
    },
    "columns": ("Z", "dE_highz", "dE_allorder", "dE_benchmark",
                "G_allorder", "G_benchmark"),
    "rows": [
        (3, None, -0.6237e-7, -0.2913e-7, -4.50, -2.101),
        (4, None, -0.2786e-6, -0.1351e-6, -4.77, -2.311),
        (5, None, -0.8792e-6, -0.4431e-6, -4.931, -2.485),
        (6, None, None, -0.1153e-5, None, -2.599),
        (7, None, -0.4808e-5, -0.2584e-5, -5.016, -2.694),
        (8, None, None, -0.4972e-5, None, -2.659),
        (9, None, None, -0.8903e-5, None, -2.642),
        (10, None, -0.2796e-4, -0.1483e-4, -4.9016, -2.601),
        (20, None, -0.7525e-3, -0.4688e-3, -4.1217, -2.568),
        (30, None, None, -0.3454e-2, None, -2.491),
        (50, None, None, -0.4407e-1, None, -2.472),
        (70, -0.2283, -0.2282, -0.2314, -2.3804, -2.413),
        (80, -0.4474, -0.4472, -0.4512, -2.3923, -2.413),
        (92, -0.9712, -0.9706, -0.9599, -2.581, -2.553),
    ],
    # first-order 1s self-energy at Z = 10 (eV): partial sums over l and limits
    "first_order_z10": {
        "even": {0: 0.1269, 2: 0.1615, 4: 0.1659, 6: 0.1672},
        "odd": {1: 0.1769, 3: 0.1715, 5: 0.1702},
        "extrapolated": 0.1688,
        "exact": 0.1566,
    },
}


def reference_rows() -> dict:
    """{Z: {column: value}} view of the embedded table."""
    cols = REFERENCE["columns"]
    return {r[0]: dict(zip(cols[1:], r[1:])) for r in REFERENCE["rows"]}


def _log_sq(Z):
    za = np.asarray(Z, dtype=float) * ALPHA
    return za, np.log(za ** -2.0)


def g_reference(Z):
    """Leading terms of the Z alpha expansion: G0 - (8/27) Za ln^3 (Za)^-2."""
    za, L = _log_sq(Z)
    return G0 - CUBIC * za * L ** 3


def g_quadratic_log(Z, C):
    """The expansion above plus C Za ln^2 (Za)^-2."""
    za, L = _log_sq(Z)
    return g_reference(Z) + C * za * L ** 2


@dataclass(frozen=True)
class FitResult:
    C: float
    per_z: dict
    spread: float
    z_set: tuple

    @property
    def mean(self) -> float:
        return self.C


def fit_c(g_values: dict, z_window=(3, 20)) -> FitResult:
    """Match g_quadratic_log to G(Z) at every Z in the window; average the C's.

    The spread is half the range of the per-Z values.
    """
    lo, hi = z_window
    zs = tuple(sorted(z for z in g_values if lo <= z <= hi and g_values[z] is not None))
    if not zs:
        raise ValueError(f"no G values inside the window {z_window}")
    per_z = {}
    for z in zs:
        za, L = _log_sq(z)
        per_z[z] = float((g_values[z] - g_reference(z)) / (za * L ** 2))
    c = np.array(list(per_z.values()))
    return FitResult(float(c.mean()), per_z, float(0.5 * (c.max() - c.min())), zs)


def deviation_percent(ours, theirs):
    """|ours - theirs| / |ours| in percent; None when either side is missing."""
    if ours is None or theirs is None:
        return None
    if ours == theirs:
        return 0.0
    return 100.0 * abs(ours - theirs) / abs(ours)


@dataclass(frozen=True)
class ComparisonRow:
    Z: int
    computed: float | None
    references: dict
    deviations: dict


def comparison_table(results: dict, references: dict | None = None) -> list[ComparisonRow]:
    """Merge computed dE (eV) by Z with reference columns and percent deviations.

    ``references`` maps Z to {column: value}; the embedded table by default.
    Rows cover the union of both Z sets.
    """
    refs = reference_rows() if references is None else references
    rows = []
    for z in sorted(set(results) | set(refs)):
        ours = results.get(z)
        cols = {k: v for k, v in refs.get(z, {}).items() if k.startswith("dE")}
        devs = {k: deviation_percent(ours, v) for k, v in cols.items()}
        rows.append(ComparisonRow(int(z), ours, cols, devs))
    return rows


def plot_rows(g_computed: dict, C: float) -> list[tuple]:
    """(Z, G_computed, G_allorder, G_expansion, G_fit) rows, one per Z of either source."""
    refs = reference_rows()
    rows = []
    for z in sorted(set(g_computed) | set(refs)):
        rows.append((z, g_computed.get(z), refs.get(z, {}).get("G_allorder"),
                     float(g_reference(z)), float(g_quadratic_log(z, C))))
    return rows
