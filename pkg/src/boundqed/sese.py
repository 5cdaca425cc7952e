"""Irreducible loop-after-loop correction built from first-order elements.

    dE = sum_{l1,l2} sum'_n X_{l1}(n) X_{l2}(n) / (E_a - E_n),
    X_l(n) = <a|Sigma^(l)(E_a)|n>_ren

The renormalized off-diagonal elements X_l(n) are computed once per
multipole for every intermediate state and reused for the whole double sum.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .angular import scalar_operator_kappas
from .constants import ALPHA, M_E_EV
from .selfenergy import SelfEnergyEngine, extrapolate_partial_sums
from .spectrum import DiracState

__all__ = ["SeseResult", "ExclusionError", "sese_irreducible", "sign_approximation", "both_modes",
           "g_function", "element_table", "EXCLUSION_WINDOW"]

# Intermediate states of the reference channel closer than this (in m_e) to
# E_a are treated as the reference itself and left out of the sum.
EXCLUSION_WINDOW = 1e-10


class ExclusionError(RuntimeError):
    """More than one intermediate state falls inside the exclusion window."""


def g_function(delta_e_ev: float, Z: float, n: int = 1) -> float:
    """Dimensionless G with dE = m_e (alpha/pi)^2 (Z alpha)^5 / n^3 * G."""
    if Z < 1:
        raise ValueError("Z must be at least 1")
    scale = M_E_EV * (ALPHA / np.pi) ** 2 * (Z * ALPHA) ** 5 / n ** 3
    return delta_e_ev / scale


@dataclass
class SeseResult:
    """Outcome of one loop-after-loop evaluation; energies in eV."""

    Z: float
    delta_e: float
    g: float
    table: np.ndarray              # [l1, l2] contributions, eV
    n_intermediate: int
    negative_energy: float         # part of delta_e from E_n < 0 states, eV
    params: dict
    runtime: float
    mode: str = "exact"
    direct_sum: float = 0.0
    error: float = 0.0
    partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def record(self) -> dict:
        """JSON-ready dict; the runtime is left out so records are reproducible."""
        d = asdict(self)
        d.pop("runtime")
        d["table"] = self.table.tolist()
        d["partial_sums"] = self.partial_sums.tolist()
        return d


def _max_l_sums(table: np.ndarray) -> np.ndarray:
    """S(L) = sum of table[l1, l2] over max(l1, l2) <= L."""
    s = table.shape[0]
    return np.array([table[: L + 1, : L + 1].sum() for L in range(s)])


def element_table(engine: SelfEnergyEngine, a: DiracState, keep: str = "both"):
    """Renormalized X_l(n) for every state n of every channel coupled to a.

    Returns {kappa: (l x n) array in m_e}. ``keep`` selects which pieces
    survive: "both", "sign", "log" or "none".
    """
    if keep not in ("both", "sign", "log", "none"):
        raise ValueError(f"unknown selection {keep!r}")
    out = {}
    for kappa in scalar_operator_kappas(a.kappa):
        engine.bound.require([kappa])
        if kappa != a.kappa:
            # a rank-zero operator never connects different kappa
            out[kappa] = np.zeros((engine.n_waves, len(engine.bound[kappa])))
            continue
        bt = engine.bound_rows(a.kappa, a.index, a.energy)
        ct = engine.counterterm_rows(a.kappa, a.index)
        x = np.zeros_like(bt.log)
        if keep in ("both", "log"):
            x += bt.log - ct.log
        if keep in ("both", "sign"):
            x += bt.sign - ct.sign
        out[kappa] = x
    return out


def _included(energies: np.ndarray, a: DiracState, same_channel: bool) -> np.ndarray:
    mask = np.ones(energies.size, dtype=bool)
    if not same_channel:
        return mask
    close = np.flatnonzero(np.abs(energies - a.energy) < EXCLUSION_WINDOW)
    if close.size != 1 or close[0] != a.index:
        raise ExclusionError(
            f"exclusion window {EXCLUSION_WINDOW:g} around E_a={a.energy!r} holds states "
            f"{close.tolist()} with energies {energies[close].tolist()}; expected only "
            f"the reference index {a.index}")
    mask[close] = False
    return mask


def _assemble(engine: SelfEnergyEngine, a: DiracState, elements: dict, mode: str,
              started: float) -> SeseResult:
    s = engine.n_waves
    table = np.zeros((s, s))
    neg_table = np.zeros((s, s))
    count = 0
    for kappa in sorted(elements, key=lambda k: (abs(k), k)):
        x = elements[kappa]
        energies = engine.bound[kappa].energies
        keep = _included(energies, a, kappa == a.kappa)
        idx = np.flatnonzero(keep)
        count += idx.size
        # only the surviving denominators are ever formed
        inv = 1.0 / (a.energy - energies[idx])
        xs = x[:, idx]
        table += (xs * inv) @ xs.T
        neg = energies[idx] < 0
        neg_table += (xs[:, neg] * inv[neg]) @ xs[:, neg].T
    table *= M_E_EV
    neg_table *= M_E_EV
    sums = _max_l_sums(table)
    neg_sums = _max_l_sums(neg_table)
    if s >= 3:
        limit, err, _, _ = extrapolate_partial_sums(sums)
        neg_limit = extrapolate_partial_sums(neg_sums)[0]
    else:
        limit, err, neg_limit = sums[-1], 0.0, neg_sums[-1]
    basis = engine.bound.basis.large
    params = {"N": basis.n_points, "k": basis.order, "s": s, "R": basis.radius,
              "scheme": basis.scheme}
    return SeseResult(Z=engine.bound.Z, delta_e=float(limit),
                      g=g_function(float(limit), engine.bound.Z, 1),
                      table=table, n_intermediate=int(count),
                      negative_energy=float(neg_limit), params=params,
                      runtime=time.perf_counter() - started, mode=mode,
                      direct_sum=float(sums[-1]), error=float(err), partial_sums=sums)


def sese_irreducible(a: DiracState, engine: SelfEnergyEngine) -> SeseResult:
    """Irreducible loop-after-loop shift of reference state ``a``."""
    t0 = time.perf_counter()
    engine._check_state(a)
    return _assemble(engine, a, element_table(engine, a, "both"), "exact", t0)


def sign_approximation(a: DiracState, engine: SelfEnergyEngine, keep: str = "sign") -> SeseResult:
    """Same sum with the log pieces dropped from every element (bound and counterterm)."""
    t0 = time.perf_counter()
    engine._check_state(a)
    return _assemble(engine, a, element_table(engine, a, keep), keep, t0)


def both_modes(a: DiracState, engine: SelfEnergyEngine) -> tuple[SeseResult, SeseResult]:
    """Exact and sign-only results sharing one evaluation of the elements."""
    t0 = time.perf_counter()
    engine._check_state(a)
    kappa = a.kappa
    bt = engine.bound_rows(kappa, a.index, a.energy)
    ct = engine.counterterm_rows(kappa, a.index)
    others = {k: np.zeros((engine.n_waves, len(engine.bound[k])))
              for k in scalar_operator_kappas(kappa) if k != kappa}
    full = {**others, kappa: (bt.log - ct.log) + (bt.sign - ct.sign)}
    sign = {**others, kappa: bt.sign - ct.sign}
    return _assemble(engine, a, full, "exact", t0), _assemble(engine, a, sign, "sign", t0)
