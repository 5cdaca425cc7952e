"""Finite B-spline pseudospectrum of the radial Dirac equation.

The large component P(r) is expanded in splines of order k and the small
component Q(r) in splines of order k+1 on the same breakpoints. Both vanish at
r = 0 and r = R (the first and last spline of each set are dropped). Using a
higher order for Q removes the spurious kappa > 0 solution that appears when
both components share one spline set.

Radial functions are r times the usual ones, so <a|b> = int (P_a P_b + Q_a Q_b) dr.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh

from .constants import ALPHA
from .splinebasis import SplineBasis

log = logging.getLogger(__name__)


class SpuriousStateError(RuntimeError):
    """The pseudospectrum contains states that are not Dirac-Coulomb levels."""


class BasisMismatchError(ValueError):
    """Two objects that must share a radial basis do not."""


def sommerfeld_energy(Z: float, n: int, kappa: int) -> float:
    """Point-nucleus Dirac-Coulomb level in units of m_e (rest mass included)."""
    if kappa == 0 or not 1 <= abs(kappa) <= n:
        raise ValueError(f"need 1 <= |kappa| <= n, got n={n}, kappa={kappa}")
    if kappa > 0 and abs(kappa) == n:
        raise ValueError("kappa = +n does not exist for principal quantum number n")
    za = Z * ALPHA
    if za >= 1.0:
        raise ValueError("Z alpha must be < 1 for a point nucleus")
    gamma = np.sqrt(kappa * kappa - za * za)
    return float(1.0 / np.sqrt(1.0 + (za / (n - abs(kappa) + gamma)) ** 2))


@dataclass(frozen=True, eq=False)
class DiracBasis:
    """Paired spline sets for the two radial components."""

    large: SplineBasis

    @cached_property
    def small(self) -> SplineBasis:
        return self.large.with_order(self.large.order + 1)

    @property
    def n_large(self) -> int:
        return self.large.size - 2

    @property
    def n_small(self) -> int:
        return self.small.size - 2

    @property
    def dimension(self) -> int:
        return self.n_large + self.n_small

    @property
    def nodes(self):
        return self.large.nodes

    @property
    def weights(self):
        return self.large.weights

    def values(self, r, nu: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Design matrices (len(r), n_large), (len(r), n_small) of the kept splines."""
        return self.large.design(r, nu)[:, 1:-1], self.small.design(r, nu)[:, 1:-1]

    @cached_property
    def node_values(self) -> tuple[np.ndarray, np.ndarray]:
        return self.values(self.nodes)

    @cached_property
    def overlap(self) -> tuple[np.ndarray, np.ndarray]:
        bp, bq = self.node_values
        w = self.weights[:, None]
        return (bp * w).T @ bp, (bq * w).T @ bq

    def key(self) -> tuple:
        lb = self.large
        return (lb.order, lb.quad_order, lb.scheme, tuple(lb.breakpoints.tolist()))

    def same_as(self, other: "DiracBasis") -> bool:
        return self is other or self.key() == other.key()


@dataclass(frozen=True, eq=False)
class DiracState:
    """One pseudospectrum eigenstate, a view into its channel."""

    kappa: int
    energy: float
    p_coef: np.ndarray
    q_coef: np.ndarray
    kind: str
    index: int
    basis: DiracBasis = field(repr=False)

    def radial(self, r) -> tuple[np.ndarray, np.ndarray]:
        """P(r), Q(r) at the given radii."""
        bp, bq = self.basis.values(r)
        return bp @ self.p_coef, bq @ self.q_coef

    @property
    def sign(self) -> int:
        return 1 if self.energy > 0 else -1


def overlap(a: DiracState, p: DiracState) -> float:
    """Radial overlap <p|a>; zero between different kappa channels."""
    if not a.basis.same_as(p.basis):
        raise BasisMismatchError("states live in different radial bases")
    if a.kappa != p.kappa:
        return 0.0
    sp, sq = a.basis.overlap
    return float(a.p_coef @ sp @ p.p_coef + a.q_coef @ sq @ p.q_coef)


@dataclass(frozen=True, eq=False)
class Channel:
    """All pseudostates of one kappa, sorted by energy."""

    kappa: int
    Z: float
    energies: np.ndarray
    p_coef: np.ndarray  # (n_states, n_large)
    q_coef: np.ndarray  # (n_states, n_small)
    basis: DiracBasis = field(repr=False)

    @property
    def kind(self) -> str:
        return "free" if self.Z == 0 else "bound"

    def __len__(self) -> int:
        return len(self.energies)

    def __getitem__(self, i: int) -> DiracState:
        i = range(len(self))[i]
        return DiracState(self.kappa, float(self.energies[i]), self.p_coef[i], self.q_coef[i],
                          self.kind, i, self.basis)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def n_negative(self) -> int:
        return int(np.count_nonzero(self.energies < 0))

    def lowest_positive(self, offset: int = 0) -> DiracState:
        return self[self.n_negative + offset]

    def radial(self, r) -> tuple[np.ndarray, np.ndarray]:
        """P and Q of every state at ``r``: two arrays (n_states, len(r))."""
        bp, bq = self.basis.values(r)
        return self.p_coef @ bp.T, self.q_coef @ bq.T

    @cached_property
    def node_radial(self) -> tuple[np.ndarray, np.ndarray]:
        bp, bq = self.basis.node_values
        return self.p_coef @ bp.T, self.q_coef @ bq.T

    def overlaps_with(self, other: "Channel") -> np.ndarray:
        """Matrix <self_i|other_j> of radial overlaps."""
        if not self.basis.same_as(other.basis):
            raise BasisMismatchError("channels live in different radial bases")
        if self.kappa != other.kappa:
            return np.zeros((len(self), len(other)))
        sp, sq = self.basis.overlap
        return self.p_coef @ sp @ other.p_coef.T + self.q_coef @ sq @ other.q_coef.T


def hamiltonian(basis: DiracBasis, Z: float, kappa: int) -> tuple[np.ndarray, np.ndarray]:
    """Dirac-Coulomb Hamiltonian and overlap matrices in the two-component basis."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    r, w = basis.nodes, basis.weights
    bp, bq = basis.node_values
    dq = basis.small.design(r, nu=1)[:, 1:-1]
    V = -Z * ALPHA / r
    sp, sq = basis.overlap

    def inner(a, f, b):
        return (a * (w * f)[:, None]).T @ b

    hpp = inner(bp, V, bp) + sp
    hqq = inner(bq, V, bq) - sq
    # (V + 1) P + (-d/dr + kappa/r) Q = E P ; (d/dr + kappa/r) P + (V - 1) Q = E Q
    hpq = -inner(bp, np.ones_like(r), dq) + inner(bp, kappa / r, bq)
    H = np.block([[hpp, hpq], [hpq.T, hqq]])
    S = np.block([[sp, np.zeros((sp.shape[0], sq.shape[0]))],
                  [np.zeros((sq.shape[0], sp.shape[0])), sq]])
    return H, S


def solve_channel(basis: DiracBasis | SplineBasis, Z: float, kappa: int,
                  check: bool = True) -> Channel:
    """Diagonalise the Dirac Hamiltonian for one kappa (Z = 0 gives the free spectrum)."""
    if isinstance(basis, SplineBasis):
        basis = DiracBasis(basis)
    if Z < 0:
        raise ValueError("nuclear charge must be >= 0")
    H, S = hamiltonian(basis, Z, kappa)
    try:
        E, C = eigh(H, S)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-solver failed for Z={Z}, kappa={kappa}") from exc
    npv = basis.n_large
    C = C.T
    # fix the sign convention: first significant large-component coefficient > 0
    for row in C:
        lead = row[np.argmax(np.abs(row[:npv]) > 1e-8 * np.max(np.abs(row[:npv])))]
        if lead < 0:
            row *= -1.0
    ch = Channel(kappa, float(Z), E, np.ascontiguousarray(C[:, :npv]),
                 np.ascontiguousarray(C[:, npv:]), basis)
    if check:
        check_spurious(ch)
    return ch


def check_spurious(ch: Channel, n_levels: int = 3) -> None:
    """Every state in the gap (-m_e, m_e) must be a genuine bound level.

    The lowest ``n_levels`` computed levels of the channel are matched one to
    one with the Sommerfeld levels; an extra state below any of them, or any
    gap state for a free spectrum, raises :class:`SpuriousStateError`.
    """
    E = ch.energies
    # states pinned to the continuum thresholds (|E| = m_e to rounding) are not gap states
    edge = 1.0 - 1e-9
    gap = E[(E > -edge) & (E < edge)]
    if ch.Z == 0:
        if gap.size:
            raise SpuriousStateError(f"free channel kappa={ch.kappa} has {gap.size} state(s) in the gap: {gap}")
        return
    n0 = abs(ch.kappa) + (1 if ch.kappa > 0 else 0)
    radius = ch.basis.large.radius
    # only levels whose orbit (~2 n^2 Coulomb radii) sits well inside the box
    n_fit = 0
    while n_fit < n_levels and 2.0 * (n0 + n_fit) ** 2 / (ch.Z * ALPHA) < 0.5 * radius:
        n_fit += 1
    exact = [sommerfeld_energy(ch.Z, n0 + i, ch.kappa) for i in range(n_fit + 1)]
    for i in range(n_fit):
        threshold = 0.5 * (exact[i] + exact[i + 1])
        below = int(np.count_nonzero(gap < threshold))
        if below != i + 1:
            raise SpuriousStateError(
                f"Z={ch.Z}, kappa={ch.kappa}: {below} gap state(s) below level {i} "
                f"(expected {i + 1}); lowest gap energies {gap[:n_fit + 1]}, "
                f"Sommerfeld {exact[:n_fit]}")
    # a spurious level sits near the next-lower hydrogenic one, far below this floor
    floor = exact[0] - 0.05 * (1.0 - exact[0])
    if np.any(gap < floor):
        raise SpuriousStateError(
            f"Z={ch.Z}, kappa={ch.kappa}: gap state {gap.min()} below the ground level {exact[0]}")


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    """Pseudospectra of several kappa channels for one nuclear charge and basis."""

    Z: float
    basis: DiracBasis
    channels: dict
    nuclear_model: str = "point"

    def __getitem__(self, kappa: int) -> Channel:
        try:
            return self.channels[kappa]
        except KeyError:
            raise KeyError(f"channel kappa={kappa} missing from the Z={self.Z} spectrum "
                           f"(have {sorted(self.channels)})") from None

    def __contains__(self, kappa: int) -> bool:
        return kappa in self.channels

    @property
    def kind(self) -> str:
        return "free" if self.Z == 0 else "bound"

    @property
    def counts(self) -> dict:
        return {k: len(ch) for k, ch in sorted(self.channels.items())}

    def require(self, kappas) -> None:
        missing = [k for k in kappas if k not in self.channels]
        if missing:
            raise KeyError(f"spectrum lacks channels {missing}; increase the kappa range")

    def reference(self, kappa: int = -1, offset: int = 0) -> DiracState:
        """Lowest positive-energy state (the 1s level for kappa = -1)."""
        return self[kappa].lowest_positive(offset)


def build_spectrum(basis: DiracBasis | SplineBasis, Z: float, kappas, cache=None,
                   check: bool = True) -> SpectrumSet:
    """Solve every requested channel, optionally through a :class:`SpectrumCache`."""
    if isinstance(basis, SplineBasis):
        basis = DiracBasis(basis)
    channels = {}
    for kappa in kappas:
        ch = cache.get(basis, Z, kappa) if cache is not None else None
        if ch is None:
            ch = solve_channel(basis, Z, kappa, check=check)
            if cache is not None:
                cache.put(ch)
        channels[kappa] = ch
    return SpectrumSet(float(Z), basis, channels)
