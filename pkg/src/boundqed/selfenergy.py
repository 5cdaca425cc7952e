"""Partial-wave renormalized one-loop self-energy in a finite Dirac pseudospectrum.

For a reference energy E and multipole l the bound-electron operator has two
pieces for every intermediate state n (Delta = E_n - E):

* log term   (alpha/pi)(2l+1) Delta ln|Delta|
             <a| alpha_mu j_l(Delta r) C^l |n> . <n| alpha^mu j_l(Delta r) C^l |b>
* sign term  -(alpha/2)(2l+1) sgn(E_n) Delta
             <a n| alpha_mu alpha^mu j_l(Delta r<) n_l(Delta r>) C^l.C^l |n b>

The free-electron counterterm is the same operator evaluated in the free
(Z = 0) pseudospectrum, on shell for every free state p, and weighted with
<a|p><p|b>. Everything is computed in units of m_e; reported terms are in eV.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .angular import coupled_kappas, kappa_j2, vector_coupling
from .bessel import bessel_jl, bessel_nl, scaled_jn_table, scaled_yn_table
from .constants import ALPHA, M_E_EV
from .spectrum import BasisMismatchError, Channel, DiracBasis, DiracState, SpectrumSet

log = logging.getLogger(__name__)

__all__ = [
    "bessel_jl", "bessel_nl", "energy_factors", "KernelGrid", "SETerms", "SelfEnergyEngine",
    "PartialWaveTerm", "PartialWaveSeries", "extrapolate_partial_sums",
    "bound_se_partial", "free_counterterm_partial", "renormalized_se",
]

# |Delta| below this (in m_e) is treated as an exact zero of Delta ln|Delta|.
DELTA_ZERO = 1e-14


def _partial_gauss_matrix(order: int) -> np.ndarray:
    """A[j, m] = int_{-1}^{x_j} L_m(x) dx for the Lagrange basis on Gauss nodes x."""
    x, w = np.polynomial.legendre.leggauss(order)
    leg = np.polynomial.legendre
    A = np.zeros((order, order))
    for n in range(order):
        c = np.zeros(n + 2)
        c[n] = 1.0
        prim = leg.legint(c[: n + 1], lbnd=-1.0)
        coeff = (2 * n + 1) / 2.0 * w * leg.legval(x, c[: n + 1])
        A += np.outer(leg.legval(x, prim), coeff)
    return A


def energy_factors(energies: np.ndarray, energy: float) -> tuple[np.ndarray, np.ndarray]:
    """Delta ln|Delta| and the signed weight sgn(E_n) of every intermediate state.

    Both are exactly zero for |Delta| <= DELTA_ZERO: a state degenerate with
    the reference energy contributes nothing.
    """
    energies = np.asarray(energies, dtype=float)
    delta = energies - energy
    ad = np.abs(delta)
    live = ad > DELTA_ZERO
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog = np.where(live, delta * np.log(np.where(live, ad, 1.0)), 0.0)
    sgn = np.where(live, np.where(energies > 0, 1.0, -1.0), 0.0)
    return dlog, sgn


class KernelGrid:
    """Quadrature for single and double radial integrals on a spline box.

    The double integral of f(r1) K(r1, r2) g(r2) with K = u(r<) v(r>) is split
    at r2 = r1 for every outer node, so the kink of K on the diagonal never
    sits inside a quadrature panel. Inside a knot interval the partial
    integrals use the spectral integration matrix of the interval's Gauss
    rule; on the first interval, where v ~ r^-(l+1) is singular at the origin,
    the partial integral from r1 upwards uses its own Gauss sub-grid.
    """

    def __init__(self, basis: DiracBasis):
        lb = basis.large
        edges = lb.breakpoints
        q = lb.quad_order
        self.basis = basis
        self.r = basis.nodes
        self.w = basis.weights
        self.n_main = self.r.size
        self.n_int = edges.size - 1
        self.q = q
        self.interval = np.repeat(np.arange(self.n_int), q)
        self.half = 0.5 * np.diff(edges)
        self.A = _partial_gauss_matrix(q)
        x, wx = np.polynomial.legendre.leggauss(q)
        r0 = self.r[:q]
        hi = edges[1]
        t = 0.5 * (x + 1.0)
        # Sub-grids on [0, r1] and [r1, edge] for every node r1 of the first
        # interval: there v ~ r^-(l+1) is huge and only integrals sampled on
        # the scale of r1 itself keep their relative accuracy.
        self.r_lo0 = r0[:, None] * t
        self.w_lo0 = 0.5 * r0[:, None] * wx
        self.r_hi0 = r0[:, None] + (hi - r0)[:, None] * t
        self.w_hi0 = 0.5 * (hi - r0)[:, None] * wx
        self.r_all = np.concatenate([self.r, self.r_lo0.ravel(), self.r_hi0.ravel()])

    @property
    def size(self) -> int:
        return self.r_all.size

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return f[..., :self.n_main] @ self.w

    def _cells(self, f):
        lead = f.shape[:-1]
        return f[..., :self.n_main].reshape(lead + (self.n_int, self.q))

    def apply_kernel(self, g: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """(K g)(r1) = v(r1) int_0^r1 u g + u(r1) int_r1^R v g at the main nodes.

        ``g``, ``u`` and ``v`` are sampled on :attr:`r_all`.
        """
        m, q = self.n_main, self.q
        lead = g.shape[:-1]
        ug = self._cells(u * g)
        vg = self._cells(v * g)
        wq = self.w.reshape(self.n_int, q)
        tu = (ug * wq).sum(-1)
        tv = (vg * wq).sum(-1)
        before = np.cumsum(tu, axis=-1) - tu
        after = np.cumsum(tv[..., ::-1], axis=-1)[..., ::-1] - tv
        h = self.half[:, None]
        lower = before[..., :, None] + h * (ug @ self.A.T)
        upper = after[..., :, None] + h * (vg @ (self.w_ref - self.A).T)
        upper = upper.reshape(lead + (m,))
        lower = lower.reshape(lead + (m,))
        qq = q * q
        sub_lo = (u[..., m:m + qq] * g[..., m:m + qq]).reshape(lead + (q, q))
        sub_hi = (v[..., m + qq:] * g[..., m + qq:]).reshape(lead + (q, q))
        lower[..., :q] = (sub_lo * self.w_lo0).sum(-1)
        upper[..., :q] = after[..., 0, None] + (sub_hi * self.w_hi0).sum(-1)
        return v[..., :m] * lower + u[..., :m] * upper

    @cached_property
    def w_ref(self) -> np.ndarray:
        return np.broadcast_to(np.polynomial.legendre.leggauss(self.q)[1], (self.q, self.q))

    def double_integral(self, f: np.ndarray, g: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        """int int f(r1) u(r<) v(r>) g(r2); f on the main nodes, g/u/v on :attr:`r_all`."""
        return float(np.dot(f * self.w, self.apply_kernel(g, u, v)))


@dataclass
class SETerms:
    """Log and sign parts of matrix elements, indexed [l, ...], in m_e."""

    log: np.ndarray
    sign: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.log + self.sign


def _kernel_tables(lmax: int, absdelta: np.ndarray, r: np.ndarray):
    """u_l = r^l jhat_l(|D| r) and v_l = r^-(l+1) nhat_l(|D| r) for every state."""
    x = absdelta[:, None] * r[None, :]
    jh = scaled_jn_table(lmax, x)
    nh = scaled_yn_table(lmax, x)
    ls = np.arange(lmax + 1.0)[:, None, None]
    with np.errstate(over="ignore"):
        u = jh * r[None, None, :] ** ls
        v = nh * r[None, None, :] ** (-ls - 1.0)
    return x, jh, u, v


class SelfEnergyEngine:
    """Partial-wave self-energy matrix elements for one nuclear charge.

    Holds the bound and free spectra, the quadrature, and caches of the
    on-shell free-state self-energies that make up the counterterm.
    """

    def __init__(self, bound: SpectrumSet, free: SpectrumSet, n_waves: int,
                 threads: int = 1):
        if not bound.basis.same_as(free.basis):
            raise BasisMismatchError("bound and free spectra must share the radial basis and box")
        if free.Z != 0:
            raise ValueError("the counterterm spectrum must be the free (Z = 0) one")
        if n_waves < 1:
            raise ValueError("need at least one partial wave")
        self.bound = bound
        self.free = free
        self.n_waves = n_waves
        self.threads = max(1, int(threads))
        self.grid = KernelGrid(bound.basis)
        self._radial = {}
        self._ct_diag = {}

    @property
    def lmax(self) -> int:
        return self.n_waves - 1

    def radial(self, ch: Channel):
        key = id(ch)
        if key not in self._radial:
            self._radial[key] = (ch, ch.radial(self.grid.r_all))
        return self._radial[key][1]

    # -- bound-type operator in an arbitrary spectrum -------------------------

    def operator_rows(self, spectrum: SpectrumSet, kappa_a: int, a_index: int, energy: float,
                      b_indices=None, lmax: int | None = None) -> SETerms:
        """<a|Sigma^(l)(energy)|b> for l = 0..lmax and every b in ``b_indices``.

        a and the b's belong to channel ``kappa_a`` of ``spectrum``; the sum
        over intermediate states runs over all channels of that spectrum
        reachable by the multipole.
        """
        lmax = self.lmax if lmax is None else lmax
        ch_a = spectrum[kappa_a]
        if b_indices is None:
            b_indices = np.arange(len(ch_a))
        b_indices = np.atleast_1d(b_indices)
        needed = {}
        for l in range(lmax + 1):
            for kn in coupled_kappas(kappa_a, l):
                needed.setdefault(kn, []).append(l)
        spectrum.require(needed)
        Pa_all, Qa_all = (x[a_index] for x in self.radial(ch_a))
        Pb, Qb = (x[b_indices, :self.grid.n_main] for x in self.radial(ch_a))
        tasks = [(kn, ls) for kn, ls in sorted(needed.items(), key=lambda t: (abs(t[0]), t[0]))]

        def run(task):
            kn, ls = task
            return self._channel_contribution(spectrum[kn], kappa_a, ls, energy,
                                              Pa_all, Qa_all, Pb, Qb, lmax)

        if self.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(run, tasks))
        else:
            parts = [run(t) for t in tasks]
        log_part = np.zeros((lmax + 1, b_indices.size))
        sign_part = np.zeros((lmax + 1, b_indices.size))
        for lg, sg in parts:  # fixed order, independent of the worker count
            log_part += lg
            sign_part += sg
        return SETerms(log_part, sign_part)

    def _channel_contribution(self, ch_n: Channel, kappa_a: int, ls, energy: float,
                              Pa, Qa, Pb, Qb, lmax: int):
        grid = self.grid
        m = grid.n_main
        w = grid.w
        Pn, Qn = self.radial(ch_n)
        Pn_m, Qn_m = Pn[:, :m], Qn[:, :m]
        dlog, sgn = energy_factors(ch_n.energies, energy)
        ad = np.abs(ch_n.energies - energy)
        x, jh, u, v = _kernel_tables(max(ls), ad, grid.r_all)
        nb = Pb.shape[0]
        out_log = np.zeros((lmax + 1, nb))
        out_sign = np.zeros((lmax + 1, nb))
        ja2 = kappa_j2(kappa_a)
        for l in ls:
            ang = vector_coupling(kappa_a, ch_n.kappa, l)
            pref = (2 * l + 1) / (ja2 + 1)
            logc = (ALPHA / np.pi) * pref * dlog
            signc = -0.5 * ALPHA * pref * sgn
            with np.errstate(under="ignore"):
                jl = x[:, :m] ** l * jh[l][:, :m]
            for s_c, kind, c1, c2 in ang.channels():
                if kind == "scalar":
                    g = c1 * Pa * Pn + c2 * Qa * Qn
                    left, right = (Pb, Qb), (Pn_m, Qn_m)
                    sgn2 = 1.0
                else:
                    g = c1 * Pa * Qn - c2 * Qa * Pn
                    left, right = (Pb, Qb), (Qn_m, Pn_m)
                    sgn2 = -1.0
                ia = (g[:, :m] * jl) @ w
                ib = (c1 * left[0] @ (right[0] * jl * w).T
                      + sgn2 * c2 * left[1] @ (right[1] * jl * w).T)
                kg = grid.apply_kernel(g, u[l], v[l])
                jb = (c1 * left[0] @ (right[0] * kg * w).T
                      + sgn2 * c2 * left[1] @ (right[1] * kg * w).T)
                out_log[l] += s_c * (ib @ (logc * ia))
                out_sign[l] += s_c * (jb @ signc)
        return out_log, out_sign

    # -- counterterm -----------------------------------------------------------

    def free_onshell(self, kappa: int) -> SETerms:
        """Diagonal <p|Sigma_f^(l)(E_p)|p> for every free state p of channel kappa."""
        if kappa not in self._ct_diag:
            ch = self.free[kappa]
            logs = np.zeros((self.lmax + 1, len(ch)))
            signs = np.zeros_like(logs)
            for p in range(len(ch)):
                t = self.operator_rows(self.free, kappa, p, float(ch.energies[p]), [p])
                logs[:, p] = t.log[:, 0]
                signs[:, p] = t.sign[:, 0]
            self._ct_diag[kappa] = SETerms(logs, signs)
        return self._ct_diag[kappa]

    def overlaps(self, kappa: int) -> np.ndarray:
        """<n|p> between bound states n and free states p of one channel."""
        return self.bound[kappa].overlaps_with(self.free[kappa])

    def counterterm_rows(self, kappa_a: int, a_index: int, b_indices=None) -> SETerms:
        """sum_p <a|p><p|b> <p|Sigma_f^(l)|p> for every b."""
        F = self.free_onshell(kappa_a)
        O = self.overlaps(kappa_a)
        if b_indices is None:
            b_indices = np.arange(O.shape[0])
        wts = O[a_index][None, :] * O[np.atleast_1d(b_indices)]
        return SETerms(F.log @ wts.T, F.sign @ wts.T)

    def bound_rows(self, kappa_a: int, a_index: int, energy: float | None = None,
                   b_indices=None) -> SETerms:
        if energy is None:
            energy = float(self.bound[kappa_a].energies[a_index])
        return self.operator_rows(self.bound, kappa_a, a_index, energy, b_indices)

    def partial_waves(self, a: DiracState, b: DiracState | None = None,
                      energy: float | None = None) -> "PartialWaveSeries":
        """Renormalized partial-wave series of <a|Sigma(E)|b>; E defaults to E_a."""
        b = a if b is None else b
        self._check_state(a)
        self._check_state(b)
        lmax = self.lmax
        if a.kappa != b.kappa:
            z = np.zeros(lmax + 1)
            return PartialWaveSeries.from_arrays(z, z, z, z)
        energy = a.energy if energy is None else energy
        bt = self.bound_rows(a.kappa, a.index, energy, [b.index])
        ct = self.counterterm_rows(a.kappa, a.index, [b.index])
        return PartialWaveSeries.from_arrays(bt.log[:, 0], bt.sign[:, 0], ct.log[:, 0], ct.sign[:, 0])

    def _check_state(self, s: DiracState):
        if s.kind != "bound" or not s.basis.same_as(self.bound.basis):
            raise BasisMismatchError("state does not belong to this engine's bound spectrum")


@dataclass(frozen=True)
class PartialWaveTerm:
    """One multipole of a renormalized matrix element; energies in eV."""

    l: int
    bound_log: float
    bound_sign: float
    counter_log: float
    counter_sign: float

    @property
    def bound(self) -> float:
        return self.bound_log + self.bound_sign

    @property
    def counterterm(self) -> float:
        return self.counter_log + self.counter_sign

    @property
    def renormalized(self) -> float:
        return self.bound - self.counterterm

    @property
    def log_part(self) -> float:
        return self.bound_log - self.counter_log

    @property
    def sign_part(self) -> float:
        return self.bound_sign - self.counter_sign


def extrapolate_partial_sums(sums) -> tuple[float, float, float, float]:
    """Limit of an oscillating partial-wave series from its partial sums S(0..L).

    Even-l and odd-l partial sums are fitted separately with
    a + b/(l+1) + c/(l+1)^2 through their last three points (fewer when not
    available). Returns (limit, error, even_limit, odd_limit) where the limit
    is the mean of the two fitted constants and the error is half their spread.
    """
    sums = np.asarray(sums, dtype=float)
    ls = np.arange(sums.size)

    def fit(sel):
        l = ls[sel][-3:]
        s = sums[sel][-3:]
        if l.size == 0:
            return np.nan
        x = 1.0 / (l + 1.0)
        A = np.vander(x, l.size, increasing=True)
        return float(np.linalg.solve(A, s)[0])

    even = fit(ls % 2 == 0)
    odd = fit(ls % 2 == 1)
    if np.isnan(odd):
        return even, 0.0, even, odd
    return 0.5 * (even + odd), 0.5 * abs(even - odd), even, odd


@dataclass
class PartialWaveSeries:
    terms: list
    limit: float
    error: float
    even_limit: float
    odd_limit: float

    @classmethod
    def from_arrays(cls, bound_log, bound_sign, counter_log, counter_sign) -> "PartialWaveSeries":
        to_ev = M_E_EV
        terms = [PartialWaveTerm(l, to_ev * bl, to_ev * bs, to_ev * cl, to_ev * cs)
                 for l, (bl, bs, cl, cs) in enumerate(zip(bound_log, bound_sign, counter_log, counter_sign))]
        sums = np.cumsum([t.renormalized for t in terms])
        limit, err, even, odd = extrapolate_partial_sums(sums)
        return cls(terms, limit, err, even, odd)

    @property
    def values(self) -> np.ndarray:
        return np.array([t.renormalized for t in self.terms])

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values)

    @property
    def even_sums(self) -> list:
        return [(l, s) for l, s in enumerate(self.partial_sums) if l % 2 == 0]

    @property
    def odd_sums(self) -> list:
        return [(l, s) for l, s in enumerate(self.partial_sums) if l % 2 == 1]

    @property
    def direct_sum(self) -> float:
        return float(self.partial_sums[-1])


def bound_se_partial(a: DiracState, b: DiracState, energy: float, l: int,
                     engine: SelfEnergyEngine) -> PartialWaveTerm:
    """Bound-electron multipole l of <a|Sigma_b(E)|b> (counterterm fields zero)."""
    if a.kappa != b.kappa:
        return PartialWaveTerm(l, 0.0, 0.0, 0.0, 0.0)
    t = engine.operator_rows(engine.bound, a.kappa, a.index, energy, [b.index], lmax=l)
    return PartialWaveTerm(l, M_E_EV * t.log[l, 0], M_E_EV * t.sign[l, 0], 0.0, 0.0)


def free_counterterm_partial(a: DiracState, b: DiracState, l: int,
                             engine: SelfEnergyEngine) -> PartialWaveTerm:
    """Mass counterterm of multipole l for <a|...|b> (bound fields zero)."""
    if a.kappa != b.kappa:
        return PartialWaveTerm(l, 0.0, 0.0, 0.0, 0.0)
    if l > engine.lmax:
        raise ValueError(f"multipole {l} beyond the engine's {engine.n_waves} partial waves")
    t = engine.counterterm_rows(a.kappa, a.index, [b.index])
    return PartialWaveTerm(l, 0.0, 0.0, M_E_EV * t.log[l, 0], M_E_EV * t.sign[l, 0])


def renormalized_se(a: DiracState, b: DiracState, engine: SelfEnergyEngine,
                    energy: float | None = None) -> PartialWaveSeries:
    """Renormalized partial-wave series of <a|Sigma(E_a)|b>."""
    if engine.n_waves < 3:
        raise ValueError("need at least 3 partial waves for the odd/even extrapolation")
    return engine.partial_waves(a, b, energy)
