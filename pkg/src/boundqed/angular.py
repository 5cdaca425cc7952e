"""Angular-momentum algebra for Dirac spinor spherical harmonics.

Half-integer arguments may be given as ``Fraction``, ``float`` or ``int``.
3j/6j/9j symbols are evaluated from the Racah sums in exact rational
arithmetic; only the final square root is taken in floating point.

Conventions
-----------
Wigner-Eckart: <j m|T^k_q|j' m'> = (-1)^(j-m) (j k j'; -m q m') <j||T^k||j'>.
A Dirac state is (1/r) (P(r) Omega_{kappa m}, i Q(r) Omega_{-kappa m}).
Coupled spin-orbit tensors are [C^l (x) sigma]^L with C^l acting on the orbital
part and sigma on the spin.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np


def _two(j) -> int:
    """2j as an exact integer; rejects anything that is not a half-integer."""
    tj = Fraction(j) * 2 if not isinstance(j, float) else Fraction(j).limit_denominator(2) * 2
    if isinstance(j, float) and float(tj) / 2 != j:
        raise ValueError(f"{j!r} is not a half-integer")
    if tj.denominator != 1:
        raise ValueError(f"{j!r} is not a half-integer")
    return int(tj)


def _tri(a: int, b: int, c: int) -> bool:
    """Triangle rule for doubled arguments, including integer perimeter."""
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta(a: int, b: int, c: int) -> Fraction:
    return Fraction(factorial((a + b - c) // 2) * factorial((a - b + c) // 2)
                    * factorial((-a + b + c) // 2), factorial((a + b + c) // 2 + 1))


def _signed_sqrt(square: Fraction, negative: bool) -> float:
    val = sqrt(square) if square.denominator == 1 else sqrt(float(square))
    return -val if negative else val


@lru_cache(maxsize=None)
def _threej2(a, b, c, ma, mb, mc) -> float:
    if ma + mb + mc != 0 or not _tri(a, b, c):
        return 0.0
    if abs(ma) > a or abs(mb) > b or abs(mc) > c:
        return 0.0
    if (a + ma) % 2 or (b + mb) % 2 or (c + mc) % 2:
        return 0.0
    pref = _delta(a, b, c)
    for j, m in ((a, ma), (b, mb), (c, mc)):
        pref *= factorial((j + m) // 2) * factorial((j - m) // 2)
    tmin = max(0, (b - c - ma) // 2, (a - c + mb) // 2)
    tmax = min((a + b - c) // 2, (a - ma) // 2, (b + mb) // 2)
    total = 0
    for t in range(tmin, tmax + 1):
        den = (factorial(t) * factorial((c - b + ma) // 2 + t) * factorial((c - a - mb) // 2 + t)
               * factorial((a + b - c) // 2 - t) * factorial((a - ma) // 2 - t)
               * factorial((b + mb) // 2 - t))
        total += Fraction((-1) ** t, den)
    if total == 0:
        return 0.0
    phase = ((a - b - mc) // 2) % 2
    square = total * total * pref
    return _signed_sqrt(square, (total < 0) != bool(phase))


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3)."""
    return _threej2(_two(j1), _two(j2), _two(j3), _two(m1), _two(m2), _two(m3))


@lru_cache(maxsize=None)
def _sixj2(a, b, c, d, e, f) -> float:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_tri(*t) for t in triads):
        return 0.0
    pref = Fraction(1)
    for t in triads:
        pref *= _delta(*t)
    sums = [sum(t) // 2 for t in triads]
    quads = [(a + b + d + e) // 2, (a + c + d + f) // 2, (b + c + e + f) // 2]
    total = 0
    for t in range(max(sums), min(quads) + 1):
        den = factorial(t - sums[0]) * factorial(t - sums[1]) * factorial(t - sums[2]) * factorial(t - sums[3])
        den *= factorial(quads[0] - t) * factorial(quads[1] - t) * factorial(quads[2] - t)
        total += Fraction((-1) ** t * factorial(t + 1), den)
    if total == 0:
        return 0.0
    return _signed_sqrt(total * total * pref, total < 0)


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}."""
    return _sixj2(*(_two(j) for j in (j1, j2, j3, j4, j5, j6)))


@lru_cache(maxsize=None)
def _ninej2(a, b, c, d, e, f, g, h, i) -> float:
    rows = ((a, b, c), (d, e, f), (g, h, i), (a, d, g), (b, e, h), (c, f, i))
    if not all(_tri(*t) for t in rows):
        return 0.0
    lo = max(abs(a - i), abs(d - h), abs(b - f))
    hi = min(a + i, d + h, b + f)
    total = 0.0
    for x in range(lo, hi + 1, 2):
        term = (x + 1) * _sixj2(a, b, c, f, i, x) * _sixj2(d, e, f, b, x, h) * _sixj2(g, h, i, x, a, d)
        total += -term if x % 2 else term
    return total


def wigner9j(j11, j12, j13, j21, j22, j23, j31, j32, j33) -> float:
    """Wigner 9j symbol, arguments row by row."""
    return _ninej2(*(_two(j) for j in (j11, j12, j13, j21, j22, j23, j31, j32, j33)))


def kappa_l(kappa: int) -> int:
    """Orbital angular momentum of the Omega_{kappa} harmonic."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    return kappa if kappa > 0 else -kappa - 1


def kappa_j2(kappa: int) -> int:
    """2j for the channel kappa."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    return 2 * abs(kappa) - 1


def kappas_for_j2(j2: int) -> tuple[int, int]:
    k = (j2 + 1) // 2
    return (-k, k)


@lru_cache(maxsize=None)
def reduced_C(kappa_a: int, kappa_b: int, l: int) -> float:
    """<kappa_a || C^l || kappa_b> between spin-angular functions Omega_kappa."""
    la, lb = kappa_l(kappa_a), kappa_l(kappa_b)
    ja, jb = kappa_j2(kappa_a), kappa_j2(kappa_b)
    if (la + lb + l) % 2 or not _tri(ja, jb, 2 * l):
        return 0.0
    phase = -1.0 if ((ja + 1) // 2) % 2 else 1.0
    return phase * sqrt((ja + 1) * (jb + 1)) * _threej2(ja, jb, 2 * l, -1, 1, 0)


def _orbital_C(la: int, lb: int, l: int) -> float:
    """<la || C^l || lb> for orbital states."""
    if (la + lb + l) % 2:
        return 0.0
    phase = -1.0 if la % 2 else 1.0
    return phase * sqrt((2 * la + 1) * (2 * lb + 1)) * _threej2(2 * la, 2 * l, 2 * lb, 0, 0, 0)


@lru_cache(maxsize=None)
def reduced_C_sigma(kappa_a: int, kappa_b: int, l: int, L: int) -> float:
    """<kappa_a || [C^l (x) sigma]^L || kappa_b> between Omega harmonics."""
    la, lb = kappa_l(kappa_a), kappa_l(kappa_b)
    ja, jb = kappa_j2(kappa_a), kappa_j2(kappa_b)
    if L < 0 or (la + lb + l) % 2 or not _tri(ja, jb, 2 * L):
        return 0.0
    orb = _orbital_C(la, lb, l)
    if orb == 0.0:
        return 0.0
    nine = _ninej2(2 * la, 2 * lb, 2 * l, 1, 1, 2, ja, jb, 2 * L)
    return sqrt((ja + 1) * (jb + 1) * (2 * L + 1)) * nine * orb * sqrt(6.0)


@dataclass(frozen=True)
class AngularCoefficient:
    """Angular weights of one multipole l between channels kappa_a and kappa_n.

    The transition density entering the scalar (1) part of the photon vertex is
    ``scalar[0] P_a P_n + scalar[1] Q_a Q_n``; the part of rank L of the vector
    (alpha) vertex is ``vector[L][0] P_a Q_n - vector[L][1] Q_a P_n``.
    """

    kappa_a: int
    kappa_n: int
    l: int
    scalar: tuple[float, float]
    vector: dict

    @property
    def allowed(self) -> bool:
        return any(self.scalar) or any(any(v) for v in self.vector.values())

    def channels(self):
        """(sign, kind, c1, c2) for every nonvanishing channel.

        The sign is +1 for the scalar part and -1 for the vector parts,
        following alpha_mu alpha^mu = 1 - alpha_1 . alpha_2.
        """
        out = []
        if any(self.scalar):
            out.append((1.0, "scalar", self.scalar[0], self.scalar[1]))
        for L in sorted(self.vector):
            c1, c2 = self.vector[L]
            if c1 or c2:
                out.append((-1.0, "vector", c1, c2))
        return out


@lru_cache(maxsize=None)
def vector_coupling(kappa_a: int, kappa_n: int, l: int) -> AngularCoefficient:
    """All angular weights for the vertex alpha_mu j_l C^l between kappa_a and kappa_n."""
    scalar = (reduced_C(kappa_a, kappa_n, l), reduced_C(-kappa_a, -kappa_n, l))
    vector = {}
    for L in (l - 1, l, l + 1):
        if L < 0:
            continue
        vector[L] = (reduced_C_sigma(kappa_a, -kappa_n, l, L),
                     reduced_C_sigma(-kappa_a, kappa_n, l, L))
    return AngularCoefficient(kappa_a, kappa_n, l, scalar, vector)


def coupled_kappas(kappa_a: int, l: int) -> list[int]:
    """Every channel kappa_n reachable from kappa_a through multipole l."""
    ja = kappa_j2(kappa_a)
    out = []
    for jn in range(1, ja + 2 * l + 4, 2):
        for kn in kappas_for_j2(jn):
            if vector_coupling(kappa_a, kn, l).allowed:
                out.append(kn)
    return sorted(out, key=lambda k: (abs(k), k))


def required_kappas(kappa_a: int, lmax: int) -> list[int]:
    """Channels needed to evaluate multipoles 0..lmax for a state in kappa_a."""
    ks = set()
    for l in range(lmax + 1):
        ks.update(coupled_kappas(kappa_a, l))
    ks.add(kappa_a)
    return sorted(ks, key=lambda k: (abs(k), k))


def scalar_operator_kappas(kappa_a: int) -> list[int]:
    """Channels kappa_n with a nonzero matrix element of a rotational scalar of even parity."""
    ja, la = kappa_j2(kappa_a), kappa_l(kappa_a)
    return [kn for kn in kappas_for_j2(ja) if kappa_l(kn) % 2 == la % 2]
