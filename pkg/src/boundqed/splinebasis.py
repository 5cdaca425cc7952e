"""Clamped B-spline basis on a finite radial box with per-interval Gauss rules."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline

GRID_SCHEMES = ("exponential", "linear")


def gauss_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights of ``order`` points on each [edges[i], edges[i+1]]."""
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(edges[:-1], dtype=float)[:, None]
    b = np.asarray(edges[1:], dtype=float)[:, None]
    half = 0.5 * (b - a)
    return (half * x + 0.5 * (a + b)).ravel(), (half * w).ravel()


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """B-splines of order ``order`` (degree order-1) on ``breakpoints``.

    ``breakpoints`` holds the N distinct knots including 0 and R; the end knots
    carry multiplicity ``order`` so the basis has N + order - 2 functions.
    """

    order: int
    breakpoints: np.ndarray
    quad_order: int
    scheme: str = "exponential"
    knots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.order
        bp = self.breakpoints
        t = np.concatenate([np.full(k - 1, bp[0]), bp, np.full(k - 1, bp[-1])])
        object.__setattr__(self, "knots", t)
        bp.setflags(write=False)
        t.setflags(write=False)

    @property
    def n_points(self) -> int:
        return len(self.breakpoints)

    @property
    def radius(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def size(self) -> int:
        return self.n_points + self.order - 2

    def with_order(self, order: int) -> "SplineBasis":
        """Same breakpoints and quadrature, different spline order."""
        return SplineBasis(order, self.breakpoints, self.quad_order, self.scheme)

    @cached_property
    def _spline(self) -> BSpline:
        return BSpline(self.knots, np.eye(self.size), self.order - 1, extrapolate=False)

    @cached_property
    def nodes(self) -> np.ndarray:
        return gauss_nodes(self.breakpoints, self.quad_order)[0]

    @cached_property
    def weights(self) -> np.ndarray:
        return gauss_nodes(self.breakpoints, self.quad_order)[1]

    def _check(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < self.breakpoints[0]) or np.any(r > self.radius):
            raise ValueError("radius outside the box [0, R]")
        return r

    def design(self, r, nu: int = 0) -> np.ndarray:
        """Dense (len(r), size) matrix of all splines (or derivative ``nu``) at ``r``."""
        r = self._check(r)
        out = self._spline(r, nu=nu)
        # scipy leaves the closed right end undefined; the clamped limit is used there.
        at_end = r == self.radius
        if np.any(at_end):
            out[at_end] = self._right_end(nu)
        return np.nan_to_num(out)

    def _right_end(self, nu: int) -> np.ndarray:
        eps = 1e-14 * max(self.radius, 1.0)
        row = np.nan_to_num(self._spline(np.array([self.radius - eps]), nu=nu))[0]
        if nu == 0:
            row = np.zeros(self.size)
            row[-1] = 1.0
        return row

    def evaluate(self, r: float) -> tuple[int, np.ndarray, np.ndarray]:
        """Values and first derivatives of the (at most ``order``) nonzero splines at r.

        Returns ``(first, values, derivatives)`` where ``values[i]`` belongs to
        spline ``first + i``.
        """
        r = float(self._check(r)[0])
        k = self.order
        t = self.knots
        span = int(np.searchsorted(t, r, side="right")) - 1
        span = min(max(span, k - 1), self.size - 1)
        first = span - k + 1
        vals = self.design([r])[0, first:first + k]
        ders = self.design([r], nu=1)[0, first:first + k]
        return first, vals, ders

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        """Contract integrand samples at :attr:`nodes` with the Gauss weights."""
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def quadrature(self, f, intervals=None) -> float:
        """Integrate ``f(r)`` over the box, or over the selected knot intervals."""
        if intervals is None:
            return float(self.integrate(f(self.nodes)))
        q = self.quad_order
        idx = np.concatenate([np.arange(i * q, (i + 1) * q) for i in np.atleast_1d(intervals)])
        r = self.nodes[idx]
        return float(np.dot(f(r), self.weights[idx]))

    def overlap_matrix(self) -> np.ndarray:
        B = self.design(self.nodes)
        return (B * self.weights[:, None]).T @ B


def make_breakpoints(n_points: int, radius: float, scheme: str = "exponential",
                     r_min: float | None = None) -> np.ndarray:
    if scheme == "linear":
        return np.linspace(0.0, radius, n_points)
    if scheme != "exponential":
        raise ValueError(f"unknown grid scheme {scheme!r}; expected one of {GRID_SCHEMES}")
    if r_min is None:
        r_min = radius * 2.5e-5
    if not 0 < r_min < radius:
        raise ValueError("r_min must lie strictly inside (0, R)")
    if n_points == 2:
        return np.array([0.0, radius])
    inner = r_min * (radius / r_min) ** (np.arange(n_points - 1) / (n_points - 2))
    inner[-1] = radius
    return np.concatenate([[0.0], inner])


def build_basis(n_points: int, order: int, radius: float, scheme: str = "exponential",
                r_min: float | None = None, quad_order: int | None = None) -> SplineBasis:
    """Clamped B-spline basis with ``n_points`` breakpoints on [0, radius].

    The exponential scheme places the first nonzero breakpoint at ``r_min``
    (default ``2.5e-5 * radius``) and grows geometrically towards the wall.
    """
    if order < 2:
        raise ValueError("spline order must be >= 2")
    if n_points < order:
        raise ValueError(f"need n_points >= order, got N={n_points}, k={order}")
    if not radius > 0:
        raise ValueError("box radius must be positive")
    bp = make_breakpoints(n_points, float(radius), scheme, r_min)
    return SplineBasis(order, bp, quad_order or 2 * order, scheme)
