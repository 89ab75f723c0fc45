"""Numerical engines: line quadrature with analytic tails, lattice sums over Z,
and bracketed scalar minimization.

Every estimate is returned as an :class:`EstimatedValue`, i.e. a value together
with a bound on the combined discretization and truncation error.  The bounds
are honest estimates (embedded Gauss-Kronrod differences plus analytic tail
majorants), not interval-arithmetic enclosures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .errors import DivergentTail, InvalidBracket, NoConvergence, NonIntegrableTail

# 15-point Kronrod nodes on [0, 1] (symmetric), with the embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


@dataclass(frozen=True)
class EstimatedValue:
    """A real number with a bound on its absolute error."""

    value: float
    error_bound: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite value {self.value!r}")
        if not (math.isfinite(self.error_bound) and self.error_bound >= 0.0):
            raise ValueError(f"invalid error bound {self.error_bound!r}")

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    def __add__(self, other: "EstimatedValue") -> "EstimatedValue":
        return EstimatedValue(self.value + other.value, self.error_bound + other.error_bound)

    def scaled(self, c: float) -> "EstimatedValue":
        return EstimatedValue(c * self.value, abs(c) * self.error_bound)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return abs(self.value - x) <= self.error_bound + slack

    def to_dict(self) -> dict:
        return {"value": self.value, "error_bound": self.error_bound}


@dataclass(frozen=True)
class DecayEnvelope:
    """Two-regime power envelope ``c_small |xi|^eps`` on |xi| <= 1 and
    ``c_large |xi|^-large_exponent`` on |xi| >= 1."""

    eps: float
    c_small: float
    c_large: float
    large_exponent: float

    def __post_init__(self) -> None:
        if self.eps < 0 or self.c_small < 0 or self.c_large < 0:
            raise ValueError("envelope constants must be nonnegative")

    def __call__(self, xi) -> np.ndarray:
        a = np.abs(np.asarray(xi, dtype=float))
        with np.errstate(divide="ignore"):
            small = self.c_small * a**self.eps
            large = self.c_large * np.where(a > 0, a, 1.0) ** (-self.large_exponent)
        return np.where(a <= 1.0, small, large)

    def sup_beyond(self, r: float) -> float:
        """Bound on |g(xi)| for |xi| >= r (r >= 1)."""
        r = max(r, 1.0)
        if self.large_exponent < 0:
            return math.inf
        return self.c_large * r ** (-self.large_exponent)

    def tail_l1(self, radius: float) -> float:
        """Bound on the integral of |g| over |xi| > radius (two-sided, radius >= 1)."""
        e = self.large_exponent
        if e <= 1.0:
            raise NonIntegrableTail(f"large_exponent {e} <= 1: tail not integrable")
        radius = max(radius, 1.0)
        return 2.0 * self.c_large * radius ** (1.0 - e) / (e - 1.0)


def _gk_batch(f: Callable, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        raise NoConvergence("integrand returned non-finite values")
    k = half * (y @ _WK)
    g = half * (y @ _WG15)
    kabs = half * (np.abs(y) @ _WK)
    return k, np.abs(k - g), kabs, bool(np.any(y != 0.0))


class _Adaptive:
    """Globally adaptive GK15 over a growing set of intervals.

    The refinement order does not depend on the tolerance, so a tighter
    tolerance only ever continues the same refinement path.
    """

    def __init__(self, f: Callable, max_intervals: int):
        self.f = f
        self.max_intervals = max_intervals
        self.a = np.empty(0)
        self.b = np.empty(0)
        self.k = np.empty(0)
        self.err = np.empty(0)
        self.kabs = np.empty(0)
        self.nonzero = False

    def add(self, edges: Sequence[float]) -> None:
        edges = np.asarray(edges, dtype=float)
        a, b = edges[:-1], edges[1:]
        keep = b > a
        a, b = a[keep], b[keep]
        if a.size == 0:
            return
        k, err, kabs, nz = _gk_batch(self.f, a, b)
        self.nonzero |= nz
        self.a = np.concatenate([self.a, a])
        self.b = np.concatenate([self.b, b])
        self.k = np.concatenate([self.k, k])
        self.err = np.concatenate([self.err, err])
        self.kabs = np.concatenate([self.kabs, kabs])

    @property
    def value(self) -> float:
        return float(np.sum(self.k))

    @property
    def l1(self) -> float:
        return float(np.sum(self.kabs))

    @property
    def error(self) -> float:
        return float(np.sum(self.err))

    def refine(self, target: Callable[[], float], stall_passes: int = 12) -> None:
        # stop (keeping the honest, larger error) once the estimate stops shrinking:
        # integrand roundoff sets a floor that further bisection cannot beat
        checkpoint, stalled = self.error, 0
        while self.error > target():
            if self.error < 0.5 * checkpoint:
                checkpoint, stalled = self.error, 0
            else:
                stalled += 1
                if stalled >= stall_passes:
                    return
            if self.a.size >= self.max_intervals:
                raise NoConvergence(
                    f"adaptive quadrature exceeded {self.max_intervals} intervals "
                    f"(error {self.error:.3e} > target {target():.3e})"
                )
            cut = 0.25 * float(np.max(self.err))
            split = self.err >= cut
            a, b = self.a[split], self.b[split]
            m = 0.5 * (a + b)
            if np.any((m <= a) | (m >= b)):
                raise NoConvergence("interval width reached floating-point resolution")
            stay = ~split
            self.a, self.b = self.a[stay], self.b[stay]
            self.k, self.err, self.kabs = self.k[stay], self.err[stay], self.kabs[stay]
            new_a = np.concatenate([a, m])
            new_b = np.concatenate([m, b])
            k, err, kabs, nz = _gk_batch(self.f, new_a, new_b)
            self.nonzero |= nz
            self.a = np.concatenate([self.a, new_a])
            self.b = np.concatenate([self.b, new_b])
            self.k = np.concatenate([self.k, k])
            self.err = np.concatenate([self.err, err])
            self.kabs = np.concatenate([self.kabs, kabs])


def _edges(lo: float, hi: float, breakpoints: Iterable[float]) -> list[float]:
    inner = sorted({float(t) for t in breakpoints if lo < t < hi})
    return [lo, *inner, hi]


def integrate_line(
    f: Callable[[np.ndarray], np.ndarray],
    envelope: DecayEnvelope | None = None,
    rel_tol: float = 1e-10,
    *,
    abs_tol: float = 0.0,
    support: tuple[float, float] | None = None,
    breakpoints: Iterable[float] = (),
    max_intervals: int = 50_000,
    max_radius: float = 2.0**40,
) -> EstimatedValue:
    """Integrate a vectorized real function over the real line.

    With ``support=(a, b)`` the integral is taken over [a, b] only and there is
    no tail.  Otherwise ``envelope`` bounds |f| for |x| >= 1 and the window
    [-R, R] grows over dyadic R until the analytic tail drops below the target.
    The target is ``max(abs_tol, rel_tol * L1)`` where L1 is the running
    estimate of the integral of |f| (equal to |value| for sign-definite f).
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    breakpoints = tuple(breakpoints)
    quad = _Adaptive(f, max_intervals)

    def target() -> float:
        return max(abs_tol, rel_tol * quad.l1)

    if support is not None:
        lo, hi = map(float, support)
        if not hi > lo:
            return EstimatedValue(0.0, 0.0)
        quad.add(_edges(lo, hi, breakpoints))
        if not quad.nonzero:
            return EstimatedValue(0.0, 0.0)
        quad.refine(target)
        return EstimatedValue(quad.value, quad.error)

    if envelope is None:
        raise ValueError("either support or envelope is required")
    if envelope.large_exponent <= 1.0:
        raise NonIntegrableTail(
            f"large_exponent {envelope.large_exponent} <= 1: tail not integrable"
        )
    radius = 1.0
    bp = [abs(t) for t in breakpoints]
    while bp and radius < max(bp):
        radius *= 2.0
    quad.add(_edges(-radius, radius, breakpoints))
    while True:
        if not quad.nonzero and envelope.c_large == 0.0:
            return EstimatedValue(0.0, 0.0)
        quad.refine(target)
        tail = envelope.tail_l1(radius)
        if tail <= target() or (not quad.nonzero and tail == 0.0):
            break
        if not quad.nonzero and radius >= max_radius:
            break
        if radius >= max_radius:
            raise NoConvergence(
                f"tail bound {tail:.3e} still above target at radius {radius:g}"
            )
        quad.add(_edges(radius, 2 * radius, breakpoints))
        quad.add(_edges(-2 * radius, -radius, breakpoints))
        radius *= 2.0
    if not quad.nonzero:
        # exact-zero shortcut: every node evaluated to 0.0
        return EstimatedValue(0.0, 0.0)
    return EstimatedValue(quad.value, quad.error + tail)


def lattice_sum(
    term: Callable[[int], EstimatedValue],
    tail_majorant: Callable[[int], float],
    *,
    rel_tol: float = 1e-12,
    abs_tol: float = 0.0,
    max_radius: int = 1_000_000,
    tail: Callable[[int], EstimatedValue] | None = None,
) -> EstimatedValue:
    """Sum ``term(l)`` over all integers l.

    ``tail_majorant(L)`` must bound the sum of |term(l)| over |l| > L.  When a
    ``tail`` estimator is supplied, its value is added at the truncation radius
    and its error bound replaces the majorant.
    """
    total = term(0)
    radius = 0
    while True:
        if tail is not None:
            rest = tail(radius)
            remainder, bound = rest.value, rest.error_bound
        else:
            remainder, bound = 0.0, float(tail_majorant(radius))
        if not math.isfinite(bound):
            bound = math.inf
        scale = abs(total.value + remainder)
        if bound <= max(abs_tol, rel_tol * scale):
            return EstimatedValue(total.value + remainder, total.error_bound + bound)
        radius += 1
        if radius > max_radius:
            raise DivergentTail(
                f"tail majorant {bound:.3e} not below tolerance within radius {max_radius}"
            )
        total = total + (term(radius) + term(-radius))


def minimize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    *,
    n_scan: int = 64,
) -> tuple[float, float]:
    """Minimize f on [lo, hi]: coarse scan (log-spaced when lo > 0), then a
    bounded Brent/golden-section refinement around the best scan point."""
    if not lo < hi:
        raise InvalidBracket(f"lo={lo} must be < hi={hi}")
    grid = np.geomspace(lo, hi, n_scan) if lo > 0 else np.linspace(lo, hi, n_scan)
    values = np.array([f(float(x)) for x in grid])
    i = int(np.argmin(values))
    best_x, best_f = float(grid[i]), float(values[i])
    a = float(grid[max(i - 1, 0)])
    c = float(grid[min(i + 1, n_scan - 1)])
    if c > a:
        res = optimize.minimize_scalar(
            f, bounds=(a, c), method="bounded", options={"xatol": tol, "maxiter": 500}
        )
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f
