"""Calderon-Zygmund constants of a synthesizer/analyzer pair and the wavelet
frame kernel K(x, y) = sum_j A^j K0(A^j x, A^j y) with
K0(x, y) = sum_k psi(x - k) conj(phi(y - k)).

sigma_alpha and tau_alpha are lattice sums over l of L1 norms of
xi^alpha conj(phihat(xi)) psihat(xi + l) (and of its (alpha+2)-th derivative);
they bound the y-derivatives of K0, and through the geometric j-sum the
derivatives of K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergentTail, InvalidDilation, OrderUnavailable
from .generators import (
    GeneratorFunction,
    decay_constant,
    decay_order,
    n_of_p,
    time_values,
)
from .numerics import DecayEnvelope, EstimatedValue, integrate_line, lattice_sum


# --------------------------------------------------------------------------
# Leibniz-expanded integrands


def _leibniz_terms(alpha: int, order: int) -> list[tuple[float, int, int, int]]:
    """(coefficient, a, b, c) with a + b + c = order, a <= alpha, for
    d^order [xi^alpha * F * G] = sum coef * xi^(alpha - a) F^(b) G^(c)."""
    terms = []
    for a in range(0, min(alpha, order) + 1):
        for b in range(0, order - a + 1):
            c = order - a - b
            coef = math.factorial(order) / (math.factorial(a) * math.factorial(b) * math.factorial(c))
            coef *= math.perm(alpha, a)
            terms.append((coef, a, b, c))
    return terms


def product_derivative(psi: GeneratorFunction, phi: GeneratorFunction, alpha: int, l: int,
                       xi, order: int) -> np.ndarray:
    """d^order/dxi^order of xi^alpha conj(phihat(xi)) psihat(xi + l)."""
    xi = np.asarray(xi, dtype=float)
    need = order
    if need > psi.max_order or need > phi.max_order:
        raise OrderUnavailable(
            f"derivative order {order} exceeds max_order of {psi.label} or {phi.label}"
        )
    out = np.zeros(xi.shape, dtype=complex)
    for coef, a, b, c in _leibniz_terms(alpha, order):
        out = out + coef * xi ** (alpha - a) * np.conj(phi.fourier_values(xi, b)) * psi.fourier_values(xi + l, c)
    return out


def _l1_norm(g: GeneratorFunction, order: int, power: int) -> float:
    """Upper value of int |xi|^power |ghat^(order)(xi)| dxi (cached)."""
    key = ("l1", order, power)
    if key in g._cache:
        return g._cache[key]
    env = g.envelope(order)
    f = lambda t: np.abs(t) ** power * np.abs(g.fourier_values(t, order))  # noqa: E731
    if g.is_zero:
        val = 0.0
    elif g.band is not None:
        lo, hi = g.band
        val = integrate_line(f, support=(-hi, hi), breakpoints=[-lo, lo, *g.breakpoints],
                             rel_tol=1e-8, abs_tol=1e-15).upper
    else:
        big = DecayEnvelope(env.eps, env.c_small, env.c_large, env.large_exponent - power)
        val = integrate_line(f, big, 1e-8, abs_tol=1e-15, breakpoints=g.breakpoints).upper
    g._cache[key] = val
    return val


def _sup_beyond(g: GeneratorFunction, order: int, r: float, power: int = 0) -> float:
    """Bound on sup_{|xi| >= r} |xi|^power |ghat^(order)(xi)|."""
    if g.is_zero:
        return 0.0
    if g.band is not None and r > g.band[1]:
        return 0.0
    env = g.envelope(order)
    if r < 1.0 or env.large_exponent < power:
        return math.inf
    return env.c_large * r ** (power - env.large_exponent)


def _sup_all(g: GeneratorFunction, order: int) -> float:
    env = g.envelope(order)
    return max(env.c_small, env.c_large)


def _support_pieces(phi: GeneratorFunction, psi: GeneratorFunction, l: int):
    """Compact pieces of xi containing supp phihat(xi) * psihat(xi + l), or None."""
    sets = []
    if phi.band is not None:
        lo, hi = phi.band
        sets.append([(-hi, -lo), (lo, hi)])
    if psi.band is not None:
        lo, hi = psi.band
        sets.append([(-hi - l, -lo - l), (lo - l, hi - l)])
    if not sets:
        return None
    pieces = sets[0]
    for other in sets[1:]:
        pieces = [(max(a, c), min(b, d)) for a, b in pieces for c, d in other if min(b, d) > max(a, c)]
    return pieces


def _term_integral(psi, phi, alpha: int, l: int, order: int, rel_tol: float) -> EstimatedValue:
    if psi.is_zero or phi.is_zero:
        return EstimatedValue(0.0, 0.0)
    if order == 0:
        f = lambda t: np.abs(t) ** alpha * np.abs(phi.fourier_values(t)) * np.abs(psi.fourier_values(t + l))  # noqa: E731
    else:
        f = lambda t: np.abs(product_derivative(psi, phi, alpha, l, t, order))  # noqa: E731
    bps = [*phi.breakpoints, *(b - l for b in psi.breakpoints)]
    if phi.band is not None:
        bps += [-phi.band[0], phi.band[0]]
    if psi.band is not None:
        bps += [-psi.band[0] - l, psi.band[0] - l]
    pieces = _support_pieces(phi, psi, l)
    if pieces is not None:
        total = EstimatedValue(0.0, 0.0)
        for a, b in pieces:
            total = total + integrate_line(f, support=(a, b), breakpoints=bps,
                                           rel_tol=rel_tol, abs_tol=1e-16)
        return total
    # neither transform is compactly supported: envelope over |xi| >= 1 + |l|
    c_large = 0.0
    exponent = math.inf
    for coef, a, b, c in (_leibniz_terms(alpha, order) if order else [(1.0, 0, 0, 0)]):
        env = phi.envelope(b)
        c_large += coef * env.c_large * _sup_all(psi, c)
        exponent = min(exponent, env.large_exponent - (alpha - a))
    env = DecayEnvelope(0.0, 1.0, c_large, exponent)
    return integrate_line(f, env, rel_tol, abs_tol=1e-16, breakpoints=bps)


def _tail_majorant(psi, phi, alpha: int, order: int):
    """Return L -> bound on sum_{|l| > L} of the term integrals."""
    if psi.is_zero or phi.is_zero:
        return lambda L: 0.0
    if psi.band is not None and phi.band is not None:
        reach = psi.band[1] + phi.band[1]
        return lambda L: 0.0 if L >= reach else math.inf
    terms = _leibniz_terms(alpha, order) if order else [(1.0, 0, 0, 0)]
    # sum_{l > L} (s l - h)^-e  <=  r0^-e + r0^(1-e) / (s (e - 1)),  r0 = s (L+1) - h >= 1
    def series(L: int, s: float, h: float, e: float) -> float:
        r0 = s * (L + 1) - h
        if r0 < 1.0 or e <= 1.0:
            return math.inf
        return r0 ** (-e) + r0 ** (1.0 - e) / (s * (e - 1.0))

    def majorant(L: int) -> float:
        total = 0.0
        for coef, a, b, c in terms:
            power = alpha - a
            part = 0.0
            if phi.band is not None:
                # xi in band(phi) forces |xi + l| >= |l| - hi
                h = phi.band[1]
                e = psi.envelope(c)
                part = _l1_norm(phi, b, power) * e.c_large * series(L, 1.0, h, e.large_exponent)
            elif psi.band is not None:
                h = psi.band[1]
                e = phi.envelope(b)
                part = _l1_norm(psi, c, 0) * e.c_large * series(L, 1.0, h, e.large_exponent - power)
            else:
                e_psi = psi.envelope(c)
                e_phi = phi.envelope(b)
                part = (_l1_norm(phi, b, power) * e_psi.c_large * 2.0**e_psi.large_exponent
                        * series(L, 1.0, 0.0, e_psi.large_exponent))
                part += (_l1_norm(psi, c, 0) * e_phi.c_large * 2.0 ** (e_phi.large_exponent - power)
                         * series(L, 1.0, 0.0, e_phi.large_exponent - power))
            total += coef * 2.0 * part
        return total

    return majorant


def _cz_lattice(psi, phi, alpha: int, order: int, rel_tol: float) -> EstimatedValue:
    return lattice_sum(
        lambda l: _term_integral(psi, phi, alpha, l, order, rel_tol),
        _tail_majorant(psi, phi, alpha, order),
        rel_tol=max(rel_tol, 1e-12),
        abs_tol=1e-15,
        max_radius=100_000,
    )


def sigma_alpha(psi: GeneratorFunction, phi: GeneratorFunction, alpha: int,
                rel_tol: float = 1e-9) -> EstimatedValue:
    """(2 pi)^alpha sum_l || xi^alpha conj(phihat) psihat(. + l) ||_1."""
    key = ("sigma", psi.key, alpha, rel_tol)
    if key in phi._cache:
        return phi._cache[key]
    val = _cz_lattice(psi, phi, alpha, 0, rel_tol).scaled((2 * math.pi) ** alpha)
    phi._cache[key] = val
    return val


def tau_alpha(psi: GeneratorFunction, phi: GeneratorFunction, alpha: int,
              rel_tol: float = 1e-9) -> EstimatedValue:
    """(1 / 4 pi^2) sum_l || (xi^alpha conj(phihat) psihat(. + l))^(alpha+2) ||_1."""
    if alpha + 2 > min(psi.max_order, phi.max_order):
        raise OrderUnavailable(f"tau_{alpha} needs derivative order {alpha + 2}")
    key = ("tau", psi.key, alpha, rel_tol)
    if key in phi._cache:
        return phi._cache[key]
    val = _cz_lattice(psi, phi, alpha, alpha + 2, rel_tol).scaled(1.0 / (4 * math.pi**2))
    phi._cache[key] = val
    return val


def kappa_alpha(A: float, alpha: int) -> float:
    """A (2 A^alpha + sum_{k < alpha} A^k) / (A^(alpha+1) - 1)."""
    if not A > 1:
        raise InvalidDilation(f"dilation A={A} must exceed 1")
    return A * (2 * A**alpha + sum(A**k for k in range(alpha))) / (A ** (alpha + 1) - 1)


def _c_value(kappa: float, sigma: float, tau: float, alpha: int) -> float:
    if sigma <= 0 or tau <= 0:
        return 0.0
    return kappa * sigma ** (1 / (alpha + 2)) * tau ** ((alpha + 1) / (alpha + 2))


@dataclass(frozen=True)
class CZConstants:
    alpha_max: int
    sigma: tuple[EstimatedValue, ...]
    tau: tuple[EstimatedValue, ...]
    kappa: tuple[float, ...]
    c_alpha: tuple[EstimatedValue, ...]
    cz_constant: EstimatedValue
    argmax: int
    dilation: float
    provenance: str = "computed"

    def to_dict(self) -> dict:
        return {
            "alpha_max": self.alpha_max,
            "dilation": self.dilation,
            "provenance": self.provenance,
            "sigma": [s.to_dict() for s in self.sigma],
            "tau": [t.to_dict() for t in self.tau],
            "kappa": list(self.kappa),
            "c_alpha": [c.to_dict() for c in self.c_alpha],
            "cz_constant": self.cz_constant.to_dict(),
            "argmax_alpha": self.argmax,
        }


def cz_from_values(sigma: Sequence, tau: Sequence, A: float,
                   provenance: str = "external") -> CZConstants:
    """Assemble the constants from known sigma/tau values (floats or estimates)."""
    if len(sigma) != len(tau) or not sigma:
        raise ValueError("sigma and tau must be non-empty and of equal length")
    as_est = lambda v: v if isinstance(v, EstimatedValue) else EstimatedValue(float(v), 0.0)  # noqa: E731
    sig = tuple(as_est(v) for v in sigma)
    ta = tuple(as_est(v) for v in tau)
    kap = tuple(kappa_alpha(A, a) for a in range(len(sig)))
    cs = []
    for a, (s, t, k) in enumerate(zip(sig, ta, kap)):
        val = _c_value(k, s.value, t.value, a)
        up = _c_value(k, s.upper, t.upper, a)
        cs.append(EstimatedValue(val, max(up - val, 0.0)))
    arg = int(np.argmax([c.value for c in cs]))
    top = max(c.upper for c in cs)
    cz = EstimatedValue(cs[arg].value, max(top - cs[arg].value, 0.0))
    return CZConstants(len(sig) - 1, sig, ta, kap, tuple(cs), cz, arg, float(A), provenance)


def cz_constant(psi: GeneratorFunction, phi: GeneratorFunction, p: float, A: float,
                rel_tol: float = 1e-9) -> CZConstants:
    """sigma, tau, kappa and C_alpha for alpha = 0..N_p+1, and their maximum."""
    kappa_alpha(A, 0)
    alpha_max = n_of_p(p) + 1
    sig = [sigma_alpha(psi, phi, a, rel_tol) for a in range(alpha_max + 1)]
    ta = [tau_alpha(psi, phi, a, rel_tol) for a in range(alpha_max + 1)]
    return cz_from_values(sig, ta, A, provenance="computed")


# --------------------------------------------------------------------------
# kernel evaluation


def _window_tail(decay: float, l: int, width: float) -> float:
    """Bound on sum over integers k with |x - k| > width of decay / (2 pi |x - k|)^l."""
    if decay == 0.0:
        return 0.0
    w = max(width, 1.0)
    return 2.0 * decay / (2 * math.pi) ** l * (w ** (-l) + w ** (1 - l) / (l - 1))


def eval_K0_partial(psi: GeneratorFunction, phi: GeneratorFunction, alpha: int, x: float, y: float,
                    translation_radius: int = 64) -> EstimatedValue:
    """sum_k psi(x - k) conj(phi^(alpha)(y - k)) over k within translation_radius
    of x or y, plus a time-decay bound for the omitted translations."""
    if psi.is_zero or phi.is_zero:
        return EstimatedValue(0.0, 0.0)
    w = int(translation_radius)
    ks = np.union1d(np.arange(math.floor(x) - w, math.ceil(x) + w + 1),
                    np.arange(math.floor(y) - w, math.ceil(y) + w + 1)).astype(float)
    pv, pe = time_values(psi, x - ks, 0)
    fv, fe = time_values(phi, y - ks, alpha)
    total = complex(np.sum(pv * np.conj(fv)))
    err = float(np.sum(pe * np.abs(fv) + fe * np.abs(pv) + pe * fe))
    # omitted k lie farther than w from both x and y, and farther than |x-y|/2 from one of them
    l = min(decay_order(psi), decay_order(phi))
    d_psi = decay_constant(psi, 0, l).upper
    d_phi = decay_constant(phi, alpha, l).upper
    crude = decay_constant(phi, alpha, 0).upper * _window_tail(d_psi, l, w)
    half = max(abs(x - y) / 2, 1.0)
    paired = (d_phi * _window_tail(d_psi, l, w) + d_psi * _window_tail(d_phi, l, w)) / (2 * math.pi * half) ** l
    err += min(crude, paired)
    err += 64 * np.finfo(float).eps * float(np.sum(np.abs(pv * fv)))
    value = total.real if (psi.real_valued and phi.real_valued) else abs(total)
    return EstimatedValue(float(value), float(err))


def level_tails(sigma: float, tau: float, alpha: int, A: float, distance: float,
                level_range: tuple[int, int]) -> tuple[float, float]:
    """Geometric bounds on the omitted small-j and large-j parts of the K sum."""
    j_lo, j_hi = level_range
    small = sigma * A ** ((j_lo - 1) * (alpha + 1)) / (1 - A ** (-(alpha + 1)))
    large = tau * distance ** (-(alpha + 2)) * A ** (-(j_hi + 1)) / (1 - 1 / A)
    return small, large


def auto_level_range(sigma: float, tau: float, alpha: int, A: float, distance: float,
                     tol: float) -> tuple[int, int]:
    """Smallest level window whose two geometric tails are each below tol / 2."""
    if sigma <= 0 and tau <= 0:
        return (0, 0)
    la = math.log(A)
    j_lo = 0
    if sigma > 0:
        j_lo = math.floor(math.log(tol / 2 * (1 - A ** (-(alpha + 1))) / sigma) / ((alpha + 1) * la)) + 1
    j_hi = 0
    if tau > 0:
        j_hi = math.ceil(math.log(tau * distance ** (-(alpha + 2)) / ((1 - 1 / A) * tol / 2)) / la) - 1
    j_lo = min(j_lo, 0)
    j_hi = max(j_hi, j_lo)
    return (j_lo, j_hi)


def eval_K_partial(psi: GeneratorFunction, phi: GeneratorFunction, alpha: int, x: float, y: float,
                   A: float, level_range: tuple[int, int], *, sigma: EstimatedValue | None = None,
                   tau: EstimatedValue | None = None, translation_radius: int = 64) -> EstimatedValue:
    """sum_{j in level_range} A^{j(alpha+1)} d_y^alpha K0(A^j x, A^j y).

    When sigma_alpha and tau_alpha are supplied, the omitted levels are added
    to the error bound through the geometric tails."""
    j_lo, j_hi = level_range
    total = 0.0
    err = 0.0
    for j in range(j_lo, j_hi + 1):
        s = A**j
        k0 = eval_K0_partial(psi, phi, alpha, s * x, s * y, translation_radius)
        w = A ** (j * (alpha + 1))
        total += w * k0.value
        err += w * k0.error_bound
    if sigma is not None and tau is not None:
        small, large = level_tails(sigma.upper, tau.upper, alpha, A, abs(x - y), level_range)
        err += small + large
    return EstimatedValue(total, err)


@dataclass(frozen=True)
class KernelGrid:
    points: tuple[tuple[float, float], ...]
    level_range: tuple[int, int] | None = None
    translation_radius: int = 64

    def __post_init__(self) -> None:
        for x, y in self.points:
            if not abs(x - y) > 0:
                raise ValueError(f"grid point ({x}, {y}) lies on the diagonal")


def random_kernel_grid(n: int, seed: int = 0, radius: float = 4.0, min_gap: float = 0.05,
                       translation_radius: int = 64) -> KernelGrid:
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        x, y = rng.uniform(-radius, radius, 2)
        if abs(x - y) >= min_gap:
            pts.append((float(x), float(y)))
    return KernelGrid(tuple(pts), None, translation_radius)


@dataclass(frozen=True)
class KernelCheckRow:
    x: float
    y: float
    alpha: int
    kernel: str
    lhs: float
    bound: float
    budget: float
    level_range: tuple[int, int] | None = None

    @property
    def margin(self) -> float:
        return self.bound - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound + self.budget


@dataclass(frozen=True)
class KernelReport:
    rows: tuple[KernelCheckRow, ...]
    constants: CZConstants
    p: float
    A: float
    budgets: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "A": self.A,
            "passed": self.passed,
            "constants": self.constants.to_dict(),
            "budgets": self.budgets,
            "rows": [
                {"x": r.x, "y": r.y, "alpha": r.alpha, "kernel": r.kernel, "lhs": r.lhs,
                 "bound": r.bound, "margin": r.margin, "budget": r.budget, "pass": r.passed}
                for r in self.rows
            ],
        }


ABS_BUDGET = 1e-9


def verify_kernel_bounds(psi: GeneratorFunction, phi: GeneratorFunction, p: float, A: float,
                         grid: KernelGrid, *, constants: CZConstants | None = None,
                         level_tol: float = 1e-10, alphas: Iterable[int] | None = None) -> KernelReport:
    """Check |d_y^a K0| <= min(sigma_a, tau_a / |x-y|^(a+2)) and
    |d_y^a K| <= C / |x-y|^(a+1) at every grid point for a <= N_p + 1."""
    cz = constants if constants is not None else cz_constant(psi, phi, p, A)
    rows: list[KernelCheckRow] = []
    big = cz.cz_constant
    alpha_list = list(alphas) if alphas is not None else list(range(cz.alpha_max + 1))
    for x, y in grid.points:
        d = abs(x - y)
        for a in alpha_list:
            sig, ta = cz.sigma[a], cz.tau[a]
            k0 = eval_K0_partial(psi, phi, a, x, y, grid.translation_radius)
            b_sigma, b_tau = sig.value, ta.value / d ** (a + 2)
            bound = min(b_sigma, b_tau)
            slack = sig.error_bound if b_sigma <= b_tau else ta.error_bound / d ** (a + 2)
            rows.append(KernelCheckRow(x, y, a, "K0", abs(k0.value), bound,
                                       k0.error_bound + slack + ABS_BUDGET))
            lr = grid.level_range or auto_level_range(sig.upper, ta.upper, a, A, d, level_tol)
            kv = eval_K_partial(psi, phi, a, x, y, A, lr, sigma=sig, tau=ta,
                                translation_radius=grid.translation_radius)
            bound_k = big.value / d ** (a + 1)
            rows.append(KernelCheckRow(x, y, a, "K", abs(kv.value), bound_k,
                                       kv.error_bound + big.error_bound / d ** (a + 1) + ABS_BUDGET, lr))
    budgets = {"absolute": ABS_BUDGET, "level_tol": level_tol,
               "translation_radius": grid.translation_radius}
    return KernelReport(tuple(rows), cz, p, A, budgets)


def check_kernel_inputs(psi: GeneratorFunction, phi: GeneratorFunction, p: float) -> None:
    alpha_max = n_of_p(p) + 1
    if alpha_max + 2 > min(psi.max_order, phi.max_order):
        raise OrderUnavailable(f"kernel checks at p={p} need derivative order {alpha_max + 2}")
    if not (np.isfinite(decay_constant(psi, 0, decay_order(psi)).value)):
        raise DivergentTail("time-domain decay constant is not finite")
