"""Hardy-space certification: delta(b), the moment polynomial system and its
constant G, the constants C1..C4, the operator-norm bound for a
Calderon-Zygmund operator on H^p, and the M_p approximate-duality certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import HypothesisFailure, InvalidB, InvalidParameter, SingularSystem
from .generators import (
    ANALYZER,
    SYNTHESIZER,
    GeneratorQuadruple,
    check_hypotheses,
    difference,
    n_of_p,
)
from .numerics import minimize_scalar

ZETA_MAX = 1e6


def delta_of_b(b: float, n: int) -> float:
    """0.5 ((2n+3)/(2b) + sqrt(4 + ((2n+3)/(2b))^2)); always > 1."""
    if not b > 0:
        raise InvalidB(f"b={b} must be positive")
    r = (2 * n + 3) / (2 * b)
    return 0.5 * (r + math.sqrt(4 + r * r))


def admissible_n(p: float, n: int) -> bool:
    """n must equal N_p, or N_p - 1 when 1/p is an integer (the p -> 1/p limit
    from the right, as used for worst-case evaluations)."""
    n_p = n_of_p(p)
    if n == n_p:
        return True
    inv = 1.0 / p
    return abs(inv - round(inv)) < 1e-12 and n == n_p - 1


# --------------------------------------------------------------------------
# moment polynomials


def _normalized_gram(n: int, annulus: bool) -> np.ndarray:
    j = np.arange(2 * n + 1)
    if annulus:
        # (1/|E|) int_{1/2 < |t| <= 1} t^j dt with |E| = 1
        mom = np.where(j % 2 == 0, 2 * (1 - 0.5 ** (j + 1)) / (j + 1), 0.0)
    else:
        mom = np.where(j % 2 == 0, 1.0 / (j + 1), 0.0)
    return mom[np.add.outer(np.arange(n + 1), np.arange(n + 1))]


def _sup_on(poly: np.ndarray, pieces: Sequence[tuple[float, float]]) -> float:
    """max |poly(t)| over closed intervals via critical points (poly in increasing powers)."""
    p = np.polynomial.Polynomial(poly)
    cands = [t for a, b in pieces for t in (a, b)]
    for r in p.deriv().roots() if len(poly) > 2 else []:
        if abs(r.imag) < 1e-12:
            cands += [r.real for a, b in pieces if a <= r.real <= b]
    return float(max(abs(p(t)) for t in cands))


@dataclass(frozen=True)
class MomentPolynomialSystem:
    """Polynomials g_alpha^k of degree <= n with (1/|E_k|) int_{E_k} g_alpha^k x^beta = [alpha == beta],
    where E_0 = [-R, R] and E_k = {2^(k-1) R < |x| <= 2^k R}."""

    n: int
    r: float
    normalized: Mapping[tuple[int, int], np.ndarray]
    g_alpha: tuple[float, ...]
    calG: float

    def scale(self, k: int) -> float:
        return 2.0**k * self.r

    def coeffs(self, alpha: int, k: int) -> np.ndarray:
        """Coefficients of g_alpha^k in increasing powers of x."""
        s = self.scale(k)
        base = self.normalized[(alpha, min(k, 1))]
        return base * s ** (-alpha - np.arange(self.n + 1, dtype=float))

    def region(self, k: int) -> list[tuple[float, float]]:
        s = self.scale(k)
        if k == 0:
            return [(-s, s)]
        return [(-s, -s / 2), (s / 2, s)]

    def measure(self, k: int) -> float:
        return 2 * self.r if k == 0 else 2.0 ** (k - 1) * 2 * self.r

    def indicator(self, k: int, x) -> np.ndarray:
        ax = np.abs(np.asarray(x, dtype=float))
        s = self.scale(k)
        return (ax <= s) if k == 0 else ((ax > s / 2) & (ax <= s))

    def g(self, alpha: int, k: int, x) -> np.ndarray:
        """g_alpha^k(x) (a polynomial, not restricted to E_k)."""
        x = np.asarray(x, dtype=float)
        s = self.scale(k)
        t = x / s
        return s ** (-alpha) * np.polynomial.polynomial.polyval(t, self.normalized[(alpha, min(k, 1))])

    def G(self, alpha: int, k: int, x) -> np.ndarray:
        """G_alpha^k = g_alpha^k restricted to E_k."""
        return np.where(self.indicator(k, x), self.g(alpha, k, x), 0.0)


def moment_polynomials(n: int, r: float) -> MomentPolynomialSystem:
    """Solve the normalized Gram systems for E_0 and E_1, and take
    G_alpha = sup over E_k of |g_alpha^k| (2^k R)^alpha (k-independent for k >= 1)."""
    if n < 0 or not r > 0:
        raise InvalidParameter(f"need n >= 0 and r > 0 (got n={n}, r={r})")
    normalized: dict[tuple[int, int], np.ndarray] = {}
    sups: dict[tuple[int, int], float] = {}
    regions = {0: [(-1.0, 1.0)], 1: [(-1.0, -0.5), (0.5, 1.0)]}
    for kind in (0, 1):
        gram = _normalized_gram(n, annulus=bool(kind))
        if np.linalg.cond(gram) > 1e14:
            raise SingularSystem(f"moment Gram matrix is singular for n={n}")
        inv = np.linalg.solve(gram, np.eye(n + 1))
        for alpha in range(n + 1):
            normalized[(alpha, kind)] = inv[alpha].copy()
            sups[(alpha, kind)] = _sup_on(inv[alpha], regions[kind])
    g_alpha = tuple(max(sups[(a, 0)], sups[(a, 1)]) for a in range(n + 1))
    system = MomentPolynomialSystem(n, float(r), normalized, g_alpha, max(g_alpha))
    _check_dilation_invariance(system)
    return system


def _check_dilation_invariance(system: MomentPolynomialSystem) -> None:
    """Recompute E_2 directly in x and compare the normalized sups with E_1."""
    n = system.n
    if n > 6:
        return
    s = system.scale(2)
    j = np.arange(2 * n + 1)
    # (1/|E_2|) int_{s/2<|x|<=s} x^j dx with |E_2| = s
    mom = np.where(j % 2 == 0, 2 * (s ** (j + 1) - (s / 2) ** (j + 1)) / ((j + 1) * s), 0.0)
    gram = mom[np.add.outer(np.arange(n + 1), np.arange(n + 1))]
    inv = np.linalg.solve(gram, np.eye(n + 1))
    for alpha in range(n + 1):
        direct = _sup_on(inv[alpha], [(-s, -s / 2), (s / 2, s)]) * s**alpha
        ref = _sup_on(system.normalized[(alpha, 1)], [(-1.0, -0.5), (0.5, 1.0)])
        if abs(direct - ref) > 1e-10 * max(1.0, ref):
            raise SingularSystem(
                f"dilation invariance failed for alpha={alpha}: {direct} vs {ref}"
            )


# --------------------------------------------------------------------------
# HardyParams and C1..C4


@dataclass(frozen=True)
class HardyParams:
    p: float
    n_p: int
    b: float
    zeta: float
    eta: float
    delta: float
    calG: float

    def __post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise InvalidParameter(f"p={self.p} outside (0, 1]")
        if not admissible_n(self.p, self.n_p):
            raise InvalidParameter(f"n={self.n_p} incompatible with p={self.p}")
        if not self.b > 2 / self.p:
            raise InvalidB(f"b={self.b} must exceed 2/p={2 / self.p}")
        if not math.isclose(self.delta, delta_of_b(self.b, self.n_p), rel_tol=1e-14):
            raise InvalidParameter("delta does not match delta(b)")
        if self.zeta < self.delta or self.eta < self.delta:
            raise InvalidParameter(f"zeta and eta must be >= delta(b)={self.delta}")
        if not self.calG > 0:
            raise InvalidParameter("calG must be positive")

    @classmethod
    def make(cls, p: float, b: float, zeta: float | None = None, eta: float | None = None,
             n: int | None = None, calG: float | None = None) -> "HardyParams":
        n = n_of_p(p) if n is None else n
        if calG is None:
            calG = moment_polynomials(n, 1.0).calG
        d = delta_of_b(b, n) if b > 0 else math.nan
        zeta = d if zeta is None else zeta
        eta = zeta if eta is None else eta
        return cls(p, n, b, zeta, eta, d, calG)


@dataclass(frozen=True)
class HardyConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    log_c3: float
    log_c4: float
    identity_residual: float

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4,
                "log_c3": self.log_c3, "log_c4": self.log_c4,
                "identity_residual": self.identity_residual}


def _c1(p: float, n: int, calG: float) -> float:
    return (1 + calG * (n + 1)) ** p


def _bracket(p: float, n: int, calG: float, b: float) -> float:
    c1 = _c1(p, n, calG)
    tail = sum(((2 + 2.0 ** (-a)) / (b - a - 1)) ** p for a in range(n + 1))
    return 2 * (2 * b - 1) ** (-p / 2) * c1 + 3 * calG**p * tail


def _front(n: int) -> float:
    return 2.0 ** (n + 3) / (math.factorial(n + 1) * math.sqrt(2 * n + 3))


def _pole(zeta: float, n: int) -> float:
    e = 2 * n + 3
    return 0.5 * ((zeta + 1) ** (-e) + (zeta - 1) ** (-e))


def c2_value(p: float, n: int, calG: float, b: float, zeta: float) -> float:
    return (_front(n) ** p * (_pole(zeta, n) * zeta ** (2 / p - 1)) ** (p / 2)
            * _bracket(p, n, calG, b))


def constants_c1_c4(params: HardyParams) -> HardyConstants:
    """C1, C2(b, zeta), C3(b, zeta), C4(b, zeta) and the check C2 = C3^p C4
    (done in logarithms, since (zeta/2)^b overflows for large b)."""
    p, n, g, b, z = params.p, params.n_p, params.calG, params.b, params.zeta
    c1 = _c1(p, n, g)
    c2 = c2_value(p, n, g, b, z)
    log_c3 = math.log(_front(n)) + 0.5 * math.log(_pole(z, n) / z) + b * math.log(z / 2)
    log_c4 = b * p * math.log(2) + (1 - b * p) * math.log(z) + math.log(_bracket(p, n, g, b))
    residual = abs(p * log_c3 + log_c4 - math.log(c2))
    if residual > 1e-12 * max(1.0, abs(math.log(c2))):
        raise SingularSystem(f"C2 = C3^p C4 identity violated (log residual {residual:.3e})")
    safe_exp = lambda v: math.exp(v) if v < 709 else math.inf  # noqa: E731
    return HardyConstants(c1, c2, safe_exp(log_c3), safe_exp(log_c4), log_c3, log_c4, residual)


def hp_bound(l2_norm: float, cz_const: float, params: HardyParams, *, use_eta: bool = False) -> float:
    """C1 zeta^(p(1/p - 1/2)) ||Z||^p + C2(b, zeta) Zc^p: an upper bound for ||Z||^p on H^p."""
    if l2_norm < 0 or cz_const < 0:
        raise InvalidParameter("norms must be nonnegative")
    z = params.eta if use_eta else params.zeta
    p = params.p
    c1 = _c1(p, params.n_p, params.calG)
    c2 = c2_value(p, params.n_p, params.calG, params.b, z)
    return c1 * z ** (1 - p / 2) * l2_norm**p + c2 * cz_const**p


def closed_form_norm_bound_n0(l2_norm: float, cz_const: float, p: float, zeta: float, b: float) -> float:
    """Norm-level (not p-th power) bound for N = 0 with G_0 = 1:
    2^(1+1/p) zeta^(1/p) (U / zeta^(1/2) + 4/sqrt(3) (zeta^2+3)^(1/2) / (zeta^2-1)^(3/2)
    (2 * 4^(1/p) / sqrt(2b-1) + 3 * 6^(1/p) / (b-1)) C)."""
    inner = (2 * 4 ** (1 / p) / math.sqrt(2 * b - 1) + 3 * 6 ** (1 / p) / (b - 1))
    shape = (zeta**2 + 3) ** 0.5 / (zeta**2 - 1) ** 1.5
    return 2 ** (1 + 1 / p) * zeta ** (1 / p) * (
        l2_norm / math.sqrt(zeta) + 4 / math.sqrt(3) * shape * inner * cz_const
    )


# --------------------------------------------------------------------------
# M_p certificate


@dataclass(frozen=True)
class CertificateInputs:
    u1: float
    c1: float
    u2: float = 0.0
    c2: float = 0.0
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("u1", "c1", "u2", "c2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameter(f"{name}={v} must be finite and nonnegative")

    @classmethod
    def coerce(cls, inputs) -> "CertificateInputs":
        if isinstance(inputs, CertificateInputs):
            return inputs
        keys = {"u1": ("u1", "U1"), "c1": ("c1", "C1"), "u2": ("u2", "U2"), "c2": ("c2", "C2")}
        vals = {}
        for k, names in keys.items():
            vals[k] = float(next((inputs[n] for n in names if n in inputs), 0.0))
        return cls(**vals, provenance=dict(inputs.get("provenance", {})))

    def to_dict(self) -> dict:
        return {"U1": self.u1, "C1": self.c1, "U2": self.u2, "C2": self.c2,
                "provenance": dict(self.provenance)}


@dataclass(frozen=True)
class CertificateReport:
    p: float
    b: float
    n: int
    calG: float
    delta: float
    mp_bound: float
    term1: tuple[float, float]
    term2: tuple[float, float]
    inputs: CertificateInputs
    certified: bool
    neumann_rate: float
    zeta_fixed: bool = False
    notes: tuple[str, ...] = ()
    extras: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "b": self.b,
            "n": self.n,
            "calG": self.calG,
            "delta": self.delta,
            "mp_bound": self.mp_bound,
            "term1": {"zeta": self.term1[0], "value": self.term1[1]},
            "term2": {"eta": self.term2[0], "value": self.term2[1]},
            "inputs": self.inputs.to_dict(),
            "certified": self.certified,
            "neumann_rate": self.neumann_rate,
            "zeta_fixed": self.zeta_fixed,
            "notes": list(self.notes),
            "budgets": {"zeta_interval": [self.delta, ZETA_MAX], "minimizer_tol": 1e-9},
            "extras": dict(self.extras),
        }


def _term(p: float, n: int, calG: float, b: float, u: float, c: float, zeta: float) -> float:
    c1 = _c1(p, n, calG)
    val = 0.0
    if u > 0:
        val += c1 * zeta ** (1 - p / 2) * u**p
    if c > 0:
        val += c2_value(p, n, calG, b, zeta) * c**p
    return val


def _minimize_term(p, n, calG, b, u, c, delta, fixed):
    if fixed is not None:
        if fixed < delta:
            raise InvalidParameter(f"zeta={fixed} below delta(b)={delta}")
        return float(fixed), _term(p, n, calG, b, u, c, fixed)
    if u == 0 and c == 0:
        return delta, 0.0
    return minimize_scalar(lambda z: _term(p, n, calG, b, u, c, z), delta, ZETA_MAX, 1e-9)


def mp_bound(inputs, p: float, n: int | None, calG: float | None, b: float, *,
             zeta: float | None = None, eta: float | None = None,
             notes: Sequence[str] = ()) -> CertificateReport:
    """Minimize each term over [delta(b), 1e6] and add: the M_p bound.

    term_i(zeta) = C1 zeta^(p(1/p - 1/2)) U_i^p + C2(b, zeta) C_i^p."""
    inp = CertificateInputs.coerce(inputs)
    n = n_of_p(p) if n is None else n
    if not admissible_n(p, n):
        raise InvalidParameter(f"n={n} incompatible with p={p}")
    if calG is None:
        calG = moment_polynomials(n, 1.0).calG
    if not b > 2 / p:
        raise InvalidB(f"b={b} must exceed 2/p={2 / p}")
    delta = delta_of_b(b, n)
    t1 = _minimize_term(p, n, calG, b, inp.u1, inp.c1, delta, zeta)
    t2 = _minimize_term(p, n, calG, b, inp.u2, inp.c2, delta, eta if eta is not None else zeta)
    total = t1[1] + t2[1]
    return CertificateReport(
        p=p, b=b, n=n, calG=calG, delta=delta, mp_bound=total, term1=t1, term2=t2,
        inputs=inp, certified=total < 1, neumann_rate=total ** (1 / p),
        zeta_fixed=zeta is not None, notes=tuple(notes),
    )


def default_b_grid(p: float) -> list[float]:
    return [b for b in (4 / p, 10.0, 50.0, 250.0, 1000.0) if b > 2 / p]


def _best(reports: Iterable[CertificateReport]) -> CertificateReport:
    reports = list(reports)
    if not reports:
        raise InvalidB("b_grid contains no admissible b > 2/p")
    return min(reports, key=lambda r: r.mp_bound)


def certify_from_constants(inputs, p: float, n: int | None = None, calG: float | None = None,
                           b_grid: Sequence[float] | None = None, *, zeta: float | None = None,
                           eta: float | None = None) -> CertificateReport:
    """M_p certificate from externally supplied U_i and C_i."""
    inp = CertificateInputs.coerce(inputs)
    prov = {k: inp.provenance.get(k, "external") for k in ("U1", "C1", "U2", "C2")}
    inp = CertificateInputs(inp.u1, inp.c1, inp.u2, inp.c2, prov)
    grid = default_b_grid(p) if b_grid is None else [b for b in b_grid if b > 2 / p]
    return _best(mp_bound(inp, p, n, calG, b, zeta=zeta, eta=eta) for b in grid)


def certify(quadruple: GeneratorQuadruple, p: float, A: float | None = None,
            b_grid: Sequence[float] | None = None, *, frame_grid=None, probes=None,
            rel_tol: float = 1e-9) -> CertificateReport:
    """Full pipeline: hypothesis checks, C_i from the difference generators,
    U_i from an empirical L2 probe (not rigorous), then the best M_p over b_grid."""
    from . import czkernel, frameops

    A = quadruple.dilation if A is None else A
    for name, g, role in (("psi", quadruple.psi, SYNTHESIZER), ("phi", quadruple.phi, ANALYZER),
                          ("psi_star", quadruple.psi_star, SYNTHESIZER),
                          ("phi_star", quadruple.phi_star, ANALYZER)):
        rep = check_hypotheses(g, p, role)
        if not rep.passed:
            bad = rep.failing()[0]
            raise HypothesisFailure(f"{name} ({g.label}) fails {bad.name}: {bad.detail}",
                                    check=f"{name}.{bad.name}")
    d1 = difference(quadruple.psi, quadruple.psi_star)
    d2 = difference(quadruple.phi, quadruple.phi_star)
    pairs = ((d1, quadruple.phi), (quadruple.psi_star, d2))
    cz_vals, u_vals, extras = [], [], {}
    for i, (syn, ana) in enumerate(pairs, start=1):
        if syn.is_zero or ana.is_zero:
            cz_vals.append(0.0)
            u_vals.append(0.0)
            continue
        cz = czkernel.cz_constant(syn, ana, p, A, rel_tol)
        cz_vals.append(cz.cz_constant.upper)
        probe = frameops.l2_norm_probe(syn, ana, grid=frame_grid, probes=probes, A=A)
        u_vals.append(probe.estimate)
        extras[f"cz{i}"] = cz.to_dict()
        extras[f"probe{i}"] = probe.to_dict()
    inputs = CertificateInputs(u_vals[0], cz_vals[0], u_vals[1], cz_vals[1],
                               {"U1": "computed-empirical", "C1": "computed",
                                "U2": "computed-empirical", "C2": "computed"})
    notes = ("U_i are empirical Rayleigh-quotient probes of the truncated discrete operator; "
             "they are not rigorous upper bounds",)
    grid = default_b_grid(p) if b_grid is None else [b for b in b_grid if b > 2 / p]
    best = _best(mp_bound(inputs, p, None, None, b, notes=notes) for b in grid)
    return CertificateReport(**{**best.__dict__, "extras": extras})
