"""Wavelet generators represented on the Fourier side.

A generator carries an oracle ``fourier(xi, order)`` for the derivatives of
its Fourier transform (normalization ``ghat(xi) = int g(x) exp(-2 pi i x xi) dx``),
a decay envelope for every available order, and optional metadata that lets
the other modules take shortcuts: a compact frequency band, breakpoints where
the transform is only piecewise smooth, and closed-form time-domain values.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import interpolate, special

from .errors import ConfigError, HpDualError, InvalidParameter, OrderUnavailable
from .numerics import DecayEnvelope, EstimatedValue, integrate_line

FourierOracle = Callable[[np.ndarray, int], np.ndarray]
TimeOracle = Callable[[np.ndarray, int], np.ndarray]

SYNTHESIZER = "synthesizer"
ANALYZER = "analyzer"


def n_of_p(p: float) -> int:
    """N_p = floor(1/p - 1), robust to 1/p landing just below an integer."""
    if not 0 < p <= 1:
        raise InvalidParameter(f"p must lie in (0, 1], got {p}")
    return max(0, math.floor(1.0 / p - 1.0 + 1e-12))


@dataclass(frozen=True, eq=False)
class GeneratorFunction:
    fourier: FourierOracle
    max_order: int
    envelopes: tuple[DecayEnvelope, ...]
    declared_vanishing_moments: int
    label: str
    key: str = ""
    band: tuple[float, float] | None = None
    breakpoints: tuple[float, ...] = ()
    time: TimeOracle | None = None
    real_valued: bool = True
    components: tuple[tuple[float, "GeneratorFunction"], ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.envelopes) != self.max_order + 1:
            raise ValueError("one envelope per derivative order is required")
        if not self.key:
            object.__setattr__(self, "key", self.label)

    def __call__(self, xi, order: int = 0) -> np.ndarray:
        return self.fourier_values(xi, order)

    def fourier_values(self, xi, order: int = 0) -> np.ndarray:
        if order > self.max_order or order < 0:
            raise OrderUnavailable(
                f"{self.label}: derivative order {order} exceeds max_order {self.max_order}"
            )
        xi = np.asarray(xi, dtype=float)
        return np.asarray(self.fourier(xi, order), dtype=complex)

    def envelope(self, order: int) -> DecayEnvelope:
        if order > self.max_order:
            raise OrderUnavailable(f"{self.label}: no envelope for order {order}")
        return self.envelopes[order]

    @property
    def is_zero(self) -> bool:
        return self.key == "zero"

    @property
    def abs_band(self) -> tuple[float, float] | None:
        return self.band

    def time_values(self, x, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Time-domain values of the order-th derivative, with an error estimate."""
        return time_values(self, x, order)


@dataclass(frozen=True)
class GeneratorQuadruple:
    psi: GeneratorFunction
    phi: GeneratorFunction
    psi_star: GeneratorFunction
    phi_star: GeneratorFunction
    exact_dual_declared: bool = False
    dilation: float = 2.0


# --------------------------------------------------------------------------
# envelope fitting


def fit_envelope(
    fn: Callable[[np.ndarray], np.ndarray],
    eps: float,
    large_exponent: float,
    xi_max: float = 1e3,
    *,
    safety: float = 1.05,
    n: int = 2000,
) -> DecayEnvelope:
    """Fit the two constants of a power envelope by dense sampling on both sides."""
    small = np.geomspace(1e-6, 1.0, n)
    large = np.geomspace(1.0, xi_max, n)
    vs = np.maximum(np.abs(fn(small)), np.abs(fn(-small)))
    vl = np.maximum(np.abs(fn(large)), np.abs(fn(-large)))
    c_small = safety * float(np.max(vs / small**eps))
    c_large = safety * float(np.max(vl * large**large_exponent))
    return DecayEnvelope(eps, c_small, c_large, large_exponent)


# --------------------------------------------------------------------------
# Mexican hat


_MH_CONST = 4.0 * math.pi**2 * math.sqrt(2.0 * math.pi)
_MH_A = 2.0 * math.pi**2


def _gauss_derivative(xi: np.ndarray, n: int) -> np.ndarray:
    """n-th derivative of exp(-a xi^2), a = 2 pi^2."""
    s = math.sqrt(_MH_A)
    return (-s) ** n * special.eval_hermite(n, s * xi) * np.exp(-_MH_A * xi**2)


def _mexican_hat_fourier(xi: np.ndarray, order: int) -> np.ndarray:
    # (xi^2 E)^{(m)} = xi^2 E^{(m)} + 2 m xi E^{(m-1)} + m (m-1) E^{(m-2)}
    out = xi**2 * _gauss_derivative(xi, order)
    if order >= 1:
        out = out + 2 * order * xi * _gauss_derivative(xi, order - 1)
    if order >= 2:
        out = out + order * (order - 1) * _gauss_derivative(xi, order - 2)
    return _MH_CONST * out


def _mexican_hat_time(x: np.ndarray, order: int) -> np.ndarray:
    # psi = -G'' with G = exp(-x^2/2) and G^{(n)} = (-1)^n He_n G
    he = special.eval_hermitenorm(order + 2, x)
    return (-1.0) ** (order + 1) * he * np.exp(-0.5 * x**2)


@functools.lru_cache(maxsize=None)
def mexican_hat(max_order: int = 16) -> GeneratorFunction:
    """psi(x) = (1 - x^2) exp(-x^2/2), with Fourier transform
    4 pi^2 sqrt(2 pi) xi^2 exp(-2 pi^2 xi^2)."""
    envelopes = []
    for m in range(max_order + 1):
        eps = 2.0 if m == 0 else (1.0 if m % 2 else 0.0)
        envelopes.append(
            fit_envelope(lambda t, m=m: _mexican_hat_fourier(t, m), eps, 20.0, 50.0)
        )
    return GeneratorFunction(
        fourier=_mexican_hat_fourier,
        max_order=max_order,
        envelopes=tuple(envelopes),
        declared_vanishing_moments=2,
        label="mexican_hat",
        time=_mexican_hat_time,
    )


# --------------------------------------------------------------------------
# Meyer wavelet (band-limited, orthonormal for A = 2)


def _taylor_sin_cos(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Taylor coefficients of sin(u), cos(u) given those of u.

    ``u`` has shape (m+1, n) with u[k] = u^{(k)}/k!.
    """
    m = u.shape[0] - 1
    s = np.zeros_like(u)
    c = np.zeros_like(u)
    s[0], c[0] = np.sin(u[0]), np.cos(u[0])
    for k in range(1, m + 1):
        j = np.arange(1, k + 1)[:, None]
        s[k] = np.sum(j * u[1 : k + 1] * c[k - 1 :: -1][: k], axis=0) / k
        c[k] = -np.sum(j * u[1 : k + 1] * s[k - 1 :: -1][: k], axis=0) / k
    return s, c


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = a.shape[0] - 1
    out = np.zeros(a.shape, dtype=np.result_type(a, b))
    for k in range(m + 1):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


@functools.lru_cache(maxsize=None)
def _meyer_nu(smoothness: int) -> tuple[Polynomial, ...]:
    bump = Polynomial([0, 1]) ** smoothness * Polynomial([1, -1]) ** smoothness
    nu = bump.integ()
    nu = nu / nu(1.0)
    derivs = [nu]
    for _ in range(2 * smoothness + 2):
        derivs.append(derivs[-1].deriv())
    return tuple(derivs)


def _meyer_fourier_factory(smoothness: int) -> FourierOracle:
    nus = _meyer_nu(smoothness)

    def fourier(xi: np.ndarray, order: int) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        shape = xi.shape
        xi = xi.ravel()
        a = np.abs(xi)
        sgn = np.where(xi < 0, -1.0, 1.0)
        out = np.zeros(xi.shape, dtype=complex)
        k = np.arange(order + 1)
        fact = np.array([math.factorial(i) for i in k], dtype=float)
        for piece in (1, 2):
            if piece == 1:
                mask = (a >= 1 / 3) & (a <= 2 / 3)
                slope = 3.0
            else:
                mask = (a > 2 / 3) & (a <= 4 / 3)
                slope = 1.5
            if not np.any(mask):
                continue
            t = slope * a[mask] - 1.0
            u = np.empty((order + 1, t.size))
            for i in range(order + 1):
                d = nus[i](t) if i < len(nus) else np.zeros_like(t)
                u[i] = 0.5 * math.pi * slope**i * d / fact[i]
            s, c = _taylor_sin_cos(u)
            prof = s if piece == 1 else c
            # d/dxi of f(|xi|) picks up sign(xi)^k
            prof = prof * sgn[mask][None, :] ** k[:, None]
            phase = (1j * math.pi) ** k[:, None] / fact[:, None] * np.exp(
                1j * math.pi * xi[mask]
            )[None, :]
            out[mask] = fact[order] * _cauchy(prof.astype(complex), phase)[order]
        return out.reshape(shape)

    return fourier


@functools.lru_cache(maxsize=None)
def meyer(smoothness: int = 7) -> GeneratorFunction:
    """Meyer wavelet with a degree-(2s+1) polynomial taper.

    ghat(xi) = exp(i pi xi) sin(pi/2 nu(3|xi| - 1)) on [1/3, 2/3],
    exp(i pi xi) cos(pi/2 nu(3|xi|/2 - 1)) on [2/3, 4/3], zero elsewhere.
    The transform is C^s with a piecewise continuous derivative of order s+1.
    """
    fourier = _meyer_fourier_factory(smoothness)
    max_order = smoothness + 1
    envelopes = tuple(
        fit_envelope(lambda t, m=m: fourier(t, m), 1.0, 20.0, 2.0)
        for m in range(max_order + 1)
    )
    bps = (1 / 3, 2 / 3, 4 / 3)
    return GeneratorFunction(
        fourier=fourier,
        max_order=max_order,
        envelopes=envelopes,
        declared_vanishing_moments=max_order + 1,
        label="meyer",
        key=f"meyer{smoothness}",
        band=(1 / 3, 4 / 3),
        breakpoints=tuple(sorted({*bps, *(-b for b in bps)})),
    )


def bandlimited_orthonormal_pair() -> GeneratorQuadruple:
    """Exact duals for A = 2: all four generators are the Meyer wavelet."""
    g = meyer()
    return GeneratorQuadruple(g, g, g, g, exact_dual_declared=True, dilation=2.0)


def calderon_sum(g: GeneratorFunction, xi, A: float = 2.0) -> np.ndarray:
    """sum_j |ghat(A^-j xi)|^2 for a band-limited generator (finite sum)."""
    if g.band is None:
        raise HpDualError("calderon_sum needs a band-limited generator")
    lo, hi = g.band
    xi = np.atleast_1d(np.abs(np.asarray(xi, dtype=float)))
    out = np.zeros(xi.shape)
    for idx, v in np.ndenumerate(xi):
        if v == 0:
            continue
        j_lo = math.floor(math.log(v / hi, A)) - 1
        j_hi = math.ceil(math.log(v / lo, A)) + 1
        js = np.arange(j_lo, j_hi + 1)
        out[idx] = float(np.sum(np.abs(g.fourier_values(v * A ** (-js.astype(float)))) ** 2))
    return out


# --------------------------------------------------------------------------
# zero, scaling, dilation and linear combinations


@functools.lru_cache(maxsize=None)
def zero_generator(max_order: int = 32) -> GeneratorFunction:
    zero_env = DecayEnvelope(1.0, 0.0, 0.0, 20.0)
    return GeneratorFunction(
        fourier=lambda xi, order: np.zeros(np.shape(xi), dtype=complex),
        max_order=max_order,
        envelopes=(zero_env,) * (max_order + 1),
        declared_vanishing_moments=max_order + 1,
        label="zero",
        key="zero",
        time=lambda x, order: np.zeros(np.shape(x)),
    )


def _base_terms(g: GeneratorFunction) -> list[tuple[float, GeneratorFunction]]:
    if g.components:
        return list(g.components)
    if g.is_zero:
        return []
    return [(1.0, g)]


def linear_combination(terms: Sequence[tuple[float, GeneratorFunction]]) -> GeneratorFunction:
    """sum c_i g_i, flattened over base generators; exactly cancelled bases are dropped."""
    coeffs: dict[str, float] = {}
    bases: dict[str, GeneratorFunction] = {}
    for c, g in terms:
        for c2, base in _base_terms(g):
            coeffs[base.key] = coeffs.get(base.key, 0.0) + float(c) * c2
            bases[base.key] = base
    flat = tuple((c, bases[k]) for k, c in coeffs.items() if c != 0.0)
    if not flat:
        return zero_generator()
    if len(flat) == 1 and flat[0][0] == 1.0:
        return flat[0][1]
    max_order = min(g.max_order for _, g in flat)

    def fourier(xi: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros(np.shape(xi), dtype=complex)
        for c, g in flat:
            out = out + c * g.fourier_values(xi, order)
        return out

    envelopes = []
    for m in range(max_order + 1):
        envs = [(abs(c), g.envelope(m)) for c, g in flat]
        envelopes.append(
            DecayEnvelope(
                eps=min(e.eps for _, e in envs),
                c_small=sum(c * e.c_small for c, e in envs),
                c_large=sum(c * e.c_large for c, e in envs),
                large_exponent=min(e.large_exponent for _, e in envs),
            )
        )
    bands = [g.band for _, g in flat]
    band = None
    if all(b is not None for b in bands):
        band = (min(b[0] for b in bands), max(b[1] for b in bands))
    label = " + ".join(f"{c:g}*{g.label}" for c, g in flat)
    return GeneratorFunction(
        fourier=fourier,
        max_order=max_order,
        envelopes=tuple(envelopes),
        declared_vanishing_moments=min(g.declared_vanishing_moments for _, g in flat),
        label=label,
        key="(" + "+".join(f"{c!r}*{g.key}" for c, g in flat) + ")",
        band=band,
        breakpoints=tuple(sorted({b for _, g in flat for b in g.breakpoints})),
        real_valued=all(g.real_valued for _, g in flat),
        components=flat,
    )


def difference(a: GeneratorFunction, b: GeneratorFunction) -> GeneratorFunction:
    return linear_combination([(1.0, a), (-1.0, b)])


def scaled(g: GeneratorFunction, c: float) -> GeneratorFunction:
    return linear_combination([(c, g)])


def dilated(g: GeneratorFunction, s: float) -> GeneratorFunction:
    """x -> g(x/s)/s, i.e. ghat(xi) -> ghat(s xi); shrinks the band by s."""
    if s <= 0:
        raise ValueError("dilation factor must be positive")

    def fourier(xi: np.ndarray, order: int) -> np.ndarray:
        return s**order * g.fourier_values(s * xi, order)

    envelopes = tuple(
        fit_envelope(lambda t, m=m: fourier(t, m), g.envelope(m).eps, g.envelope(m).large_exponent,
                     max(2.0, 50.0 / s))
        for m in range(g.max_order + 1)
    )
    time = None
    if g.time is not None:
        time = lambda x, order: s ** (-1 - order) * g.time(np.asarray(x) / s, order)  # noqa: E731
    band = None if g.band is None else (g.band[0] / s, g.band[1] / s)
    return GeneratorFunction(
        fourier=fourier,
        max_order=g.max_order,
        envelopes=envelopes,
        declared_vanishing_moments=g.declared_vanishing_moments,
        label=f"{g.label}(x/{s:g})/{s:g}",
        key=f"{g.key}@{s!r}",
        band=band,
        breakpoints=tuple(b / s for b in g.breakpoints),
        time=time,
        real_valued=g.real_valued,
    )


# --------------------------------------------------------------------------
# tabulated Fourier data


def from_samples(grid: Sequence[float], values: Sequence, label: str = "samples") -> GeneratorFunction:
    """Generator from tabulated Fourier values, interpolated by a quintic spline
    and taken as zero outside the grid."""
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(values)
    if vals.ndim == 2 and vals.shape[1] == 2:
        vals = vals[:, 0] + 1j * vals[:, 1]
    vals = vals.astype(complex)
    if grid.ndim != 1 or grid.size < 6 or vals.shape != grid.shape:
        raise ConfigError("need at least 6 matching grid/value samples", field="samples")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be strictly increasing", field="samples.grid")
    degree = 5
    re = interpolate.make_interp_spline(grid, vals.real, k=degree)
    im = interpolate.make_interp_spline(grid, vals.imag, k=degree)
    lo, hi = float(grid[0]), float(grid[-1])
    max_order = degree - 1

    def fourier(xi: np.ndarray, order: int) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        inside = (xi >= lo) & (xi <= hi)
        out = np.zeros(xi.shape, dtype=complex)
        if np.any(inside):
            out[inside] = re(xi[inside], nu=order) + 1j * im(xi[inside], nu=order)
        return out

    reach = max(abs(lo), abs(hi))
    envelopes = tuple(fit_envelope(lambda t, m=m: fourier(t, m), 0.0, 20.0, max(2.0, reach))
                      for m in range(max_order + 1))
    digest = hashlib.sha1(grid.tobytes() + vals.tobytes()).hexdigest()[:12]
    inner = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
    return GeneratorFunction(
        fourier=fourier,
        max_order=max_order,
        envelopes=envelopes,
        declared_vanishing_moments=0,
        label=label,
        key=f"samples:{digest}",
        band=(inner, reach),
        breakpoints=(lo, hi),
        real_valued=False,
    )


_BUILTINS: dict[str, Callable[..., GeneratorFunction]] = {
    "mexican_hat": mexican_hat,
    "meyer": meyer,
    "zero": zero_generator,
}


def load_generator(spec: Mapping) -> GeneratorFunction:
    """Build a generator from a JSON-style mapping.

    Accepted forms: ``{"builtin": name, "params": {...}}`` where params may hold
    ``scale`` (multiplier) and ``dilation``; ``{"samples": {"grid", "values"}}``;
    ``{"combination": [[coef, spec], ...]}``.
    """
    if not isinstance(spec, Mapping):
        raise ConfigError("generator config must be an object", field="generator")
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in _BUILTINS:
            raise ConfigError(f"unknown builtin {name!r}", field="builtin")
        params = dict(spec.get("params", {}))
        scale = float(params.pop("scale", 1.0))
        dil = params.pop("dilation", None)
        try:
            g = _BUILTINS[name](**params)
        except TypeError as exc:
            raise ConfigError(str(exc), field="params") from exc
        if dil is not None:
            g = dilated(g, float(dil))
        return g if scale == 1.0 else scaled(g, scale)
    if "samples" in spec:
        s = spec["samples"]
        try:
            return from_samples(s["grid"], s["values"], label=spec.get("label", "samples"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad samples block: {exc}", field="samples") from exc
    if "combination" in spec:
        terms = []
        for item in spec["combination"]:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                raise ConfigError("each term must be [coef, spec]", field="combination")
            terms.append((float(item[0]), load_generator(item[1])))
        return linear_combination(terms)
    raise ConfigError("expected one of builtin, samples, combination", field="generator")


def load_generator_json(text: str) -> GeneratorFunction:
    try:
        return load_generator(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}", field="generator") from exc


# --------------------------------------------------------------------------
# moments and time-domain values


def moment(g: GeneratorFunction, beta: int) -> EstimatedValue:
    """int g(x) x^beta dx = (-2 pi i)^-beta ghat^{(beta)}(0)."""
    if beta > g.max_order:
        raise OrderUnavailable(f"{g.label}: moment {beta} needs order {beta} > {g.max_order}")
    d = complex(g.fourier_values(np.array([0.0]), beta)[0])
    val = d / (-2j * math.pi) ** beta
    return EstimatedValue(float(val.real), abs(val.imag) if g.real_valued else 0.0)


def _fourier_inverse_integrand(g: GeneratorFunction, x: float, order: int):
    def f(xi: np.ndarray) -> np.ndarray:
        v = g.fourier_values(xi, 0) * (2j * math.pi * xi) ** order * np.exp(2j * math.pi * x * xi)
        return v.real

    return f


def time_eval(g: GeneratorFunction, x: float, order: int = 0, rel_tol: float = 1e-10) -> EstimatedValue:
    """g^{(order)}(x) by direct Fourier inversion (real part)."""
    f = _fourier_inverse_integrand(g, float(x), order)
    env0 = g.envelope(0)
    if g.band is not None:
        lo, hi = g.band
        bps = [b for b in g.breakpoints if -hi <= b <= hi]
        return integrate_line(f, support=(-hi, hi), breakpoints=[-lo, lo, 0.0, *bps],
                              rel_tol=rel_tol, abs_tol=1e-15)
    env = DecayEnvelope(env0.eps, env0.c_small * (2 * math.pi) ** order,
                        env0.c_large * (2 * math.pi) ** order, env0.large_exponent - order)
    return integrate_line(f, env, rel_tol, abs_tol=1e-15, breakpoints=g.breakpoints)


def leibniz_monomial(g: GeneratorFunction, xi: np.ndarray, power: int, order: int,
                     factor: complex = 1.0) -> np.ndarray:
    """d^order/dxi^order of (factor*xi)^power ghat(xi) via Leibniz."""
    out = np.zeros(np.shape(xi), dtype=complex)
    for i in range(0, min(power, order) + 1):
        coef = math.comb(order, i) * math.perm(power, i) * factor**power
        out = out + coef * xi ** (power - i) * g.fourier_values(xi, order - i)
    return out


def decay_constant(g: GeneratorFunction, alpha: int, l: int) -> EstimatedValue:
    """|| ((2 pi i xi)^alpha ghat)^{(l)} ||_1, so that
    |g^{(alpha)}(x)| <= constant / (2 pi |x|)^l."""
    key = ("decay", alpha, l)
    if key in g._cache:
        return g._cache[key]
    if l > g.max_order:
        raise OrderUnavailable(f"{g.label}: decay constant needs order {l}")
    f = lambda xi: np.abs(leibniz_monomial(g, xi, alpha, l, 2j * math.pi))  # noqa: E731
    if g.band is not None:
        lo, hi = g.band
        val = integrate_line(f, support=(-hi, hi), breakpoints=[-lo, lo, *g.breakpoints],
                             rel_tol=1e-8, abs_tol=1e-14)
    else:
        env = g.envelope(l)
        big = DecayEnvelope(env.eps, 1.0, sum(
            math.comb(l, i) * math.perm(alpha, i) * (2 * math.pi) ** alpha * g.envelope(l - i).c_large
            for i in range(min(alpha, l) + 1)
        ), min(g.envelope(l - i).large_exponent - alpha + i for i in range(min(alpha, l) + 1)))
        val = integrate_line(f, big, 1e-8, abs_tol=1e-14, breakpoints=g.breakpoints)
    g._cache[key] = val
    return val


def decay_order(g: GeneratorFunction) -> int:
    """Order l used for time-domain decay bounds."""
    return min(g.max_order, 8)


class _TimeTable:
    """Cubic-spline table of g^{(order)} on [-T, T] built from a dense inverse FFT."""

    def __init__(self, g: GeneratorFunction, order: int):
        lo, hi = g.band
        dt = min(1.0 / 256.0, 1.0 / (16.0 * hi))
        self.radius = max(64.0, 96.0 / hi)
        dxi = 1.0 / 2048.0
        m = int(round(1.0 / (dxi * dt)))
        m += m % 2
        dxi = 1.0 / (m * dt)
        k = np.arange(-m // 2, m // 2)
        xi = k * dxi
        spec = np.zeros(m, dtype=complex)
        band = np.abs(xi) <= hi
        spec[band] = g.fourier_values(xi[band], 0) * (2j * math.pi * xi[band]) ** order
        vals = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(spec))) * m * dxi
        t = k * dt
        keep = np.abs(t) <= self.radius + 4 * dt
        t, vals = t[keep], vals[keep]
        self.real = g.real_valued
        data = vals.real if self.real else vals
        self.spline = interpolate.CubicSpline(t, data)
        coarse = interpolate.CubicSpline(t[::2], data[::2])
        interp_err = float(np.max(np.abs(coarse(t[1::2]) - data[1::2]))) / 15.0
        l = decay_order(g)
        dc = decay_constant(g, order, l)
        outside = dc.upper / (2 * math.pi * self.radius) ** l
        alias = 2 * dc.upper / (2 * math.pi * (1.0 / dxi - self.radius)) ** l
        self.error = interp_err + outside + alias + 1e-14
        self.decay = dc.upper
        self.decay_order = l

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.spline(np.clip(x, -self.radius, self.radius))
        return np.where(np.abs(x) <= self.radius, out, 0.0)

    def pointwise_error(self, x: np.ndarray, values: np.ndarray) -> np.ndarray:
        # far out, |true - table| <= |table| + decay bound beats the uniform estimate
        ax = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            decay = self.decay / (2 * math.pi * ax) ** self.decay_order
        return np.minimum(self.error, np.abs(values) + decay)


def time_values(g: GeneratorFunction, x, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized g^{(order)}(x) and pointwise error estimates.

    Closed forms are exact; band-limited generators use cached FFT spline
    tables; linear combinations recurse into their components.
    """
    x = np.asarray(x, dtype=float)
    if g.components:
        total = np.zeros(x.shape, dtype=float if g.real_valued else complex)
        err = np.zeros(x.shape)
        for c, base in g.components:
            v, e = time_values(base, x, order)
            total = total + c * v
            err += abs(c) * e
        return total, err
    if g.time is not None:
        return np.asarray(g.time(x, order)), np.zeros(x.shape)
    if g.band is not None:
        key = ("table", order)
        table = g._cache.get(key)
        if table is None:
            table = _TimeTable(g, order)
            g._cache[key] = table
        vals = table(x)
        return vals, table.pointwise_error(x, vals)
    flat = x.ravel()
    vals = [time_eval(g, float(v), order) for v in flat]
    return (np.array([v.value for v in vals]).reshape(x.shape),
            np.array([v.error_bound for v in vals]).reshape(x.shape))


def sup_norm_bound(g: GeneratorFunction, order: int = 0) -> float:
    """sup |g^{(order)}| <= || (2 pi xi)^order ghat ||_1."""
    return decay_constant(g, order, 0).upper


# --------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""
    value: float | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margin": _finite(self.margin),
                "detail": self.detail, "value": None if self.value is None else _finite(self.value)}


def _finite(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


@dataclass(frozen=True)
class HypothesisReport:
    label: str
    p: float
    n: int
    role: str
    checks: tuple[HypothesisCheck, ...]
    xi_sobolev_flag: bool | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"label": self.label, "p": self.p, "n": self.n, "role": self.role,
                "passed": self.passed, "xi_sobolev_flag": self.xi_sobolev_flag,
                "checks": [c.to_dict() for c in self.checks]}


def _measured_small_exponent(vals: Callable[[np.ndarray], np.ndarray]) -> float:
    xs = np.geomspace(1e-6, 1e-2, 41)
    v = np.maximum(np.abs(vals(xs)), np.abs(vals(-xs)))
    if np.all(v == 0):
        return math.inf
    if np.any(v == 0):
        # vanishes on part of the neighbourhood only: use the nonzero tail
        xs, v = xs[v > 0], v[v > 0]
        if xs.size < 2:
            return math.inf
    slopes = np.diff(np.log(v)) / np.diff(np.log(xs))
    return float(np.min(slopes))


def _measured_large_exponent(vals: Callable[[np.ndarray], np.ndarray]) -> float:
    xs = np.geomspace(1.0, 1e6, 121)
    v = np.maximum(np.abs(vals(xs)), np.abs(vals(-xs)))
    nz = v > 1e-300
    if not np.any(nz):
        return math.inf
    last = int(np.max(np.nonzero(nz)[0]))
    if last < xs.size - 1:
        return math.inf  # identically zero (or underflowed) beyond a finite radius
    tail = slice(xs.size - 21, xs.size)
    slopes = np.diff(np.log(v[tail])) / np.diff(np.log(xs[tail]))
    return float(-np.max(slopes))


def _weighted_integral(g: GeneratorFunction, order: int, weight_power: int, power: int) -> EstimatedValue | None:
    env = g.envelope(order)
    exponent = power * env.large_exponent - weight_power
    if exponent <= 1.0:
        return None
    f = lambda xi: (1 + np.abs(xi)) ** weight_power * np.abs(g.fourier_values(xi, order)) ** power  # noqa: E731
    if g.band is not None:
        lo, hi = g.band
        return integrate_line(f, support=(-hi, hi), breakpoints=[-lo, lo, *g.breakpoints],
                              rel_tol=1e-6, abs_tol=1e-14)
    big = DecayEnvelope(1.0, 1.0, 2.0**weight_power * env.c_large**power, exponent)
    return integrate_line(f, big, 1e-6, abs_tol=1e-14, breakpoints=g.breakpoints)


def check_hypotheses(g: GeneratorFunction, p: float, role: str, *, moment_tol: float = 1e-10) -> HypothesisReport:
    """Check the decay, Sobolev-integrability and moment hypotheses for a
    synthesizer or analyzer at exponent p."""
    if role not in (SYNTHESIZER, ANALYZER):
        raise ValueError(f"role must be {SYNTHESIZER!r} or {ANALYZER!r}")
    n = n_of_p(p)
    needed = n + 3
    if needed > g.max_order:
        raise OrderUnavailable(f"{g.label}: hypotheses need order {needed} > max_order {g.max_order}")
    checks: list[HypothesisCheck] = []
    dn = lambda xi: g.fourier_values(xi, n + 1)  # noqa: E731

    eps_small = _measured_small_exponent(dn)
    checks.append(HypothesisCheck("decay_small", eps_small > 0, eps_small,
                                  f"|ghat^({n + 1})| ~ |xi|^eps near 0, measured eps", eps_small))
    required = n + 1.5 if role == SYNTHESIZER else 2 * n + 2.5
    e_large = _measured_large_exponent(dn)
    env_exp = g.envelope(n + 1).large_exponent
    margin = min(e_large, env_exp) - required
    checks.append(HypothesisCheck("decay_large", margin > 0, margin,
                                  f"decay exponent beyond {required} (measured {e_large:g}, envelope {env_exp:g})",
                                  e_large))

    def sobolev(name: str, order: int, weight: int, power: int) -> None:
        try:
            est = _weighted_integral(g, order, weight, power)
        except HpDualError as exc:
            checks.append(HypothesisCheck(name, False, -math.inf, str(exc)))
            return
        env = g.envelope(order)
        margin = power * env.large_exponent - weight - 1.0
        if est is None:
            checks.append(HypothesisCheck(name, False, margin, "envelope not integrable"))
        else:
            checks.append(HypothesisCheck(name, math.isfinite(est.value) and margin > 0, margin,
                                          "finite weighted integral", est.value))

    if role == SYNTHESIZER:
        for m in range(n + 4):
            sobolev(f"W1_order{m}", m, 0, 1)
            sobolev(f"W2_order{m}", m, 0, 2)
    else:
        for m in range(n + 4):
            sobolev(f"W1_order{m}_weight{n + 1}", m, n + 1, 1)
        for m in range(n + 2):
            sobolev(f"W2_order{m}", m, 0, 2)
        for alpha in range(1, n + 2):
            for m in range(alpha + 3):
                sobolev(f"W2_order{m}_weight{2 * alpha}", m, 2 * alpha, 2)

    for beta in range(n + 1):
        mom = moment(g, beta)
        err = abs(mom.value) + mom.error_bound
        checks.append(HypothesisCheck(f"moment{beta}", err <= moment_tol, moment_tol - err,
                                      "vanishing moment", mom.value))

    flag = None
    if role == SYNTHESIZER and n + 2 <= g.max_order:
        flag = True
        for m in range(n + 3):
            try:
                est = _weighted_integral(g, m, 1, 1)
            except HpDualError:
                est = None
            if est is None or not math.isfinite(est.value):
                flag = False
    return HypothesisReport(g.label, p, n, role, tuple(checks), flag)
