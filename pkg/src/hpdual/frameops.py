"""Truncated analysis/synthesis operators on a uniform sample grid.

t(f) = {<f, phi_jk>},  s(c) = sum c_jk psi_jk,  U = s o t,  phi_jk(x) = A^(j/2) phi(A^j x - k).

Everything is discrete: inner products are rectangle sums on one common grid,
levels run over j_min..j_max and translations over |k| <= k_radius.  The
truncation reports say how much was cut off; they are empirical estimates,
not bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import GridMismatch, InvalidParameter, NoConvergence
from .generators import GeneratorFunction, GeneratorQuadruple


@dataclass(frozen=True)
class SampleGrid:
    """x_i = x0 + i dx, i = 0..n-1."""

    x0: float
    dx: float
    n: int

    def __post_init__(self) -> None:
        if not (self.dx > 0 and self.n > 0):
            raise InvalidParameter("sample grid needs dx > 0 and n > 0")

    def points(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def end(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "dx": self.dx, "n": self.n}


def effective_band(g: GeneratorFunction, rel: float = 1e-14) -> float:
    """Upper end of the band (or where |ghat| falls below rel * max)."""
    if g.band is not None:
        return float(g.band[1])
    xi = np.linspace(-64, 64, 16385)
    mag = np.abs(g.fourier_values(xi))
    big = xi[mag > rel * mag.max()] if mag.max() > 0 else np.array([1.0])
    return float(np.max(np.abs(big)))


@dataclass(frozen=True)
class DilationGrid:
    A: float = 2.0
    j_min: int = -2
    j_max: int = 2
    k_radius: int = 8
    sample: SampleGrid | None = None

    def __post_init__(self) -> None:
        if not self.A > 1:
            raise InvalidParameter(f"A={self.A} must exceed 1")
        if self.j_min > self.j_max:
            raise InvalidParameter("j_min must not exceed j_max")
        if self.k_radius < 1:
            raise InvalidParameter("k_radius must be positive")

    def levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def index(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.arange(-self.k_radius, self.k_radius + 1)
        j = np.repeat(np.arange(self.j_min, self.j_max + 1), ks.size)
        k = np.tile(ks, self.j_max - self.j_min + 1)
        return j, k

    def with_sample(self, *gens: GeneratorFunction, margin: float = 24.0,
                    oversample: float = 4.0) -> "DilationGrid":
        """Attach a default sample grid: dx a power of 2 below 1/(oversample * band * A^j_max),
        window covering every I_jk plus margin coarse-level units on each side."""
        if self.sample is not None:
            return self
        band = max(effective_band(g) for g in gens) if gens else 4.0 / 3.0
        dx = 2.0 ** math.floor(math.log2(1.0 / (oversample * band * self.A**self.j_max)))
        coarse = self.A ** (-self.j_min)
        half = (self.k_radius + 1 + margin) * coarse
        half = math.ceil(half / dx) * dx
        n = int(round(2 * half / dx)) + 1
        return DilationGrid(self.A, self.j_min, self.j_max, self.k_radius, SampleGrid(-half, dx, n))

    def expanded(self, levels: int = 1, translations: int = 0) -> "DilationGrid":
        return DilationGrid(self.A, self.j_min - levels, self.j_max + levels,
                            self.k_radius + translations, self.sample)

    def to_dict(self) -> dict:
        return {"A": self.A, "j_min": self.j_min, "j_max": self.j_max, "k_radius": self.k_radius,
                "sample": None if self.sample is None else self.sample.to_dict()}


@dataclass(frozen=True)
class SampledSignal:
    grid: SampleGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != (self.grid.n,):
            raise GridMismatch(f"{v.shape[0] if v.ndim else 0} values for a grid of {self.grid.n}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: SampleGrid, f: Callable[[np.ndarray], np.ndarray]) -> "SampledSignal":
        return cls(grid, np.asarray(f(grid.points())))

    @classmethod
    def zeros(cls, grid: SampleGrid) -> "SampledSignal":
        return cls(grid, np.zeros(grid.n))

    @property
    def x(self) -> np.ndarray:
        return self.grid.points()

    def _check(self, other: "SampledSignal") -> None:
        if other.grid != self.grid:
            raise GridMismatch("signals live on different sample grids")

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        self._check(other)
        return SampledSignal(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledSignal") -> "SampledSignal":
        self._check(other)
        return SampledSignal(self.grid, self.values - other.values)

    def __mul__(self, c) -> "SampledSignal":
        return SampledSignal(self.grid, c * self.values)

    __rmul__ = __mul__

    def inner(self, other: "SampledSignal") -> complex:
        self._check(other)
        return complex(np.sum(self.values * np.conj(other.values)) * self.grid.dx)

    def l2_norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def boundary_mass(self, fraction: float = 0.05) -> float:
        """Share of ||f||_2^2 carried by the outer `fraction` of the window on each side."""
        total = float(np.sum(np.abs(self.values) ** 2))
        if total == 0:
            return 0.0
        m = max(1, int(fraction * self.grid.n))
        edge = float(np.sum(np.abs(self.values[:m]) ** 2) + np.sum(np.abs(self.values[-m:]) ** 2))
        return edge / total

    def to_csv(self) -> str:
        rows = ["x,value"] + [f"{x:.17g},{v:.17g}" for x, v in zip(self.x, np.real(self.values))]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        v = self.values
        out = {"grid": self.grid.to_dict(), "re": np.real(v).tolist()}
        if np.iscomplexobj(v) and np.any(np.imag(v) != 0):
            out["im"] = np.imag(v).tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SampledSignal":
        grid = SampleGrid(**d["grid"])
        vals = np.asarray(d["re"], dtype=float)
        if "im" in d:
            vals = vals + 1j * np.asarray(d["im"], dtype=float)
        return cls(grid, vals)


@dataclass(frozen=True)
class CoefficientArray:
    """Finitely supported c_jk, stored per level as (k_start, values)."""

    A: float
    levels: dict[int, tuple[int, np.ndarray]] = field(default_factory=dict)

    @classmethod
    def from_entries(cls, A: float, entries: Iterable[tuple[int, int, complex]]) -> "CoefficientArray":
        by_level: dict[int, dict[int, complex]] = {}
        for j, k, v in entries:
            lvl = by_level.setdefault(int(j), {})
            lvl[int(k)] = lvl.get(int(k), 0) + v
        levels = {}
        for j, d in by_level.items():
            k0, k1 = min(d), max(d)
            vals = np.zeros(k1 - k0 + 1, dtype=complex)
            for k, v in d.items():
                vals[k - k0] = v
            levels[j] = (k0, vals)
        return cls(A, levels)

    @classmethod
    def on_grid(cls, grid: DilationGrid, values: np.ndarray) -> "CoefficientArray":
        nk = 2 * grid.k_radius + 1
        values = np.asarray(values, dtype=complex).reshape(-1, nk)
        return cls(grid.A, {j: (-grid.k_radius, values[i].copy()) for i, j in enumerate(grid.levels())})

    def entries(self) -> list[tuple[int, int, complex]]:
        out = []
        for j in sorted(self.levels):
            k0, vals = self.levels[j]
            out.extend((j, k0 + i, complex(v)) for i, v in enumerate(vals) if v != 0)
        return out

    def get(self, j: int, k: int) -> complex:
        if j not in self.levels:
            return 0j
        k0, vals = self.levels[j]
        i = k - k0
        return complex(vals[i]) if 0 <= i < vals.size else 0j

    def vector(self, grid: DilationGrid) -> np.ndarray:
        """Dense vector in grid order; raises GridMismatch if an entry is off the grid."""
        out = np.zeros((grid.j_max - grid.j_min + 1, 2 * grid.k_radius + 1), dtype=complex)
        for j, k, v in self.entries():
            if not (grid.j_min <= j <= grid.j_max and abs(k) <= grid.k_radius):
                raise GridMismatch(f"coefficient ({j}, {k}) outside the dilation grid")
            out[j - grid.j_min, k + grid.k_radius] = v
        return out.ravel()

    def __add__(self, other: "CoefficientArray") -> "CoefficientArray":
        return CoefficientArray.from_entries(self.A, self.entries() + other.entries())

    def __mul__(self, c) -> "CoefficientArray":
        return CoefficientArray(self.A, {j: (k0, c * v) for j, (k0, v) in self.levels.items()})

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(math.sqrt(sum(np.sum(np.abs(v) ** 2) for _, v in self.levels.values())))

    def to_dict(self) -> dict:
        return {"A": self.A, "entries": [[j, k, v.real, v.imag] for j, k, v in self.entries()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientArray":
        return cls.from_entries(float(d["A"]), [(int(e[0]), int(e[1]), complex(e[2], e[3] if len(e) > 3 else 0))
                                                for e in d["entries"]])


# --------------------------------------------------------------------------
# basis tables


def _basis(g: GeneratorFunction, grid: DilationGrid) -> tuple[np.ndarray, np.ndarray]:
    """Rows g_jk(x_i) for the grid index, with pointwise error estimates (cached on g)."""
    if grid.sample is None:
        raise GridMismatch("dilation grid has no sample grid; call with_sample first")
    key = ("frame-basis", grid.A, grid.j_min, grid.j_max, grid.k_radius, grid.sample)
    hit = g._cache.get(key)
    if hit is not None:
        return hit
    x = grid.sample.points()
    j, k = grid.index()
    scale = grid.A ** j.astype(float)
    args = scale[:, None] * x[None, :] - k[:, None]
    vals, errs = g.time_values(args)
    amp = np.sqrt(scale)[:, None]
    out = (amp * vals, amp * errs)
    g._cache[key] = out
    return out


def _pair(op) -> tuple[GeneratorFunction, GeneratorFunction]:
    if isinstance(op, GeneratorQuadruple):
        return op.psi, op.phi
    psi, phi = op
    return psi, phi


def _prepared(grid: DilationGrid, f: SampledSignal | None, *gens: GeneratorFunction) -> DilationGrid:
    grid = grid.with_sample(*gens) if grid.sample is None and f is None else grid
    if f is not None:
        if grid.sample is None:
            grid = DilationGrid(grid.A, grid.j_min, grid.j_max, grid.k_radius, f.grid)
        elif f.grid != grid.sample:
            raise GridMismatch("signal grid differs from the dilation grid's sample grid")
    return grid


def analyze(phi: GeneratorFunction, grid: DilationGrid, f: SampledSignal) -> CoefficientArray:
    """c_jk = dx * sum_i f(x_i) conj(phi_jk(x_i))."""
    grid = _prepared(grid, f, phi)
    rows, _ = _basis(phi, grid)
    c = (np.conj(rows) @ f.values) * grid.sample.dx
    return CoefficientArray.on_grid(grid, c)


def synthesize(psi: GeneratorFunction, grid: DilationGrid, c: CoefficientArray) -> SampledSignal:
    grid = _prepared(grid, None, psi)
    rows, _ = _basis(psi, grid)
    vec = c.vector(grid)
    vals = vec @ rows
    if not np.iscomplexobj(rows) and np.all(np.imag(vec) == 0):
        vals = np.real(vals)
    return SampledSignal(grid.sample, vals)


@dataclass(frozen=True)
class TruncationReport:
    """Empirical truncation diagnostics for one application of U (relative to ||f||_2)."""

    boundary_mass: float
    edge_translation: float
    omitted_levels: float
    quadrature: float

    @property
    def budget(self) -> float:
        return self.edge_translation + self.omitted_levels + self.quadrature + math.sqrt(self.boundary_mass)

    def to_dict(self) -> dict:
        return {"boundary_mass": self.boundary_mass, "edge_translation": self.edge_translation,
                "omitted_levels": self.omitted_levels, "quadrature": self.quadrature,
                "budget": self.budget, "kind": "empirical"}


def _truncation(psi, phi, grid: DilationGrid, f: SampledSignal, c: CoefficientArray) -> TruncationReport:
    norm = f.l2_norm()
    if norm == 0:
        return TruncationReport(0.0, 0.0, 0.0, 0.0)
    psi_norm = float(np.max(np.sqrt(np.sum(np.abs(_basis(psi, grid)[0]) ** 2, axis=1) * grid.sample.dx)))
    vec = c.vector(grid).reshape(-1, 2 * grid.k_radius + 1)
    edge = math.sqrt(float(np.sum(np.abs(vec[:, [0, -1]]) ** 2))) * psi_norm / norm
    outer = DilationGrid(grid.A, grid.j_min - 1, grid.j_min - 1, grid.k_radius, grid.sample)
    upper = DilationGrid(grid.A, grid.j_max + 1, grid.j_max + 1, grid.k_radius, grid.sample)
    omitted = math.sqrt(sum(float(np.sum(np.abs(_analysis_vector(phi, g, f)) ** 2)) for g in (outer, upper)))
    _, perr = _basis(phi, grid)
    quad = float(np.max(perr @ np.abs(f.values))) * grid.sample.dx * math.sqrt(vec.size) * psi_norm / norm
    return TruncationReport(f.boundary_mass(), edge, omitted * psi_norm / norm, quad)


def _analysis_vector(phi, grid: DilationGrid, f: SampledSignal) -> np.ndarray:
    rows, _ = _basis(phi, grid)
    return (np.conj(rows) @ f.values) * grid.sample.dx


def apply_U(op, grid: DilationGrid, f: SampledSignal, *, report: bool = False):
    """U f = s(t(f)); with report=True also returns a TruncationReport."""
    psi, phi = _pair(op)
    grid = _prepared(grid, f, psi, phi)
    c = analyze(phi, grid, f)
    out = synthesize(psi, grid, c)
    if report:
        return out, _truncation(psi, phi, grid, f, c)
    return out


def operator_matrix(op, grid: DilationGrid) -> np.ndarray:
    """Dense matrix of the truncated U on the sample grid (small grids only)."""
    psi, phi = _pair(op)
    grid = _prepared(grid, None, psi, phi)
    rp, _ = _basis(psi, grid)
    rf, _ = _basis(phi, grid)
    return rp.T @ np.conj(rf) * grid.sample.dx


# --------------------------------------------------------------------------
# Neumann inversion and expansion


@dataclass(frozen=True)
class NeumannResult:
    u: SampledSignal
    iterations: int
    residuals: tuple[float, ...]

    @property
    def ratios(self) -> tuple[float, ...]:
        r = self.residuals
        return tuple(b / a for a, b in zip(r[:-1], r[1:]) if a > 0)

    @property
    def observed_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "residuals": list(self.residuals),
                "ratios": list(self.ratios), "norm": "discrete L2"}


def neumann_invert(operator: Callable[[SampledSignal], SampledSignal], f: SampledSignal,
                   tol: float = 1e-10, max_iter: int = 200) -> NeumannResult:
    """u <- u + (f - U u) from u_0 = f until ||f - U u||_2 <= tol ||f||_2.

    residuals[i] is the relative residual after i + 1 applications of U."""
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    fn = f.l2_norm()
    u = f
    if fn == 0:
        return NeumannResult(u, 0, (0.0,))
    history: list[float] = []
    for it in range(1, max_iter + 1):
        r = f - operator(u)
        rel = r.l2_norm() / fn
        history.append(rel)
        if rel <= tol:
            return NeumannResult(u, it, tuple(history))
        u = u + r
    ratios = [b / a for a, b in zip(history[:-1], history[1:]) if a > 0]
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {history[-1]:.3e})",
                        observed_ratio=ratios[-1] if ratios else math.nan)


@dataclass(frozen=True)
class Expansion:
    coefficients: CoefficientArray
    reconstruction: SampledSignal
    relative_error: float
    seqnorm: float
    neumann: NeumannResult
    truncation: TruncationReport

    def to_dict(self) -> dict:
        return {"relative_error": self.relative_error, "f02p_seqnorm": self.seqnorm,
                "neumann": self.neumann.to_dict(), "truncation": self.truncation.to_dict(),
                "coefficients": self.coefficients.to_dict()}


def expand(op, grid: DilationGrid, f: SampledSignal, *, p: float = 1.0, tol: float = 1e-10,
           max_iter: int = 200) -> Expansion:
    """c = t(U^{-1} f) and recon = s(c) = U U^{-1} f."""
    psi, phi = _pair(op)
    grid = _prepared(grid, f, psi, phi)
    res = neumann_invert(lambda g: apply_U((psi, phi), grid, g), f, tol, max_iter)
    c = analyze(phi, grid, res.u)
    recon = synthesize(psi, grid, c)
    fn = f.l2_norm()
    err = (recon - f).l2_norm() / fn if fn > 0 else 0.0
    return Expansion(c, recon, err, f02p_seqnorm(c, p, grid.A), res, _truncation(psi, phi, grid, f, c))


# --------------------------------------------------------------------------
# sequence and weighted norms


def f02p_seqnorm(c: CoefficientArray, p: float, A: float | None = None) -> float:
    """|| (sum |c_jk|^2 A^j chi_{I_jk})^(1/2) ||_{L^p}, I_jk = [A^-j k, A^-j (k+1)),
    computed exactly on the partition generated by all interval endpoints."""
    if not 0 < p <= 1:
        raise InvalidParameter(f"p={p} outside (0, 1]")
    A = c.A if A is None else A
    levels = [(j, k0, np.abs(v) ** 2 * A**j) for j, (k0, v) in c.levels.items() if np.any(v != 0)]
    if not levels:
        return 0.0
    ends = [A ** (-float(j)) * (k0 + np.arange(w.size + 1)) for j, k0, w in levels]
    pts = np.unique(np.concatenate(ends))
    mid = 0.5 * (pts[:-1] + pts[1:])
    # each level covers a cell with at most one interval, so the sum has no cancellation
    level = np.zeros(mid.size)
    for j, k0, w in levels:
        idx = np.floor(A ** float(j) * mid).astype(np.int64) - k0
        ok = (idx >= 0) & (idx < w.size)
        level[ok] += w[idx[ok]]
    return float(np.sum(np.diff(pts) * level ** (p / 2)) ** (1 / p))


def weighted_seqnorm(c: CoefficientArray, A: float | None, n: int) -> float:
    """(sum (1 + A^(-2j(n+1)) (1 + k^(2(n+1)))) |c_jk|^2)^(1/2)."""
    A = c.A if A is None else A
    total = 0.0
    for j, k, v in c.entries():
        total += (1 + A ** (-2 * j * (n + 1)) * (1 + float(k) ** (2 * (n + 1)))) * abs(v) ** 2
    return math.sqrt(total)


def k_space_norm(f: SampledSignal, n: int) -> float:
    """Rectangle rule for int (1 + x^(2n+2)) |f|^2 (no square root)."""
    x = f.x
    return float(np.sum((1 + x ** (2 * n + 2)) * np.abs(f.values) ** 2) * f.grid.dx)


@dataclass(frozen=True)
class RatioReport:
    label: str
    analysis_ratio: float
    synthesis_ratio: float

    def to_dict(self) -> dict:
        return {"label": self.label, "analysis_ratio": self.analysis_ratio,
                "synthesis_ratio": self.synthesis_ratio, "kind": "report-only"}


def ratio_reports(op, grid: DilationGrid, corpus: Sequence[tuple[str, SampledSignal]], n: int) -> list[RatioReport]:
    """||t f||_l / ||f||_K and ||s c||_K / ||c||_l with c = t f, for each corpus signal."""
    psi, phi = _pair(op)
    out = []
    for label, f in corpus:
        g = _prepared(grid, f, psi, phi)
        c = analyze(phi, g, f)
        kf = math.sqrt(k_space_norm(f, n))
        lc = weighted_seqnorm(c, g.A, n)
        ks = math.sqrt(k_space_norm(synthesize(psi, g, c), n))
        out.append(RatioReport(label, lc / kf if kf else math.nan, ks / lc if lc else math.nan))
    return out


# --------------------------------------------------------------------------
# L2 operator-norm probe


@dataclass(frozen=True)
class NormProbe:
    estimate: float
    discrete_norm: float
    probe_ratios: tuple[float, ...]
    grid: DilationGrid

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "discrete_norm": self.discrete_norm,
                "probe_ratios": list(self.probe_ratios), "grid": self.grid.to_dict(),
                "kind": "empirical"}


def l2_norm_probe(syn: GeneratorFunction, ana: GeneratorFunction, *, grid: DilationGrid | None = None,
                  probes: Sequence[SampledSignal] | None = None, A: float = 2.0) -> NormProbe:
    """Spectral norm of the truncated discrete U_{syn,ana}, plus Rayleigh ratios on probe signals.

    This is an estimate of ||U||_{L2 -> L2}, not a bound: the infinite operator
    can be larger than any truncation."""
    grid = (grid or DilationGrid(A=A)).with_sample(syn, ana)
    rp, _ = _basis(syn, grid)
    rf, _ = _basis(ana, grid)
    # U = rp^T conj(rf) dx; with conj(rf)^H = Q R, ||U|| = ||rp^T R^H||
    q, r = np.linalg.qr(rf.T * grid.sample.dx)
    small = rp.T @ np.conj(r).T
    disc = float(np.linalg.svd(small, compute_uv=False)[0]) if small.size else 0.0
    ratios = []
    for f in probes or ():
        fn = f.l2_norm()
        if fn > 0:
            ratios.append(apply_U((syn, ana), grid, f).l2_norm() / fn)
    return NormProbe(max([disc, *ratios]), disc, tuple(ratios), grid)
