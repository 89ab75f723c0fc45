"""Command-line entry point: ``hpdual <command> [--config PATH] [--out PATH] ...``.

Exit codes: 0 success or certified, 1 not certified (or a check failed),
2 configuration or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from .atoms import hp_atomic_bound, molecule_decompose, verify_appendix_c
from .czkernel import check_kernel_inputs, cz_constant, cz_from_values, random_kernel_grid, verify_kernel_bounds
from .errors import ConfigError, HpDualError
from .frameops import (
    CoefficientArray,
    DilationGrid,
    SampledSignal,
    apply_U,
    expand,
    neumann_invert,
    synthesize,
)
from .generators import GeneratorQuadruple, load_generator, n_of_p
from .hardy import (
    HardyParams,
    certify,
    certify_from_constants,
    closed_form_norm_bound_n0,
    constants_c1_c4,
    delta_of_b,
    mp_bound,
)

COMMANDS = ("constants", "certify", "kernel-check", "atoms-check", "apply", "invert", "expand", "report")

# Mexican-hat example with external constants (analyzer equal to its exact dual)
REFERENCE = {
    "U": 0.00026,
    "sigma": [0.000045, 0.00022],
    "tau": [0.00086, 0.036],
    "A": 2.0,
    "calG": 1.0,
    "n": 0,
    "zeta": 5.0,
    "b": 250.0,
    "p": 0.5,
    "C_stated": 0.022,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: Mapping[str, Any] = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", field="command")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}", field="format")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"{self.tol} must be positive", field="tol")
        if "p" in self.params:
            p = _num(self.params, "p")
            if not 0 < p <= 1:
                raise ConfigError(f"{p} outside (0, 1]", field="p")
        if "A" in self.params and not _num(self.params, "A") > 1:
            raise ConfigError("dilation must exceed 1", field="A")


def _num(params: Mapping, key: str, default: float | None = None) -> float:
    if key not in params:
        if default is None:
            raise ConfigError("required", field=key)
        return default
    try:
        v = float(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a number: {params[key]!r}", field=key) from exc
    if not math.isfinite(v):
        raise ConfigError("must be finite", field=key)
    return v


def _int(params: Mapping, key: str, default: int) -> int:
    v = params.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"not an integer: {v!r}", field=key)
    return int(v)


def _gen(params: Mapping, key: str):
    if key not in params:
        raise ConfigError("generator config required", field=key)
    return load_generator(params[key])


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings, tuples to lists."""
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _flatten(obj, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, Mapping):
        out = []
        for k in sorted(obj):
            out += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list):
        out = []
        for i, v in enumerate(obj):
            out += _flatten(v, f"{prefix}[{i}]")
        return out
    return [(prefix, obj)]


def _csv(rows: list[Mapping], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


@dataclass
class Outcome:
    report: dict
    code: int = 0
    table: tuple[list[Mapping], list[str]] | None = None


# --------------------------------------------------------------------------
# pipelines


def _reference_constants(p: float = REFERENCE["p"]) -> dict:
    cz = cz_from_values(REFERENCE["sigma"], REFERENCE["tau"], REFERENCE["A"], provenance="external")
    params = HardyParams.make(p, REFERENCE["b"], zeta=REFERENCE["zeta"], n=REFERENCE["n"], calG=REFERENCE["calG"])
    return {"cz": cz, "hardy": constants_c1_c4(params), "params": params}


def run_constants(cfg: RunConfig) -> Outcome:
    prm = cfg.params
    p = _num(prm, "p", REFERENCE["p"])
    A = _num(prm, "A", REFERENCE["A"])
    if "psi" in prm or "phi" in prm:
        cz = cz_constant(_gen(prm, "psi"), _gen(prm, "phi"), p, A, cfg.tol)
    else:
        sig = prm.get("sigma", REFERENCE["sigma"])
        tau = prm.get("tau", REFERENCE["tau"])
        try:
            cz = cz_from_values(sig, tau, A, provenance="external")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field="sigma") from exc
    n = _int(prm, "n", n_of_p(p) if "n" in prm or "psi" in prm else REFERENCE["n"])
    b = _num(prm, "b", REFERENCE["b"])
    calG = _num(prm, "calG", REFERENCE["calG"])
    zeta = _num(prm, "zeta", max(REFERENCE["zeta"], delta_of_b(b, n)))
    report = {"cz": cz.to_dict(), "delta": delta_of_b(b, n), "b": b, "zeta": zeta, "p": p, "n": n}
    report["hardy"] = constants_c1_c4(HardyParams.make(p, b, zeta=zeta, n=n, calG=calG)).to_dict()
    if n == 0 and ("U" in prm or "psi" not in prm):
        u = _num(prm, "U", REFERENCE["U"])
        report["norm_bound_display"] = closed_form_norm_bound_n0(u, cz.cz_constant.value, p, zeta, b)
    report["budgets"] = {"rel_tol": cfg.tol}
    return Outcome(report)


def run_certify(cfg: RunConfig) -> Outcome:
    prm = cfg.params
    p = _num(prm, "p")
    b_grid = prm.get("b_grid")
    if b_grid is not None and not (isinstance(b_grid, list) and all(isinstance(v, (int, float)) for v in b_grid)):
        raise ConfigError("must be a list of numbers", field="b_grid")
    if "quadruple" in prm:
        q = prm["quadruple"]
        if not isinstance(q, Mapping):
            raise ConfigError("must be an object", field="quadruple")
        quad = GeneratorQuadruple(_gen(q, "psi"), _gen(q, "phi"), _gen(q, "psi_star"), _gen(q, "phi_star"),
                                  bool(q.get("exact_dual_declared", False)), _num(prm, "A", 2.0))
        rep = certify(quad, p, b_grid=b_grid, rel_tol=cfg.tol)
    else:
        inputs = prm.get("inputs")
        if not isinstance(inputs, Mapping):
            raise ConfigError("expected an object with U1, C1 (and optionally U2, C2)", field="inputs")
        n = prm.get("n")
        calG = prm.get("calG")
        n = None if n is None else _int(prm, "n", 0)
        calG = None if calG is None else _num(prm, "calG")
        zeta = prm.get("zeta")
        eta = prm.get("eta")
        zeta = None if zeta is None else _num(prm, "zeta")
        eta = None if eta is None else _num(prm, "eta")
        if "b" in prm:
            rep = mp_bound(inputs, p, n, calG, _num(prm, "b"), zeta=zeta, eta=eta)
        else:
            rep = certify_from_constants(inputs, p, n, calG, b_grid, zeta=zeta, eta=eta)
    report = rep.to_dict()
    report["budgets"] = {**report.get("budgets", {}), "rel_tol": cfg.tol}
    return Outcome(report, 0 if rep.certified else 1)


def run_kernel_check(cfg: RunConfig) -> Outcome:
    prm = cfg.params
    psi, phi = _gen(prm, "psi"), _gen(prm, "phi")
    p, A = _num(prm, "p"), _num(prm, "A", 2.0)
    check_kernel_inputs(psi, phi, p)
    grid = random_kernel_grid(_int(prm, "n_points", 50), seed=cfg.seed, radius=_num(prm, "radius", 4.0))
    rep = verify_kernel_bounds(psi, phi, p, A, grid)
    d = rep.to_dict()
    d["seed"] = cfg.seed
    cols = ["x", "y", "alpha", "lhs", "bound", "margin", "budget", "pass", "kernel"]
    return Outcome(d, 0 if rep.passed else 1, (d["rows"], cols))


def _molecule(cfg: Mapping, p: float) -> Callable[[np.ndarray], np.ndarray]:
    kind = cfg.get("kind", "gaussian_derivative")
    if kind == "zero":
        return lambda x: np.zeros(np.shape(x))
    if kind != "gaussian_derivative":
        raise ConfigError(f"unknown molecule kind {kind!r}", field="molecule.kind")
    order = _int(cfg, "order", n_of_p(p) + 1)
    if order < n_of_p(p) + 1:
        raise ConfigError("order must exceed N_p so that the moments vanish", field="molecule.order")
    width = _num(cfg, "width", 0.3)
    center = _num(cfg, "center", 0.0)
    coef = np.zeros(order + 1)
    coef[-1] = 1.0

    def m(x):
        t = (np.asarray(x, dtype=float) - center) / width
        return np.polynomial.hermite_e.hermeval(t, coef) * np.exp(-t * t / 2)

    return m


def run_atoms_check(cfg: RunConfig) -> Outcome:
    prm = cfg.params
    p, b = _num(prm, "p"), _num(prm, "b", 10.0)
    n = n_of_p(p)
    zeta = _num(prm, "zeta", max(2.0, delta_of_b(b, n)))
    interval = prm.get("interval", [-0.5, 0.5])
    if not (isinstance(interval, list) and len(interval) == 2):
        raise ConfigError("must be [lo, hi]", field="interval")
    mol = prm.get("molecule", {})
    if not isinstance(mol, Mapping):
        raise ConfigError("must be an object", field="molecule")
    cm = prm.get("C_M")
    dec = molecule_decompose(_molecule(mol, p), (float(interval[0]), float(interval[1])), p, b, zeta,
                             C_M=None if cm is None else _num(prm, "C_M"), tail_tol=min(cfg.tol, 1e-10))
    app = verify_appendix_c(dec)
    bound = hp_atomic_bound(dec)
    rows = []
    for pc in dec.pieces:
        lb = dec.lambda_bound(pc.k)
        c1 = (1 + dec.system.calG * (n + 1)) * pc.norm_Mk
        ok = all(c.passed for c in app.checks if c.k == pc.k and c.alpha is None)
        rows.append({"k": pc.k, "norm_Mk": pc.norm_Mk, "norm_Mk_minus_Pk": pc.norm_Mk_minus_Pk,
                     "lambda_k": pc.lambda_k, "bound": lb, "lemma_bound": c1, "pass": ok})
    report = {
        "p": p, "b": b, "zeta": zeta, "interval": interval, "k_max": dec.k_max, "C_M": dec.C_M,
        "C_M_fitted": dec.C_M_fitted, "l2_norm": dec.l2_norm_M, "rows": rows,
        "tail_terms": [{"alpha": t.alpha, "k": t.k, "N": t.N_alpha_k, "N_error": t.N_error, "mu": t.mu_alpha_k,
                        "mu_bound": dec.mu_bound(t.alpha, t.k)} for t in dec.tail_terms],
        "appendix_checks_passed": app.passed,
        "failing": [{"name": c.name, "k": c.k, "alpha": c.alpha, "lhs": c.lhs, "rhs": c.rhs} for c in app.failing()],
        "atomic_bound": bound.to_dict(),
        "budgets": {"tail_tol": min(cfg.tol, 1e-10), "lambda_tail": dec.lambda_tail_bound,
                    "nmu_tail": dec.nmu_tail_bound},
        "kind": {"lambda_mu": "computed", "bounds": "rigorous given C_M", "C_M": "fitted on samples"},
    }
    cols = ["k", "norm_Mk", "norm_Mk_minus_Pk", "lambda_k", "bound", "pass"]
    return Outcome(report, 0 if app.passed and bound.passed else 1, (rows, cols))


def _frame_setup(prm: Mapping):
    if "quadruple" in prm:
        q = prm["quadruple"]
        psi, phi = _gen(q, "psi"), _gen(q, "phi")
    else:
        psi, phi = _gen(prm, "psi"), _gen(prm, "phi")
    g = prm.get("grid", {})
    if not isinstance(g, Mapping):
        raise ConfigError("must be an object", field="grid")
    grid = DilationGrid(_num(g, "A", _num(prm, "A", 2.0)), _int(g, "j_min", -2), _int(g, "j_max", 2),
                        _int(g, "k_radius", 8)).with_sample(psi, phi, margin=_num(g, "margin", 24.0))
    sig = prm.get("signal")
    if not isinstance(sig, Mapping):
        raise ConfigError("signal config required", field="signal")
    kind = sig.get("kind", "coefficients")
    if kind == "coefficients":
        try:
            c = CoefficientArray.from_dict({"A": grid.A, "entries": sig["entries"]})
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ConfigError(f"bad entries: {exc}", field="signal.entries") from exc
        f = synthesize(psi, grid, c)
    elif kind == "gaussian_derivative":
        f = SampledSignal.from_function(grid.sample, _molecule(sig, 1.0))
    elif kind == "samples":
        try:
            f = SampledSignal.from_dict(sig)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad samples: {exc}", field="signal") from exc
    else:
        raise ConfigError(f"unknown signal kind {kind!r}", field="signal.kind")
    return psi, phi, grid, f


def _signal_outcome(sig: SampledSignal, report: dict) -> Outcome:
    rows = [{"x": float(x), "value": float(v)} for x, v in zip(sig.x, np.real(sig.values))]
    report["signal"] = sig.to_dict()
    return Outcome(report, 0, (rows, ["x", "value"]))


def run_apply(cfg: RunConfig) -> Outcome:
    psi, phi, grid, f = _frame_setup(cfg.params)
    out, trunc = apply_U((psi, phi), grid, f, report=True)
    fn = f.l2_norm()
    rel = (out - f).l2_norm() / fn if fn else 0.0
    return _signal_outcome(out, {"grid": grid.to_dict(), "relative_change": rel, "budgets": trunc.to_dict()})


def run_invert(cfg: RunConfig) -> Outcome:
    psi, phi, grid, f = _frame_setup(cfg.params)
    max_iter = _int(cfg.params, "max_iter", 200)
    res = neumann_invert(lambda g: apply_U((psi, phi), grid, g), f, cfg.tol, max_iter)
    return _signal_outcome(res.u, {"grid": grid.to_dict(), "neumann": res.to_dict(),
                                   "budgets": {"tol": cfg.tol, "max_iter": max_iter}})


def run_expand(cfg: RunConfig) -> Outcome:
    psi, phi, grid, f = _frame_setup(cfg.params)
    p = _num(cfg.params, "p", 1.0)
    ex = expand((psi, phi), grid, f, p=p, tol=cfg.tol, max_iter=_int(cfg.params, "max_iter", 200))
    report = {"grid": grid.to_dict(), **ex.to_dict(), "budgets": {"tol": cfg.tol, **ex.truncation.to_dict()}}
    rows = [{"j": j, "k": k, "re": v.real, "im": v.imag} for j, k, v in ex.coefficients.entries()]
    return Outcome(report, 0, (rows, ["j", "k", "re", "im"]))


def run_report(cfg: RunConfig) -> Outcome:
    """Constants table and certificate for the Mexican-hat example with external constants."""
    ref = _reference_constants()
    cz = ref["cz"].cz_constant.value
    p, b, zeta = REFERENCE["p"], REFERENCE["b"], REFERENCE["zeta"]
    inputs = {"U1": REFERENCE["U"], "C1": cz, "provenance": {"U1": "external", "C1": "external"}}
    fixed = mp_bound(inputs, p, REFERENCE["n"], REFERENCE["calG"], b, zeta=zeta)
    free = mp_bound(inputs, p, REFERENCE["n"], REFERENCE["calG"], b)
    per_p = []
    for q in (0.51, 0.6, 0.75, 0.9, 1.0):
        rep = certify_from_constants(inputs, q, 0, REFERENCE["calG"])
        per_p.append({"p": q, "b": rep.b, "mp_bound": rep.mp_bound, "certified": rep.certified,
                      "display": closed_form_norm_bound_n0(REFERENCE["U"], cz, q, zeta, b)})
    report = {
        "inputs": {k: REFERENCE[k] for k in ("U", "sigma", "tau", "A", "calG", "zeta", "b", "p")},
        "constants": {"cz": ref["cz"].to_dict(), "delta": delta_of_b(b, 0), "hardy": ref["hardy"].to_dict()},
        "display_bound": closed_form_norm_bound_n0(REFERENCE["U"], cz, p, zeta, b),
        "display_bound_stated_C": closed_form_norm_bound_n0(REFERENCE["U"], REFERENCE["C_stated"], p, zeta, b),
        "certificate_fixed_zeta": fixed.to_dict(),
        "certificate_free_zeta": free.to_dict(),
        "per_p": per_p,
        "certified": fixed.certified and free.certified,
        "kind": {"U, sigma, tau": "external", "everything else": "computed from the external values"},
        "budgets": {"minimizer_tol": 1e-9},
    }
    return Outcome(report, 0 if report["certified"] else 1)


PIPELINES: dict[str, Callable[[RunConfig], Outcome]] = {
    "constants": run_constants, "certify": run_certify, "kernel-check": run_kernel_check,
    "atoms-check": run_atoms_check, "apply": run_apply, "invert": run_invert, "expand": run_expand,
    "report": run_report,
}


def render(outcome: Outcome, fmt: str, command: str) -> str:
    if fmt == "json":
        doc = {"command": command, "version": __version__, "exit_code": outcome.code, **outcome.report}
        return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    if outcome.table is not None:
        rows, cols = outcome.table
        return _csv(_clean(rows), cols)
    pairs = _flatten(_clean(outcome.report))
    return _csv([{"key": k, "value": v} for k, v in pairs], ["key", "value"])


def run(config: RunConfig) -> int:
    outcome = PIPELINES[config.command](config)
    text = render(outcome, config.format, config.command)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return outcome.code


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", field="config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}", field="config") from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", field="config")
    return data


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hpdual", description="Certify approximate wavelet duals on H^p.")
    ap.add_argument("--version", action="version", version=f"hpdual {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--tol", type=float, default=None, help="relative tolerance")
        sp.add_argument("--seed", type=int, default=None, help="seed for random point sets")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = load_config(args.config)
        tol = args.tol if args.tol is not None else params.get("tol", 1e-9)
        seed = args.seed if args.seed is not None else params.get("seed", 0)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)):
            raise ConfigError(f"not a number: {tol!r}", field="tol")
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"not an integer: {seed!r}", field="seed")
        cfg = RunConfig(args.command, params, args.out, args.format, float(tol), seed)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HpDualError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
