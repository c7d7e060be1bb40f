"""Scenario-driven command line: thresholds, profiles, barriers, envelopes, decay fits.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad config, 3 numeric
failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, HessQuotError, NumericError

log = logging.getLogger("hessquot")

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


# ---------------------------------------------------------------- json helpers


def _clean(obj):
    """Plain JSON types; non-finite floats become strings so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _num(v):
    if isinstance(v, str) and v in ("inf", "-inf"):
        return float(v)
    return float(v)


# ---------------------------------------------------------------- scenario parsing


def bundled_names():
    root = resources.files("hessquot") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(ref):
    """Read a scenario from a path, or from the bundled set by name."""
    path = Path(ref)
    if not path.exists() and not ref.endswith(".json"):
        bundled = resources.files("hessquot") / "scenarios" / f"{ref}.json"
        if bundled.is_file():
            return json.loads(bundled.read_text()), f"<bundled:{ref}>"
        raise ConfigError(ref, f"no such file or bundled scenario (bundled: {', '.join(bundled_names())})")
    text = path.read_text()
    try:
        return json.loads(text), str(path)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None


def _require(cfg, key, where, kind=None):
    if key not in cfg:
        raise ConfigError(f"{where}.{key}", "missing")
    v = cfg[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"{where}.{key}", f"expected {kind.__name__ if isinstance(kind, type) else kind}")
    return v


def parse_params(obj, where):
    from .radial import HqParams

    if not isinstance(obj, dict):
        raise ConfigError(where, "expected an object with n, k, l, m")
    try:
        n, k, l = (int(_require(obj, key, where)) for key in ("n", "k", "l"))
        m = int(obj.get("m", k))
        return HqParams(n, k, l, m)
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def parse_envelope(obj, where):
    from .profiles import envelope_build

    if not isinstance(obj, dict):
        raise ConfigError(where, "expected an object with g0, C1, beta, theta0")
    g0 = _require(obj, "g0", where, dict)
    if g0.get("kind") not in ("constant", "rational", "tabulated"):
        raise ConfigError(f"{where}.g0.kind", "one of constant, rational, tabulated")
    beta = float(_require(obj, "beta", where))
    if not beta > 2:
        raise ConfigError(f"{where}.beta", f"beta={beta} violates the decay hypothesis beta > 2")
    C1 = float(obj.get("C1", 0.0))
    if C1 < 0:
        raise ConfigError(f"{where}.C1", "must be >= 0")
    theta0 = float(obj.get("theta0", 1.0))
    if theta0 <= 0:
        raise ConfigError(f"{where}.theta0", "must be positive")
    try:
        return envelope_build(g0, C1, beta, theta0)
    except (ValueError, KeyError) as exc:
        raise ConfigError(where, str(exc)) from None


def parse_spectrum(obj, params, where):
    from .symmetric import Spectrum

    if obj == "isotropic":
        return Spectrum.isotropic(params.n, params.a_hat)
    if isinstance(obj, dict) and "shape" in obj:
        shape = obj["shape"]
        if len(shape) != params.n:
            raise ConfigError(f"{where}.shape", f"needs {params.n} entries")
        try:
            return Spectrum.normalized(tuple(float(v) for v in shape), params.k, params.l)
        except (ValueError, NumericError) as exc:
            raise ConfigError(f"{where}.shape", str(exc)) from None
    if isinstance(obj, list):
        if len(obj) != params.n:
            raise ConfigError(where, f"needs {params.n} entries")
        return Spectrum(tuple(float(v) for v in obj))
    raise ConfigError(where, 'expected "isotropic", a list of entries, or {"shape": [...]}')


class Scenario:
    """Validated config: the shared problem data plus the list of checks to run."""

    def __init__(self, cfg, source="<config>", seed=None, tol_scale=1.0):
        if not isinstance(cfg, dict):
            raise ConfigError(source, "top level must be an object")
        if cfg.get("schema") != SCHEMA:
            raise ConfigError("schema", f"expected {SCHEMA}, got {cfg.get('schema')!r}")
        self.cfg = cfg
        self.id = str(_require(cfg, "id", "$", str))
        self.seed = int(cfg.get("seed", 0) if seed is None else seed)
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must fit in 64 unsigned bits")
        if not tol_scale > 0:
            raise ConfigError("--tol-scale", "must be positive")
        self.tol_scale = float(tol_scale)
        self.params = parse_params(cfg["params"], "params") if "params" in cfg else None
        self.envelope = parse_envelope(cfg["envelope"], "envelope") if "envelope" in cfg else None
        self.spectrum = None
        if "spectrum" in cfg:
            if self.params is None:
                raise ConfigError("spectrum", "needs params")
            self.spectrum = parse_spectrum(cfg["spectrum"], self.params, "spectrum")
        self.barrier = cfg.get("barrier")
        checks = _require(cfg, "checks", "$", list)
        for i, chk in enumerate(checks):
            where = f"checks[{i}]"
            if not isinstance(chk, dict) or "name" not in chk:
                raise ConfigError(where, "each check needs a name")
            if chk["name"] not in CHECKS:
                raise ConfigError(f"{where}.name", f"unknown check {chk['name']!r}; known: {', '.join(sorted(CHECKS))}")
            for key, val in chk.items():
                if key.startswith("tol") and not (isinstance(val, (int, float)) and val > 0):
                    raise ConfigError(f"{where}.{key}", "tolerances must be positive numbers")
            needs = CHECKS[chk["name"]].needs
            for attr in needs:
                if getattr(self, attr) is None and attr not in chk:
                    raise ConfigError(where, f"check {chk['name']!r} needs {attr}")
        self.checks = checks

    def tol(self, chk, key, default):
        return float(chk.get(key, default)) * self.tol_scale

    def params_for(self, chk, where):
        return parse_params(chk["params"], f"{where}.params") if "params" in chk else self.params

    def barrier_spec(self, chk=None):
        from .barriers import BarrierSpec

        b = dict(self.barrier or {})
        if chk:
            b.update(chk.get("barrier", {}))
        allowed = {"r_omega", "r0", "R0", "phi", "eta", "delta", "tau", "Xi", "r_max", "n_boundary", "n_samples"}
        extra = set(b) - allowed
        if extra:
            raise ConfigError("barrier", f"unknown fields {sorted(extra)}")
        return BarrierSpec(A=self.spectrum, params=self.params, envelope=self.envelope, seed=self.seed % 2**31, **b)

    def tb(self):
        from .symmetric import t_bounds

        a = self.spectrum.arr
        return (t_bounds(a, self.params.k).t_upper, t_bounds(a, self.params.l).t_lower)


# ---------------------------------------------------------------- checks


class Context:
    """What a check sees: the scenario, an output directory and an artifact list."""

    def __init__(self, scenario, out_dir):
        self.sc = scenario
        self.out = out_dir
        self.artifacts = []

    def path(self, name):
        self.artifacts.append(name)
        return self.out / name


def row(check, value, expected, tolerance, passed, **extra):
    out = {"check": check, "value": value, "expected": expected, "tolerance": tolerance, "pass": bool(passed)}
    out.update(extra)
    return out


def _close(check, value, expected, tol):
    if math.isinf(expected):
        return row(check, value, expected, tol, value == expected)
    return row(check, value, expected, tol, abs(value - expected) <= tol, error=abs(value - expected))


def check_thresholds(ctx, chk, where):
    from .radial import thresholds

    P = ctx.sc.params_for(chk, where)
    tol = ctx.sc.tol(chk, "tol", 1e-10)
    th = thresholds(P)
    label = f"({P.n},{P.k},{P.l},{P.m})"
    exp = chk.get("expect", {})
    out = []
    if "alpha1" in exp:
        out.append(_close(f"alpha1 {label}", th.alpha1, _num(exp["alpha1"]), tol))
    if "alpha2" in exp:
        out.append(_close(f"alpha2 {label}", th.alpha2, _num(exp["alpha2"]), tol))
    if "a_hat" in exp:
        out.append(_close(f"a_hat {label}", P.a_hat, _num(exp["a_hat"]), ctx.sc.tol(chk, "tol_a_hat", 1e-12)))
    if not out:
        out.append(row(f"thresholds {label}", [th.alpha1, th.alpha2], None, tol, True))
    return out


def _admissible_alphas(P, count, rng):
    from .radial import thresholds

    th = thresholds(P)
    top = th.alpha2 if math.isfinite(th.alpha2) else th.alpha1 + 20
    u = rng.uniform(0.0, 1.0, count)
    return th.alpha1 + (top - th.alpha1) * (0.02 + 0.96 * u)


def check_radial(ctx, chk, where):
    from .radial import radial_profile

    P = ctx.sc.params_for(chk, where)
    rng = np.random.default_rng(ctx.sc.seed)
    alphas = [float(a) for a in chk["alphas"]] if "alphas" in chk else list(_admissible_alphas(P, int(chk.get("n_random", 5)), rng))
    b = float(chk.get("b", 1.0))
    r = np.geomspace(1.0, float(chk.get("r_max", 1e3)), int(chk.get("nodes", 2000)))
    tol_res, tol_flux = ctx.sc.tol(chk, "tol_residual", 1e-8), ctx.sc.tol(chk, "tol_flux", 1e-9)
    label = f"({P.n},{P.k},{P.l},{P.m})"
    res, drift = [], []
    for i, alpha in enumerate(alphas):
        sol = radial_profile(alpha, b, P, r_grid=r)
        res.append(sol.max_residual)
        drift.append(sol.flux_drift)
        if i == 0:
            sol.to_csv(ctx.path(chk.get("csv", "profiles.csv")))
    return [
        row(f"radial_residual {label}", max(res), 0.0, tol_res, max(res) <= tol_res, alphas=alphas, per_alpha=res),
        row(f"flux_drift {label}", max(drift), 0.0, tol_flux, max(drift) <= tol_flux, per_alpha=drift),
    ]


def check_mu(ctx, chk, where):
    from .radial import mu_of_alpha

    P = ctx.sc.params_for(chk, where)
    b = float(chk.get("b", 1.0))
    tol = ctx.sc.tol(chk, "tol", 1e-12)
    mu0 = mu_of_alpha(0.0, b, P)
    rng = np.random.default_rng(ctx.sc.seed + 1)
    pairs = np.sort(_admissible_alphas(P, 2 * int(chk.get("n_pairs", 20)), rng).reshape(-1, 2), axis=1)
    ok = [mu_of_alpha(lo, b, P) < mu_of_alpha(hi, b, P) for lo, hi in pairs if hi > lo]
    return [
        _close("mu(0) = b - a_hat/2", mu0, b - P.a_hat / 2, tol),
        row("mu increasing", sum(ok), len(ok), 0, all(ok), n_pairs=len(ok)),
    ]


def check_dim2(ctx, chk, where):
    from .asymptotics import dim2_decay
    from .radial import dim2_solution, nu_of_rho

    b = float(chk.get("b", 1.0))
    rho_lo = np.linspace(-1.0, 0.0, 100)
    rho_hi = np.linspace(0.0, 10.0, 100)
    nu_lo = np.array([nu_of_rho(v, b) for v in rho_lo])
    nu_hi = np.array([nu_of_rho(v, b) for v in rho_hi])
    fit = dim2_decay(float(chk.get("rho", 0.5)), b, window=tuple(chk.get("window", (50.0, 2000.0))))
    fit.to_csv(ctx.path("dim2_fit.csv"))
    sol = dim2_solution(float(chk.get("rho", 0.5)), b)
    with open(ctx.path("profiles.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "u", "du", "remainder", "residual"])
        for rec in zip(sol.r, sol.u, sol.du, sol.remainder, sol.residual):
            w.writerow([repr(float(v)) for v in rec])
    tol_slope = ctx.sc.tol(chk, "tol_slope", 0.15)
    return [
        row("nu(0) = b - 1", nu_of_rho(0.0, b), b - 1, 0.0, nu_of_rho(0.0, b) == b - 1),
        row("nu increasing on [-1,0]", float(np.min(np.diff(nu_lo))), 0.0, 0.0, bool(np.all(np.diff(nu_lo) > 0))),
        row("nu decreasing on [0,10]", float(np.max(np.diff(nu_hi))), 0.0, 0.0, bool(np.all(np.diff(nu_hi) < 0))),
        row("dim2 remainder slope", fit.slope, -2.0, tol_slope, fit.within(-2.0, tol_slope), fit=fit.to_dict()),
    ]


def check_profiles(ctx, chk, where):
    from .profiles import envelope_build, integrate_H, integrate_h, solve_h0

    sc = ctx.sc
    P, env, tb = sc.params, sc.envelope, sc.tb()
    p = P.k - P.l
    sup = env.sup_gbar(1.0) ** (1.0 / p)
    delta = float(chk.get("delta", 1.5 * sup))
    r_max = float(chk.get("r_max", 2e4))
    ref = solve_h0(env, tb, P, r_max=r_max)
    kin_tau = tb[1] / tb[0]
    g1 = float(env.gunder(1.0))
    tau = float(chk.get("tau", ((kin_tau + 0.9 * (1 - kin_tau)) * g1) ** (1.0 / p)))
    h = integrate_h(delta, env, tb, P, r_max=r_max, ref=ref)
    H = integrate_H(tau, env, tb, P, r_max=r_max, ref=ref)
    tol = sc.tol(chk, "tol", 1e-12)
    r = h.r_nodes
    gb, gu = env.gbar(r), env.gunder(r)
    low_h = np.min(h.values - gb ** (1.0 / p))
    high_h = np.max(h.values - delta)
    slope_h = np.max(h.derivs)
    v = H.values**p
    lo_H, hi_H = np.min(v - kin_tau * gu), np.min(gu - v)
    with open(ctx.path("profiles.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "h0", "h", "H", "gbar", "gunder"])
        for rec in zip(r, ref.value(r), h.values, H.values, gb, gu):
            w.writerow([repr(float(x)) for x in rec])
    ratio = abs(float(h.value(1e3) / ref.value(1e3)) - 1) if r_max >= 1e3 else float("nan")
    out = [
        row("h above gbar^(1/p)", low_h, 0.0, tol, low_h >= -tol),
        row("h below delta", high_h, 0.0, tol, high_h <= tol),
        row("h non-increasing", slope_h, 0.0, tol, slope_h <= tol),
        row("H above tau gunder", lo_H, 0.0, 0.0, lo_H > 0),
        row("H below gunder", hi_H, 0.0, 0.0, hi_H > 0),
        row("h0 fixed point residual", ref.fixed_point_residual, 0.0, sc.tol(chk, "tol_h0", 1e-8),
            ref.fixed_point_residual < sc.tol(chk, "tol_h0", 1e-8)),
        row("h/h0 - 1 at r=1e3", ratio, 0.0, sc.tol(chk, "tol_ratio", 1e-2), ratio < sc.tol(chk, "tol_ratio", 1e-2)),
    ]
    # degenerate data on the same spectrum: constant g, no perturbation
    value = float(chk.get("constant_value", 1.0))
    flat = envelope_build({"kind": "constant", "value": value}, 0.0, env.beta, 1.0)
    h0c = solve_h0(flat, tb, P)
    err0 = float(np.max(np.abs(h0c.values - value ** (1.0 / p))))
    out.append(row("h0 for constant g0", err0, 0.0, sc.tol(chk, "tol_constant", 1e-10), err0 <= sc.tol(chk, "tol_constant", 1e-10)))
    one = envelope_build({"kind": "constant", "value": 1.0}, 0.0, env.beta, 1.0)
    hd = integrate_h(1 + 1e-9, one, tb, P)
    Hd = integrate_H(1 - 1e-9, one, tb, P)
    errd = float(max(np.max(np.abs(hd.values - 1)), np.max(np.abs(Hd.values - 1))))
    out.append(row("degenerate profiles = 1", errd, 0.0, sc.tol(chk, "tol_degenerate", 1e-6), errd <= sc.tol(chk, "tol_degenerate", 1e-6)))
    return out


def check_barriers(ctx, chk, where):
    from .barriers import annulus_points, barrier_reports, build_subsolution, build_supersolution

    sc = ctx.sc
    spec = sc.barrier_spec(chk)
    X = annulus_points(spec.a, 1.0, float(chk.get("r_hi", 1e3)), int(chk.get("n_points", 1000)), seed=sc.seed + 3)
    W = build_subsolution(spec)
    Psi = build_supersolution(spec)
    sub_q, sub_c = W.verify(X, "sub")
    sup_q, sup_c = Psi.verify(X, "super")
    out = []
    for rep in (sub_q, sub_c, sup_q, sup_c):
        rep = dict(rep)
        tol = rep["tolerance"] * sc.tol_scale
        # only the supersolution quotient is an upper bound; every other margin is a lower bound
        ok = rep["worst_margin"] <= tol if rep["check"] == "super_quotient" else rep["worst_margin"] >= -tol
        rep.update(tolerance=tol, **{"pass": bool(ok)})
        out.append(rep)
    reps, info = barrier_reports(spec)
    out.extend(reps)
    (ctx.path("barriers.json")).write_text(dumps({"checks": out, "info": info}))
    return out


def check_envelope(ctx, chk, where):
    from .barriers import assemble_envelope

    spec = ctx.sc.barrier_spec(chk)
    pair = assemble_envelope(spec, c=chk.get("c"), strict=False, r_far=float(chk.get("r_far", 1e3)))
    ctx.path("envelope.json").write_text(pair.to_json() + "\n")
    out = []
    for rep in pair.report:
        rep = dict(rep)
        if rep["check"] == "far_field_gap" and "tol_gap" in chk:
            tol = ctx.sc.tol(chk, "tol_gap", 1e-2)
            rep.update(tolerance=tol, **{"pass": -rep["worst_margin"] < tol})
        out.append(rep)
    out.append(row("c above c_tilde", pair.c, pair.constants["c_tilde"], 0.0, pair.c > pair.constants["c_tilde"]))
    return out


def check_obstruction(ctx, chk, where):
    from .barriers import obstruction_check
    from .symmetric import Spectrum

    sc = ctx.sc
    P = sc.params
    rep = obstruction_check(sc.spectrum, sc.envelope, P)
    iso = obstruction_check(Spectrum.isotropic(P.n, P.a_hat), sc.envelope, P)
    tol_iso, floor = sc.tol(chk, "tol_isotropic", 1e-10), float(chk.get("min_anisotropic", 1e-6))
    out = [row("obstruction isotropic", iso["max_residual"], 0.0, tol_iso, iso["max_residual"] < tol_iso, per_axis=iso["per_axis"])]
    if np.ptp(sc.spectrum.arr) > 0:
        out.append(row("obstruction anisotropic", rep["max_residual"], floor, 0.0,
                       rep["applicable"] and rep["max_residual"] > floor, per_axis=rep["per_axis"]))
    return out


def check_decay(ctx, chk, where):
    from .asymptotics import decay_probe

    sc = ctx.sc
    P, tb = sc.params, sc.tb()
    K = (P.k - P.l) / (tb[0] - tb[1])
    window = tuple(float(v) for v in chk.get("window", (50.0, 2000.0)))
    C1 = float(chk.get("C1", 0.1))
    tol = sc.tol(chk, "tol_slope", 0.15)
    out = []
    for off in chk.get("beta_offsets", [-1.0, 0.0, 1.0]):
        beta = K + float(off)
        if beta <= 2:
            out.append(row(f"decay beta=K{off:+g}", None, None, tol, True, skipped="beta <= 2"))
            continue
        fit, border = decay_probe(tb, P, beta, C1=C1, window=window)
        fit.to_csv(ctx.path(f"decay_K{off:+g}.csv"))
        expected = 2 - min(beta, K)
        if border:
            ok = fit.log_factor and fit.rms_ratio < 0.9
            out.append(row(f"decay beta=K{off:+g} log factor", fit.rms_ratio, 0.9, 0.0, ok, K=K, fit=fit.to_dict()))
        else:
            ok = fit.within(expected, tol) and not fit.log_factor
            out.append(row(f"decay beta=K{off:+g} slope", fit.slope, expected, tol, ok, K=K, fit=fit.to_dict()))
    return out


def check_radial_decay(ctx, chk, where):
    from .asymptotics import radial_decay

    P = ctx.sc.params_for(chk, where)
    fit = radial_decay(float(chk.get("alpha", 1.0)), float(chk.get("b", 1.0)), P)
    fit.to_csv(ctx.path("radial_fit.csv"))
    tol = ctx.sc.tol(chk, "tol_slope", 0.15)
    return [row(f"radial remainder slope n={P.n}", fit.slope, 2.0 - P.n, tol, fit.within(2.0 - P.n, tol), fit=fit.to_dict())]


class _Check:
    def __init__(self, fn, op, needs=(), group=""):
        self.fn, self.op, self.needs, self.group = fn, op, needs, group


CHECKS = {
    "thresholds": _Check(check_thresholds, "radial.thresholds", group="thresholds"),
    "radial": _Check(check_radial, "radial.radial_profile", ("params",), "radial"),
    "mu": _Check(check_mu, "radial.mu_of_alpha", ("params",), "radial"),
    "dim2": _Check(check_dim2, "radial.dim2_solution", group="dim2"),
    "profiles": _Check(check_profiles, "profiles.integrate_h", ("params", "spectrum", "envelope"), "profiles"),
    "barriers": _Check(check_barriers, "barriers.build_subsolution", ("params", "spectrum", "envelope"), "barriers"),
    "envelope": _Check(check_envelope, "barriers.assemble_envelope", ("params", "spectrum", "envelope"), "verify"),
    "obstruction": _Check(check_obstruction, "barriers.obstruction_check", ("params", "spectrum", "envelope"), "verify"),
    "decay": _Check(check_decay, "asymptotics.decay_probe", ("params", "spectrum"), "asymptotics"),
    "radial_decay": _Check(check_radial_decay, "asymptotics.radial_decay", ("params",), "asymptotics"),
}


# ---------------------------------------------------------------- running


class NumericFailure(Exception):
    def __init__(self, op, exc):
        super().__init__(f"{op}: {type(exc).__name__}: {exc}")
        self.op = op


def run_scenario(scenario, out_root, groups=None):
    """Run the checks of a scenario; returns (exit code, report dict)."""
    out_dir = Path(out_root) / scenario.id
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = Context(scenario, out_dir)
    results, timing = [], {}
    for i, chk in enumerate(scenario.checks):
        spec = CHECKS[chk["name"]]
        if groups and spec.group not in groups:
            continue
        where = f"checks[{i}]"
        t0 = time.perf_counter()
        log.info("%s: running %s", scenario.id, chk["name"])
        try:
            rows = spec.fn(ctx, chk, where)
        except ConfigError:
            raise
        except NumericError as exc:
            raise NumericFailure(spec.op, exc) from exc
        timing[f"{i}:{chk['name']}"] = time.perf_counter() - t0
        for r in rows:
            r.setdefault("group", chk["name"])
            log.info("  %s %s", "pass" if r["pass"] else "FAIL", r["check"])
        results.extend(rows)
    passed = all(r["pass"] for r in results)
    report = {
        "schema": SCHEMA,
        "id": scenario.id,
        "seed": scenario.seed,
        "tol_scale": scenario.tol_scale,
        "pass": passed,
        "n_checks": len(results),
        "n_failed": sum(not r["pass"] for r in results),
        "checks": results,
        "artifacts": sorted(set(ctx.artifacts)),
    }
    (out_dir / "report.json").write_text(dumps(report))
    (out_dir / "timing.json").write_text(dumps({"id": scenario.id, "seconds": timing}))
    return (EXIT_PASS if passed else EXIT_FAIL), report


# ---------------------------------------------------------------- direct subcommands


def _write(out_dir, name, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _params_from_args(args):
    from .radial import HqParams

    try:
        return HqParams(args.n, args.k, args.l, args.m if args.m is not None else args.k)
    except ValueError as exc:
        raise ConfigError("--n/--k/--l/--m", str(exc)) from None


def cmd_thresholds(args):
    from .radial import thresholds

    P = _params_from_args(args)
    th = thresholds(P)
    out = {"params": [P.n, P.k, P.l, P.m], "alpha1": th.alpha1, "alpha2": th.alpha2, "a_hat": P.a_hat}
    sys.stdout.write(dumps(out))
    _write(Path(args.out), "thresholds.json", dumps(out))
    return EXIT_PASS


def _radial_out(sol, args, extra):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol.to_csv(out / "profiles.csv")
    info = dict(extra, c=sol.c, max_residual=sol.max_residual, flux_drift=sol.flux_drift)
    _write(out, "report.json", dumps(info))
    sys.stdout.write(dumps(info))
    return EXIT_PASS


def cmd_radial(args):
    from .radial import radial_profile

    P = _params_from_args(args)
    sol = radial_profile(args.alpha, args.b, P, r_grid=np.geomspace(1.0, args.r_max, args.nodes))
    return _radial_out(sol, args, {"params": [P.n, P.k, P.l, P.m], "alpha": args.alpha, "b": args.b})


def cmd_sl3(args):
    from .radial import special_lagrangian_3d

    sol = special_lagrangian_3d(args.alpha, args.b, r_grid=np.geomspace(1.0, args.r_max, args.nodes))
    return _radial_out(sol, args, {"params": [3, 3, 1, 3], "alpha": args.alpha, "b": args.b})


def cmd_dim2(args):
    from .radial import dim2_solution

    sol = dim2_solution(args.rho, args.b, np.geomspace(1.0, args.r_max, args.nodes))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "profiles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "u", "du", "remainder", "residual"])
        for rec in zip(sol.r, sol.u, sol.du, sol.remainder, sol.residual):
            w.writerow([repr(float(v)) for v in rec])
    info = {"rho": sol.rho, "b": sol.b, "nu": sol.nu, "max_residual": float(np.max(np.abs(sol.residual)))}
    _write(out, "report.json", dumps(info))
    sys.stdout.write(dumps(info))
    return EXIT_PASS


def cmd_list(args):
    sys.stdout.write("\n".join(bundled_names()) + "\n")
    return EXIT_PASS


def _scenario_cmd(groups):
    def run(args):
        cfg, source = load_config(args.config)
        sc = Scenario(cfg, source, seed=args.seed, tol_scale=args.tol_scale)
        if groups and not any(CHECKS[c["name"]].group in groups for c in sc.checks):
            raise ConfigError(source, f"no checks of kind {', '.join(groups)} in this scenario")
        code, report = run_scenario(sc, args.out, groups)
        for r in report["checks"]:
            sys.stdout.write(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}\n")
        sys.stdout.write(f"{report['id']}: {report['n_checks'] - report['n_failed']}/{report['n_checks']} passed\n")
        return code

    return run


def build_parser():
    ap = argparse.ArgumentParser(prog="hessquot", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="hessquot_out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    sub = ap.add_subparsers(dest="command", required=True)

    def orders(p, need_m=True):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--l", type=int, required=True)
        p.add_argument("--m", type=int, default=None)

    def grid(p):
        p.add_argument("--r-max", type=float, default=1e3)
        p.add_argument("--nodes", type=int, default=2000)

    p = sub.add_parser("thresholds", parents=[common], help="alpha_1, alpha_2 and a_hat")
    orders(p)
    p.set_defaults(fn=cmd_thresholds)
    p = sub.add_parser("radial", parents=[common], help="sample a radial solution")
    orders(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--b", type=float, default=1.0)
    grid(p)
    p.set_defaults(fn=cmd_radial)
    p = sub.add_parser("sl3", parents=[common], help="radial special Lagrangian solutions in R^3")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--b", type=float, default=1.0)
    grid(p)
    p.set_defaults(fn=cmd_sl3)
    p = sub.add_parser("dim2", parents=[common], help="closed-form planar solution")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--b", type=float, default=1.0)
    grid(p)
    p.set_defaults(fn=cmd_dim2)
    for name, groups, text in (
        ("profiles", ("profiles",), "profile checks of a scenario"),
        ("barriers", ("barriers",), "sub/supersolution and boundary barrier checks"),
        ("verify", ("verify",), "envelope ordering and obstruction checks"),
        ("asymptotics", ("asymptotics",), "decay-rate fits"),
        ("run", None, "every check of a scenario"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", help="scenario JSON path or bundled scenario name")
        p.set_defaults(fn=_scenario_cmd(groups))
    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(fn=cmd_list)
    return ap


def main(argv=None):
    level = os.environ.get("HESSQUOT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericFailure as exc:
        sys.stderr.write(f"numeric failure in {exc}\n")
        return EXIT_NUMERIC
    except NumericError as exc:
        sys.stderr.write(f"numeric failure in {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except HessQuotError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
