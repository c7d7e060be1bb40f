"""Generalized symmetric barriers for the exterior problem on an A-ellipsoid.

The subsolution W = w(r_A) and supersolution Psi = psi(r_A) are built from the
profiles h and H, the boundary barriers rho_xi are quadratic in the A-metric,
and the lower envelope is max(W, phi_hat) glued to W outside E_{R0}.  Every
inequality is checked on a seeded quasi-random sample.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm, qmc

from .errors import (
    AssemblyError,
    BarrierError,
    DomainError,
    HypothesisError,
    InadmissibleError,
    ThresholdError,
)
from .profiles import GEnvelope, integrate_H, integrate_h, kinetics_from, solve_h0
from .radial import HqParams
from .symmetric import Spectrum, exclusion_table, rank_one_sigma, t_bounds

SAFETY = 0.05  # sampled suprema are inflated by 5% of the sampled range
SUB_TOL = 1e-8
CONE_TOL = 1e-10


def check_report(check, margins, points, tolerance, sense="min"):
    """JSON-ready record of one sampled inequality.

    ``sense="min"`` means the margins must stay >= -tolerance, ``"max"`` that
    they stay <= tolerance.
    """
    margins = np.asarray(margins, float)
    i = int(np.argmin(margins) if sense == "min" else np.argmax(margins))
    worst = float(margins[i])
    ok = worst >= -tolerance if sense == "min" else worst <= tolerance
    loc = np.atleast_2d(points)[i]
    return {
        "check": check,
        "n_points": int(margins.size),
        "worst_margin": worst,
        "location": [float(v) for v in loc],
        "tolerance": float(tolerance),
        "pass": bool(ok),
    }


# ---------------------------------------------------------------- sampling


def directions(n, count, seed=0, vertices=True):
    """Quasi-random unit vectors (scrambled Halton through the normal quantile), plus the +-axes."""
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    d = z / np.linalg.norm(z, axis=1, keepdims=True)
    if vertices:
        eye = np.eye(n)
        d = np.vstack([eye, -eye, d])
    return d


def shell_points(a, d, r):
    """x with r_A(x) = r along the unit directions d (in the A-metric)."""
    r = np.broadcast_to(np.asarray(r, float), (d.shape[0],))
    return r[:, None] * d / np.sqrt(a)[None, :]


def annulus_points(a, r_lo, r_hi, count, seed=0):
    """Log-uniform radii times quasi-random directions; axis directions included."""
    n = a.size
    u = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    d = z / np.linalg.norm(z, axis=1, keepdims=True)
    # put a quarter of the points on the coordinate axes, where t_k and t_l are attained
    n_ax = count // 4
    axes = np.arange(n_ax) % (2 * n)
    d[:n_ax] = 0.0
    d[np.arange(n_ax), axes % n] = np.where(axes < n, 1.0, -1.0)
    r = np.exp(np.log(r_lo) + u[:, n] * (np.log(r_hi) - np.log(r_lo)))
    return shell_points(a, d, r)


def r_of(a, X):
    X = np.atleast_2d(np.asarray(X, float))
    return np.sqrt(np.einsum("ij,j,ij->i", X, a, X))


def _inflate(values, up=True):
    m, lo, hi = float(np.max(values) if up else np.min(values)), float(np.min(values)), float(np.max(values))
    pad = SAFETY * (hi - lo)
    return m + pad if up else m - pad


# ---------------------------------------------------------------- specification


@dataclass
class BarrierSpec:
    """Geometry, data and profile parameters for the exterior problem.

    Omega is the A-ellipsoid E_{r_omega}; 1 < r_omega < r0 < R0.  ``phi`` is
    {"kind": "constant", "value": v} or {"kind": "quadratic", "value": v,
    "coeffs": [q_1..q_n]} meaning v + sum q_i x_i^2 / 2.
    """

    A: Spectrum
    params: HqParams
    envelope: GEnvelope
    r_omega: float = 1.2
    r0: float = 1.5
    R0: float = 3.0
    phi: dict = field(default_factory=lambda: {"kind": "constant", "value": 0.0})
    eta: float = 1.0
    beta1: float = 0.0
    beta2: float = 0.0
    delta: float | None = None
    tau: float | None = None
    Xi: float | None = None
    r_max: float = 2e4
    n_boundary: int = 256
    n_samples: int = 1000
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        k, l = self.params.k, self.params.l
        a = self.A.arr
        if a.size != self.params.n:
            raise InadmissibleError(f"spectrum has {a.size} entries, params need n={self.params.n}")
        if abs(self.A.quotient_defect(k, l)) > 1e-10:
            raise InadmissibleError("A must satisfy sigma_k(a) = sigma_l(a)")
        if not 1.0 < self.r_omega < self.r0 < self.R0:
            raise HypothesisError("need 1 < r_omega < r0 < R0 (E_1 inside Omega inside E_r0 inside E_R0)")
        if self.eta < 1.0:
            raise HypothesisError("eta must be >= 1")
        kin = self.kinetics
        if not kin.K > 2:
            raise HypothesisError(f"(k-l)/(tbar_k - tlow_l) = {kin.K:.6g} must exceed 2")
        sup_g = self.envelope.sup_gbar(0.0)
        need = max(comb(self.params.n, l) / comb(self.params.n, k), 1.0) * sup_g
        if self.Xi is None:
            self.Xi = (1.05 * need) ** (1.0 / kin.p)
        # the quotient of the Hessian Xi*A needs Xi^(k-l) above sup gbar, with the C_n ratio folded in
        if not (self.Xi**kin.p > need):
            raise HypothesisError(f"Xi^(k-l) = {self.Xi ** kin.p:.6g} must exceed {need:.6g}")
        if self.phi.get("kind") not in ("constant", "quadratic"):
            raise HypothesisError(f"unknown boundary data kind {self.phi.get('kind')!r}")
        if self.phi["kind"] == "quadratic" and len(self.phi["coeffs"]) != a.size:
            raise HypothesisError("quadratic boundary data needs n coefficients")

    @property
    def a(self):
        return self.A.arr

    @property
    def tb(self):
        k, l = self.params.k, self.params.l
        return (t_bounds(self.a, k).t_upper, t_bounds(self.a, l).t_lower)

    @property
    def kinetics(self):
        return kinetics_from(self.tb, self.params)

    def phi_at(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        v = float(self.phi["value"])
        if self.phi["kind"] == "constant":
            return np.full(X.shape[0], v)
        q = np.asarray(self.phi["coeffs"], float)
        return v + 0.5 * np.einsum("ij,j,ij->i", X, q, X)

    def phi_grad(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        if self.phi["kind"] == "constant":
            return np.zeros_like(X)
        return X * np.asarray(self.phi["coeffs"], float)[None, :]

    def reference(self):
        if "h0" not in self._cache:
            self._cache["h0"] = solve_h0(self.envelope, self.tb, self.params, r_max=self.r_max)
        return self._cache["h0"]

    def h(self, delta):
        key = ("h", float(delta))
        if key not in self._cache:
            self._cache[key] = integrate_h(delta, self.envelope, self.tb, self.params, r_max=self.r_max, ref=self.reference())
        return self._cache[key]

    def H(self, tau=None):
        tau = self.default_tau() if tau is None else tau
        key = ("H", float(tau))
        if key not in self._cache:
            self._cache[key] = integrate_H(tau, self.envelope, self.tb, self.params, r_max=self.r_max, ref=self.reference())
        return self._cache[key]

    def default_tau(self):
        if self.tau is not None:
            return self.tau
        kin = self.kinetics
        g1 = float(self.envelope.gunder(1.0))
        # close to the top of the admissible window keeps H near h0
        return ((kin.tau + 0.9 * (1 - kin.tau)) * g1) ** (1.0 / kin.p)


# ---------------------------------------------------------------- W and Psi


class GeneralizedSymmetric:
    """x -> anchor + int_{r_anchor}^{r_A(x)} theta f(theta) d theta for a profile f."""

    def __init__(self, spec, prof, g_fn, anchor, r_anchor, kind):
        self.spec = spec
        self.prof = prof
        self.g_fn = g_fn
        self.anchor = float(anchor)
        self.r_anchor = float(r_anchor)
        self.kind = kind
        self._cum_anchor = float(prof.cum_at(r_anchor))

    def radius(self, X):
        r = r_of(self.spec.a, X)
        if np.any(r < 1.0 - 1e-12):
            raise DomainError(f"r_A(x) = {r.min():.6g} below the profile start r = 1")
        return r

    def __call__(self, X):
        r = self.radius(X)
        return self.anchor + self.prof.cum_at(r) - self._cum_anchor

    def radial(self, r):
        """f and f' at r; f' from the profile equation so the quotient identity is exact."""
        kin = self.spec.kinetics
        f = np.asarray(self.prof.value(r), float)
        g = np.asarray(self.g_fn(r), float)
        v = f**kin.p
        dv = kin.G(v, v - g, v - kin.tau * g)
        return f, f * dv / (kin.p * v * np.asarray(r, float))

    def sigmas(self, X, orders):
        """sigma_j of D^2 = f diag(a) + (f'/r)(a x)(a x)^T via the rank-one formula."""
        X = np.atleast_2d(np.asarray(X, float))
        a = self.spec.a
        r = self.radius(X)
        f, df = self.radial(r)
        out = np.empty((X.shape[0], len(orders)))
        for i in range(X.shape[0]):
            p = f[i] * a
            q = a * X[i]
            s = df[i] / r[i]
            for c, j in enumerate(orders):
                out[i, c] = rank_one_sigma(p, q, s, j)
        return out

    def hessian(self, x):
        a = self.spec.a
        x = np.asarray(x, float)
        r = float(self.radius(x)[0])
        f, df = self.radial(r)
        q = a * x
        return float(f) * np.diag(a) + float(df) / r * np.outer(q, q)

    def verify(self, X, label):
        k, l = self.spec.params.k, self.spec.params.l
        orders = list(range(1, k + 1)) + ([l] if l == 0 else [])
        S = self.sigmas(X, orders)
        Sk = S[:, orders.index(k)]
        Sl = S[:, orders.index(l)] if l > 0 else np.ones(X.shape[0])
        r = r_of(self.spec.a, X)
        g = self.g_fn(r)
        margin = Sk / Sl - g
        cone = np.min(S[:, :k], axis=1)
        if self.kind == "sub":
            ineq = check_report(f"{label}_quotient", margin, X, SUB_TOL, "min")
        else:
            ineq = check_report(f"{label}_quotient", margin, X, SUB_TOL, "max")
        return [ineq, check_report(f"{label}_k_convex", cone, X, CONE_TOL, "min")]


def build_subsolution(spec: BarrierSpec, h_profile=None, beta1=None, eta=None):
    """W(x) = beta1 + int_eta^{r_A(x)} theta h(theta) d theta."""
    h_profile = spec.h(spec.delta) if h_profile is None else h_profile
    beta1 = spec.beta1 if beta1 is None else beta1
    eta = spec.eta if eta is None else eta
    return GeneralizedSymmetric(spec, h_profile, spec.envelope.gbar, beta1, eta, "sub")


def build_supersolution(spec: BarrierSpec, H_profile=None, beta2=None, eta=None):
    """Psi(x) = beta2 + int_eta^{r_A(x)} theta H(theta) d theta."""
    H_profile = spec.H() if H_profile is None else H_profile
    beta2 = spec.beta2 if beta2 is None else beta2
    eta = spec.eta if eta is None else eta
    return GeneralizedSymmetric(spec, H_profile, spec.envelope.gunder, beta2, eta, "super")


# ---------------------------------------------------------------- constants


@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    err: float

    def __float__(self):
        return self.value


def asymptotic_constant(f, h0, beta, eta):
    """beta - int_0^eta theta h0 + int_eta^inf theta (f - h0), with the tail error estimate."""
    base = beta - float(h0.cum_at(eta))
    if f is h0:
        return ConstantEstimate(base, 0.0)
    return ConstantEstimate(base + float(f.tail_at(eta)), float(f.meta.get("tail_err", 0.0)))


class Constants:
    """The sampled boundary barrier and the constants zeta1, delta_hat, c_hat, c_tilde."""

    def __init__(self, spec: BarrierSpec):
        self.spec = spec
        self.barrier = quadratic_barrier_family(spec)
        a = spec.a
        n = a.size
        inner = annulus_points(a, spec.r_omega, spec.r0, spec.n_samples, seed=spec.seed + 11)
        ring = annulus_points(a, spec.r_omega, spec.R0, spec.n_samples, seed=spec.seed + 12)
        seam = shell_points(a, directions(n, spec.n_samples // 4, seed=spec.seed + 13), spec.R0)
        self.zeta1 = _inflate(self.barrier.min_over(inner), up=False)
        self.sup_phi = _inflate(self.barrier(ring))
        self.seam_max = _inflate(self.barrier(seam))
        self.seam = seam
        ref = spec.reference()
        self.tau = spec.default_tau()
        H = spec.H(self.tau)
        self.nu0 = asymptotic_constant(H, ref, 0.0, 1.0)
        self.c_hat = self.sup_phi + self.nu0.value
        self.delta_hat = self._delta_hat()
        self.mu_hat = self.mu(self.delta_hat)
        self.c_tilde = max(self.c_hat, self.mu_hat, self.sup_phi)

    def w_at(self, delta, r):
        h = self.spec.h(delta)
        return self.zeta1 + float(h.cum_at(r) - h.cum_at(self.spec.r0))

    def _delta_hat(self):
        spec = self.spec
        d = spec.envelope.sup_gbar(1.0) ** (1.0 / spec.kinetics.p) * (1 + 1e-3)
        for _ in range(60):
            if self.w_at(d, spec.R0) > self.seam_max:
                return d
            d *= 1.5
        raise ThresholdError("no delta makes W exceed the boundary barrier on the outer ellipsoid", np.inf)

    def mu(self, delta):
        spec = self.spec
        return asymptotic_constant(spec.h(delta), spec.reference(), self.zeta1, spec.r0).value


def constants(spec):
    if "constants" not in spec._cache:
        spec._cache["constants"] = Constants(spec)
    return spec._cache["constants"]


def solve_delta_for_c(c, spec: BarrierSpec, tol=1e-8):
    """Unique delta > delta_hat with mu(delta) = c."""
    C = constants(spec)
    if not c > C.c_tilde:
        raise ThresholdError(f"c={c:.12g} must exceed c_tilde={C.c_tilde:.12g}", C.c_tilde)
    lo, hi = C.delta_hat, 2 * C.delta_hat
    while C.mu(hi) <= c:
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            raise ThresholdError("mu(delta) does not reach c", C.c_tilde)
    # brentq is a safeguarded bisection on the monotone map
    delta = brentq(lambda d: C.mu(d) - c, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    if abs(C.mu(delta) - c) > tol:
        raise ThresholdError(f"|mu(delta) - c| = {abs(C.mu(delta) - c):.3e} above {tol}", C.c_tilde)
    return delta


# ---------------------------------------------------------------- boundary barriers


class BarrierFamily:
    """rho_xi for sampled xi on the boundary, and their pointwise max phi_hat."""

    def __init__(self, spec, xi, xbar, s):
        self.spec = spec
        self.xi = xi
        self.xbar = xbar
        self.s = s
        self.phi_xi = spec.phi_at(xi)
        a = spec.a
        self._xi_q = np.einsum("ij,j,ij->i", xi, a, xi)

    def rho(self, X):
        """Matrix rho[i, j] = rho_{xi_j}(x_i)."""
        X = np.atleast_2d(np.asarray(X, float))
        a = self.spec.a
        xq = np.einsum("ij,j,ij->i", X, a, X)
        # (x - xbar)^T A (x - xbar) - (xi - xbar)^T A (xi - xbar) = |x|_A^2 - |xi|_A^2 - 2 (x - xi)^T A xbar
        cross = X @ (a[:, None] * self.xbar.T) - np.einsum("ij,j,ij->i", self.xi, a, self.xbar)[None, :]
        return self.phi_xi[None, :] + 0.5 * self.spec.Xi * (xq[:, None] - self._xi_q[None, :] - 2 * cross)

    def __call__(self, X):
        return np.max(self.rho(X), axis=1)

    def min_over(self, X):
        return np.min(self.rho(X))

    @property
    def bound(self):
        return float(np.max(np.linalg.norm(self.xbar, axis=1)))

    def quotient(self):
        k, l = self.spec.params.k, self.spec.params.l
        a = self.spec.a
        Xi = self.spec.Xi
        return float(rank_one_sigma(Xi * a, a, 0.0, k) / rank_one_sigma(Xi * a, a, 0.0, l))


def _xbar(spec, xi, s):
    """Centre with matching tangential gradient, pushed to the far side of Omega by s."""
    a = spec.a
    grad = spec.phi_grad(xi)
    return xi - grad / (spec.Xi * a[None, :]) - s * xi


def _boundary_margins(spec, xi_one, xbar_one, pts):
    fam = BarrierFamily(spec, xi_one[None, :], xbar_one[None, :], None)
    return spec.phi_at(pts) - fam.rho(pts)[:, 0]


def quadratic_barrier(xi, spec: BarrierSpec, s_start=1 + 1 / 64, max_doublings=40, n_check=None):
    """x_bar(xi) for one boundary point: the smallest s on a doubling ladder that passes."""
    a = spec.a
    xi = np.asarray(xi, float)
    if abs(float(np.sqrt(np.sum(a * xi * xi))) - spec.r_omega) > 1e-9 * spec.r_omega:
        raise DomainError("xi must lie on the boundary ellipsoid")
    pts = shell_points(a, directions(a.size, n_check or spec.n_boundary, seed=spec.seed + 7), spec.r_omega)
    dist = np.sqrt(np.sum(a * (pts - xi) ** 2, axis=1))
    away = dist > 1e-6 * spec.r_omega
    s = s_start
    worst = -np.inf
    for _ in range(max_doublings):
        xb = _xbar(spec, xi[None, :], s)[0]
        m = _boundary_margins(spec, xi, xb, pts)
        worst = float(np.min(m[away]))
        if worst > 0 and np.all(m > -1e-9):
            return xb, s
        s = 1 + 2 * (s - 1)
    loc = pts[away][int(np.argmin(m[away]))]
    raise BarrierError(f"no barrier centre found for xi={xi.tolist()}", worst, loc.tolist())


def quadratic_barrier_family(spec: BarrierSpec):
    if "barrier" in spec._cache:
        return spec._cache["barrier"]
    a = spec.a
    xi = shell_points(a, directions(a.size, spec.n_boundary, seed=spec.seed + 5), spec.r_omega)
    xbar = np.empty_like(xi)
    s = np.empty(xi.shape[0])
    for i in range(xi.shape[0]):
        xbar[i], s[i] = quadratic_barrier(xi[i], spec)
    fam = BarrierFamily(spec, xi, xbar, s)
    spec._cache["barrier"] = fam
    return fam


def barrier_reports(spec):
    fam = quadratic_barrier_family(spec)
    a = spec.a
    pts = shell_points(a, directions(a.size, spec.n_boundary, seed=spec.seed + 9), spec.r_omega)
    R = fam.rho(np.vstack([pts, fam.xi]))
    phi = spec.phi_at(np.vstack([pts, fam.xi]))
    margin = phi[:, None] - R  # >= 0 for every barrier at every boundary point
    n_pts = pts.shape[0]
    own = margin[n_pts + np.arange(fam.xi.shape[0]), np.arange(fam.xi.shape[0])]
    reports = [
        check_report("barrier_below_phi", np.min(margin, axis=1), np.vstack([pts, fam.xi]), 1e-9, "min"),
        check_report("barrier_touches_at_xi", -np.abs(own), fam.xi, 1e-9, "min"),
        check_report("phi_hat_equals_phi", -np.abs(fam(fam.xi) - spec.phi_at(fam.xi)), fam.xi, 1e-9, "min"),
    ]
    quotient = fam.quotient()
    sup_g = spec.envelope.sup_gbar(0.0)
    reports.append({
        "check": "barrier_quotient",
        "n_points": 1,
        "worst_margin": quotient - sup_g,
        "location": [],
        "tolerance": 0.0,
        "pass": bool(quotient > sup_g),
    })
    return reports, {"xbar_bound": fam.bound, "s_max": float(np.max(fam.s))}


# ---------------------------------------------------------------- the envelope pair


@dataclass
class EnvelopePair:
    lower: object
    upper: object
    c: float
    report: list
    constants: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"c": self.c, "constants": self.constants, "checks": self.report}, indent=2, sort_keys=True)


class LowerEnvelope:
    """max(W, phi_hat) inside E_{R0}, W outside."""

    def __init__(self, spec, W, barrier):
        self.spec, self.W, self.barrier = spec, W, barrier

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        r = r_of(self.spec.a, X)
        if np.any(r < self.spec.r_omega * (1 - 1e-12)):
            raise DomainError("point inside Omega")
        w = self.W(X)
        inside = r < self.spec.R0
        if np.any(inside):
            w[inside] = np.maximum(w[inside], self.barrier(X[inside]))
        return w


class UpperEnvelope:
    def __init__(self, spec, Psi):
        self.spec, self.Psi = spec, Psi

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        if np.any(r_of(self.spec.a, X) < self.spec.r_omega * (1 - 1e-12)):
            raise DomainError("point inside Omega")
        return self.Psi(X)


def zone_samples(spec, r_far=1e3):
    a = spec.a
    m = spec.n_samples // 3
    return {
        "near": annulus_points(a, spec.r_omega, spec.r0, m, seed=spec.seed + 21),
        "mid": annulus_points(a, spec.r0, 4 * spec.R0, m, seed=spec.seed + 22),
        "far": annulus_points(a, 4 * spec.R0, r_far, spec.n_samples - 2 * m, seed=spec.seed + 23),
    }


def assemble_envelope(spec: BarrierSpec, c=None, strict=True, r_far=1e3):
    """Lower and upper envelopes sharing the far-field constant c."""
    C = constants(spec)
    c = C.c_tilde + 0.05 * max(1.0, abs(C.c_tilde)) if c is None else float(c)
    delta = solve_delta_for_c(c, spec)
    zeta2 = c - C.nu0.value
    W = build_subsolution(spec, spec.h(delta), beta1=C.zeta1, eta=spec.r0)
    Psi = build_supersolution(spec, spec.H(C.tau), beta2=zeta2, eta=1.0)
    lower = LowerEnvelope(spec, W, C.barrier)
    upper = UpperEnvelope(spec, Psi)
    a = spec.a
    n = a.size
    reports = []
    tol = lambda vals: 1e-9 * max(1.0, float(np.max(np.abs(vals))))  # noqa: E731
    for zone, X in zone_samples(spec, r_far).items():
        lo, up = lower(X), upper(X)
        reports.append(check_report(f"order_{zone}", up - lo, X, tol(up), "min"))
    bd = C.barrier.xi
    lo_b = lower(bd)
    reports.append(check_report("lower_equals_phi", -np.abs(lo_b - spec.phi_at(bd)), bd, 1e-9, "min"))
    reports.append(check_report("upper_above_phi", upper(bd) - spec.phi_at(bd), bd, 1e-9, "min"))
    seam = C.seam
    reports.append(check_report("seam_strict", W(seam) - C.barrier(seam), seam, 0.0, "min"))
    reports[-1]["pass"] = bool(reports[-1]["worst_margin"] > 0)
    far = shell_points(a, directions(n, 64, seed=spec.seed + 31), r_far)
    gap = np.abs(lower(far) - upper(far))
    reports.append(check_report("far_field_gap", -gap, far, 1e-2, "min"))
    ref = spec.reference()
    shared = np.abs(lower(far) - ref.cum_at(r_far) - c)
    reports.append(check_report("far_field_constant", -shared, far, 1e-2, "min"))
    info = {
        "zeta1": C.zeta1,
        "zeta2": zeta2,
        "delta": delta,
        "delta_hat": C.delta_hat,
        "tau": C.tau,
        "c_hat": C.c_hat,
        "mu_delta_hat": C.mu_hat,
        "c_tilde": C.c_tilde,
        "sup_phi_hat": C.sup_phi,
        "safety": SAFETY,
        "Xi": spec.Xi,
    }
    pair = EnvelopePair(lower, upper, c, reports, info)
    if strict:
        bad = [r for r in reports if r["check"].startswith("order") and not r["pass"]]
        if bad:
            raise AssemblyError(f"envelope ordering violated in zone {bad[0]['check']}", bad[0]["location"])
    return pair


# ---------------------------------------------------------------- obstruction


def obstruction_check(A: Spectrum, envelope: GEnvelope, params: HqParams, J1=None, r_max=10.0, n_nodes=400):
    """Fit J along the first axis and measure the quotient mismatch on the others.

    Along axis i at r_A = r the generalized symmetric function with
    J = G'/r has S_k = sigma_k J^k + r J' J^(k-1) sigma_{k-1;i} a_i, and the
    same with l.  A solution must make the quotient equal gbar on every axis.
    """
    from scipy.integrate import solve_ivp

    a = A.arr
    k, l = params.k, params.l
    p = k - l
    T = exclusion_table(a, k - 1)
    sk, sl = float(A.sigma(k)), float(A.sigma(l))
    ck = T[k - 1] * a
    cl = T[l - 1] * a if l >= 1 else np.zeros_like(a)
    gbar = envelope.gbar
    if J1 is None:
        J1 = 1.25 * float(gbar(1.0)) ** (1.0 / p)

    def rJ_prime(r, J, i):
        g = gbar(r)
        num = g * sl * J**l - sk * J**k
        den = J ** (k - 1) * ck[i] - (g * J ** (l - 1) * cl[i] if l >= 1 else 0.0)
        return num / den

    t_end = np.log(r_max)
    t = np.linspace(0.0, t_end, n_nodes)
    sol = solve_ivp(lambda tt, y: [rJ_prime(np.exp(tt), y[0], 0)], (0.0, t_end), [J1], method="DOP853",
                    t_eval=t, rtol=1e-12, atol=1e-14)
    r = np.exp(t)
    J = sol.y[0]
    dJr = rJ_prime(r, J, 0)
    g = gbar(r)
    residuals = []
    for i in range(1, a.size):
        num = sk * J**k + dJr * J ** (k - 1) * ck[i]
        den = sl * J**l + (dJr * J ** (l - 1) * cl[i] if l >= 1 else 0.0)
        residuals.append(np.max(np.abs(num / den / g - 1.0)))
    worst = float(max(residuals)) if residuals else 0.0
    return {
        "check": "obstruction",
        "applicable": bool(1 <= l < k <= a.size - 1),
        "axis_fit": 0,
        "J1": float(J1),
        "r_window": [1.0, float(r_max)],
        "per_axis": [float(v) for v in residuals],
        "max_residual": worst,
        "isotropic": bool(np.ptp(a) == 0),
    }
