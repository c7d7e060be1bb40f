"""Right-hand-side envelopes and the profile ODEs behind the barrier functions.

A generalized symmetric function W(x) = w(r_A(x)) has Hessian governed by
f = w'/r.  The profiles h (subsolution), H (supersolution) and h0 (reference)
all solve

    (f^k + tbar r f^(k-1) f') / (f^l + tlow r f^(l-1) f') = g(r)

for different right-hand sides g and initial data.  With v = f^(k-l) and
t = ln r this reads dv/dt = -(p/tbar) v (v - g)/(v - tau g), p = k - l,
tau = tlow/tbar; v relaxes to g at rate K = p/(tbar - tlow).

All profiles are integrated as deviations D = v - v0 from the reference, so
that the far-field remainders, which fall to ~1e-10, keep their relative
accuracy.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import DivergenceError, DomainError, EnvelopeError, HypothesisError, SingularityError

ODE_RTOL = 1e-11
ODE_ATOL = 1e-24
R_MIN_H0 = 1e-6
NODES_PER_UNIT_T = 160


# ---------------------------------------------------------------- envelopes


@dataclass(frozen=True)
class GEnvelope:
    """g0 with its upper/lower envelopes g0 +/- C1 max(r, theta0)^-beta."""

    g0: Callable
    dg0: Callable
    C1: float
    beta: float
    theta0: float
    limit: float
    spec: dict = field(default_factory=dict)

    def delta(self, r):
        r = np.asarray(r, dtype=float)
        return self.C1 * np.maximum(r, self.theta0) ** (-self.beta)

    def gbar(self, r):
        return self.g0(r) + self.delta(r)

    def gunder(self, r):
        return self.g0(r) - self.delta(r)

    def sup_gbar(self, r_from=1.0):
        r = np.concatenate([np.linspace(r_from, r_from + 10, 2001), np.geomspace(r_from + 10, 1e8, 2001)])
        return float(max(np.max(self.gbar(r)), self.limit))

    def shifted(self, C1):
        return GEnvelope(self.g0, self.dg0, C1, self.beta, self.theta0, self.limit, dict(self.spec, C1=C1))


def _g0_family(spec):
    kind = spec.get("kind")
    if kind == "constant":
        c = float(spec["value"])
        return (lambda r: np.full(np.shape(r), c) + 0.0 * np.asarray(r, float)), (lambda r: np.zeros(np.shape(r))), c
    if kind == "rational":
        c0, c, p = float(spec["c0"]), float(spec["c"]), float(spec["p"])
        if p <= 0:
            raise EnvelopeError("rational family needs p > 0")

        def g0(r):
            return c0 + c * (1.0 + np.asarray(r, float)) ** (-p)

        def dg0(r):
            return -c * p * (1.0 + np.asarray(r, float)) ** (-p - 1)

        return g0, dg0, c0
    if kind == "tabulated":
        r_tab = np.asarray(spec["r"], float)
        g_tab = np.asarray(spec["g"], float)
        if r_tab.ndim != 1 or r_tab.size < 2 or np.any(np.diff(r_tab) <= 0) or r_tab[0] != 0.0:
            raise EnvelopeError("tabulated g0 needs a strictly increasing r column starting at 0")
        interp = PchipInterpolator(r_tab, g_tab, extrapolate=False)
        d_interp = interp.derivative()
        last = float(g_tab[-1])

        def g0(r):
            r = np.asarray(r, float)
            return np.where(r >= r_tab[-1], last, interp(np.minimum(r, r_tab[-1])))

        def dg0(r):
            r = np.asarray(r, float)
            return np.where(r >= r_tab[-1], 0.0, d_interp(np.minimum(r, r_tab[-1])))

        return g0, dg0, last
    raise EnvelopeError(f"unknown g0 family {kind!r}")


def _validation_grid(theta0):
    return np.unique(
        np.concatenate([np.linspace(0.0, max(2.0, 2 * theta0), 4001), np.geomspace(max(2.0, 2 * theta0), 1e7, 4001)])
    )


def envelope_build(g0_spec, C1, beta, theta0, grid=None):
    """Build and validate a GEnvelope.

    ``C1 = 0`` is accepted as the degenerate limit where all three functions
    coincide.  The lower envelope must be positive, non-decreasing, and
    strictly increasing beyond theta0 when C1 > 0.
    """
    if not beta > 2:
        raise HypothesisError(f"beta={beta} must exceed 2")
    if C1 < 0:
        raise HypothesisError("C1 must be >= 0")
    if theta0 <= 0:
        raise HypothesisError("theta0 must be positive")
    g0, dg0, limit = _g0_family(g0_spec)
    if not limit > 0:
        raise EnvelopeError(f"g0 must tend to a positive limit, got {limit}")
    env = GEnvelope(g0, dg0, float(C1), float(beta), float(theta0), limit, dict(g0_spec, C1=C1, beta=beta, theta0=theta0))
    r = _validation_grid(theta0) if grid is None else np.asarray(grid, float)
    g, lo, hi = env.g0(r), env.gunder(r), env.gbar(r)
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise EnvelopeError("g0 must be positive and finite")
    if np.any(lo <= 0):
        i = int(np.argmax(lo <= 0))
        raise EnvelopeError(f"lower envelope not positive at r={r[i]:.6g}; decrease C1 or raise theta0")
    if np.any(lo > g) or np.any(g > hi):
        raise EnvelopeError("envelope ordering g_lower <= g0 <= g_upper violated")
    slope = np.diff(lo)
    tol = 1e-14 * np.maximum(1.0, np.abs(lo[1:]))
    bad = slope < -tol
    if C1 > 0:
        # strictness is only checkable where the perturbation is above rounding
        resolvable = env.delta(r[1:]) > 1e-10 * np.maximum(1.0, np.abs(lo[1:]))
        bad |= (r[1:] > theta0) & (slope <= 0) & resolvable
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EnvelopeError(
            f"lower envelope is not increasing near r={r[i + 1]:.6g}; try a larger theta0 or an increasing g0"
        )
    return env


# ---------------------------------------------------------------- kinetics


@dataclass(frozen=True)
class Kinetics:
    """Exponents shared by all profile equations for given (k, l, tbar_k, tlow_l)."""

    k: int
    l: int
    tbar: float
    tlow: float

    def __post_init__(self):
        if not (0 <= self.tlow < self.tbar <= 1 + 1e-12):
            raise HypothesisError(f"need 0 <= tlow_l < tbar_k <= 1, got ({self.tlow}, {self.tbar})")

    @property
    def p(self):
        return self.k - self.l

    @property
    def tau(self):
        return self.tlow / self.tbar

    @property
    def K(self):
        return self.p / (self.tbar - self.tlow)

    @property
    def e(self):
        return self.tlow / (self.tbar - self.tlow)

    def G(self, v, A, B):
        """dv/dt given v, A = v - g and B = v - tau g."""
        return -(self.p / self.tbar) * v * A / B

    def quotient(self, f, df, r):
        """(f^k + tbar r f^(k-1) f') / (f^l + tlow r f^(l-1) f')."""
        num = f**self.k + self.tbar * r * f ** (self.k - 1) * df
        den = f**self.l + (self.tlow * r * f ** (self.l - 1) * df if self.l > 0 else 0.0)
        return num / den


def kinetics_from(tb, params):
    tbar, tlow = tb
    return Kinetics(params.k, params.l, float(tbar), float(tlow))


# ---------------------------------------------------------------- sampled profiles


@dataclass
class SampledProfile:
    """A profile sampled on a strictly increasing radial grid.

    ``dev`` is value - h0 computed without cancellation; ``tail`` is
    int_r^inf theta dev(theta) dtheta (including the extrapolated piece
    beyond the last node) and ``cum`` is int_{r_0}^r theta value dtheta.
    ``cum`` is stored as cum_level r^2/2 + cum_rem with the slowly varying
    cum_rem interpolated, so cum_at keeps its relative accuracy at large r.
    """

    r_nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    meta: dict
    dev: np.ndarray | None = None
    g: np.ndarray | None = None
    bound_low: np.ndarray | None = None
    bound_high: np.ndarray | None = None
    residual: np.ndarray | None = None
    cum: np.ndarray | None = None
    tail: np.ndarray | None = None
    cum_level: float = 0.0
    cum_rem: np.ndarray | None = None
    _splines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r_nodes, float)
        if r.ndim != 1 or np.any(np.diff(r) <= 0):
            raise DomainError("profile grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("profile values must be finite")
        if self.cum is not None and self.cum_rem is None:
            self.cum_rem = self.cum - self.cum_level * r * r / 2

    def _spline(self, name):
        if name not in self._splines:
            y = getattr(self, name)
            self._splines[name] = CubicSpline(np.log(self.r_nodes), y)
        return self._splines[name]

    def _check_range(self, r):
        r = np.asarray(r, float)
        lo, hi = self.r_nodes[0], self.r_nodes[-1]
        if np.any(r < lo * (1 - 1e-12)) or np.any(r > hi * (1 + 1e-12)):
            raise DomainError(f"radius outside profile range [{lo:.6g}, {hi:.6g}]")
        return np.clip(r, lo, hi)

    def value(self, r):
        return self._spline("values")(np.log(self._check_range(r)))

    def deriv(self, r):
        return self._spline("derivs")(np.log(self._check_range(r)))

    def dev_at(self, r):
        return self._spline("dev")(np.log(self._check_range(r)))

    def cum_at(self, r):
        r = self._check_range(r)
        return self._spline("cum_rem")(np.log(r)) + self.cum_level * r * r / 2

    def tail_at(self, r):
        if self.tail is None or np.isnan(self.tail[0]):
            raise DivergenceError("tail integral unresolved: integrate to a larger r_max")
        return self._spline("tail")(np.log(self._check_range(r)))

    def to_csv(self, path):
        n = self.r_nodes.size
        cols = [self.r_nodes, self.values, self.derivs]
        for extra in (self.bound_low, self.bound_high, self.residual):
            cols.append(np.full(n, np.nan) if extra is None else extra)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "value", "deriv", "bound_low", "bound_high", "residual"])
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])


@dataclass
class ReferenceProfile(SampledProfile):
    """h0 on (0, r_max] with the Picard history and cancellation-free v0 - g0."""

    a0: np.ndarray | None = None
    history: list = field(default_factory=list)
    fixed_point_residual: float = float("nan")

    def a0_at(self, r):
        return self._spline("a0")(np.log(self._check_range(r)))


def _t_grid(r_lo, r_hi):
    n = max(int(np.ceil((np.log(r_hi) - np.log(r_lo)) * NODES_PER_UNIT_T)) + 1, 33)
    return np.linspace(np.log(r_lo), np.log(r_hi), n)


# ---------------------------------------------------------------- reference profile h0


def _picard_map(a, t, r, g0, dg0, kin):
    v = g0 + a
    if np.any(v <= 0):
        raise DivergenceError("Picard iterate left the positive cone")
    ve = v**kin.e if kin.e else np.ones_like(v)
    K = kin.K
    integrand = dg0 * r ** (K + 1) * ve
    # int_0^{r_min} taken with the integrand frozen at r_min
    start = dg0[0] * ve[0] * r[0] ** (K + 1) / (K + 1)
    J = start + np.concatenate([[0.0], cumulative_simpson(integrand, x=t)])
    return -(v ** (-kin.e) if kin.e else 1.0) * r ** (-K) * J


def solve_h0(envelope: GEnvelope, tb, params, r_max=2e4, r_min=R_MIN_H0, tol=1e-10, max_iter=200):
    """Bounded solution of the profile equation with right-hand side g0.

    Integration by parts turns the fixed-point form into

        v0 = g0 - v0^(-e) r^(-K) int_0^r g0'(s) s^K v0(s)^e ds,   v0 = h0^(k-l),

    which is iterated from v0 = g0 and needs no derivative of the iterate.
    """
    kin = kinetics_from(tb, params)
    t = _t_grid(r_min, r_max)
    r = np.exp(t)
    g0 = np.asarray(envelope.g0(r), float)
    dg0 = np.asarray(envelope.dg0(r), float)
    a = np.zeros_like(r)
    history = []
    scale = float(np.max(g0))
    for _ in range(max_iter):
        a_new = _picard_map(a, t, r, g0, dg0, kin)
        diff = float(np.max(np.abs(a_new - a)))
        history.append(diff)
        a = a_new
        if diff <= 1e-15 * scale or (diff <= tol and len(history) > 1 and diff >= 0.5 * history[-2]):
            break
    else:
        if history[-1] > tol:
            raise DivergenceError(f"h0 Picard iteration did not converge (last step {history[-1]:.3e})", history)
    if history[-1] > tol:
        raise DivergenceError(f"h0 Picard iteration stalled at {history[-1]:.3e}", history)
    residual = float(np.max(np.abs(_picard_map(a, t, r, g0, dg0, kin) - a)) / scale)
    v = g0 + a
    p = kin.p
    h0 = v ** (1.0 / p)
    # dv/dt from the equation itself, with A = a0 and B = v0 - tau g0
    dv = kin.G(v, a, v - kin.tau * g0)
    dh0 = h0 * dv / (p * v * r)
    L = envelope.limit ** (1.0 / p)
    cum_rem = np.concatenate([[0.0], cumulative_simpson(r * r * (h0 - L), x=t)]) + (h0[0] - L) * r[0] ** 2 / 2
    cum = cum_rem + L * r * r / 2
    return ReferenceProfile(
        r_nodes=r,
        values=h0,
        derivs=dh0,
        meta={"kind": "h0", "envelope": envelope.spec, "tb": tuple(tb), "K": kin.K},
        dev=np.zeros_like(r),
        g=g0,
        residual=np.full_like(r, residual),
        cum=cum,
        cum_level=L,
        cum_rem=cum_rem,
        a0=a,
        history=history,
        fixed_point_residual=residual,
    )


# ---------------------------------------------------------------- h and H


def _deviation_rhs(kin, envelope, ref, sign):
    def rhs(t, y):
        r = np.exp(t)
        D = y[0]
        g0 = float(envelope.g0(r))
        a0 = float(ref.a0_at(r))
        v0 = g0 + a0
        d = sign * float(envelope.delta(r))
        v = v0 + D
        b0 = v0 - kin.tau * g0
        dA = D - d
        dB = D - kin.tau * d
        B = b0 + dB
        if B <= 0:
            raise SingularityError(f"denominator v - tau g vanished at r={r:.6g}")
        num = b0 * v * dA + a0 * (D * b0 - v0 * dB)
        return [-(kin.p / kin.tbar) * num / (B * b0)]

    return rhs


def _tail_beyond(r, y, floor=0.0):
    """int_R^inf of a power-law tail fitted to y(r) ~ C r^-q on the last decade.

    When no decaying power fits and y / r stays below ``floor`` on that decade,
    the deviation is rounding noise: the tail is taken as zero with error
    bound max|y| R.
    """
    R = r[-1]
    mask = r >= R / 10
    if np.all(y[mask] == 0):
        return 0.0, 0.0, np.inf
    ay = np.abs(y[mask])
    noise = np.max(ay / r[mask]) <= floor
    if np.any(ay == 0):
        return 0.0, float(np.max(ay) * R), np.inf
    q = -np.polyfit(np.log(r[mask]), np.log(ay), 1)[0]
    if q <= 1.0:
        if noise:
            return 0.0, float(np.max(ay) * R), np.inf
        raise DivergenceError(f"integrand decays like r^-{q:.3f}; the improper integral does not converge")
    tail = y[-1] * R / (q - 1)
    half = r >= R / np.sqrt(10)
    q2 = -np.polyfit(np.log(r[half]), np.log(np.abs(y[half])), 1)[0]
    err = abs(tail - y[-1] * R / (q2 - 1)) if q2 > 1 else abs(tail)
    return float(tail), float(err), float(q)


def _integrate_profile(kind, start, envelope, kin, ref, r_max, n_per_unit):
    sign = 1.0 if kind == "h" else -1.0
    p = kin.p
    if r_max > ref.r_nodes[-1] * (1 + 1e-12):
        raise DomainError("reference profile does not reach r_max")
    t_nodes = np.linspace(0.0, np.log(r_max), max(int(np.log(r_max) * n_per_unit) + 1, 33))
    rhs = _deviation_rhs(kin, envelope, ref, sign)
    v0_1 = float(envelope.g0(1.0) + ref.a0_at(1.0))
    y0 = [start**p - v0_1]
    # the envelopes have a kink at theta0; integrate the two smooth pieces separately
    breaks = [0.0]
    if 1.0 < envelope.theta0 < r_max:
        breaks.append(np.log(envelope.theta0))
    breaks.append(np.log(r_max))
    D = np.empty_like(t_nodes)
    for ta, tb_ in zip(breaks[:-1], breaks[1:]):
        sel = (t_nodes >= ta) & (t_nodes <= tb_)
        sol = solve_ivp(rhs, (ta, tb_), y0, method="DOP853", t_eval=t_nodes[sel], rtol=ODE_RTOL, atol=ODE_ATOL)
        if not sol.success:
            raise SingularityError(f"{kind} integration failed: {sol.message}")
        D[sel] = sol.y[0]
        y0 = [sol.y[0, -1]]
    r = np.exp(t_nodes)
    g0 = envelope.g0(r)
    a0 = ref.a0_at(r)
    v0 = g0 + a0
    d = sign * envelope.delta(r)
    v = v0 + D
    A = a0 + D - d  # v - g, accurate
    B = v - kin.tau * (g0 + d)
    dv = kin.G(v, A, B)
    f = v ** (1.0 / p)
    df = f * dv / (p * v * r)
    h0 = ref.value(r)
    dev = h0 * np.expm1(np.log1p(D / v0) / p)
    # int_1^r theta f = L (r^2 - 1)/2 + int_1^r theta (f - L); only the decaying part is quadratured
    L = envelope.limit ** (1.0 / p)
    cum_rem = np.concatenate([[0.0], cumulative_simpson(r * r * (f - L), x=t_nodes)]) - L / 2
    yd = r * dev
    back = np.concatenate([[0.0], cumulative_simpson((r * r * dev)[::-1], x=-t_nodes[::-1])])[::-1]
    try:
        tail_R, tail_err, q = _tail_beyond(r, yd, floor=1e-13 * L)
    except DivergenceError:
        # last decade not yet in the power-law regime (short r_max); tail_at will refuse
        tail_R, tail_err, q = np.nan, np.nan, np.nan
    # finite-difference check of the profile equation on the sampled values
    df_fd = np.gradient(f, t_nodes, edge_order=2) / r
    g = g0 + d
    residual = kin.quotient(f, df_fd, r) / g - 1.0
    return r, f, df, dev, A, g, (L, cum_rem), back + tail_R, residual, {"tail_R": tail_R, "tail_err": tail_err, "tail_q": q}


def _extend_left(kind, start, envelope, kin, r_min):
    """Solve the full equation (not the deviation) from r = 1 down to r_min."""
    warnings.warn("extending a profile below r = 1: the 1/r factor makes r = 0 singular", RuntimeWarning, stacklevel=3)
    g_fn = envelope.gbar if kind == "h" else envelope.gunder

    def rhs(t, y):
        r = np.exp(t)
        v = y[0]
        g = float(g_fn(r))
        return [kin.G(v, v - g, v - kin.tau * g)]

    t_nodes = np.linspace(0.0, np.log(r_min), 200)
    sol = solve_ivp(rhs, (0.0, np.log(r_min)), [start**kin.p], method="DOP853", t_eval=t_nodes, rtol=ODE_RTOL, atol=1e-14)
    if not sol.success:
        raise SingularityError(sol.message)
    return np.exp(t_nodes[::-1]), sol.y[0, ::-1] ** (1.0 / kin.p)


def _pack(kind, param, envelope, kin, ref, r_max, n_per_unit, r_min, low_fn, high_fn):
    r, f, df, dev, A, g, cum, tail, residual, tail_meta = _integrate_profile(
        kind, param, envelope, kin, ref, r_max, n_per_unit
    )
    low, high = low_fn(r), high_fn(r)
    meta = {
        "kind": kind,
        "param": float(param),
        "envelope": envelope.spec,
        "tb": (kin.tbar, kin.tlow),
        "K": kin.K,
        **tail_meta,
        "margin_A": A,  # v - g with its sign, computed without cancellation
    }
    if r_min < 1.0:
        rl, fl = _extend_left(kind, param, envelope, kin, r_min)
        meta["left"] = {"r": rl, "values": fl}
    L, cum_rem = cum
    return SampledProfile(
        r, f, df, meta, dev=dev, g=g, bound_low=low, bound_high=high, residual=residual,
        cum=cum_rem + L * r * r / 2, tail=tail, cum_level=L, cum_rem=cum_rem,
    )


def _reference(envelope, tb, params, r_max, ref):
    if ref is None:
        return solve_h0(envelope, tb, params, r_max=r_max)
    return ref


def integrate_h(delta, envelope: GEnvelope, tb, params, r_max=2e4, ref=None, n_per_unit=NODES_PER_UNIT_T, r_min=1.0, strict=True):
    """Subsolution profile: upper envelope, h(1) = delta, decreasing towards gbar^(1/(k-l))."""
    kin = kinetics_from(tb, params)
    p = kin.p
    sup = envelope.sup_gbar(1.0)
    if not delta > sup ** (1.0 / p):
        raise HypothesisError(f"delta={delta} must exceed sup gbar^(1/(k-l)) = {sup ** (1.0 / p):.12g}")
    ref = _reference(envelope, tb, params, r_max, ref)
    prof = _pack(
        "h", delta, envelope, kin, ref, r_max, n_per_unit, r_min,
        lambda r: envelope.gbar(r) ** (1.0 / p), lambda r: np.full_like(r, delta),
    )
    A = prof.meta["margin_A"]
    scale = np.maximum(1.0, prof.values)
    checks = {
        "lower": float(np.min(A / prof.g)),
        "upper": float(np.min(delta - prof.values)),
        "monotone": float(np.max(prof.derivs * prof.r_nodes / scale)),
    }
    prof.meta["checks"] = checks
    if strict:
        if checks["lower"] < -1e-12 or checks["upper"] < -1e-12 * delta:
            raise HypothesisError(f"h left the band gbar^(1/(k-l)) <= h <= delta: {checks}")
        if checks["monotone"] > 1e-12:
            raise HypothesisError(f"h is not non-increasing (h' r / h up to {checks['monotone']:.3e}); is gbar increasing?")
    return prof


def integrate_H(tau, envelope: GEnvelope, tb, params, r_max=2e4, ref=None, n_per_unit=NODES_PER_UNIT_T, r_min=1.0, strict=True):
    """Supersolution profile: lower envelope, H(1) = tau, increasing towards gunder^(1/(k-l))."""
    kin = kinetics_from(tb, params)
    p = kin.p
    g1 = float(envelope.gunder(1.0))
    lo, hi = kin.tau * g1, g1
    if not lo < tau**p < hi:
        raise HypothesisError(f"tau^(k-l)={tau ** p:.12g} must lie in ({lo:.12g}, {hi:.12g})")
    ref = _reference(envelope, tb, params, r_max, ref)
    prof = _pack(
        "H", tau, envelope, kin, ref, r_max, n_per_unit, r_min,
        lambda r: (kin.tau * envelope.gunder(r)) ** (1.0 / p), lambda r: envelope.gunder(r) ** (1.0 / p),
    )
    A = prof.meta["margin_A"]
    v = prof.values**p
    checks = {
        "upper": float(np.max(A / prof.g)),  # must be < 0
        "lower": float(np.min((v - kin.tau * prof.g) / prof.g)),  # must be > 0
        "monotone": float(np.min(prof.derivs * prof.r_nodes / np.maximum(1.0, prof.values))),
    }
    prof.meta["checks"] = checks
    if strict:
        if not (checks["upper"] < 0 and checks["lower"] > 0):
            raise HypothesisError(f"H left the band tau g <= H^(k-l) <= g: {checks}")
        if checks["monotone"] < -1e-12:
            raise HypothesisError("H is not non-decreasing; is gunder increasing?")
    return prof
