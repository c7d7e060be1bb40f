"""Radial solutions of S_k(D^2u)/S_l(D^2u) = 1 outside the unit ball.

With U = u'/r the equation integrates once to the flux identity

    r^n (C_n^k U^k - C_n^l U^l) = alpha,

so every radial solution is labelled by (alpha, b = u(1)).  Near infinity U
tends to a_hat and the interesting information sits in U/a_hat - 1, which is
why the solver works with eps = U/a_hat - 1 directly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import comb, inf, isfinite, log, sqrt

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from .errors import (
    BracketError,
    ConeViolationError,
    Dim2Error,
    DomainError,
    InadmissibleError,
    NoRootError,
    NotApplicableError,
    ThresholdError,
)
from .symmetric import radial_hessian_sigma

ROOT_RTOL = 1e-15
MU_R = 1e4


@dataclass(frozen=True)
class HqParams:
    n: int
    k: int
    l: int
    m: int

    def __post_init__(self):
        n, k, l, m = self.n, self.k, self.l, self.m
        if n < 2:
            raise DomainError(f"dimension n={n} must be >= 2")
        if not (0 <= l < k <= m <= n):
            raise DomainError(f"need 0 <= l < k <= m <= n, got (n,k,l,m)=({n},{k},{l},{m})")
        if k < 2:
            raise DomainError("k = 1 (Poisson) is not covered")

    @property
    def Cnk(self):
        return comb(self.n, self.k)

    @property
    def Cnl(self):
        return comb(self.n, self.l)

    @property
    def a_hat(self):
        return (self.Cnl / self.Cnk) ** (1.0 / (self.k - self.l))

    @property
    def x_star(self):
        """gamma_* / a_hat = (l/k)^(1/(k-l))."""
        return (self.l / self.k) ** (1.0 / (self.k - self.l))

    @property
    def gamma_star(self):
        return (self.l * self.Cnl / (self.k * self.Cnk)) ** (1.0 / (self.k - self.l))

    @property
    def gamma_m(self):
        if self.m == self.k:
            return inf
        return ((self.m - self.l) * self.Cnl / ((self.m - self.k) * self.Cnk)) ** (1.0 / (self.k - self.l))

    @property
    def flux_scale(self):
        # C_n^k a_hat^k == C_n^l a_hat^l
        return self.Cnl * self.a_hat**self.l


def _f_eps(eps, l, d):
    x = 1.0 + eps
    return x**l * np.expm1(d * np.log1p(eps))


def _df_eps(eps, l, d):
    x = 1.0 + eps
    out = d * x ** (l + d - 1)
    if l > 0:
        out = out + l * x ** (l - 1) * np.expm1(d * np.log1p(eps))
    return out


def solve_eps(r, alpha, params: HqParams, max_iter=200):
    """eps = U/a_hat - 1 at radius r (array or scalar).

    Solves x^l (x^(k-l) - 1) = beta with x = 1 + eps and
    beta = alpha / (C_n^l a_hat^l r^n), on the increasing branch x > x_star.
    """
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    l, d = params.l, params.k - params.l
    beta = alpha / (params.flux_scale * r**params.n)
    beta = np.broadcast_to(beta, r.shape).astype(float)
    lo = np.full(r.shape, params.x_star - 1.0)
    f_lo = _f_eps(lo, l, d) if l > 0 else np.full(r.shape, -1.0)
    # f has a double root at the lower edge, so a beta within rounding of f(lo)
    # is snapped to the edge instead of resolving sqrt(ulp) noise
    edge_tol = 1e-14 * np.maximum(1.0, np.abs(beta))
    if np.any(f_lo - beta > edge_tol):
        raise NoRootError(f"alpha={alpha} below the admissible range for some radius")
    short = beta - f_lo <= edge_tol
    # x^l (x^(k-l) - 1) >= x^(k-l) - 1 for x >= 1 gives a closed-form upper bracket
    hi = np.expm1(np.log1p(np.maximum(beta, 0.0)) / d) * (1 + 1e-12)
    for _ in range(60):
        low = _f_eps(hi, l, d) < beta
        if not np.any(low):
            break
        hi = np.where(low, 2 * hi + 1e-300, hi)
    else:
        raise BracketError("upper bracket does not enclose the root")
    eps = np.clip(beta / d, lo, hi)
    done = short.copy()
    eps = np.where(short, lo, eps)
    for _ in range(max_iter):
        act = ~done
        if not np.any(act):
            break
        e = eps[act]
        f = _f_eps(e, l, d) - beta[act]
        lo_a, hi_a = lo[act], hi[act]
        lo_a = np.where(f < 0, e, lo_a)
        hi_a = np.where(f > 0, e, hi_a)
        df = _df_eps(e, l, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        new = e - step
        bad = ~np.isfinite(new) | (new <= lo_a) | (new >= hi_a)
        new = np.where(bad, 0.5 * (lo_a + hi_a), new)
        scale = np.maximum(np.abs(new), 1e-300)
        conv = (f == 0) | (np.abs(new - e) <= ROOT_RTOL * scale) | (hi_a - lo_a <= ROOT_RTOL * scale)
        eps[act] = np.where(f == 0, e, new)
        lo[act], hi[act] = lo_a, hi_a
        idx = np.flatnonzero(act)
        done[idx[conv]] = True
    else:
        raise BracketError("safeguarded Newton did not converge")
    return float(eps[0]) if scalar else eps


def solve_U(r, alpha, params: HqParams):
    """Root of U^k - (C_n^l/C_n^k) U^l = alpha/(C_n^k r^n) on (gamma_*, inf)."""
    return params.a_hat * (1.0 + solve_eps(r, alpha, params))


def alpha_of_gamma(r, gamma, params: HqParams):
    """r^n (C_n^k gamma^k - C_n^l gamma^l), written as C_n^k r^n gamma^l (gamma^(k-l) - a_hat^(k-l))."""
    r = np.asarray(r, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    d = params.k - params.l
    with np.errstate(divide="ignore"):
        gap = params.a_hat**d * np.expm1(d * np.log(gamma / params.a_hat))
    val = params.Cnk * r**params.n * gamma**params.l * gap
    return val if val.ndim else float(val)


def flux_from_eps(r, eps, params: HqParams):
    """C_n^k r^(n-k) (u')^k - C_n^l r^(n-l) (u')^l evaluated without cancellation."""
    d = params.k - params.l
    return params.flux_scale * r**params.n * (1.0 + eps) ** params.l * np.expm1(d * np.log1p(eps))


@dataclass(frozen=True)
class Thresholds:
    alpha1: float
    alpha2: float
    alpha1_grid: float
    alpha2_grid: float


def thresholds(params: HqParams, r_max=1e3, n_grid=4000, require_finite_alpha2=False, tol=1e-10):
    """alpha_1 = sup_{r>1} U_r^{-1}(gamma_*), alpha_2 = inf_{r>1} U_r^{-1}(gamma_m).

    The r^n factor multiplies a sign-definite constant so both extrema are the
    r -> 1+ limits; the grid extrema are computed as an independent check.
    """
    if require_finite_alpha2 and params.m == params.k:
        raise NotApplicableError("alpha_2 is +inf when m = k")
    r = 1.0 + np.logspace(-14, np.log10(r_max - 1.0), n_grid)
    a1 = alpha_of_gamma(1.0, params.gamma_star, params)
    a1_grid = float(np.max(alpha_of_gamma(r, params.gamma_star, params)))
    if params.m == params.k:
        a2 = a2_grid = inf
    else:
        a2 = alpha_of_gamma(1.0, params.gamma_m, params)
        a2_grid = float(np.min(alpha_of_gamma(r, params.gamma_m, params)))
    for lim, grid in ((a1, a1_grid), (a2, a2_grid)):
        if isfinite(lim) and abs(lim - grid) > tol * max(1.0, abs(lim)):
            raise ThresholdError(f"grid extremum {grid} disagrees with limit {lim}")
    return Thresholds(float(a1), float(a2), a1_grid, a2_grid)


def _tail_integral(R, eps_R, n):
    # s*eps(s) ~ K s^(1-n) with K = R^n eps(R); int_R^inf = R^2 eps(R)/(n-2)
    return R * R * eps_R / (n - 2)


def mu_of_alpha(alpha, b, params: HqParams, R=MU_R, tol=1e-12):
    """Asymptotic constant c with u = a_hat r^2/2 + c + O(r^(2-n))."""
    if params.n == 2:
        raise Dim2Error("n = 2: use dim2_solution")
    a1 = alpha_of_gamma(1.0, params.gamma_star, params)
    if alpha < a1 - 1e-14 * max(1.0, abs(a1)):
        raise InadmissibleError(f"alpha={alpha} below alpha_1={a1}")
    a_hat = params.a_hat
    if alpha == 0:
        return b - a_hat / 2
    # substitute s = e^t so the integrand s^2 eps(e^t) is smooth on [0, ln R]
    def integrand(t):
        s = np.exp(t)
        return s * s * solve_eps(s, alpha, params)

    val, _ = quad(integrand, 0.0, log(R), epsabs=tol * 1e-2, epsrel=tol, limit=400)
    val += _tail_integral(R, solve_eps(R, alpha, params), params.n)
    return b - a_hat / 2 + a_hat * val


def _log_grid(r_max=1e3, n_nodes=2000):
    return np.geomspace(1.0, r_max, n_nodes)


@dataclass
class RadialSolution:
    params: HqParams
    alpha: float
    b: float
    c: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    U: np.ndarray
    eps: np.ndarray
    d2u: np.ndarray
    residual: np.ndarray
    flux: np.ndarray
    remainder: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residual)))

    @property
    def flux_drift(self):
        return float(np.max(np.abs(self.flux - self.alpha)) / max(1.0, abs(self.alpha)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u", "du", "U", "residual"])
            for row in zip(self.r, self.u, self.du, self.U, self.residual):
                w.writerow([repr(float(v)) for v in row])


def _second_derivative(r, U, alpha, params):
    # u'' = U + r U', with U' from differentiating the flux identity
    n, k, l = params.n, params.k, params.l
    dF = k * params.Cnk * U ** (k - 1)
    if l > 0:
        dF = dF - l * params.Cnl * U ** (l - 1)
    return U - n * alpha / (r**n * dF)


def _check_cone(r, d2u, U, params):
    for j in range(1, params.m + 1):
        s = radial_hessian_sigma(U * r, d2u, r, j, params.n)
        bad = np.flatnonzero(~(s > 0))
        if bad.size:
            i = bad[0]
            raise ConeViolationError(
                f"sigma_{j} <= 0 at r={r[i]:.6g}: profile leaves Gamma_{params.m}", order=j, radius=float(r[i])
            )


def radial_profile(alpha, b, params: HqParams, r_grid=None, check_cone=True):
    """Sample the radial solution with flux alpha and u(1) = b."""
    r = _log_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if r[0] != 1.0 or np.any(np.diff(r) <= 0):
        raise DomainError("grid must be strictly increasing and start at r = 1 (where u(1) = b)")
    th = thresholds(params)
    if alpha <= th.alpha1:
        raise ConeViolationError(
            f"alpha={alpha} <= alpha_1={th.alpha1}: U reaches gamma_* and S_{params.k} degenerates",
            order=params.k,
            radius=1.0,
        )
    n, a_hat = params.n, params.a_hat
    eps = np.asarray(solve_eps(r, alpha, params), dtype=float)
    U = a_hat * (1.0 + eps)
    du = r * U
    d2u = _second_derivative(r, U, alpha, params)
    if check_cone:
        _check_cone(r, d2u, U, params)
    sk = radial_hessian_sigma(du, d2u, r, params.k, n)
    sl = radial_hessian_sigma(du, d2u, r, params.l, n)
    residual = sk / sl - 1.0

    y = r * eps
    fwd = np.concatenate([[0.0], cumulative_simpson(y, x=r)])
    u = b + a_hat * (r * r - 1.0) / 2 + a_hat * fwd
    # remainder u - a_hat r^2/2 - c = -a_hat int_r^inf s eps ds, accumulated from the far end
    # integrating in -r keeps the abscissa increasing; back[i] = int_{r_i}^{r_max} s eps ds
    back = np.concatenate([[0.0], cumulative_simpson(y[::-1], x=-r[::-1])])[::-1]
    tail = back + (_tail_integral(r[-1], eps[-1], n) if n > 2 else 0.0)
    c = mu_of_alpha(alpha, b, params) if n > 2 else float("nan")
    return RadialSolution(
        params=params,
        alpha=float(alpha),
        b=float(b),
        c=c,
        r=r,
        u=u,
        du=du,
        U=U,
        eps=eps,
        d2u=d2u,
        residual=residual,
        flux=flux_from_eps(r, eps, params),
        remainder=-a_hat * tail,
        meta={"grid_c": b - a_hat / 2 + a_hat * tail[0]},
    )


def nu_of_rho(rho, b):
    """Constant in u = r^2 + (rho/2) ln r + nu + O(r^-2) for n = 2."""
    s = sqrt(1.0 + rho)
    return b - 0.5 + rho / 4 + (rho / 2) * log(2.0) - 0.5 * (s + rho * log(1.0 + s))


@dataclass
class Dim2Solution:
    rho: float
    b: float
    nu: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    remainder: np.ndarray
    residual: np.ndarray


def dim2_solution(rho, b, r_grid=None):
    """Closed-form radial solution of sigma_2/sigma_1 = 1 in the plane.

    Integrating once gives (u')^2 - 2 r u' - rho = 0, so u' = r + sqrt(r^2 + rho).
    """
    if rho < -1:
        raise InadmissibleError(f"rho={rho} < -1: no solution exists")
    r = _log_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(r < 1.0):
        raise DomainError("grid must lie in r >= 1")
    root = np.sqrt(r * r + rho)
    dgap = rho / (root + r)  # sqrt(r^2+rho) - r without cancellation
    du = r + root
    s1 = sqrt(1.0 + rho)
    nu = nu_of_rho(rho, b)
    u = (
        b
        - 0.5
        - 0.5 * (s1 + rho * log(1.0 + s1))
        + r * r
        + r * dgap / 2
        + (rho / 2) * (log(2.0) + np.log(r) + np.log1p(dgap / (2 * r)))
    )
    # u - r^2 - (rho/2) ln r - nu, expanded so nothing large cancels
    remainder = -(rho / 4) * dgap / (root + r) + (rho / 2) * np.log1p(dgap / (2 * r))
    residual = (du * du - 2 * r * du - rho) / np.maximum(1.0, du * du)
    return Dim2Solution(float(rho), float(b), nu, r, u, du, remainder, residual)


SL3 = HqParams(n=3, k=3, l=1, m=3)


def special_lagrangian_3d(alpha, b, r_grid=None):
    """Radial solutions of det D^2u = Delta u in R^3 (a_hat = sqrt 3)."""
    return radial_profile(alpha, b, SL3, r_grid)
