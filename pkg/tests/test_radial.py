from math import comb, log, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hessquot.errors import (
    ConeViolationError,
    Dim2Error,
    DomainError,
    InadmissibleError,
    NoRootError,
    NotApplicableError,
)
from hessquot.radial import (
    HqParams,
    alpha_of_gamma,
    dim2_solution,
    mu_of_alpha,
    nu_of_rho,
    radial_profile,
    solve_U,
    special_lagrangian_3d,
    thresholds,
)

from oracles import sigma_bruteforce, trapezoid_log

PARAM_SETS = [HqParams(3, 2, 0, 2), HqParams(4, 2, 1, 3), HqParams(3, 3, 1, 3), HqParams(5, 3, 1, 4)]


def admissible(params, u):
    th = thresholds(params)
    top = th.alpha2 if np.isfinite(th.alpha2) else th.alpha1 + 20
    return th.alpha1 + (top - th.alpha1) * (0.02 + 0.96 * u)


def test_params_validation():
    with pytest.raises(DomainError):
        HqParams(3, 2, 2, 3)
    with pytest.raises(DomainError):
        HqParams(3, 2, 0, 4)
    P = HqParams(3, 3, 1, 3)
    assert P.a_hat == pytest.approx(sqrt(3), rel=1e-15)
    assert P.gamma_star == pytest.approx(1.0, rel=1e-15)
    assert P.gamma_m == float("inf")
    for Q in PARAM_SETS:
        assert Q.gamma_star < Q.a_hat < Q.gamma_m


def test_solve_U_examples():
    P = HqParams(3, 3, 1, 3)
    for r in (1.0, 2.5, 40.0):
        assert solve_U(r, 0.0, P) == pytest.approx(P.a_hat, rel=1e-15)
    assert solve_U(1.0, -2.0, P) == pytest.approx(1.0, rel=1e-13)
    Q = HqParams(3, 2, 0, 2)
    assert solve_U(2.0, 1.0, Q) == pytest.approx(((1 + 2**-3) / 3) ** 0.5, rel=1e-14)


def test_solve_U_l0_closed_form():
    rng = np.random.default_rng(5)
    for n, k in [(3, 2), (4, 3), (5, 5)]:
        P = HqParams(n, k, 0, k)
        r = np.geomspace(1, 1e3, 50)
        alpha = float(rng.uniform(-0.9, 8))
        ref = ((1 + alpha * r ** (-n)) / comb(n, k)) ** (1 / k)
        np.testing.assert_allclose(solve_U(r, alpha, P), ref, rtol=1e-13)


def test_solve_U_below_range():
    with pytest.raises(NoRootError):
        solve_U(1.0, -2.5, HqParams(3, 3, 1, 3))


def test_alpha_of_gamma_examples():
    P = HqParams(3, 3, 1, 3)
    assert alpha_of_gamma(1.7, P.a_hat, P) == 0.0
    assert alpha_of_gamma(1.0, 1.0, P) == pytest.approx(-2.0, rel=1e-14)
    # gamma_* = 0 when l = 0 (gamma^0 read as 1): the value is -r^n
    Q = HqParams(3, 2, 0, 3)
    assert alpha_of_gamma(1.0, 0.0, Q) == -1.0
    assert alpha_of_gamma(2.0, 0.0, Q) == -8.0


@given(st.sampled_from(PARAM_SETS), st.floats(0, 1), st.floats(1.0, 10.0))
@settings(max_examples=60)
def test_round_trip(params, u, r):
    alpha = admissible(params, u)
    U = solve_U(r, alpha, params)
    assert alpha_of_gamma(r, U, params) == pytest.approx(alpha, rel=1e-10, abs=1e-10)
    # direct polynomial form of the flux as an independent check
    direct = r**params.n * (params.Cnk * U**params.k - params.Cnl * U**params.l)
    assert direct == pytest.approx(alpha, abs=1e-10 * r**params.n * params.Cnk * U**params.k)


@given(st.sampled_from(PARAM_SETS), st.floats(0, 1), st.floats(10.0, 1e3))
@settings(max_examples=40)
def test_round_trip_far_field(params, u, r):
    # going through U (not U/a_hat - 1) the error is one ulp of U times d alpha/d U
    alpha = admissible(params, u)
    U = solve_U(r, alpha, params)
    dalpha = r**params.n * (params.k * params.Cnk * U**params.k + params.l * params.Cnl * U**params.l)
    assert abs(alpha_of_gamma(r, U, params) - alpha) <= 1e-10 + 8e-16 * dalpha


@given(st.sampled_from(PARAM_SETS), st.floats(0, 1), st.floats(1.0, 50.0))
@settings(max_examples=40)
def test_U_increasing_in_alpha(params, u, r):
    alpha = admissible(params, u)
    h = 1e-4
    assert solve_U(r, alpha + h, params) > solve_U(r, alpha, params)


@pytest.mark.parametrize(
    "n,k,m,expected",
    [(3, 2, 3, 2.0), (4, 2, 3, 2.0), (5, 3, 4, 3.0)],
)
def test_thresholds_l0(n, k, m, expected):
    th = thresholds(HqParams(n, k, 0, m))
    assert th.alpha1 == pytest.approx(-1.0, abs=1e-10)
    assert th.alpha2 == pytest.approx(expected, abs=1e-10)
    assert th.alpha1_grid == pytest.approx(th.alpha1, abs=1e-10)
    assert th.alpha2_grid == pytest.approx(th.alpha2, abs=1e-10)


def test_thresholds_m_equals_k():
    th = thresholds(HqParams(3, 3, 1, 3))
    assert th.alpha1 == pytest.approx(-2.0, abs=1e-10)
    assert th.alpha2 == float("inf")
    assert thresholds(HqParams(3, 2, 0, 2)).alpha1 == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(NotApplicableError):
        thresholds(HqParams(3, 3, 1, 3), require_finite_alpha2=True)


def test_mu_examples():
    P = HqParams(3, 3, 1, 3)
    assert mu_of_alpha(0.0, 0.4, P) == pytest.approx(0.4 - sqrt(3) / 2, abs=1e-12)
    with pytest.raises(Dim2Error):
        mu_of_alpha(1.0, 0.0, HqParams(2, 2, 1, 2))
    with pytest.raises(InadmissibleError):
        mu_of_alpha(-2.5, 0.0, P)


def test_mu_vs_trapezoid_oracle():
    P = HqParams(3, 2, 0, 2)
    a_hat = P.a_hat
    alpha, R = 1.0, 1e4

    def excess(s):
        return s * (((1 + alpha * s**-3) / 3) ** 0.5 - a_hat)

    # tail: s (U - a_hat) ~ a_hat alpha s^-2 / 2
    ref = -a_hat / 2 + trapezoid_log(excess, 1.0, R) + a_hat * alpha / (2 * R)
    assert ref == pytest.approx(-0.01437810, abs=1e-8)  # frozen oracle value
    assert mu_of_alpha(alpha, 0.0, P) == pytest.approx(ref, abs=1e-6)


def test_mu_increasing():
    rng = np.random.default_rng(9)
    for P in PARAM_SETS:
        for _ in range(5):
            a, b = sorted(admissible(P, rng.uniform(size=2)))
            assert mu_of_alpha(b, 0.0, P) > mu_of_alpha(a, 0.0, P)
        assert np.isfinite(mu_of_alpha(thresholds(P).alpha1, 0.0, P))


def test_profile_alpha_zero_is_quadratic():
    P = HqParams(4, 2, 1, 3)
    sol = radial_profile(0.0, 0.25, P)
    np.testing.assert_allclose(sol.u, P.a_hat * sol.r**2 / 2 + 0.25 - P.a_hat / 2, rtol=1e-14)
    assert sol.max_residual == 0.0
    assert sol.c == 0.25 - P.a_hat / 2


@pytest.mark.parametrize("params", PARAM_SETS)
def test_profile_invariants(params):
    rng = np.random.default_rng(21)
    for alpha in admissible(params, rng.uniform(size=3)):
        sol = radial_profile(alpha, 0.1, params)
        assert sol.u[0] == 0.1
        assert sol.max_residual <= 1e-8
        assert sol.flux_drift <= 1e-9
        assert np.all(sol.U > params.gamma_star)
        assert np.all(sol.U < params.gamma_m)
        for j in range(1, params.m + 1):
            lam_j = [sigma_bruteforce([sol.d2u[i]] + [sol.U[i]] * (params.n - 1), j) for i in (0, 500, 1999)]
            assert min(lam_j) > 0
        if params.m == params.n:
            assert np.all(sol.d2u > 0)


def test_profile_against_finite_differences():
    # rebuild u'' and the quotient from the sampled u alone
    P = HqParams(4, 2, 1, 3)
    r = np.linspace(1.0, 3.0, 4001)
    sol = radial_profile(1.3, 0.0, P, r_grid=r)
    h = r[1] - r[0]
    d1 = np.gradient(sol.u, h, edge_order=2)
    d2 = np.gradient(d1, h, edge_order=2)
    inner = slice(5, -5)
    np.testing.assert_allclose(d1[inner], sol.du[inner], rtol=1e-6)
    np.testing.assert_allclose(d2[inner], sol.d2u[inner], rtol=1e-4)
    for i in (10, 1000, 3000):
        lam = [d2[i]] + [d1[i] / r[i]] * 3
        assert sigma_bruteforce(lam, 2) / sigma_bruteforce(lam, 1) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("params", PARAM_SETS)
def test_remainder_slope(params):
    sol = radial_profile(admissible(params, 0.5), 0.0, params)
    mask = (sol.r >= 10) & (sol.r <= 1e3)
    slope = np.polyfit(np.log(sol.r[mask]), np.log(np.abs(sol.remainder[mask])), 1)[0]
    assert abs(slope - (2 - params.n)) <= 0.15
    direct = sol.u - params.a_hat * sol.r**2 / 2 - sol.c
    np.testing.assert_allclose(direct[mask], sol.remainder[mask], atol=1e-8)


def test_cone_violation():
    P = HqParams(3, 2, 0, 3)
    th = thresholds(P)
    with pytest.raises(ConeViolationError) as exc:
        radial_profile(th.alpha2 + 0.05, 0.0, P)
    assert exc.value.order == 3
    assert exc.value.radius == 1.0
    with pytest.raises(ConeViolationError):
        radial_profile(th.alpha1 - 0.01, 0.0, P)
    radial_profile(th.alpha2 - 0.05, 0.0, P)


def test_dim2_examples():
    assert nu_of_rho(0.0, 1.5) == 0.5
    assert nu_of_rho(-1.0, 0.0) == pytest.approx(-0.75 - log(2) / 2, rel=1e-15)
    with pytest.raises(InadmissibleError):
        dim2_solution(-1.01, 0.0)
    grid_up = np.linspace(-1, 0, 100)
    grid_down = np.linspace(0, 10, 100)
    assert np.all(np.diff([nu_of_rho(p, 0.0) for p in grid_up]) > 0)
    assert np.all(np.diff([nu_of_rho(p, 0.0) for p in grid_down]) < 0)


@pytest.mark.parametrize("rho", [-1.0, -0.3, 0.7, 4.0])
def test_dim2_profile(rho):
    sol = dim2_solution(rho, 0.2)
    assert sol.u[0] == pytest.approx(0.2, abs=1e-14)
    assert np.max(np.abs(sol.residual)) <= 1e-12
    # closed-form u against a fine quadrature of u' = r + sqrt(r^2 + rho)
    r = sol.r[sol.r <= 20]
    ref = 0.2 + np.array([quad(lambda s: s + np.sqrt(s * s + rho), 1.0, x, epsabs=1e-13, epsrel=1e-13)[0] for x in r[1::50]])
    np.testing.assert_allclose(sol.u[: r.size][1::50], ref, rtol=1e-8)
    mask = (sol.r >= 50) & (sol.r <= 2000)
    direct = sol.u - sol.r**2 - rho / 2 * np.log(sol.r) - sol.nu
    np.testing.assert_allclose(direct[mask], sol.remainder[mask], atol=1e-9)
    if rho != 0:
        slope = np.polyfit(np.log(sol.r[mask]), np.log(np.abs(sol.remainder[mask])), 1)[0]
        assert abs(slope + 2) <= 0.15


def test_special_lagrangian():
    sol = special_lagrangian_3d(0.0, 1.0)
    np.testing.assert_allclose(sol.u, sqrt(3) / 2 * sol.r**2 + 1 - sqrt(3) / 2, rtol=1e-14)
    assert thresholds(sol.params).alpha1 == pytest.approx(-2.0, abs=1e-10)
    sol = special_lagrangian_3d(0.8, 1.0)
    u1 = sol.du[0]
    srad = sol.du**3 - 3 * sol.r**2 * sol.du - u1**3 + 3 * u1
    assert np.max(np.abs(srad) / np.maximum(1.0, sol.du**3)) <= 1e-9
    lam = np.stack([sol.d2u, sol.U, sol.U], axis=1)
    det = lam.prod(axis=1)
    lap = lam.sum(axis=1)
    assert np.max(np.abs(det / lap - 1)) <= 1e-8


def test_profile_csv(tmp_path):
    sol = radial_profile(0.5, 0.0, HqParams(3, 2, 0, 2), r_grid=np.geomspace(1, 10, 20))
    p = tmp_path / "prof.csv"
    sol.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "r,u,du,U,residual"
    assert len(lines) == 21
