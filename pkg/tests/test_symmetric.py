import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessquot.errors import DegenerateDirectionError, DomainError, OrderOutOfRangeError
from hessquot.symmetric import (
    Spectrum,
    elem_sym,
    elem_sym_all,
    elem_sym_excluding,
    exclusion_table,
    lambda_ratio,
    radial_hessian_sigma,
    rank_one_sigma,
    t_bounds,
)

from oracles import (
    bruteforce_t_bounds,
    lambda_direct,
    sigma_bruteforce,
    sigma_eig,
    sigma_excl_bruteforce,
    sigma_of_matrix,
)

spectra = st.lists(st.floats(0.05, 5.0), min_size=1, max_size=7)


@pytest.mark.parametrize(
    "lam, j, expected",
    [((1, 1, 1), 2, 3.0), ((1, 2, 3), 3, 6.0), ((1, 2, 3), 2, 11.0), ((4, 5), 0, 1.0)],
)
def test_elem_sym_examples(lam, j, expected):
    assert elem_sym(lam, j) == expected


@pytest.mark.parametrize("j", [-1, 4])
def test_elem_sym_order_range(j):
    with pytest.raises(OrderOutOfRangeError):
        elem_sym((1, 2, 3), j)


@given(spectra, st.data())
def test_elem_sym_matches_enumeration(lam, data):
    j = data.draw(st.integers(0, len(lam)))
    ref = sigma_bruteforce(lam, j)
    assert elem_sym(lam, j) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_elem_sym_integer_inputs_exact():
    lam = np.arange(1, 9)
    e = elem_sym_all(lam)
    assert [int(v) for v in e] == [round(sigma_bruteforce(lam, j)) for j in range(9)]


def test_exclusion_examples():
    # excluded indices are 0-based
    assert elem_sym_excluding((1, 2, 3), 1, {0}) == 5.0
    assert elem_sym_excluding((1, 2, 3), 2, {1}) == 3.0
    a = (1.0, 2.0, 3.0)
    assert elem_sym(a, 2) == elem_sym_excluding(a, 2, {2}) + a[2] * elem_sym_excluding(a, 1, {2})
    assert elem_sym_excluding(a, 2, {2}) == 2.0


def test_exclusion_bad_index():
    with pytest.raises(IndexError):
        elem_sym_excluding((1, 2, 3), 1, {3})


def test_exclusion_more_than_remaining_is_zero():
    assert elem_sym_excluding((1, 2, 3), 3, {0}) == 0.0


@given(spectra, st.data())
def test_exclusion_matches_zeroing(a, data):
    n = len(a)
    j = data.draw(st.integers(0, n))
    excl = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    assert elem_sym_excluding(a, j, excl) == pytest.approx(
        sigma_excl_bruteforce(a, j, excl), rel=1e-12, abs=1e-300
    )


@given(spectra, st.data())
def test_split_identity(a, data):
    n = len(a)
    k = data.draw(st.integers(1, n))
    i = data.draw(st.integers(0, n - 1))
    lhs = elem_sym(a, k)
    rhs = elem_sym_excluding(a, k, {i}) + a[i] * elem_sym_excluding(a, k - 1, {i})
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(spectra, st.data())
def test_euler_identity(a, data):
    n = len(a)
    k = data.draw(st.integers(1, n))
    T = exclusion_table(a, k)
    assert np.dot(a, T[k - 1]) == pytest.approx(k * elem_sym(a, k), rel=1e-12)


def test_lambda_examples():
    a = Spectrum((2.0, 2.0, 2.0, 2.0))
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(4)
        assert lambda_ratio(a, x, 3) == pytest.approx(3 / 4, rel=1e-14)
    assert lambda_ratio((1, 2, 3), (0, 0, 1), 2) == pytest.approx(9 / 11, rel=1e-15)
    x = np.array([0.3, -1.2, 0.7])
    assert lambda_ratio((1, 2, 3), x, 2) == pytest.approx(lambda_ratio((1, 2, 3), 2 * x, 2), rel=1e-15)


def test_lambda_zero_direction():
    with pytest.raises(DegenerateDirectionError):
        lambda_ratio((1, 2, 3), (0, 0, 0), 2)


@given(spectra, st.data())
@settings(max_examples=50)
def test_lambda_matches_definition(a, data):
    n = len(a)
    j = data.draw(st.integers(1, n))
    x = data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n).filter(lambda v: sum(t * t for t in v) > 1e-3))
    assert lambda_ratio(a, x, j) == pytest.approx(lambda_direct(a, x, j), rel=1e-11)


def test_t_bounds_examples():
    tb = t_bounds((1, 1, 1), 2)
    assert (tb.t_upper, tb.t_lower) == pytest.approx((2 / 3, 2 / 3), rel=1e-15)
    tb = t_bounds((1, 2, 3), 2)
    assert (tb.t_lower, tb.t_upper) == pytest.approx((5 / 11, 9 / 11), rel=1e-15)
    tb = t_bounds((0.3, 1.7, 2.2, 5.0), 4)
    assert (tb.t_upper, tb.t_lower) == pytest.approx((1.0, 1.0), rel=1e-15)
    assert t_bounds((1, 2, 3), 0) == type(tb)(0.0, 0.0, 0)


def test_t_bounds_vs_bruteforce():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 9))
        a = np.sort(rng.uniform(0.1, 4.0, n))
        j = int(rng.integers(1, n + 1))
        hi, lo = bruteforce_t_bounds(a, j, rng, count=10_000)
        tb = t_bounds(a, j)
        assert abs(tb.t_upper - hi) <= 1e-9
        assert abs(tb.t_lower - lo) <= 1e-9


@given(st.lists(st.floats(0.05, 5.0), min_size=2, max_size=8))
def test_t_bounds_chains(a):
    n = len(a)
    a = sorted(a)
    uppers, lowers = [], []
    for j in range(1, n + 1):
        tb = t_bounds(a, j)
        assert tb.t_lower <= j / n + 1e-13
        assert j / n <= tb.t_upper + 1e-13
        assert 0 < tb.t_lower and tb.t_upper <= 1 + 1e-13
        uppers.append(tb.t_upper)
        lowers.append(tb.t_lower)
    assert all(u2 >= u1 - 1e-13 for u1, u2 in zip(uppers, uppers[1:]))
    assert all(v2 >= v1 - 1e-13 for v1, v2 in zip(lowers, lowers[1:]))
    assert uppers[-1] == pytest.approx(1.0) and lowers[-1] == pytest.approx(1.0)
    assert uppers[0] == pytest.approx(a[-1] / sum(a))
    assert lowers[0] == pytest.approx(a[0] / sum(a))


def test_rank_one_examples():
    assert rank_one_sigma((1, 1), (1, 0), 1.0, 1) == 3.0
    assert rank_one_sigma((1, 2, 3), (1, 1, 1), 2.0, 2) == 35.0
    M = np.diag([1.0, 2, 3]) + 2.0 * np.ones((3, 3))
    assert sigma_of_matrix(M, 2) == pytest.approx(35.0, rel=1e-13)
    p = (0.4, 1.5, 2.5)
    for k in range(4):
        assert rank_one_sigma(p, (3, -1, 2), 0.0, k) == elem_sym(p, k)


def test_rank_one_vs_eigen():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        p = rng.uniform(-2, 3, n)
        q = rng.uniform(-1.5, 1.5, n)
        s = float(rng.uniform(-2, 2))
        k = int(rng.integers(0, n + 1))
        ref = sigma_eig(np.diag(p) + s * np.outer(q, q), k)
        assert abs(rank_one_sigma(p, q, s, k) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_radial_hessian_sigma():
    from math import comb

    for n in (2, 3, 5):
        for j in range(n + 1):
            assert radial_hessian_sigma(1.7, 1.0, 1.7, j, n) == pytest.approx(comb(n, j))
    assert radial_hessian_sigma(2.0, 0.0, 1.0, 2, 3) == 4.0
    a_hat = (3 / 1) ** 0.5  # n=3, k=3, l=1
    r = 2.3
    s3 = radial_hessian_sigma(a_hat * r, a_hat, r, 3, 3)
    s1 = radial_hessian_sigma(a_hat * r, a_hat, r, 1, 3)
    assert s3 / s1 == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(DomainError):
        radial_hessian_sigma(1.0, 1.0, 0.0, 1, 3)


def test_radial_hessian_matches_matrix():
    rng = np.random.default_rng(3)
    n = 4
    for _ in range(10):
        u1, u2, r = rng.uniform(0.2, 3, 3)
        lam = [u2] + [u1 / r] * (n - 1)
        for j in range(n + 1):
            assert radial_hessian_sigma(u1, u2, r, j, n) == pytest.approx(sigma_bruteforce(lam, j), rel=1e-12)


def test_spectrum_invariants():
    s = Spectrum((3.0, 1.0, 2.0))
    assert s.a == (1.0, 2.0, 3.0)
    with pytest.raises(DomainError):
        Spectrum((1.0, -1.0))
    a = Spectrum.normalized((1.0, 1.2, 1.5), 2, 1)
    assert a.in_A_kl(2, 1)
    assert not Spectrum((1.0, 1.2, 1.5)).in_A_kl(2, 1)
