"""Independent reference computations used by the tests.

Nothing here calls into the production paths it is compared against.
"""
from itertools import combinations
from math import prod

import numpy as np


def sigma_bruteforce(lam, j):
    lam = [float(v) for v in lam]
    if j == 0:
        return 1.0
    return float(sum(prod(c) for c in combinations(lam, j)))


def sigma_excl_bruteforce(a, j, excluded):
    b = [0.0 if i in excluded else float(v) for i, v in enumerate(a)]
    return sigma_bruteforce(b, j)


def sigma_of_matrix(M, k):
    """sigma_k via the sum of k x k principal minors."""
    n = M.shape[0]
    if k == 0:
        return 1.0
    return float(sum(np.linalg.det(M[np.ix_(c, c)]) for c in combinations(range(n), k)))


def sigma_eig(M, k):
    return sigma_bruteforce(np.linalg.eigvalsh(M), k)


def lambda_direct(a, x, j):
    """Definition with dsigma_j/dlambda_i written out as sigma_{j-1} of the other entries."""
    a = np.asarray(a, float)
    x = np.asarray(x, float)
    n = a.size
    num = 0.0
    for i in range(n):
        others = [a[m] for m in range(n) if m != i]
        num += sigma_bruteforce(others, j - 1) * a[i] ** 2 * x[i] ** 2
    return num / (sigma_bruteforce(a, j) * float(np.sum(a * x * x)))


def random_directions(rng, n, count):
    """Half isotropic Gaussian, half vertex-heavy (x_i^2 ~ Dirichlet(0.02))."""
    half = count // 2
    g = rng.standard_normal((half, n))
    w = rng.dirichlet(np.full(n, 0.02), size=count - half)
    s = rng.choice([-1.0, 1.0], size=w.shape)
    return np.vstack([g, s * np.sqrt(w)])


def bruteforce_t_bounds(a, j, rng, count=10_000):
    X = random_directions(rng, len(a), count)
    vals = np.array([lambda_direct(a, x, j) for x in X])
    return vals.max(), vals.min()


def trapezoid_log(f, r0, r1, n=200_001):
    """Trapezoid rule in t = ln r for int_r0^r1 f(r) dr."""
    t = np.linspace(np.log(r0), np.log(r1), n)
    r = np.exp(t)
    y = f(r) * r
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))
