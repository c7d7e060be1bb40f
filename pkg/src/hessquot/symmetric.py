"""Elementary symmetric functions of spectra and the quantities built on them.

All functions treat their inputs as immutable and return new arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DegenerateDirectionError, DomainError, OrderOutOfRangeError

A_KL_TOL = 1e-12


def elem_sym_all(lam, jmax=None):
    """Return ``[e_0, e_1, ..., e_jmax]`` of the entries of ``lam``.

    Uses the prefix recurrence e_j(a_1..a_i) = e_j(a_1..a_{i-1}) + a_i e_{j-1}(a_1..a_{i-1}),
    which only adds non-negative terms for non-negative input.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if jmax is None:
        jmax = n
    e = np.zeros(lam.shape[:-1] + (jmax + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        ai = lam[..., i : i + 1]
        top = min(i + 1, jmax)
        # right-hand side is evaluated on the previous prefix before assignment
        e[..., 1 : top + 1] = e[..., 1 : top + 1] + ai * e[..., 0:top]
    return e


def elem_sym(lam, j):
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if j < 0 or j > n:
        raise OrderOutOfRangeError(f"order j={j} outside [0, {n}]")
    return elem_sym_all(lam, j)[..., j]


def _check_indices(n, excluded):
    idx = sorted(set(int(i) for i in excluded))
    for i in idx:
        if i < 0 or i >= n:
            raise IndexError(f"excluded index {i} outside [0, {n - 1}]")
    return idx


def elem_sym_excluding(a, j, excluded):
    """sigma_j of ``a`` with the entries at 0-based positions ``excluded`` set to zero."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    idx = _check_indices(n, excluded)
    if j < 0 or j > n:
        raise OrderOutOfRangeError(f"order j={j} outside [0, {n}]")
    keep = np.delete(a, idx, axis=-1)
    if j > keep.shape[-1]:
        return 0.0
    return float(elem_sym_all(keep, j)[j])


def exclusion_table(a, jmax=None):
    """Table ``T[j, i] = sigma_{j;i}(a)`` for ``j = 0..jmax``.

    Re-runs the recurrence on each reduced vector; O(n^2 jmax), meant to be
    computed once per spectrum and reused.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    if jmax is None:
        jmax = n
    T = np.zeros((jmax + 1, n))
    for i in range(n):
        e = elem_sym_all(np.delete(a, i), min(jmax, n - 1))
        T[: e.size, i] = e
    return T


def _sigma_minus_one_excl(T, j):
    # sigma_{-1;i} = 0 by convention
    if j - 1 < 0:
        return np.zeros(T.shape[1])
    return T[j - 1]


@dataclass(frozen=True)
class Spectrum:
    """Positive diagonal of A, sorted ascending."""

    a: tuple

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("empty spectrum")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError("spectrum entries must be finite and strictly positive")
        object.__setattr__(self, "a", tuple(float(v) for v in np.sort(arr)))

    @property
    def arr(self):
        return np.array(self.a)

    @property
    def n(self):
        return len(self.a)

    def sigma(self, j):
        return float(elem_sym(self.arr, j))

    def quotient_defect(self, k, l):
        """sigma_k/sigma_l - 1."""
        return self.sigma(k) / self.sigma(l) - 1.0

    def in_A_kl(self, k, l, tol=A_KL_TOL):
        return abs(self.quotient_defect(k, l)) <= tol

    @classmethod
    def isotropic(cls, n, scale):
        return cls(tuple([float(scale)] * n))

    @classmethod
    def normalized(cls, shape, k, l):
        """Rescale ``shape`` so that sigma_k = sigma_l (membership in A_{k,l})."""
        shape = np.asarray(shape, dtype=float)
        s = (elem_sym(shape, l) / elem_sym(shape, k)) ** (1.0 / (k - l))
        return cls(tuple(shape * s))


def _as_array(a):
    return a.arr if isinstance(a, Spectrum) else np.asarray(a, dtype=float)


def lambda_ratio(a, x, j):
    """Directional weight sum_i sigma_{j-1;i} a_i^2 x_i^2 / (sigma_j sum_i a_i x_i^2)."""
    a = _as_array(a)
    x = np.asarray(x, dtype=float)
    w = x * x
    den_w = np.sum(a * w, axis=-1)
    if np.any(den_w == 0):
        raise DegenerateDirectionError("direction x must be nonzero")
    T = exclusion_table(a, j)
    num = np.sum(_sigma_minus_one_excl(T, j) * a * a * w, axis=-1)
    return num / (elem_sym(a, j) * den_w)


@dataclass(frozen=True)
class TBounds:
    t_upper: float
    t_lower: float
    order: int


def coordinate_weights(a, j):
    """a_i sigma_{j-1;i}(a) / sigma_j(a) for each i (the values of Lambda_j on the axes)."""
    a = _as_array(a)
    n = a.size
    if j < 0 or j > n:
        raise OrderOutOfRangeError(f"order j={j} outside [0, {n}]")
    if j == 0:
        return np.zeros(n)
    T = exclusion_table(a, j)
    return a * T[j - 1] / elem_sym(a, j)


def t_bounds(a, j):
    # Lambda_j is a ratio of two positive linear forms in w_i = x_i^2, so its
    # extrema over the simplex sit at the vertices (coordinate directions).
    c = coordinate_weights(a, j)
    return TBounds(float(c.max()), float(c.min()), j)


def rank_one_sigma(p, q, s, k):
    """sigma_k of the eigenvalues of diag(p) + s q q^T, without an eigensolve."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = p.size
    if k < 0 or k > n:
        raise OrderOutOfRangeError(f"order k={k} outside [0, {n}]")
    base = elem_sym(p, k)
    if k == 0:
        return float(base)
    T = exclusion_table(p, k - 1)
    return float(base + s * np.dot(T[k - 1], q * q))


def radial_hessian_sigma(u1, u2, r, j, n):
    """sigma_j of (u'', u'/r, ..., u'/r) for a radial function."""
    if np.any(np.asarray(r) <= 0):
        raise DomainError("radius must be positive")
    if j < 0 or j > n:
        raise OrderOutOfRangeError(f"order j={j} outside [0, {n}]")
    if j == 0:
        return np.ones_like(np.asarray(u1 / r, dtype=float))
    g = u1 / r
    term1 = comb(n - 1, j - 1) * u2 * g ** (j - 1)
    term2 = comb(n - 1, j) * g**j if j <= n - 1 else 0.0
    return term1 + term2
