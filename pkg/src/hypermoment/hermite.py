"""Probabilists' Hermite polynomials and the characteristic polynomial of the regularized system."""
from __future__ import annotations

from functools import lru_cache
from math import comb, log, sqrt

import numpy as np
from scipy.linalg import eigh_tridiagonal


class InadmissibleState(ValueError):
    """Density or temperature is not strictly positive."""


def hermite_eval(k: int, x):
    """``He_k(x)`` by the three-term recurrence; ``x`` may be an array."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for n in range(1, k):
        prev, cur = cur, x * cur - n * prev
    return cur if cur.ndim else float(cur)


def hermite_all(kmax: int, x) -> np.ndarray:
    """Stack ``[He_0(x), ..., He_kmax(x)]`` along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for n in range(1, kmax):
        out[n + 1] = x * out[n] - n * out[n - 1]
    return out


@lru_cache(maxsize=None)
def _roots(k: int) -> tuple[float, ...]:
    # Jacobi matrix of the monic recurrence: zero diagonal, off-diagonals sqrt(j).
    if k == 1:
        return (0.0,)
    off = np.sqrt(np.arange(1, k, dtype=float))
    vals = eigh_tridiagonal(np.zeros(k), off, eigvals_only=True)
    vals = np.sort(vals)
    # enforce exact symmetry about zero
    sym = 0.5 * (vals - vals[::-1])
    if k % 2:
        sym[k // 2] = 0.0
    return tuple(float(v) for v in sym)


def hermite_roots(k: int) -> np.ndarray:
    """The ``k`` sorted real zeros of ``He_k``."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    return np.array(_roots(k))


class HermiteRootTable:
    """Immutable per-degree cache of Hermite zeros up to ``kmax``."""

    def __init__(self, kmax: int):
        self.kmax = kmax
        self._table = tuple(_roots(k) for k in range(1, kmax + 1))

    def __getitem__(self, k: int) -> tuple[float, ...]:
        if not 1 <= k <= self.kmax:
            raise KeyError(k)
        return self._table[k - 1]

    def root(self, k: int, i: int) -> float:
        """``C_i^k`` with 1-based ``i``."""
        return self[k][i - 1]

    def max_root(self, k: int) -> float:
        return self[k][-1]


def multiplicity_exponent(D: int, M: int, k: int) -> int:
    """Power of ``He_k`` in the characteristic polynomial, ``C(D-1+M-k, D-2)``."""
    if D == 1:
        return 1 if k == M + 1 else 0
    return comb(D - 1 + M - k, D - 2)


def char_poly_factors(D: int, M: int) -> list[tuple[int, int]]:
    """``[(k, exponent)]`` for ``k = 1..M+1``."""
    return [(k, multiplicity_exponent(D, M, k)) for k in range(1, M + 2)]


def char_poly(D: int, M: int, u1: float, theta: float, lam: float) -> tuple[float, int, float]:
    """Characteristic polynomial of the regularized 1D-split matrix at ``lam``.

    Returns ``(value, sign, log_abs)``.  ``value`` may overflow to ``inf``
    for large ``D``/``M``; ``sign`` and ``log_abs`` are always finite unless
    the polynomial vanishes (``sign = 0``, ``log_abs = -inf``).
    """
    if theta <= 0:
        raise InadmissibleState(f"theta = {theta} must be positive")
    s = sqrt(theta)
    x = (lam - u1) / s
    he = hermite_all(M + 1, x)
    sign = 1
    logabs = 0.0
    for k, e in char_poly_factors(D, M):
        if e == 0:
            continue
        factor = he[k]
        if factor == 0.0:
            return 0.0, 0, float("-inf")
        if factor < 0 and e % 2:
            sign = -sign
        logabs += e * (log(abs(factor)) + 0.5 * k * log(theta))
    with np.errstate(over="ignore"):
        value = sign * float(np.exp(logabs)) if logabs < 709.0 else sign * float("inf")
    return value, sign, logabs
