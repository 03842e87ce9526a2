"""Multi-index bookkeeping for truncated Hermite moment systems.

Multi-indices are plain tuples of non-negative ints.  Moments with
``|alpha| <= M`` are ordered by total order first and, inside one order,
by decreasing first component (then second, ...), which is the ordering
the moment vector ``w`` uses.  Ordinals are 1-based.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial, prod
from typing import Iterator, Sequence

MultiIndex = tuple[int, ...]

MAX_CLASS_ORDER = 20


class OrderOutOfRange(ValueError):
    """A multi-index exceeds the truncation order."""


class UnsupportedOrder(ValueError):
    """Truncation order below 3."""


def order(alpha: Sequence[int]) -> int:
    return sum(alpha)


def unit(D: int, j: int) -> MultiIndex:
    """``e_j`` with 1-based axis ``j``."""
    return tuple(1 if i == j - 1 else 0 for i in range(D))


def add(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a - b for a, b in zip(alpha, beta))


def shift(alpha: Sequence[int], j: int, k: int = 1) -> MultiIndex:
    """``alpha + k e_j`` (1-based ``j``); ``k`` may be negative."""
    out = list(alpha)
    out[j - 1] += k
    return tuple(out)


def is_valid(alpha: Sequence[int]) -> bool:
    return all(a >= 0 for a in alpha)


def mfactorial(alpha: Sequence[int]) -> int:
    """``alpha! = prod(alpha_i!)``."""
    return prod(factorial(a) for a in alpha)


def hat(alpha: Sequence[int]) -> MultiIndex:
    """Drop the first component."""
    return tuple(alpha[1:])


def tilde(alpha: Sequence[int]) -> MultiIndex:
    """Zero the first component."""
    return (0,) + tuple(alpha[1:])


def ordinal(alpha: Sequence[int], M: int | None = None) -> int:
    """1-based position of ``alpha`` in the ordered set ``{|beta| <= M}``.

    The position does not depend on ``M``; ``M`` only guards the range.
    For ``D = 0`` (empty tuple) the ordinal is 1.
    """
    D = len(alpha)
    if M is not None and sum(alpha) > M:
        raise OrderOutOfRange(f"|alpha| = {sum(alpha)} exceeds M = {M}")
    pos = 1
    tail = 0
    for i in range(1, D + 1):
        tail += alpha[D - i]
        pos += comb(tail + i - 1, i)
    return pos


def count(D: int, M: int) -> int:
    """Number of multi-indices with ``|alpha| <= M``."""
    return comb(M + D, D)


def _of_order(D: int, m: int) -> Iterator[MultiIndex]:
    if D == 0:
        if m == 0:
            yield ()
        return
    for first in range(m, -1, -1):
        for rest in _of_order(D - 1, m - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def indices_upto(D: int, M: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of order ``<= M`` in ordinal order (no ``M >= 3`` check)."""
    return tuple(a for m in range(M + 1) for a in _of_order(D, m))


def enumerate_indices(D: int, M: int) -> list[MultiIndex]:
    """Ordered list of ``S_{D,M}``; position ``i`` holds the index with ordinal ``i + 1``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    if M < 3:
        raise UnsupportedOrder(f"M = {M}; the moment systems need M >= 3")
    return list(indices_upto(D, M))


@lru_cache(maxsize=None)
def position_map(D: int, M: int) -> dict[MultiIndex, int]:
    """0-based storage positions, for internal use."""
    return {a: i for i, a in enumerate(indices_upto(D, M))}


def indices_of_order(D: int, m: int) -> list[MultiIndex]:
    return list(_of_order(D, m))


def to_grad(alpha: Sequence[int]) -> MultiIndex:
    """Canonical (non-decreasing) Grad-type index with 1-based digits."""
    return tuple(d + 1 for d, a in enumerate(alpha) for _ in range(a))


def from_grad(digits: Sequence[int], D: int) -> MultiIndex:
    out = [0] * D
    for d in digits:
        if not 1 <= d <= D:
            raise ValueError(f"Grad digit {d} outside 1..{D}")
        out[d - 1] += 1
    return tuple(out)


def class_size(alpha: Sequence[int]) -> int:
    """``|alpha|! / alpha!``, the number of Grad indices representing ``alpha``."""
    if sum(alpha) > MAX_CLASS_ORDER:
        raise OrderOutOfRange(f"class size requested for |alpha| > {MAX_CLASS_ORDER}")
    return factorial(sum(alpha)) // mfactorial(alpha)


def grad_class(alpha: Sequence[int]) -> tuple[MultiIndex, int]:
    return to_grad(alpha), class_size(alpha)


def grad_set(alpha: Sequence[int]) -> list[MultiIndex]:
    """All Grad indices ``theta`` with ``sigma(theta) = alpha`` (distinct permutations)."""
    return sorted(set(itertools.permutations(to_grad(alpha))))


def key(alpha: Sequence[int]) -> str:
    """Canonical text form, e.g. ``"2,1"``."""
    return ",".join(str(int(a)) for a in alpha)


def parse_key(text: str) -> MultiIndex:
    return tuple(int(t) for t in text.split(","))
