"""Moment-space action of a spatial rotation.

For a rotation ``G`` every order-``m`` block of ``w`` transforms by

    w~_alpha = sum_{phi in D^m} sigma(phi)!/alpha! Pi_g(vs(alpha), phi) w_{sigma(phi)}

where ``vs(alpha)`` is the sorted Grad index of ``alpha``.  On order 1 this is
``u -> G u``, on order 2 it is the congruence ``P -> G P G^T`` written on the
``(p_{2e_i}/2, p_{e_i+e_j})`` storage, and above that it is the Hermite
coefficient rule.  ``rho`` is fixed.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import factorial, prod
from typing import Callable, Sequence

import numpy as np

from . import indexing as ix
from .assembly import assemble_directional, assemble_regularized_1d
from .state import MomentState, from_w_vector, to_w_vector

ORTHO_TOL = 1e-12


class NotARotation(ValueError):
    """Matrix is not orthogonal with determinant +1."""


def check_rotation(G, tol: float = ORTHO_TOL) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise NotARotation("rotation must be a square matrix")
    D = G.shape[0]
    if np.abs(G @ G.T - np.eye(D)).max() > tol:
        raise NotARotation("G G^T differs from the identity")
    if abs(np.linalg.det(G) - 1.0) > tol:
        raise NotARotation("det G differs from +1")
    return G


def pi_g(G: np.ndarray, vt: Sequence[int], phi: Sequence[int]) -> float:
    """``prod_i g_{vt_i phi_i}`` with 1-based Grad digits."""
    return float(prod(G[a - 1, b - 1] for a, b in zip(vt, phi)))


def _sigma(phi, D):
    return ix.from_grad(phi, D)


def _order_block(G: np.ndarray, D: int, m: int) -> np.ndarray:
    idx = ix.indices_of_order(D, m)
    loc = {a: i for i, a in enumerate(idx)}
    B = np.zeros((len(idx), len(idx)))
    phis = list(itertools.product(range(1, D + 1), repeat=m))
    sig = [_sigma(p, D) for p in phis]
    sfac = [ix.mfactorial(b) for b in sig]
    for r, a in enumerate(idx):
        vt = ix.to_grad(a)
        af = ix.mfactorial(a)
        for p, b, bf in zip(phis, sig, sfac):
            B[r, loc[b]] += bf / af * pi_g(G, vt, p)
    return B


@lru_cache(maxsize=64)
def _operator(Gbytes: bytes, D: int, M: int) -> np.ndarray:
    G = np.frombuffer(Gbytes).reshape(D, D)
    N = ix.count(D, M)
    R = np.zeros((N, N))
    start = 0
    for m in range(M + 1):
        B = _order_block(G, D, m)
        n = B.shape[0]
        R[start:start + n, start:start + n] = B
        start += n
    R.setflags(write=False)
    return R


def rotation_operator(G, D: int, M: int) -> np.ndarray:
    """``N x N`` matrix ``R(G)`` acting on ``w`` vectors (block-diagonal by order)."""
    G = check_rotation(G)
    if G.shape[0] != D:
        raise ValueError(f"rotation is {G.shape[0]}x{G.shape[0]}, expected {D}x{D}")
    return _operator(np.ascontiguousarray(G, dtype=float).tobytes(), D, M).copy()


def rotate_state(s: MomentState, G) -> MomentState:
    R = rotation_operator(G, s.D, s.M)
    return from_w_vector(s.D, s.M, R @ to_w_vector(s))


def rotation_2d(angle: float) -> np.ndarray:
    """Rotation whose first row is ``(cos a, sin a)``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def rotation_about_axis(axis: Sequence[float], angle: float) -> np.ndarray:
    """3-D rotation by ``angle`` about ``axis`` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def complete_rotation(n: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    """Rotation ``G`` (det +1) whose first row is the unit vector ``n``.

    Gram-Schmidt against the standard basis, taking the axes where ``n`` is
    smallest first; the last row is negated if needed to fix the sign of det.
    """
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise ValueError(f"direction is not a unit vector (|n| = {np.linalg.norm(n)})")
    D = len(n)
    rows = [n]
    for k in np.argsort(np.abs(n), kind="stable"):
        if len(rows) == D:
            break
        e = np.zeros(D)
        e[k] = 1.0
        for r in rows:
            e -= (e @ r) * r
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            rows.append(e / nrm)
    G = np.array(rows)
    if np.linalg.det(G) < 0:
        G[-1] = -G[-1]
    return G


def rotation_invariance_residual(s: MomentState, n: Sequence[float]) -> float:
    """``|sum_j n_j M^_j(w) - R^{-1} A^(R w) R|_F / |A^(R w)|_F`` with ``G`` from ``n``."""
    G = complete_rotation(n)
    R = rotation_operator(G, s.D, s.M)
    lhs = assemble_directional(s, list(np.asarray(n, dtype=float))).data
    # skip the w round trip for the identity so that e_1 gives an exact zero
    rs = s if np.array_equal(G, np.eye(s.D)) else from_w_vector(s.D, s.M, R @ to_w_vector(s))
    Ar = assemble_regularized_1d(rs).data
    rhs = np.linalg.solve(R, Ar @ R)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(Ar))


# index identities ------------------------------------------------------------

def _perms(n: int, m: int):
    """``A_n^m``: ordered selections of ``m`` distinct positions out of ``n`` (0-based)."""
    return itertools.permutations(range(n), m)


def count_identity_sides(G, alpha: Sequence[int], beta: Sequence[int],
                         vt: Sequence[int]) -> tuple[float, float]:
    """Both sides of the Grad-index counting identity, by brute force."""
    G = np.asarray(G, dtype=float)
    D = G.shape[0]
    alpha, beta, vt = tuple(alpha), tuple(beta), tuple(vt)
    if len(alpha) != D or len(beta) != D:
        raise ValueError("alpha and beta must have D components")
    if len(vt) != sum(alpha) + sum(beta):
        raise ValueError("|vt| must equal |alpha| + |beta|")
    sv = ix.mfactorial(_sigma(vt, D))
    ab = ix.add(alpha, beta)
    lhs = sum(ix.mfactorial(ab) / sv * pi_g(G, vt, p) for p in ix.grad_set(ab))
    sb = ix.to_grad(beta)
    sa = ix.grad_set(alpha)
    rhs = 0.0
    n = len(vt)
    for w in _perms(n, len(sb)):
        picked = [vt[i] for i in w]
        rest = [vt[i] for i in range(n) if i not in w]
        rhs += pi_g(G, picked, sb) * sum(pi_g(G, rest, p) for p in sa)
    rhs *= ix.mfactorial(alpha) / sv
    return float(lhs), float(rhs)


def partition_identity_sides(F: Callable, D: int, m: int) -> tuple[float, float]:
    """``sum_{phi in D^m} F(phi)`` against the regrouped sum over ``|beta| = m`` classes."""
    lhs = sum(F(p) for p in itertools.product(range(1, D + 1), repeat=m))
    rhs = sum(F(p) for b in ix.indices_of_order(D, m) for p in ix.grad_set(b))
    return float(lhs), float(rhs)


def index_lemma_check(G, alpha, beta, vt, F: Callable | None = None, tol: float = 1e-10) -> bool:
    lhs, rhs = count_identity_sides(G, alpha, beta, vt)
    ok = abs(lhs - rhs) <= tol * max(1.0, abs(lhs), abs(rhs))
    if F is not None:
        D = len(alpha)
        a, b = partition_identity_sides(F, D, len(vt))
        ok = ok and abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    return ok
