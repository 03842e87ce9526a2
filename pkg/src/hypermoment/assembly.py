"""Coefficient matrices of the Grad and regularized moment systems.

Every matrix row is generated from the x_j-derivative terms of the
governing equation for the corresponding entry of ``w``.  Derivatives of
auxiliary quantities (``theta``, ``f_{2e_i}``, ``q_j`` ...) are expanded into
derivatives of ``w`` by the chain rule, and contributions that land on the
same entry are accumulated.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

from . import indexing as ix
from .state import MomentState, scaling_diagonal

KINDS = ("grad", "regularized", "scaled", "directional")


@dataclass(frozen=True)
class SystemMatrix:
    D: int
    M: int
    kind: str
    data: np.ndarray

    @property
    def N(self) -> int:
        return self.data.shape[0]

    def entry(self, i: int, j: int) -> float:
        """1-based entry access, matching the printed row/column numbering."""
        return float(self.data[i - 1, j - 1])

    def to_json(self) -> dict:
        return {"D": self.D, "M": self.M, "kind": self.kind, "N": self.N,
                "rows": self.data.tolist()}

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(self.data.tolist())


class _Builder:
    """Linear forms in ``d w / d x_j`` for one state and one direction ``j``."""

    def __init__(self, s: MomentState, j: int):
        self.s = s
        self.D, self.M = s.D, s.M
        self.j = j
        self.pos = ix.position_map(s.D, s.M)
        self.zero = (0,) * s.D

    def e(self, d: int) -> ix.MultiIndex:
        return ix.unit(self.D, d)

    def two(self, d: int) -> ix.MultiIndex:
        return ix.shift(self.zero, d, 2)

    # derivative forms: dict column -> coefficient
    def d_rho(self):
        return {0: 1.0}

    def d_u(self, d):
        return {self.pos[self.e(d)]: 1.0}

    def d_halfp(self, d):
        return {self.pos[self.two(d)]: 1.0}

    def d_ptensor(self, a, b):
        if a == b:
            return {self.pos[self.two(a)]: 2.0}
        return {self.pos[ix.add(self.e(a), self.e(b))]: 1.0}

    def d_theta(self):
        s = self.s
        out = {0: -s.theta / s.rho}
        for d in range(1, self.D + 1):
            out[self.pos[self.two(d)]] = 2.0 / (self.D * s.rho)
        return out

    def d_f(self, beta):
        if not ix.is_valid(beta):
            return {}
        m = sum(beta)
        if m == 0:
            return self.d_rho()
        if m == 1 or m > self.M:
            return {}
        if m == 2 and max(beta) == 2:
            out = {self.pos[self.two(d)]: -1.0 / self.D for d in range(1, self.D + 1)}
            out[self.pos[tuple(beta)]] += 1.0
            return out
        return {self.pos[tuple(beta)]: 1.0}

    def d_q(self):
        """``q_j = 2 f_{3e_j} + sum_d f_{e_j + 2e_d}``."""
        j = self.j
        out = defaultdict(float)
        _acc(out, self.d_f(ix.shift(self.zero, j, 3)), 2.0)
        for d in range(1, self.D + 1):
            _acc(out, self.d_f(ix.shift(self.e(j), d, 2)), 1.0)
        return out

    def p_tensor(self, a, b):
        s = self.s
        if a == b:
            return s.p + 2.0 * s.fval(self.two(a))
        return s.fval(ix.add(self.e(a), self.e(b)))

    # rows -------------------------------------------------------------------
    def row(self, alpha, regularize: bool, reg_weight: str = "full"):
        s, D, j = self.s, self.D, self.j
        m = sum(alpha)
        row = defaultdict(float)
        uj = s.u[j - 1]
        if m == 0:
            _acc(row, self.d_rho(), uj)
            _acc(row, self.d_u(j), s.rho)
            return row
        if m == 1:
            i = alpha.index(1) + 1
            _acc(row, self.d_u(i), uj)
            _acc(row, self.d_ptensor(i, j), 1.0 / s.rho)
            return row
        if m == 2 and max(alpha) == 2:
            i = alpha.index(2) + 1
            dij = 1.0 if i == j else 0.0
            _acc(row, self.d_halfp(i), uj)
            _acc(row, self.d_u(j), (0.5 + dij) * s.p)
            for d in range(1, D + 1):
                coef = (2 * dij + 1) * s.fval(ix.shift(ix.shift(self.two(i), d, -1), j, 1))
                _acc(row, self.d_u(d), coef)
            _acc(row, self.d_f(ix.shift(self.two(i), j, 1)), 2 * dij + 1)
            return row
        return self._general_row(alpha, regularize, reg_weight)

    def _general_row(self, alpha, regularize, reg_weight):
        s, D, j = self.s, self.D, self.j
        rho, theta = s.rho, s.theta
        aj1 = alpha[j - 1] + 1
        row = defaultdict(float)
        c_alpha = sum(s.fval(ix.shift(alpha, k, -2)) for k in range(1, D + 1))
        c_theta = sum(theta * s.fval(ix.shift(ix.shift(alpha, k, -2), j, -1))
                      + aj1 * s.fval(ix.shift(ix.shift(alpha, k, -2), j, 1))
                      for k in range(1, D + 1))
        _acc(row, self.d_f(ix.shift(alpha, j, -1)), theta)
        _acc(row, self.d_f(alpha), s.u[j - 1])
        _acc(row, self.d_f(ix.shift(alpha, j, 1)), aj1)
        _acc(row, self.d_rho(), -theta / (2 * rho) * c_theta)
        for d in range(1, D + 1):
            coef = (theta * s.fval(ix.shift(ix.shift(alpha, d, -1), j, -1))
                    + aj1 * s.fval(ix.shift(ix.shift(alpha, d, -1), j, 1))
                    - c_alpha / (D * rho) * self.p_tensor(j, d))
            _acc(row, self.d_u(d), coef)
            _acc(row, self.d_ptensor(j, d), -s.fval(ix.shift(alpha, d, -1)) / rho)
            _acc(row, self.d_ptensor(d, d), c_theta / (2 * D * rho))
        _acc(row, self.d_q(), -c_alpha / (D * rho))
        if regularize and sum(alpha) == self.M:
            w = aj1 if reg_weight == "full" else 1.0
            for d in range(1, D + 1):
                _acc(row, self.d_u(d), -w * s.fval(ix.shift(ix.shift(alpha, d, -1), j, 1)))
            c2 = sum(s.fval(ix.shift(ix.shift(alpha, d, -2), j, 1)) for d in range(1, D + 1))
            _acc(row, self.d_theta(), -0.5 * w * c2)
        return row

    def matrix(self, regularize: bool, reg_weight: str = "full") -> np.ndarray:
        N = self.s.N
        A = np.zeros((N, N))
        for i, a in enumerate(ix.indices_upto(self.D, self.M)):
            for col, v in self.row(a, regularize, reg_weight).items():
                A[i, col] += v
        return A


def _acc(target, form, scale):
    if scale == 0.0:
        return
    for k, v in form.items():
        target[k] += scale * v


def regularization_correction(s: MomentState, dw: np.ndarray, j: int = 1,
                              reg_weight: str = "full") -> np.ndarray:
    """Vector ``sum_{|alpha|=M} R^j(alpha) I_{N(alpha)}`` for a given gradient ``dw``.

    Evaluated from the physical derivatives ``du_d`` and ``dtheta`` rather than
    from matrix entries.
    """
    b = _Builder(s, j)
    D = s.D
    du = [float(dw[b.pos[b.e(d)]]) for d in range(1, D + 1)]
    dtheta = sum(c * dw[k] for k, c in b.d_theta().items())
    out = np.zeros(s.N)
    for i, a in enumerate(ix.indices_upto(D, s.M)):
        if sum(a) != s.M:
            continue
        w = a[j - 1] + 1 if reg_weight == "full" else 1.0
        r = sum(s.fval(ix.shift(ix.shift(a, d, -1), j, 1)) * du[d - 1] for d in range(1, D + 1))
        r += 0.5 * sum(s.fval(ix.shift(ix.shift(a, d, -2), j, 1)) for d in range(1, D + 1)) * dtheta
        out[i] = w * r
    return out


def assemble_grad_1d(s: MomentState) -> SystemMatrix:
    """Grad coefficient matrix ``A_M`` of the x_1-split system."""
    return SystemMatrix(s.D, s.M, "grad", _Builder(s, 1).matrix(False))


def assemble_regularized_1d(s: MomentState, reg_weight: str = "full") -> SystemMatrix:
    """Regularized matrix: order-``M`` rows corrected by the characteristic-speed terms."""
    return SystemMatrix(s.D, s.M, "regularized", _Builder(s, 1).matrix(True, reg_weight))


def scaled_matrix(s: MomentState) -> tuple[np.ndarray, SystemMatrix]:
    """Return ``(d, A~)`` with ``A~ = diag(d) (A^ - u_1 I) diag(d)^{-1} / sqrt(theta)``."""
    d = scaling_diagonal(s)
    A = assemble_regularized_1d(s).data.copy()
    A[np.diag_indices_from(A)] -= s.u[0]
    At = (d[:, None] * A / d[None, :]) / sqrt(s.theta)
    return d, SystemMatrix(s.D, s.M, "scaled", At)


def unscale(s: MomentState, d: np.ndarray, At: np.ndarray) -> np.ndarray:
    """``u_1 I + sqrt(theta) diag(d)^{-1} A~ diag(d)``."""
    return s.u[0] * np.eye(len(d)) + sqrt(s.theta) * (At / d[:, None] * d[None, :])


def assemble_axis(s: MomentState, j: int, regularized: bool = True) -> SystemMatrix:
    """``M_j`` (or its regularized form) for the axis ``j`` (1-based)."""
    if not 1 <= j <= s.D:
        raise ValueError(f"axis {j} outside 1..{s.D}")
    return SystemMatrix(s.D, s.M, "directional", _Builder(s, j).matrix(regularized))


def assemble_directional(s: MomentState, n: Sequence[float] | int,
                         regularized: bool = True, tol: float = 1e-10) -> SystemMatrix:
    """``sum_j n_j M_j`` for a unit vector ``n``, or a single axis when ``n`` is an int."""
    if isinstance(n, (int, np.integer)):
        return assemble_axis(s, int(n), regularized)
    n = np.asarray(n, dtype=float)
    if n.shape != (s.D,):
        raise ValueError(f"direction must have {s.D} components")
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise ValueError(f"direction is not a unit vector (|n| = {np.linalg.norm(n)})")
    out = np.zeros((s.N, s.N))
    for j in range(1, s.D + 1):
        if n[j - 1] != 0.0:
            out += n[j - 1] * _Builder(s, j).matrix(regularized)
    return SystemMatrix(s.D, s.M, "directional", out)
