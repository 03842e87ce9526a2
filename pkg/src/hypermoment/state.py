"""Truncated moment state, its ``w``-vector layout and raw velocity moments ``F``."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, factorial, sqrt
from typing import Mapping, Sequence

import numpy as np

from . import indexing as ix
from .hermite import InadmissibleState, hermite_all

TRACE_TOL = 1e-12


class ConstraintViolation(ValueError):
    """The Hermite coefficients ``f_{2e_d}`` do not sum to zero."""


def _clean_f(D: int, M: int, f: Mapping | None) -> dict[ix.MultiIndex, float]:
    out = {a: 0.0 for a in ix.indices_upto(D, M) if sum(a) >= 2}
    for k, v in (f or {}).items():
        a = ix.parse_key(k) if isinstance(k, str) else tuple(int(c) for c in k)
        if len(a) != D or not ix.is_valid(a):
            raise ValueError(f"bad multi-index {k!r} for D = {D}")
        if not 2 <= sum(a) <= M:
            raise ValueError(f"f keys need 2 <= |alpha| <= M, got {k!r}")
        out[a] = float(v)
    return out


@dataclass(frozen=True)
class MomentState:
    """Admissible moment state: density, velocity, temperature and Hermite coefficients.

    ``f`` holds every coefficient with ``2 <= |alpha| <= M`` (zeros included);
    ``f_0 = rho`` and ``f_{e_j} = 0`` are implied.
    """

    D: int
    M: int
    rho: float
    u: tuple[float, ...]
    theta: float
    f: dict = field(compare=False)

    @property
    def N(self) -> int:
        return ix.count(self.D, self.M)

    @property
    def p(self) -> float:
        return self.rho * self.theta

    def fval(self, alpha: Sequence[int]) -> float:
        """``f_alpha`` with the implied low-order values and zero outside the truncation."""
        if not ix.is_valid(alpha):
            return 0.0
        m = sum(alpha)
        if m == 0:
            return self.rho
        if m == 1 or m > self.M:
            return 0.0
        return self.f[tuple(alpha)]

    def g(self, alpha: Sequence[int]) -> float:
        """Normalized coefficient ``f_alpha / (rho theta^{|alpha|/2})``."""
        return self.fval(alpha) / (self.rho * self.theta ** (0.5 * sum(alpha)))

    def pressure_tensor(self) -> np.ndarray:
        D = self.D
        P = np.empty((D, D))
        for i in range(D):
            for j in range(D):
                a = ix.add(ix.unit(D, i + 1), ix.unit(D, j + 1))
                P[i, j] = (i == j) * self.p + (1 + (i == j)) * self.f[a]
        return P

    def heat_flux(self, j: int) -> float:
        """``q_j = 2 f_{3e_j} + sum_d f_{e_j + 2e_d}`` (1-based ``j``)."""
        D = self.D
        ej = ix.unit(D, j)
        q = 2.0 * self.fval(ix.shift(ej, j, 2))
        for d in range(1, D + 1):
            q += self.fval(ix.shift(ej, d, 2))
        return q

    def replace(self, **changes) -> "MomentState":
        kw = dict(D=self.D, M=self.M, rho=self.rho, u=self.u, theta=self.theta,
                  f={ix.key(a): v for a, v in self.f.items()})
        kw.update(changes)
        return make_state(**kw)

    def to_json(self) -> dict:
        return {
            "D": self.D, "M": self.M, "rho": self.rho, "u": list(self.u),
            "theta": self.theta,
            "f": {ix.key(a): v for a, v in self.f.items() if sum(a) >= 2},
        }


def make_state(D: int, M: int, rho: float, u: Sequence[float], theta: float,
               f: Mapping | None = None, *, trace_tol: float = TRACE_TOL) -> MomentState:
    """Validate and build a :class:`MomentState`; missing coefficients default to 0."""
    if M < 3:
        raise ix.UnsupportedOrder(f"M = {M}; need M >= 3")
    if D < 1:
        raise ValueError("D must be >= 1")
    if not (rho > 0 and theta > 0):
        raise InadmissibleState(f"rho = {rho}, theta = {theta}; both must be positive")
    u = tuple(float(x) for x in u)
    if len(u) != D:
        raise ValueError(f"velocity has {len(u)} components, expected {D}")
    fm = _clean_f(D, M, f)
    trace = sum(fm[ix.shift((0,) * D, d, 2)] for d in range(1, D + 1))
    if abs(trace) > trace_tol * rho * theta:
        raise ConstraintViolation(f"sum of f_(2e_d) = {trace:.3e} must vanish")
    return MomentState(D, M, float(rho), u, float(theta), fm)


def project_trace(D: int, f: Mapping) -> dict:
    """Return a copy of ``f`` with the mean of the ``f_{2e_d}`` removed."""
    out = dict(f)
    keys = [ix.shift((0,) * D, d, 2) for d in range(1, D + 1)]
    norm = {}
    for k in out:
        a = ix.parse_key(k) if isinstance(k, str) else tuple(k)
        norm[a] = k
    mean = sum(float(out.get(norm.get(a, a), 0.0)) for a in keys) / D
    for a in keys:
        k = norm.get(a, a)
        out[k] = float(out.get(k, 0.0)) - mean
    return out


def maxwellian(D: int, M: int, rho: float = 1.0, u: Sequence[float] | None = None,
               theta: float = 1.0) -> MomentState:
    return make_state(D, M, rho, u if u is not None else [0.0] * D, theta)


def random_state(D: int, M: int, rng: np.random.Generator | int | None = None,
                 scale: float = 0.1, rho_range=(0.5, 2.0), u_range=(-1.0, 1.0),
                 theta_range=(0.5, 2.0)) -> MomentState:
    """Random admissible state with ``f_alpha ~ U[-scale, scale] * rho * theta^{|alpha|/2}``."""
    rng = np.random.default_rng(rng)
    rho = rng.uniform(*rho_range)
    theta = rng.uniform(*theta_range)
    u = rng.uniform(*u_range, size=D)
    f = {}
    for a in ix.indices_upto(D, M):
        m = sum(a)
        if m >= 2:
            f[a] = rng.uniform(-scale, scale) * rho * theta ** (0.5 * m)
    diag = [ix.shift((0,) * D, d, 2) for d in range(1, D + 1)]
    mean = sum(f[a] for a in diag) / D
    for a in diag:
        f[a] -= mean
    return make_state(D, M, rho, u, theta, {ix.key(a): v for a, v in f.items()})


# ---------------------------------------------------------------------------
# w-vector layout

def to_w_vector(s: MomentState) -> np.ndarray:
    D, M = s.D, s.M
    w = np.empty(s.N)
    for i, a in enumerate(ix.indices_upto(D, M)):
        m = sum(a)
        if m == 0:
            w[i] = s.rho
        elif m == 1:
            w[i] = s.u[a.index(1)]
        elif m == 2 and max(a) == 2:
            w[i] = 0.5 * s.p + s.f[a]
        else:
            w[i] = s.f[a]
    return w


def from_w_vector(D: int, M: int, w: Sequence[float]) -> MomentState:
    w = np.asarray(w, dtype=float)
    if w.shape != (ix.count(D, M),):
        raise ValueError(f"w has shape {w.shape}, expected ({ix.count(D, M)},)")
    pos = ix.position_map(D, M)
    rho = float(w[0])
    if rho <= 0:
        raise InadmissibleState(f"rho = {rho} must be positive")
    diag = [ix.shift((0,) * D, d, 2) for d in range(1, D + 1)]
    half_p = [float(w[pos[a]]) for a in diag]
    theta = 2.0 * sum(half_p) / (D * rho)
    if theta <= 0:
        raise InadmissibleState(f"theta = {theta} must be positive")
    u = [float(w[pos[ix.unit(D, d)]]) for d in range(1, D + 1)]
    f = {}
    for i, a in enumerate(ix.indices_upto(D, M)):
        if sum(a) >= 2:
            f[a] = float(w[i])
    for a, hp in zip(diag, half_p):
        f[a] = hp - 0.5 * rho * theta
    return make_state(D, M, rho, u, theta, {ix.key(a): v for a, v in f.items()},
                      trace_tol=1e-10)


def scaling_diagonal(s: MomentState) -> np.ndarray:
    """Diagonal ``d`` of the similarity scaling: ``1/rho``, ``theta^{-1/2}``, ``1/(rho theta^{|a|/2})``."""
    d = np.empty(s.N)
    for i, a in enumerate(ix.indices_upto(s.D, s.M)):
        m = sum(a)
        if m == 0:
            d[i] = 1.0 / s.rho
        elif m == 1:
            d[i] = 1.0 / sqrt(s.theta)
        else:
            d[i] = 1.0 / (s.rho * s.theta ** (0.5 * m))
    return d


# ---------------------------------------------------------------------------
# raw velocity moments F_alpha = (1/alpha!) int xi^alpha f dxi

def _gaussian_moment_table(jmax: int, u: float, theta: float) -> np.ndarray:
    """``E[(u + sqrt(theta) Z)^j] / j!`` for ``j = 0..jmax``."""
    out = np.zeros(jmax + 1)
    for j in range(jmax + 1):
        tot = 0.0
        for l in range(0, j + 1, 2):
            # E[Z^l] = (l-1)!!
            dfact = 1
            for t in range(l - 1, 0, -2):
                dfact *= t
            tot += comb(j, l) * u ** (j - l) * theta ** (l / 2) * dfact
        out[j] = tot / factorial(j)
    return out


def to_fluid_moments(s: MomentState) -> dict[ix.MultiIndex, float]:
    """Raw moments ``F_alpha`` for ``|alpha| <= M``."""
    D, M = s.D, s.M
    tabs = [_gaussian_moment_table(M, s.u[d], s.theta) for d in range(D)]
    basis = ix.indices_upto(D, M)
    F = {}
    for a in basis:
        tot = 0.0
        for b in basis:
            if sum(b) > sum(a):
                break
            diff = ix.sub(a, b)
            if not ix.is_valid(diff):
                continue
            fb = s.fval(b)
            if fb == 0.0:
                continue
            term = fb
            for d in range(D):
                term *= tabs[d][diff[d]]
            tot += term
        F[a] = tot
    return F


def from_fluid_moments(D: int, M: int, F: Mapping) -> MomentState:
    """Inverse of :func:`to_fluid_moments`."""
    Fm = {}
    for k, v in F.items():
        a = ix.parse_key(k) if isinstance(k, str) else tuple(k)
        Fm[a] = float(v)
    basis = ix.indices_upto(D, M)
    rho = Fm[basis[0]]
    if rho <= 0:
        raise InadmissibleState(f"F_0 = {rho} must be positive")
    u = [Fm[ix.unit(D, d)] / rho for d in range(1, D + 1)]
    p2 = [2.0 * Fm[ix.shift((0,) * D, d, 2)] - Fm[ix.unit(D, d)] ** 2 / rho
          for d in range(1, D + 1)]
    theta = sum(p2) / (D * rho)
    if not theta > 0:
        raise InadmissibleState(f"derived theta = {theta} must be positive")
    st = sqrt(theta)
    he = [hermite_all(M, -u[d] / st) for d in range(D)]
    # (-1)^n He_n(x) = He_n(-x)
    coef = [np.array([he[d][n] * theta ** (n / 2) / factorial(n) for n in range(M + 1)])
            for d in range(D)]
    f = {}
    for a in basis:
        if sum(a) < 2:
            continue
        tot = 0.0
        for b in basis:
            if sum(b) > sum(a):
                break
            diff = ix.sub(a, b)
            if not ix.is_valid(diff):
                continue
            term = Fm[b]
            for d in range(D):
                term *= coef[d][diff[d]]
            tot += term
        f[a] = tot
    diag = [ix.shift((0,) * D, d, 2) for d in range(1, D + 1)]
    mean = sum(f[a] for a in diag) / D
    for a in diag:
        f[a] -= mean
    return make_state(D, M, rho, u, theta, {ix.key(a): v for a, v in f.items()})


# ---------------------------------------------------------------------------
# JSON I/O

def state_from_json(obj: Mapping | str) -> MomentState:
    if isinstance(obj, str):
        obj = json.loads(obj)
    return make_state(int(obj["D"]), int(obj["M"]), float(obj["rho"]), obj["u"],
                      float(obj["theta"]), obj.get("f", {}))


def load_state(path) -> MomentState:
    with open(path, encoding="utf-8") as fh:
        return state_from_json(json.load(fh))


def dump_state(s: MomentState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(s.to_json(), fh, indent=2)
