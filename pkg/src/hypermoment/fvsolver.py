"""First-order finite-volume solver for the x_1-split regularized system.

The moments of order below ``M`` are stored as raw velocity moments
``F_alpha`` and advanced with HLL fluxes ``(alpha_1 + 1) F_{alpha+e_1}``; the
flux differences telescope, so the cell sums of these moments are conserved
up to round-off under periodic boundaries.  The order-``M`` Hermite
coefficients obey non-conservative equations; they are advanced with the
regularized matrix rows, central differences and Rusanov dissipation.
After each step the cell states are rebuilt from ``F`` and the new
top-order coefficients.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from . import indexing as ix
from .assembly import _Builder, assemble_grad_1d, assemble_regularized_1d
from .hermite import hermite_roots
from .state import InadmissibleState, MomentState, make_state, state_from_json, to_w_vector

log = logging.getLogger(__name__)

BOUNDARIES = ("copy", "periodic")


class SimulationError(RuntimeError):
    """A cell left the admissible region or the time step violated the CFL bound."""


@dataclass
class SimConfig:
    D: int
    M: int
    cells: int = 100
    x_lo: float = -0.5
    x_hi: float = 0.5
    cfl: float = 0.5
    t_end: float = 0.1
    boundary: str = "copy"
    left: MomentState | None = None
    right: MomentState | None = None
    x_split: float = 0.0
    initial: list | None = None          # per-cell MomentStates, overrides left/right
    max_steps: int = 1_000_000
    snapshot_every: int = 0              # 0: only first and last
    n_steps: int | None = None           # run exactly this many steps, ignoring t_end

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError(f"CFL = {self.cfl} must lie in (0, 1]")
        if self.cells < 4:
            raise ValueError("need at least 4 cells")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty domain")
        if self.initial is None and (self.left is None or self.right is None):
            raise ValueError("give either per-cell initial states or left/right states")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.cells) + 0.5) * self.dx

    def initial_states(self) -> list[MomentState]:
        if self.initial is not None:
            if len(self.initial) != self.cells:
                raise ValueError("initial state count differs from the cell count")
            return list(self.initial)
        return [self.left if x < self.x_split else self.right for x in self.centers]

    @classmethod
    def from_json(cls, obj) -> "SimConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        obj = dict(obj)
        for k in ("left", "right"):
            if obj.get(k) is not None:
                st = dict(obj[k])
                st.setdefault("D", obj["D"])
                st.setdefault("M", obj["M"])
                obj[k] = state_from_json(st)
        if obj.get("initial") is not None:
            obj["initial"] = [state_from_json(dict(s, D=obj["D"], M=obj["M"])) for s in obj["initial"]]
        return cls(**obj)


# ---------------------------------------------------------------------------
# vectorized moment transforms over cells

class _Layout:
    def __init__(self, D: int, M: int):
        self.D, self.M = D, M
        self.basis = ix.indices_upto(D, M)
        self.pos = ix.position_map(D, M)
        self.N = len(self.basis)
        self.cons = [i for i, a in enumerate(self.basis) if sum(a) < M]
        self.top = [i for i, a in enumerate(self.basis) if sum(a) == M]
        self.flux_src = np.array([self.pos[ix.shift(self.basis[i], 1, 1)] for i in self.cons])
        self.flux_fac = np.array([self.basis[i][0] + 1.0 for i in self.cons])
        self.pairs = []
        for ia, a in enumerate(self.basis):
            for ib, b in enumerate(self.basis):
                diff = ix.sub(a, b)
                if sum(b) <= sum(a) and ix.is_valid(diff):
                    self.pairs.append((ia, ib, diff))
        self.diag2 = [self.pos[ix.shift((0,) * D, d, 2)] for d in range(1, D + 1)]
        self.upos = [self.pos[ix.unit(D, d)] for d in range(1, D + 1)]

    @staticmethod
    def _table(jmax: int, u: np.ndarray, th: np.ndarray) -> np.ndarray:
        # j m_j = u m_{j-1} + th m_{j-2}
        t = np.zeros((jmax + 1,) + u.shape)
        t[0] = 1.0
        if jmax >= 1:
            t[1] = u
        for j in range(2, jmax + 1):
            t[j] = (u * t[j - 1] + th * t[j - 2]) / j
        return t

    def _apply(self, src: np.ndarray, u: np.ndarray, th: np.ndarray, rows) -> np.ndarray:
        tabs = [self._table(self.M, u[:, d], th) for d in range(self.D)]
        out = np.zeros_like(src)
        rows = set(rows)
        for ia, ib, diff in self.pairs:
            if ia not in rows:
                continue
            term = src[:, ib].copy()
            for d in range(self.D):
                if diff[d]:
                    term *= tabs[d][diff[d]]
            out[:, ia] += term
        return out

    def to_F(self, fh: np.ndarray, u: np.ndarray, th: np.ndarray) -> np.ndarray:
        """Hermite coefficients (column 0 = rho) -> raw moments, all orders."""
        return self._apply(fh, u, th, range(self.N))

    def from_F_cons(self, F: np.ndarray):
        """Raw moments of order < M -> (rho, u, theta, Hermite coefficients of order < M)."""
        rho = F[:, 0]
        if np.any(~(rho > 0)):
            raise InadmissibleState("non-positive density")
        u = np.stack([F[:, p] / rho for p in self.upos], axis=1)
        p2 = np.stack([2 * F[:, q] - F[:, p] ** 2 / rho for p, q in zip(self.upos, self.diag2)], axis=1)
        th = p2.sum(axis=1) / (self.D * rho)
        if np.any(~(th > 0)):
            raise InadmissibleState("non-positive temperature")
        fh = self._apply(F, -u, -th, self.cons)
        fh[:, 0] = rho
        for p in self.upos:
            fh[:, p] = 0.0
        mean = fh[:, self.diag2].mean(axis=1)
        for q in self.diag2:
            fh[:, q] -= mean
        return rho, u, th, fh

    def states_to_arrays(self, states: Sequence[MomentState]):
        n = len(states)
        fh = np.zeros((n, self.N))
        u = np.zeros((n, self.D))
        th = np.zeros(n)
        for c, s in enumerate(states):
            fh[c, 0] = s.rho
            for a, v in s.f.items():
                fh[c, self.pos[a]] = v
            u[c] = s.u
            th[c] = s.theta
        return fh, u, th

    def w_vectors(self, fh, u, th) -> np.ndarray:
        w = fh.copy()
        rho = fh[:, 0]
        for d, p in enumerate(self.upos):
            w[:, p] = u[:, d]
        for q in self.diag2:
            w[:, q] = 0.5 * rho * th + fh[:, q]
        return w

    def make_states(self, fh, u, th) -> list[MomentState]:
        out = []
        for c in range(fh.shape[0]):
            f = {ix.key(a): float(fh[c, i]) for i, a in enumerate(self.basis) if sum(a) >= 2}
            out.append(make_state(self.D, self.M, float(fh[c, 0]), u[c].tolist(), float(th[c]), f,
                                  trace_tol=1e-9))
        return out


def max_speed_coefficient(M: int) -> float:
    """Largest zero of ``He_{M+1}``."""
    return float(hermite_roots(M + 1)[-1])


def stable_dt(cells: Sequence[MomentState], dx: float, cfl: float) -> float:
    """``cfl dx / max(|u_1| + C_max sqrt(theta))``."""
    if not cells:
        raise ValueError("no cells")
    cmax = max_speed_coefficient(cells[0].M)
    smax = 0.0
    for s in cells:
        if not (s.rho > 0 and s.theta > 0):
            raise InadmissibleState("inadmissible cell")
        smax = max(smax, abs(s.u[0]) + cmax * sqrt(s.theta))
    return cfl * dx / smax


@dataclass
class SnapshotSeries:
    D: int
    M: int
    x: np.ndarray
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)      # list of lists of MomentState
    ledger: list = field(default_factory=list)      # per time: {key: sum F dx}
    steps: int = 0

    @property
    def final(self) -> list:
        return self.states[-1]

    def write_csv(self, path, keys: Sequence[str] = ()) -> None:
        """Final snapshot: x, rho, u1..uD, theta, p_2e1, then the requested f moments."""
        D = self.D
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "rho", *[f"u{d}" for d in range(1, D + 1)], "theta", "p_2e1",
                         *[f"f_{k}" for k in keys]])
            for x, s in zip(self.x, self.final):
                p1 = s.p + 2 * s.fval(ix.shift((0,) * D, 1, 2))
                wr.writerow([x, s.rho, *s.u, s.theta, p1, *[s.fval(ix.parse_key(k)) for k in keys]])

    def write_ledger_csv(self, path) -> None:
        keys = list(self.ledger[0])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", *keys])
            for t, row in zip(self.times, self.ledger):
                wr.writerow([t, *[row[k] for k in keys]])


def _pad(a: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == "periodic":
        return np.concatenate([a[-1:], a, a[:1]])
    return np.concatenate([a[:1], a, a[-1:]])


def simulate(cfg: SimConfig) -> SnapshotSeries:
    D, M = cfg.D, cfg.M
    lay = _Layout(D, M)
    dx = cfg.dx
    cmax = max_speed_coefficient(M)
    states0 = cfg.initial_states()
    for s in states0:
        if (s.D, s.M) != (D, M):
            raise ValueError("initial state dimensions differ from the configuration")
    fh, u, th = lay.states_to_arrays(states0)
    F = lay.to_F(fh, u, th)
    Fc = F[:, lay.cons].copy()
    ftop = fh[:, lay.top].copy()

    def rebuild(Fc, ftop):
        Ffull = np.zeros((cfg.cells, lay.N))
        Ffull[:, lay.cons] = Fc
        rho, uu, tt, f = lay.from_F_cons(Ffull)
        f[:, lay.top] = ftop
        return uu, tt, f

    u, th, fh = rebuild(Fc, ftop)
    out = SnapshotSeries(D, M, cfg.centers)
    cons_keys = [ix.key(lay.basis[i]) for i in lay.cons]

    def record(t):
        out.times.append(t)
        out.states.append(lay.make_states(fh, u, th))
        tot = Fc.sum(axis=0) * dx
        out.ledger.append(dict(zip(cons_keys, tot.tolist())))

    record(0.0)
    t = 0.0
    step = 0
    def more():
        if cfg.n_steps is not None:
            return step < cfg.n_steps
        return t < cfg.t_end - 1e-14 * max(1.0, cfg.t_end)

    while more():
        if step >= cfg.max_steps:
            raise SimulationError(f"step limit {cfg.max_steps} reached at t = {t}")
        speed = np.abs(u[:, 0]) + cmax * np.sqrt(th)
        dt = cfg.cfl * dx / speed.max()
        if cfg.n_steps is None:
            dt = min(dt, cfg.t_end - t)
        if dt * speed.max() / dx > cfg.cfl * (1 + 1e-12):
            raise SimulationError("CFL bound violated")
        # conservative block: HLL
        Ffull = lay.to_F(fh, u, th)
        flux = Ffull[:, lay.flux_src] * lay.flux_fac
        lo = u[:, 0] - cmax * np.sqrt(th)
        hi = u[:, 0] + cmax * np.sqrt(th)
        UL, UR = _pad(Fc, cfg.boundary)[:-1], _pad(Fc, cfg.boundary)[1:]
        fL, fR = _pad(flux, cfg.boundary)[:-1], _pad(flux, cfg.boundary)[1:]
        loP, hiP = _pad(lo, cfg.boundary), _pad(hi, cfg.boundary)
        SL = np.minimum(loP[:-1], loP[1:])
        SR = np.maximum(hiP[:-1], hiP[1:])
        hll = np.where(
            (SL >= 0)[:, None], fL,
            np.where((SR <= 0)[:, None], fR,
                     (SR[:, None] * fL - SL[:, None] * fR + (SL * SR)[:, None] * (UR - UL))
                     / np.where(SR > SL, SR - SL, 1.0)[:, None]))
        Fc_new = Fc - dt / dx * (hll[1:] - hll[:-1])
        # top-order block: quasi-linear rows of the regularized matrix + Rusanov dissipation
        w = lay.w_vectors(fh, u, th)
        wp = _pad(w, cfg.boundary)
        dw = 0.5 * (wp[2:] - wp[:-2])
        tp = _pad(ftop, cfg.boundary)
        lap = tp[2:] - 2 * ftop + tp[:-2]
        sp = _pad(speed, cfg.boundary)
        a_loc = np.maximum(np.maximum(sp[:-2], sp[2:]), speed)
        states = lay.make_states(fh, u, th)
        adv = np.zeros_like(ftop)
        for c, s in enumerate(states):
            if not np.any(dw[c]):
                continue
            b = _Builder(s, 1)
            for r, i in enumerate(lay.top):
                row = b.row(lay.basis[i], True)
                adv[c, r] = sum(v * dw[c, k] for k, v in row.items())
        ftop_new = ftop - dt / dx * adv + 0.5 * dt / dx * a_loc[:, None] * lap
        try:
            u_n, th_n, fh_n = rebuild(Fc_new, ftop_new)
        except InadmissibleState as exc:
            raise SimulationError(f"t = {t + dt:.6g}, step {step + 1}: {exc}") from exc
        Fc, ftop, u, th, fh = Fc_new, ftop_new, u_n, th_n, fh_n
        t += dt
        step += 1
        if cfg.snapshot_every and step % cfg.snapshot_every == 0 and more():
            record(t)
    record(t)
    out.steps = step
    log.debug("simulate: %d steps to t = %g", step, t)
    return out


def characteristic_cone(left: MomentState, right: MomentState, t: float, x0: float = 0.0):
    """``[x0 + t (min u_1 - C sqrt(theta_max)), x0 + t (max u_1 + C sqrt(theta_max))]``."""
    c = max_speed_coefficient(left.M)
    tm = max(left.theta, right.theta)
    lo = min(left.u[0], right.u[0]) - c * sqrt(tm)
    hi = max(left.u[0], right.u[0]) + c * sqrt(tm)
    return x0 + t * lo, x0 + t * hi


def cone_leak(series: SnapshotSeries, left: MomentState, right: MomentState,
              x0: float = 0.0) -> tuple[float, float, float]:
    """``(lo, hi, dev)``: the cone at the final time and the largest change of any
    ``w`` entry in cells whose centers lie outside it."""
    t = series.times[-1]
    lo, hi = characteristic_cone(left, right, t, x0)
    outside = (series.x < lo) | (series.x > hi)
    w0 = np.array([to_w_vector(s) for s in series.states[0]])
    w1 = np.array([to_w_vector(s) for s in series.final])
    dev = np.abs(w1 - w0)[outside]
    return lo, hi, float(dev.max()) if dev.size else 0.0


def signal_extent(series: SnapshotSeries, tol: float = 1e-12) -> tuple[float, float]:
    """Leftmost and rightmost cell centers whose ``w`` changed by more than ``tol``."""
    w0 = np.array([to_w_vector(s) for s in series.states[0]])
    w1 = np.array([to_w_vector(s) for s in series.final])
    hit = np.abs(w1 - w0).max(axis=1) > tol
    if not hit.any():
        return float("nan"), float("nan")
    return float(series.x[hit].min()), float(series.x[hit].max())


def numeric_speed_bound(s: MomentState, kind: str = "regularized",
                        imag_tol: float = 1e-8) -> float:
    """Spectral radius of the chosen matrix, refusing nonreal spectra."""
    A = assemble_grad_1d(s) if kind == "grad" else assemble_regularized_1d(s)
    vals = np.linalg.eigvals(A.data)
    rad = float(np.abs(vals).max())
    if np.abs(vals.imag).max() > imag_tol * max(rad, 1e-300):
        bad = vals[np.abs(vals.imag) > imag_tol * rad]
        raise SimulationError(f"{kind} matrix has complex speeds, e.g. {complex(bad[0]):.6g}")
    return rad


def grad_contrast(D: int = 2, M: int = 3, f: float = 1.0, cells: int = 50,
                  steps: int = 20) -> dict:
    """Speed bounds on a breakdown state from ``A_M`` and from the regularized matrix.

    The Grad bound is expected to fail with complex speeds; the regularized run
    starting from a perturbed breakdown state should complete.
    """
    from .spectral import breakdown_state
    s = breakdown_state(D, M, f)
    out = {"D": D, "M": M, "f": f}
    try:
        numeric_speed_bound(s, "grad")
        out["grad"] = {"complex": False}
    except SimulationError as exc:
        vals = np.linalg.eigvals(assemble_grad_1d(s).data)
        out["grad"] = {"complex": True, "message": str(exc),
                       "max_imag": float(np.abs(vals.imag).max())}
    out["regularized_bound"] = numeric_speed_bound(s, "regularized")
    left = s
    right = breakdown_state(D, M, 0.5 * f, rho=0.8)
    res = simulate(SimConfig(D, M, cells=cells, left=left, right=right, n_steps=steps))
    out["regularized_run"] = {"steps": res.steps, "t": float(res.times[-1]),
                              "min_rho": min(c.rho for c in res.final),
                              "min_theta": min(c.theta for c in res.final)}
    return out
