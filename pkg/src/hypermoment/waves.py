"""Elementary waves of the x_1-split Riemann problem.

A characteristic field is a class ``j`` (hat index of the eigen-class) with a
Hermite zero ``C`` of degree ``k = M + 1 - |hat|``.  Two kinds of field are
genuinely nonlinear: class 1 with ``C != 0`` ("v1") and the ``2e_k`` classes
with ``C != 0`` ("v2ek").  Everything else is linearly degenerate.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import exp, expm1, log, sqrt

import numpy as np

from . import indexing as ix
from .hermite import hermite_eval, hermite_roots
from .spectral import (EigenClass, analytic_eigenvector, class_of,
                       class_parameter_vector, second_block_slots)
from .state import InadmissibleState, MomentState, from_w_vector, to_fluid_moments, to_w_vector

GAMMA_SERIES_TOL = 1e-6
ZERO_ROOT_TOL = 1e-12

GNL = "genuinely-nonlinear"
LD = "linearly-degenerate"


class FieldMismatch(ValueError):
    """``C`` is not a zero of the class's Hermite polynomial, or misuse of a field."""


class CurveExit(RuntimeError):
    """An integral curve left the admissible region."""

    def __init__(self, zeta: float, msg: str):
        super().__init__(f"curve left admissibility at zeta = {zeta:.6g}: {msg}")
        self.zeta = zeta


class DegenerateSpeed(ValueError):
    """Equal densities: the speed formula from the mass jump is undefined."""


@dataclass(frozen=True)
class CharacteristicField:
    D: int
    M: int
    cls: EigenClass
    i: int
    C: float
    nature: str
    kind: str          # "v1", "v2ek" or "other"
    axis: int = 0      # k for "v2ek"

    def to_json(self) -> dict:
        return {"D": self.D, "M": self.M, "class": self.cls.j, "hat": list(self.cls.hat_alpha),
                "k": self.cls.k, "root_index": self.i, "C": self.C, "nature": self.nature,
                "kind": self.kind, "axis": self.axis}


def _v2_class_axis(D: int, M: int, j: int) -> int:
    """Axis ``k >= 2`` if class ``j`` is ``2e_k``, else 0."""
    for k, slot in zip(range(2, D + 1), second_block_slots(D) if D >= 2 else []):
        if slot + 1 == j:
            return k
    return 0


def field_kind(D: int, M: int, j: int) -> tuple[str, int]:
    if j == 1:
        return "v1", 0
    k = _v2_class_axis(D, M, j)
    return ("v2ek", k) if k else ("other", 0)


def classify_field(D: int, M: int, j: int, C: float, tol: float = 1e-8) -> str:
    """GNL iff ``C != 0`` and the class is 1 or a ``2e_k`` class; LD otherwise."""
    cls = class_of(D, M, j)
    scale = max(1.0, float(np.max(np.abs(hermite_roots(cls.k)))) ** cls.k)
    if abs(hermite_eval(cls.k, C)) > tol * scale:
        raise FieldMismatch(f"C = {C} is not a zero of He_{cls.k} (class {j})")
    kind, _ = field_kind(D, M, j)
    return GNL if kind != "other" and abs(C) > ZERO_ROOT_TOL else LD


def make_field(D: int, M: int, j: int, i: int) -> CharacteristicField:
    cls = class_of(D, M, j)
    if not 1 <= i <= cls.k:
        raise ValueError(f"root index {i} outside 1..{cls.k}")
    C = float(hermite_roots(cls.k)[i - 1])
    kind, axis = field_kind(D, M, j)
    return CharacteristicField(D, M, cls, i, C, classify_field(D, M, j, C), kind, axis)


def all_fields(D: int, M: int) -> list[CharacteristicField]:
    from .spectral import classes
    return [make_field(D, M, c.j, i) for c in classes(D, M) for i in range(1, c.k + 1)]


# eigenvalue gradient ----------------------------------------------------------

def _lam_of_w(D: int, M: int, w: np.ndarray, C: float) -> float:
    pos = ix.position_map(D, M)
    rho = w[0]
    theta = 2.0 * sum(w[pos[ix.shift((0,) * D, d, 2)]] for d in range(1, D + 1)) / (D * rho)
    return float(w[pos[ix.unit(D, 1)]] + C * sqrt(theta))


def gradient_closed_form(s: MomentState, fld: CharacteristicField) -> float:
    """``(sqrt(theta) C / 2) [(1 + C^2/D) v_1 + (2/D) sum_d v_{N(2e_d)}]``."""
    v = class_parameter_vector(s, fld.cls.j, fld.C)
    D = s.D
    tail = sum(v[k] for k in second_block_slots(D)) if D >= 2 else 0.0
    return 0.5 * sqrt(s.theta) * fld.C * ((1 + fld.C ** 2 / D) * v[0] + 2.0 / D * tail)


def gradient_fd(s: MomentState, fld: CharacteristicField, h: float = 1e-3) -> float:
    """Richardson-extrapolated central difference of ``lam`` along ``r^``."""
    _, r = analytic_eigenvector(s, fld.cls, fld.i)
    w = to_w_vector(s)

    def d(hh):
        return (_lam_of_w(s.D, s.M, w + hh * r, fld.C)
                - _lam_of_w(s.D, s.M, w - hh * r, fld.C)) / (2 * hh)

    return (4 * d(h / 2) - d(h)) / 3


# rarefaction curves ------------------------------------------------------------

def gamma(D: int, C: float) -> float:
    """Growth rate of ``p`` along a class-1 integral curve: ``(D - 1 + C^2)/D``."""
    return (D - 1 + C * C) / D


def _expm1_ratio(x: float) -> float:
    """``(e^x - 1)/x`` with its series near 0."""
    if abs(x) < 1e-8:
        return 1.0 + x / 2 + x * x / 6
    return expm1(x) / x


@dataclass(frozen=True)
class CurvePoint:
    rho: float
    u: tuple
    p: float
    p_diag: tuple      # p_{2e_d}, d = 1..D

    @property
    def p_2e1(self) -> float:
        return self.p_diag[0]

    def to_json(self) -> dict:
        return {"rho": self.rho, "u": list(self.u), "p": self.p, "p_2e": list(self.p_diag)}


def rarefaction_curve_closed(s0: MomentState, case: str, C: float, zeta: float,
                             k: int = 2) -> CurvePoint:
    """Closed-form ``(rho, u, p, p_{2e_d})`` along a GNL integral curve.

    ``case`` is ``"v1"`` (class 1, ``He_{M+1}(C) = 0``) or ``"v2ek"`` (class
    ``2e_k``, ``He_{M-1}(C) = 0``).
    """
    D = s0.D
    rho0, p0, th0 = s0.rho, s0.p, s0.theta
    pd0 = [p0 + 2.0 * s0.fval(ix.shift((0,) * D, d, 2)) for d in range(1, D + 1)]
    if case == "v1":
        G = gamma(D, C)
        x = (G - 1) * zeta / 2
        if abs(G - 1) < GAMMA_SERIES_TOL:
            du = C * sqrt(th0) * zeta * _expm1_ratio(x)
        else:
            du = 2 * C * sqrt(th0) / (G - 1) * expm1(x)
        growth = expm1(G * zeta)
        p = p0 * exp(G * zeta)
        pd = [pd0[0] + C * C / G * p0 * growth] + [q + p0 / G * growth for q in pd0[1:]]
        return CurvePoint(rho0 * exp(zeta), (s0.u[0] + du,) + tuple(s0.u[1:]), p, tuple(pd))
    if case == "v2ek":
        if not 2 <= k <= D:
            raise ValueError(f"axis k = {k} outside 2..{D}")
        p = p0 * exp(2 * zeta / D)
        pd = list(pd0)
        pd[k - 1] += D * p0 * expm1(2 * zeta / D)
        return CurvePoint(rho0, tuple(s0.u), p, tuple(pd))
    raise ValueError(f"unknown case {case!r}; expected 'v1' or 'v2ek'")


def curve_eigenvalue(s0: MomentState, case: str, C: float, zeta: float, k: int = 2) -> float:
    pt = rarefaction_curve_closed(s0, case, C, zeta, k)
    return pt.u[0] + C * sqrt(pt.p / pt.rho)


def state_on_curve(s0: MomentState, pt: CurvePoint) -> MomentState:
    """Full state with the curve's low-order values and the remaining moments of ``s0``."""
    D = s0.D
    f = dict(s0.f)
    theta = pt.p / pt.rho
    for d in range(1, D + 1):
        f[ix.shift((0,) * D, d, 2)] = 0.5 * (pt.p_diag[d - 1] - pt.p)
    return s0.replace(rho=pt.rho, u=tuple(pt.u), theta=theta, f=f)


def normalized_eigenvector(s: MomentState, fld: CharacteristicField) -> np.ndarray:
    """``r^`` scaled so that ``r_rho = rho`` (v1), ``r_{p_{2e_k}/2} = rho theta`` (v2ek),
    or the pivot slot ``(0, hat)`` equals 1 (other fields)."""
    _, r = analytic_eigenvector(s, fld.cls, fld.i)
    if fld.kind == "other":
        piv = ix.position_map(s.D, s.M)[(0,) + fld.cls.hat_alpha]
        r = r / r[piv]
    return r


def integral_curve(s0: MomentState, fld: CharacteristicField, zeta: float,
                   h: float | None = None) -> MomentState:
    """RK4 solution of ``w' = r^(w)`` from ``s0`` to parameter ``zeta``."""
    if zeta == 0:
        return s0
    if h is None:
        h = min(1e-3, abs(zeta) / 100)
    n = int(np.ceil(abs(zeta) / h))
    step = zeta / n
    D, M = s0.D, s0.M
    w = to_w_vector(s0)

    def rhs(wv, z):
        try:
            s = from_w_vector(D, M, wv)
        except (InadmissibleState, ValueError) as exc:
            raise CurveExit(z, str(exc)) from exc
        return normalized_eigenvector(s, fld)

    z = 0.0
    for _ in range(n):
        k1 = rhs(w, z)
        k2 = rhs(w + 0.5 * step * k1, z + step / 2)
        k3 = rhs(w + 0.5 * step * k2, z + step / 2)
        k4 = rhs(w + step * k3, z + step)
        w = w + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        z += step
    try:
        return from_w_vector(D, M, w)
    except (InadmissibleState, ValueError) as exc:
        raise CurveExit(z, str(exc)) from exc


def richardson_derivative(fn, z: float, h: float = 1e-3) -> np.ndarray:
    def d(hh):
        return (np.asarray(fn(z + hh)) - np.asarray(fn(z - hh))) / (2 * hh)
    return (4 * d(h / 2) - d(h)) / 3


def closed_curve_ode_residual(s0: MomentState, fld: CharacteristicField, zeta: float,
                              h: float = 1e-3) -> float:
    """Max relative mismatch between the derivative of the closed-form curve and ``r^``
    on the ``(rho, u_d, p, p_{2e_d})`` components."""
    if fld.nature != GNL:
        raise FieldMismatch("closed-form curves exist only for GNL fields")
    k = fld.axis or 2

    def vec(z):
        pt = rarefaction_curve_closed(s0, fld.kind, fld.C, z, k)
        return [pt.rho, *pt.u, pt.p, *pt.p_diag]

    dv = richardson_derivative(vec, zeta, h)
    pt = rarefaction_curve_closed(s0, fld.kind, fld.C, zeta, k)
    s = state_on_curve(s0, pt)
    r = normalized_eigenvector(s, fld)
    D = s.D
    pos = ix.position_map(D, s.M)
    r_diag = [2 * r[pos[ix.shift((0,) * D, d, 2)]] for d in range(1, D + 1)]
    target = [r[0], *(r[pos[ix.unit(D, d)]] for d in range(1, D + 1)),
              sum(r_diag) / D, *r_diag]
    target = np.array(target)
    scale = np.maximum(1.0, np.abs(target))
    return float(np.max(np.abs(dv - target) / scale))


# contacts and shocks ------------------------------------------------------------

def _pressure_pair(s: MomentState) -> tuple[float, float]:
    return s.p, s.p + 2.0 * s.fval(ix.shift((0,) * s.D, 1, 2))


def _eq_tol(a: float, b: float, tol: float = 1e-9) -> float:
    return tol * (1.0 + max(abs(a), abs(b)))


def contact_invariants(wL: MomentState, wR: MomentState, fld: CharacteristicField) -> dict:
    """Jumps of ``u_1``, ``p``, ``p_{2e_1}`` across a contact and whether they vanish."""
    if fld.nature != LD:
        raise FieldMismatch("contact invariants apply to linearly degenerate fields only")
    pL, p1L = _pressure_pair(wL)
    pR, p1R = _pressure_pair(wR)
    jumps = {"u1": wR.u[0] - wL.u[0], "p": pR - pL, "p_2e1": p1R - p1L}
    required = ["u1"] if abs(fld.C) <= ZERO_ROOT_TOL else ["u1", "p", "p_2e1"]
    tols = {"u1": _eq_tol(wL.u[0], wR.u[0]), "p": _eq_tol(pL, pR), "p_2e1": _eq_tol(p1L, p1R)}
    ok = all(abs(jumps[q]) <= tols[q] for q in required)
    return {"jumps": jumps, "required": required, "valid": ok}


def shock_speed(wL: MomentState, wR: MomentState) -> float:
    """``S = (rho_L u_L - rho_R u_R) / (rho_L - rho_R)``."""
    if wL.rho == wR.rho:
        raise DegenerateSpeed("equal densities; use the equal-density branch of shock_residuals")
    return (wL.rho * wL.u[0] - wR.rho * wR.u[0]) / (wL.rho - wR.rho)


def eigenvalue(s: MomentState, C: float) -> float:
    return s.u[0] + C * sqrt(s.theta)


@dataclass
class ShockReport:
    speed: float
    conservative: dict           # key(alpha) -> residual, |alpha| < M
    mass_momentum: tuple         # residuals of the first two jump equations
    rho_p_u_identity: float      # (rhoL-rhoR)(p1L-p1R) - rhoL rhoR (uL-uR)^2
    entropy: bool | None
    top_order: str = "path-dependent, unchecked"

    def to_json(self) -> dict:
        return {"speed": self.speed, "conservative": self.conservative,
                "mass_momentum": list(self.mass_momentum),
                "rho_p_u_identity": self.rho_p_u_identity, "entropy": self.entropy,
                "top_order": self.top_order}


def shock_residuals(wL: MomentState, wR: MomentState, S: float,
                    fld: CharacteristicField | None = None) -> ShockReport:
    """Jump residuals ``S [F_alpha] - (alpha_1 + 1) [F_{alpha+e_1}]`` for ``|alpha| < M``."""
    FL, FR = to_fluid_moments(wL), to_fluid_moments(wR)
    res = {}
    for a in ix.indices_upto(wL.D, wL.M - 1):
        b = ix.shift(a, 1, 1)
        res[ix.key(a)] = S * (FL[a] - FR[a]) - (a[0] + 1) * (FL[b] - FR[b])
    e1 = ix.unit(wL.D, 1)
    mm = (res[ix.key((0,) * wL.D)], res[ix.key(e1)])
    _, p1L = _pressure_pair(wL)
    _, p1R = _pressure_pair(wR)
    ident = (wL.rho - wR.rho) * (p1L - p1R) - wL.rho * wR.rho * (wL.u[0] - wR.u[0]) ** 2
    ent = None
    if fld is not None:
        ent = bool(eigenvalue(wL, fld.C) > S > eigenvalue(wR, fld.C))
    return ShockReport(S, res, mm, ident, ent)


def hugoniot_pair(wL: MomentState, C: float, eps: float, rho_ratio: float) -> tuple[MomentState, float]:
    """Right state and speed of a jump satisfying the mass and momentum relations.

    ``S = lam_L - eps |C| sqrt(theta_L)``, ``rho_R = rho_ratio rho_L``; ``theta_R`` is
    chosen so that ``lam_R = S - eps |C| sqrt(theta_L)``, so the entropy inequality
    holds with margin.  Transverse diagonal pressures absorb the change of ``p``;
    higher moments are copied from ``wL``.
    """
    if C == 0 or rho_ratio == 1.0 or eps <= 0:
        raise ValueError("need C != 0, rho_ratio != 1 and eps > 0")
    D = wL.D
    sL = sqrt(wL.theta)
    S = eigenvalue(wL, C) - eps * abs(C) * sL
    rhoR = rho_ratio * wL.rho
    m = wL.rho * (wL.u[0] - S)
    uR = S + m / rhoR
    sqR = (S - eps * abs(C) * sL - uR) / C
    if sqR <= 0:
        raise InadmissibleState("no admissible temperature for this jump")
    thR = sqR * sqR
    _, p1L = _pressure_pair(wL)
    p1R = p1L + m * (wL.u[0] - uR)
    pR = rhoR * thR
    if D == 1:
        raise ValueError("the transverse pressures are needed to set theta_R; D must be >= 2")
    pdL = [wL.p + 2.0 * wL.fval(ix.shift((0,) * D, d, 2)) for d in range(1, D + 1)]
    shift_ = (D * pR - p1R - sum(pdL[1:])) / (D - 1)
    pdR = [p1R] + [q + shift_ for q in pdL[1:]]
    if min(pdR) <= 0:
        raise InadmissibleState("jump produces a non-positive diagonal pressure")
    f = dict(wL.f)
    for d in range(1, D + 1):
        f[ix.shift((0,) * D, d, 2)] = 0.5 * (pdR[d - 1] - pR)
    wR = wL.replace(rho=rhoR, u=(uR,) + tuple(wL.u[1:]), theta=thR, f=f)
    return wR, S


# elementary-wave classification ------------------------------------------------

@dataclass
class WaveDescription:
    type: str                       # rarefaction | shock | contact | unclassified
    field: dict
    speeds: tuple
    pattern: dict
    residuals: dict = dc_field(default_factory=dict)
    candidates: list = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {"type": self.type, "field": self.field, "speeds": list(self.speeds),
                "pattern": self.pattern, "residuals": self.residuals,
                "candidates": self.candidates}


def _cmp(a: float, b: float, tol: float) -> str:
    if abs(a - b) <= tol:
        return "="
    return "<" if a < b else ">"


def sign_pattern(wL: MomentState, wR: MomentState) -> dict:
    tol = 1e-9 * (1 + max(abs(wL.u[0]), abs(wR.u[0])))
    ptol = 1e-9 * (1 + max(wL.p, wR.p))
    return {"u1": _cmp(wL.u[0], wR.u[0], tol), "p": _cmp(wL.p, wR.p, ptol)}


def table_patterns(kind: str, C: float, pat: dict) -> bool:
    """Whether a sign pattern is allowed for a wave ``kind`` in a field with zero ``C``."""
    u, p = pat["u1"], pat["p"]
    le = u in ("<", "=")
    if kind == "rarefaction":
        return C != 0 and le and (p == "<" if C > 0 else p == ">")
    if kind == "shock":
        return C != 0 and ((le and (p == ">" if C > 0 else p == "<")) or u == ">")
    if kind == "contact":
        return u == "=" if C == 0 else (u == "=" and p == "=")
    raise ValueError(kind)


def rarefaction_residual(wL: MomentState, wR: MomentState, fld: CharacteristicField) -> tuple[float, float]:
    """``(zeta, mismatch)`` of ``wR`` against the closed-form curve through ``wL``."""
    if fld.kind == "v1":
        zeta = log(wR.rho / wL.rho)
    else:
        zeta = fld.D / 2 * log(wR.p / wL.p)
    pt = rarefaction_curve_closed(wL, fld.kind, fld.C, zeta, fld.axis or 2)
    pdR = [wR.p + 2.0 * wR.fval(ix.shift((0,) * wR.D, d, 2)) for d in range(1, wR.D + 1)]
    a = np.array([pt.rho, *pt.u, pt.p, *pt.p_diag])
    b = np.array([wR.rho, *wR.u, wR.p, *pdR])
    return zeta, float(np.max(np.abs(a - b) / (1 + np.abs(b))))


def classify_elementary_wave(wL: MomentState, wR: MomentState, fld: CharacteristicField,
                             tol: float = 1e-8) -> WaveDescription:
    C = 0.0 if abs(fld.C) <= ZERO_ROOT_TOL else fld.C
    pat = sign_pattern(wL, wR)
    lamL, lamR = eigenvalue(wL, fld.C), eigenvalue(wR, fld.C)
    res, cands = {}, []
    if fld.nature == LD:
        ci = contact_invariants(wL, wR, fld)
        res["contact"] = ci["jumps"]
        if ci["valid"] and table_patterns("contact", C, pat):
            cands.append("contact")
    else:
        zeta, mis = rarefaction_residual(wL, wR, fld)
        res["rarefaction"] = {"zeta": zeta, "mismatch": mis}
        if mis <= tol and C * zeta > 0 and table_patterns("rarefaction", C, pat):
            cands.append("rarefaction")
        try:
            S = shock_speed(wL, wR)
        except DegenerateSpeed:
            S = None
        if S is not None:
            rep = shock_residuals(wL, wR, S, fld)
            scale = 1 + abs(wL.rho * wL.u[0]) + abs(wR.rho * wR.u[0]) + wL.p + wR.p
            mm = max(abs(x) for x in rep.mass_momentum) / scale
            res["shock"] = {"speed": S, "mass_momentum": mm, "entropy": rep.entropy}
            if mm <= tol and rep.entropy and table_patterns("shock", C, pat):
                cands.append("shock")
        else:
            # equal densities: u_1 and p_{2e_1} must agree, entropy sets the sign of the p jump
            _, p1L = _pressure_pair(wL)
            _, p1R = _pressure_pair(wR)
            ok = (pat["u1"] == "=" and abs(p1L - p1R) <= _eq_tol(p1L, p1R)
                  and C * (sqrt(wL.theta) - sqrt(wR.theta)) > 0)
            res["shock"] = {"speed": None, "equal_density": True, "entropy": ok}
            if ok and table_patterns("shock", C, pat):
                cands.append("shock")
    kind = cands[0] if len(cands) == 1 else ("ambiguous" if cands else "unclassified")
    return WaveDescription(kind, fld.to_json(), (lamL, lamR), pat, res, cands)
