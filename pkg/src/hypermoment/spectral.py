"""Eigenstructure of the regularized 1D-split matrix.

Eigenvectors are built in the scaled variables by a lexicographic sweep
over the moment indices.  Each sweep is seeded by a parameter vector ``v``
indexed by the (D-1)-dimensional class indices and by an eigenvalue
candidate ``lam`` (a Hermite zero).  The top-order closure conditions are
linear in ``v``; their coefficient matrix ``B(lam)`` is formed by running
the sweep on unit seeds, and ``v = B^{-1} I_j`` selects class ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np

from . import indexing as ix
from .assembly import SystemMatrix, assemble_regularized_1d
from .hermite import HermiteRootTable, hermite_all, hermite_roots, multiplicity_exponent
from .state import MomentState, scaling_diagonal


@dataclass(frozen=True)
class EigenClass:
    hat_alpha: ix.MultiIndex   # (D-1)-multi-index, |hat_alpha| <= M
    j: int                     # 1-based class ordinal among (D-1)-indices
    k: int                     # Hermite degree M + 1 - |hat_alpha|


@dataclass(frozen=True)
class EigenPair:
    lam: float
    cls: EigenClass
    i: int                     # 1-based root index
    C: float                   # Hermite zero, lam = u_1 + C sqrt(theta)
    vector: np.ndarray         # eigenvector of the regularized matrix


@dataclass(frozen=True)
class SpectralDecomposition:
    pairs: tuple

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    @property
    def basis(self) -> np.ndarray:
        return np.column_stack([p.vector for p in self.pairs])


def classes(D: int, M: int) -> list[EigenClass]:
    """All eigen-classes in class-ordinal order (``N_v`` of them)."""
    return [EigenClass(h, j + 1, M + 1 - sum(h))
            for j, h in enumerate(ix.indices_upto(D - 1, M))]


def class_count(D: int, M: int) -> int:
    return ix.count(D - 1, M)


def analytic_eigenvalues(s: MomentState) -> list[tuple[float, int]]:
    """Distinct-by-degree eigenvalues ``u_1 + C_i^k sqrt(theta)`` with multiplicities.

    Zeros shared by several degrees (0 for every odd ``k``) are listed once per
    degree; the multiplicities sum to ``N``.
    """
    out = []
    st = sqrt(s.theta)
    for k in range(1, s.M + 2):
        e = multiplicity_exponent(s.D, s.M, k)
        if e == 0:
            continue
        for c in hermite_roots(k):
            out.append((s.u[0] + c * st, e))
    return out


def analytic_spectrum(s: MomentState) -> np.ndarray:
    """Sorted eigenvalues repeated by multiplicity."""
    vals = []
    for lam, e in analytic_eigenvalues(s):
        vals += [lam] * e
    return np.sort(np.array(vals))


# ---------------------------------------------------------------------------
# the eigenvector sweep (scaled variables)

class _Sweep:
    """Precompiled sweep.  ``sweep`` accepts a single ``v`` or a matrix whose
    columns are seeds; the map ``v -> r`` is linear for fixed ``lam``."""

    def __init__(self, s: MomentState):
        self.s = s
        D, M = s.D, s.M
        self.D, self.M = D, M
        self.basis = ix.indices_upto(D, M)
        self.pos = ix.position_map(D, M)
        self.cpos = ix.position_map(D - 1, M)
        zero = (0,) * D
        # normalized moments g_alpha = f_alpha / (rho theta^{|alpha|/2})
        gtab = {a: s.g(a) for a in self.basis}
        self._gtab = gtab
        self.diag2 = [self.pos[ix.shift(zero, d, 2)] for d in range(1, D + 1)]
        self.upos = [self.pos[ix.unit(D, d)] for d in range(1, D + 1)]
        self._cache = {}
        # program: one instruction per basis entry, in ordinal order
        prog = []
        for a in self.basis:
            m = sum(a)
            if a[0] == 0:
                prog.append(("seed", self.cpos[a[1:]]))
            elif m == 1:
                prog.append(("lam", 0))
            elif m == 2 and a[0] == 2:
                prog.append(("lam2", 0))
            elif m == 2:
                k = a.index(1, 1) + 1
                prog.append(("lamu", self.upos[k - 1]))
            else:
                t = ix.tilde(a)
                inner = _merge(self._rf_form(t), self._g_form(t))
                prog.append(("gen", a[0], inner, _merge(self._g_form(a))))
        self.prog = prog
        self.closure_forms = []
        for h in self.cpos:
            t = (0,) + h
            self.closure_forms.append(_merge(self._rf_form(t), self._g_form(t)))

    def g(self, a):
        if not ix.is_valid(a) or sum(a) > self.M:
            return 0.0
        return self._gtab[a]

    def _rf_form(self, a):
        """Scaled perturbation of the Hermite coefficient ``f_a`` as (positions, coefs)."""
        if not ix.is_valid(a) or sum(a) > self.M:
            return {}
        m = sum(a)
        if m == 0:
            return {0: 1.0}
        if m == 1:
            return {}
        if m == 2 and max(a) == 2:
            out = {p: -1.0 / self.D for p in self.diag2}
            out[self.pos[a]] += 1.0
            return out
        return {self.pos[a]: 1.0}

    def _g_form(self, a):
        D = self.D
        out = {}
        for d in range(1, D + 1):
            gd = self.g(ix.shift(a, d, -1))
            if gd:
                out[self.upos[d - 1]] = out.get(self.upos[d - 1], 0.0) + gd
        c = sum(self.g(ix.shift(a, k, -2)) for k in range(1, D + 1))
        if c:
            for p in self.diag2:
                out[p] = out.get(p, 0.0) + c / D
            out[0] = out.get(0, 0.0) - 0.5 * c
        return out

    def sweep(self, v: np.ndarray, lam: float) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        he = hermite_all(self.M + 1, lam)
        r = np.zeros((len(self.basis),) + v.shape[1:])
        for i, ins in enumerate(self.prog):
            op = ins[0]
            if op == "seed":
                r[i] = v[ins[1]]
            elif op == "lam":
                r[i] = lam * r[0]
            elif op == "lam2":
                r[i] = 0.5 * lam * lam * r[0]
            elif op == "lamu":
                r[i] = lam * r[ins[1]]
            else:
                _, a1, (ip, ic), (gp, gc) = ins
                acc = ic @ r[ip] if len(ip) else 0.0
                sub = gc @ r[gp] if len(gp) else 0.0
                r[i] = he[a1] / factorial(a1) * acc - sub
        return r

    def closure(self, r: np.ndarray) -> np.ndarray:
        """``r_{f_tilde} + G(tilde)`` for each class (indexed by ``hat``)."""
        out = np.zeros((len(self.cpos),) + r.shape[1:])
        for c, (ip, ic) in enumerate(self.closure_forms):
            if len(ip):
                out[c] = ic @ r[ip]
        return out

    def response(self, lam: float) -> np.ndarray:
        """``N x N_v`` matrix mapping seeds to sweep vectors at ``lam`` (cached)."""
        key = float(lam)
        if key not in self._cache:
            self._cache[key] = self.sweep(np.eye(len(self.cpos)), lam)
        return self._cache[key]

    def bmatrix(self, lam: float) -> np.ndarray:
        return self.closure(self.response(lam))


def _merge(*forms):
    out = {}
    for f in forms:
        for k, c in f.items():
            out[k] = out.get(k, 0.0) + c
    keys = sorted(out)
    return np.array(keys, dtype=int), np.array([out[k] for k in keys])


def parameter_matrix(s: MomentState, lam: float) -> np.ndarray:
    """Closure-condition matrix ``B(lam)``.

    Row ``N_{D-1}(hat)`` collects ``r_{f_tilde} + G(tilde)`` for the order-``M``
    index with that hat part, as a linear form in ``v``.  The matrix is unit
    lower block-triangular: identity on the first ``D`` and on the trailing
    block, ``-1/2`` in column 1 of each ``2e_k`` row.
    """
    return _Sweep(s).bmatrix(lam)


def second_block_slots(D: int) -> list[int]:
    """0-based class positions of the ``2 e_k`` hat indices, ``k = 2..D``."""
    cpos = ix.position_map(D - 1, 2)
    return [cpos[ix.shift((0,) * (D - 1), k - 1, 2)] for k in range(2, D + 1)]


def _explicit_head(D: int, j: int) -> np.ndarray:
    # first D(D+1)/2 entries of B^{-1} I_j from the block form (B22 = I, B21 = -1/2)
    n2 = D * (D + 1) // 2
    head = np.zeros(n2)
    if j <= n2:
        head[j - 1] = 1.0
        if j == 1:
            head[second_block_slots(D)] = 0.5
    return head


def class_parameter_vector(s: MomentState, j: int, lam: float, _sw: _Sweep | None = None) -> np.ndarray:
    """Seed vector ``v^{(j)} = B(lam)^{-1} I_j`` for class ``j`` (1-based).

    ``v_j = 1``.  For ``j <= D(D+1)/2`` the leading block is explicit
    (``v^{(1)}`` has ``v_{N(2e_k)} = 1/2``); the trailing block follows from
    the unit lower-triangular rows.
    """
    sw = _sw or _Sweep(s)
    nv = len(sw.cpos)
    if not 1 <= j <= nv:
        raise ValueError(f"class ordinal {j} outside 1..{nv}")
    D = s.D
    n2 = min(D * (D + 1) // 2, nv)
    B = sw.bmatrix(lam)
    v = np.zeros(nv)
    if j <= n2:
        v[:n2] = _explicit_head(D, j)[:n2]
        v[n2:] = -B[n2:, :n2] @ v[:n2]
    else:
        e = np.zeros(nv)
        e[j - 1] = 1.0
        v = np.linalg.solve(B, e)
    return v


# printed block algebra ------------------------------------------------------

def omega_matrix(D: int) -> np.ndarray:
    """``Omega`` on the second block: ones between every pair of ``2e_k`` slots."""
    n = D * (D - 1) // 2
    Om = np.zeros((n, n))
    sl = [i - D for i in second_block_slots(D)]
    for a in sl:
        for b in sl:
            Om[a, b] = 1.0
    return Om


def printed_b22(D: int) -> np.ndarray:
    return np.eye(D * (D - 1) // 2) + omega_matrix(D) / D


def printed_b22_inverse(D: int) -> np.ndarray:
    """Closed-form inverse ``I - Omega/(2D-1)``, valid because ``Omega^2 = (D-1) Omega``."""
    return np.eye(D * (D - 1) // 2) - omega_matrix(D) / (2 * D - 1)


def printed_parameter_head(D: int, j: int, lam: float) -> np.ndarray:
    """Leading ``D(D+1)/2`` entries of column ``j`` of ``B^ B^{-1}`` built from the
    printed blocks ``B21 = lam^2/(2D) - 1/2``, ``B22 = I + Omega/D``.

    Kept for comparison only: for ``j = 1`` this does not seed an eigenvector.
    """
    n2 = D * (D + 1) // 2
    if not 1 <= j <= n2:
        raise ValueError(f"class ordinal {j} outside 1..{n2}")
    head = np.zeros(n2)
    head[j - 1] = 1.0
    if j == 1:
        head[second_block_slots(D)] = -(lam * lam / (2 * D) - 0.5)
    return head


# eigenvectors ---------------------------------------------------------------

def _check_root(cls: EigenClass, i: int) -> float:
    if not 1 <= i <= cls.k:
        raise ValueError(f"root index {i} outside 1..{cls.k}")
    return HermiteRootTable(cls.k).root(cls.k, i)


def class_of(D: int, M: int, j: int) -> EigenClass:
    cl = classes(D, M)
    if not 1 <= j <= len(cl):
        raise ValueError(f"class ordinal {j} outside 1..{len(cl)}")
    return cl[j - 1]


def scaled_eigenvector(s: MomentState, cls: EigenClass, i: int) -> tuple[float, np.ndarray]:
    """``(C, r)`` with ``A~ r = C r`` in the scaled variables."""
    C = _check_root(cls, i)
    v = class_parameter_vector(s, cls.j, C)
    return C, _Sweep(s).sweep(v, C)


def analytic_eigenvector(s: MomentState, cls: EigenClass, i: int) -> tuple[float, np.ndarray]:
    """``(lam, r^)``: eigenpair of the regularized matrix for class ``cls``, root ``i``."""
    C, r = scaled_eigenvector(s, cls, i)
    return s.u[0] + C * sqrt(s.theta), r / scaling_diagonal(s)


def closure_residual(s: MomentState, r: np.ndarray, lam: float) -> np.ndarray:
    """``He_{alpha_1+1}(lam) (r_{f_tilde} + G(tilde))`` over all ``|alpha| = M`` (scaled ``r``)."""
    sw = _Sweep(s)
    he = hermite_all(s.M + 1, lam)
    cl = sw.closure(r)
    out = np.empty_like(cl)
    for h, c in sw.cpos.items():
        out[c] = he[s.M + 1 - sum(h)] * cl[c]
    return out


def decompose(s: MomentState) -> SpectralDecomposition:
    pairs = []
    d = scaling_diagonal(s)
    sw = _Sweep(s)
    st = sqrt(s.theta)
    for cls in classes(s.D, s.M):
        for i, C in enumerate(hermite_roots(cls.k), start=1):
            v = class_parameter_vector(s, cls.j, C, sw)
            pairs.append(EigenPair(s.u[0] + C * st, cls, i, float(C), sw.response(C) @ v / d))
    return SpectralDecomposition(tuple(pairs))


def eigenbasis(s: MomentState) -> np.ndarray:
    """``N x N`` matrix whose columns are the analytic eigenvectors, grouped by class."""
    return decompose(s).basis


def eigen_residuals(s: MomentState, A: np.ndarray | None = None) -> np.ndarray:
    """``|A r - lam r| / (|A| |r|)`` for every analytic pair."""
    if A is None:
        A = assemble_regularized_1d(s).data
    nA = np.linalg.norm(A)
    out = []
    for p in decompose(s).pairs:
        r = p.vector
        out.append(np.linalg.norm(A @ r - p.lam * r) / (nA * np.linalg.norm(r)))
    return np.array(out)


# numeric checks -------------------------------------------------------------

def match_multisets(a, b) -> float:
    """Greedy nearest pairing of two equal-size multisets; returns the max distance.

    Both inputs are sorted by real part, then each entry of ``a`` takes the
    closest unused entry of ``b``.
    """
    a = np.sort_complex(np.asarray(a, dtype=complex))
    b = list(np.sort_complex(np.asarray(b, dtype=complex)))
    if len(a) != len(b):
        raise ValueError("multisets differ in size")
    worst = 0.0
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b.pop(k)))
    return worst


def spectrum_mismatch(s: MomentState) -> tuple[float, float]:
    """``(max pairing distance, scale)`` between analytic and numeric spectra of ``A^``."""
    A = assemble_regularized_1d(s).data
    num = np.linalg.eigvals(A)
    scale = abs(s.u[0]) + sqrt(s.theta) * hermite_roots(s.M + 1)[-1]
    return match_multisets(analytic_spectrum(s), num), scale


def charpoly_logdet(A: np.ndarray, lam: float) -> tuple[float, float]:
    """``(sign, log|det(lam I - A)|)``."""
    return np.linalg.slogdet(lam * np.eye(A.shape[0]) - A)


@dataclass(frozen=True)
class HyperbolicityReport:
    hyperbolic: bool
    max_imag: float
    condition: float
    spectral_radius: float
    witness: tuple

    def to_json(self) -> dict:
        return {"hyperbolic": self.hyperbolic, "max_imag": self.max_imag,
                "condition": self.condition, "spectral_radius": self.spectral_radius,
                "witness": [[z.real, z.imag] for z in self.witness]}


def hyperbolicity_report(matrix, imag_tol: float = 1e-8, cond_tol: float = 1e12) -> HyperbolicityReport:
    """Numeric real-diagonalizability verdict for a square matrix."""
    A = matrix.data if isinstance(matrix, SystemMatrix) else np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    vals, vecs = np.linalg.eig(A)
    rad = float(np.max(np.abs(vals))) if len(vals) else 0.0
    im = np.abs(vals.imag)
    bad = im > imag_tol * max(rad, 1e-300)
    cond = float(np.linalg.cond(vecs)) if len(vals) else 1.0
    ok = not bad.any() and cond <= cond_tol
    witness = tuple(complex(z) for z in vals[bad])
    return HyperbolicityReport(ok, float(im.max()) if len(vals) else 0.0, cond, rad, witness)


# unregularized breakdown witness ---------------------------------------------

def breakdown_state(D: int, M: int, f: float, rho: float = 1.0,
                    u: tuple | None = None, theta: float = 1.0) -> MomentState:
    """State whose only nonzero coefficients are ``f_0 = rho`` and ``f_{M e_1}``."""
    from .state import make_state
    top = ix.shift((0,) * D, 1, M)
    return make_state(D, M, rho, u if u is not None else (0.0,) * D, theta, {top: f})


def breakdown_charpoly(M: int, u1: float, theta: float, f: float, lam,
                       rho: float = 1.0, printed: bool = False):
    """Factorized ``det(lam I - A_M)`` at a breakdown state (``D = 2``).

    The exact factors carry ``-f/rho``.  ``printed=True`` gives the
    literature variant with sign ``(-1)^(M-1)`` and plain ``f``, which only
    agrees for even ``M`` and ``rho = 1``.
    """
    from .hermite import hermite_eval
    lam = np.asarray(lam, dtype=float)
    x = (lam - u1) / sqrt(theta)
    sg, c = ((-1.0) ** (M - 1), f) if printed else (-1.0, f / rho)
    out = np.ones_like(lam)
    for i in range(1, M):
        out = out * hermite_eval(i, x) * theta ** (i / 2)
    out = out * (hermite_eval(M, x) * theta ** (M / 2) + sg * factorial(M) * c)
    out = out * (hermite_eval(M + 1, x) * theta ** ((M + 1) / 2)
                 + sg * factorial(M + 1) * c * (lam - u1))
    return out


def breakdown_roots(M: int, f: float, rho: float = 1.0) -> np.ndarray:
    """Roots in ``x = (lam - u1)/sqrt(theta)`` of the two perturbed factors at ``theta = 1``."""
    from numpy.polynomial import hermite_e as He
    c = f / rho
    p1 = He.herme2poly([0] * M + [1])
    p1[0] -= factorial(M) * c
    p2 = He.herme2poly([0] * (M + 1) + [1])
    p2[1] -= factorial(M + 1) * c
    return np.concatenate([np.polynomial.polynomial.polyroots(p1),
                           np.polynomial.polynomial.polyroots(p2)])
