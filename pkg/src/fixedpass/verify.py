"""Independent checks: frequency sweeps, state-space KYP LMIs, grid search.

Nothing here touches the SOS machinery.  The sweep works on float
coefficient arrays and the KYP program is an LMI in (P, index) over the
state-space realization.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (ImproperTransfer, NoStablePoint, NonMinimumPhase, SolverFailure,
                     UnstableInput)
from .sdp import Affine, ConicProgram, SolverOptions, Status, solve
from .system import (ROOT_TOL, ControllerBasis, Domain, ParamBox, RationalTransfer,
                     compose_closed_loop, in_stable_region)

SWEEP_POINTS = 4096
W_RANGE = (1e-6, 1e6)
REFINE_TOL = 1e-9
N_REFINE = 8


class IndexKind(str, enum.Enum):
    IFP = "ifp"
    OFP = "ofp"


def _desc(p) -> np.ndarray:
    """Float coefficients, highest power first, leading zeros stripped."""
    cs = np.array([float(c) for c in p.coeffs()][::-1]) if not p.is_zero() else np.zeros(1)
    nz = np.flatnonzero(cs)
    return cs[nz[0]:] if nz.size else np.zeros(1)


def stable_roots(den: np.ndarray, domain: Domain, margin: float = ROOT_TOL) -> bool:
    """Companion-matrix eigenvalue test (np.roots) with a safety margin."""
    r = np.roots(den)
    return bool(np.all(in_stable_region(r, domain, tol=margin)))


def is_stable(g: RationalTransfer) -> bool:
    return stable_roots(_desc(g.den), g.domain)


def is_minimum_phase(g: RationalTransfer) -> bool:
    if g.num.is_zero():
        return False
    return stable_roots(_desc(g.num), g.domain)


# -- frequency sweep -----------------------------------------------------------

def sweep_grid(domain: Domain, n_points: int = SWEEP_POINTS) -> np.ndarray:
    """CT: w = 0 plus log-spaced w; DT: theta on [0, pi] (real coefficients)."""
    if domain is Domain.CT:
        return np.concatenate([[0.0], np.logspace(np.log10(W_RANGE[0]), np.log10(W_RANGE[1]), n_points)])
    return np.linspace(0.0, np.pi, n_points)


def boundary_points(domain: Domain, freqs) -> np.ndarray:
    freqs = np.asarray(freqs, dtype=float)
    return 1j * freqs if domain is Domain.CT else np.exp(1j * freqs)


def _values(num: np.ndarray, den: np.ndarray, x: np.ndarray, kind: IndexKind) -> np.ndarray:
    n = np.polyval(num, x)
    d = np.polyval(den, x)
    return np.real(n / d) if kind is IndexKind.IFP else np.real(d / n)


def _limit_ct(num: np.ndarray, den: np.ndarray, kind: IndexKind) -> float:
    """lim Re(top(jw)/bottom(jw)) as w -> infinity."""
    top, bot = (num, den) if kind is IndexKind.IFP else (den, num)
    q, _ = np.polydiv(top, bot)
    q = q[::-1]  # ascending
    if len(top) < len(bot):
        return 0.0
    # Re q(jw) = q0 - q2 w^2 + q4 w^4 - ...; the highest even power dominates
    evens = [(k, q[k]) for k in range(0, len(q), 2) if q[k] != 0]
    if not evens:
        return 0.0
    k, c = evens[-1]
    if k == 0:
        return float(c)
    return math.inf if c * (-1) ** (k // 2) > 0 else -math.inf


@dataclass
class SweepResult:
    index: float
    argmin: float  # frequency of the minimum (inf for the CT limit)
    limit: float | None
    grid_min: float


def _refine(f, grid: np.ndarray, i: int) -> tuple[float, float]:
    a, b, c = grid[i - 1], grid[i], grid[i + 1]
    fb = f(b)
    try:
        r = minimize_scalar(f, bracket=(a, b, c), method="golden", tol=REFINE_TOL)
    except (ValueError, RuntimeError):
        return b, fb
    if a <= r.x <= c and r.fun < fb:
        return float(r.x), float(r.fun)
    return b, fb


def _sweep_arrays(num: np.ndarray, den: np.ndarray, domain: Domain, kind: IndexKind,
                  n_points: int = SWEEP_POINTS) -> SweepResult:
    grid = sweep_grid(domain, n_points)
    vals = _values(num, den, boundary_points(domain, grid), kind)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i0 = int(np.argmin(vals))
    best_w, best = float(grid[i0]), float(vals[i0])
    grid_min = best

    def f(w):
        v = _values(num, den, boundary_points(domain, np.array([w])), kind)[0]
        return v if np.isfinite(v) else np.inf

    interior = np.flatnonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1
    for i in interior[np.argsort(vals[interior])][:N_REFINE]:
        w, v = _refine(f, grid, int(i))
        if v < best:
            best_w, best = w, v
    limit = None
    if domain is Domain.CT:
        limit = _limit_ct(num, den, kind)
        if limit < best:
            best_w, best = math.inf, limit
    return SweepResult(best, best_w, limit, grid_min)


def sweep(g: RationalTransfer, kind: IndexKind | str = IndexKind.IFP,
          n_points: int = SWEEP_POINTS) -> SweepResult:
    kind = IndexKind(kind)
    if not is_stable(g):
        raise UnstableInput(f"poles {np.round(g.poles(), 6).tolist()} are not strictly stable")
    if kind is IndexKind.OFP and not is_minimum_phase(g):
        raise NonMinimumPhase(f"zeros {np.round(g.zeros(), 6).tolist()} are not strictly stable")
    return _sweep_arrays(_desc(g.num), _desc(g.den), g.domain, kind, n_points)


def freq_index(g: RationalTransfer, kind: IndexKind | str = IndexKind.IFP,
               n_points: int = SWEEP_POINTS) -> float:
    """min Re G (IFP) or min Re 1/G (OFP) over the stability boundary."""
    return sweep(g, kind, n_points).index


# -- state space and KYP ---------------------------------------------------------

@dataclass
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    domain: Domain

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        n = self.order
        out = np.full(x.shape, self.D, dtype=complex)
        if n == 0:
            return out
        for k, xk in enumerate(x):
            out[k] += (self.C @ np.linalg.solve(xk * np.eye(n) - self.A, self.B)).item()
        return out

    def transfer_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """(num, den) descending, via C (xI-A)^-1 B = det(xI-A+BC)/det(xI-A) - 1."""
        if self.order == 0:
            return np.array([self.D]), np.array([1.0])
        den = np.poly(self.A)
        num = np.poly(self.A - self.B @ self.C) - den + self.D * den
        return num, den

    def is_stable(self, margin: float = ROOT_TOL) -> bool:
        if self.order == 0:
            return True
        return bool(np.all(in_stable_region(np.linalg.eigvals(self.A), self.domain, tol=margin)))


def tf_to_ss(g: RationalTransfer) -> StateSpace:
    """Controllable canonical form: A = [[a1 .. an], [I 0]], B = e1."""
    if g.relative_degree < 0:
        raise ImproperTransfer(f"numerator degree exceeds denominator degree by {-g.relative_degree}")
    den = _desc(g.den)
    num = _desc(g.num)
    lead = den[0]
    den, num = den / lead, num / lead
    n = len(den) - 1
    num = np.concatenate([np.zeros(n + 1 - len(num)), num])
    D = float(num[0])
    rem = num - D * den
    A = np.zeros((n, n))
    if n:
        A[0, :] = -den[1:]
        A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    if n:
        B[0, 0] = 1.0
    C = rem[1:].reshape(1, n)
    return StateSpace(A, B, C, D, g.domain)


def kyp_lmi(ss: StateSpace, P, idx: Affine, kind: IndexKind) -> list[list[Affine]]:
    """Dissipation inequality matrix (must be <= 0) for supply uy - idx*u^2 or uy - idx*y^2."""
    n = ss.order
    A, B, C, D = ss.A, ss.B[:, 0], ss.C[0], ss.D
    Pm = [[P[i, j] for j in range(n)] for i in range(n)]

    def AtPA(i, j):
        acc = Affine()
        for k in range(n):
            for l in range(n):
                if A[k, i] and A[l, j]:
                    acc.iadd_scaled(Pm[k][l], A[k, i] * A[l, j])
        return acc

    def rowP(vec, j):  # (vec^T P)_j
        acc = Affine()
        for k in range(n):
            if vec[k]:
                acc.iadd_scaled(Pm[k][j], vec[k])
        return acc

    L = [[Affine() for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(n):
        for j in range(i, n):
            if ss.domain is Domain.CT:
                e = rowP(A[:, i], j) + rowP(A[:, j], i)  # (A^T P + P A)_ij
            else:
                e = AtPA(i, j) - Pm[i][j]
            if kind is IndexKind.OFP:
                e = e + idx * (C[i] * C[j])
            L[i][j] = e
        # off-diagonal column: P B (CT) or A^T P B (DT), minus C^T/2
        if ss.domain is Domain.CT:
            e = rowP(B, i)
        else:
            e = Affine()
            for k in range(n):
                if A[k, i]:
                    e.iadd_scaled(rowP(B, k), A[k, i])
        e = e - C[i] / 2
        if kind is IndexKind.OFP:
            e = e + idx * (C[i] * D)
        L[i][n] = e
    corner = Affine({}, -D)
    if ss.domain is Domain.DT:
        for k in range(n):
            if B[k]:
                corner.iadd_scaled(rowP(B, k), B[k])
    corner = corner + (idx if kind is IndexKind.IFP else idx * (D * D))
    L[n][n] = corner
    return L


def kyp_index(ss: StateSpace, kind: IndexKind | str = IndexKind.IFP,
              opts: SolverOptions | None = None, accept_tol: float = 1e-6) -> float:
    """Largest index making the dissipation LMI feasible with P >= 0; one SDP."""
    kind = IndexKind(kind)
    if not ss.is_stable():
        raise UnstableInput("state matrix is not strictly stable")
    n = ss.order
    if n == 0:
        if kind is IndexKind.IFP:
            return float(ss.D)
        if ss.D <= 0:
            raise NonMinimumPhase("static gain must be positive for an output index")
        return 1.0 / ss.D
    prog = ConicProgram()
    idx = prog.add_scalar("index")
    P = prog.add_block("P", n)
    S = prog.add_block("S", n + 1)  # S = -L
    L = kyp_lmi(ss, P, idx, kind)
    for i in range(n + 1):
        for j in range(i, n + 1):
            prog.add_equality(S[i, j] + L[i][j], 0.0)
    prog.maximize(idx)
    sol = solve(prog, opts)
    if sol.status is Status.OPTIMAL:
        return sol.values["index"]
    # the supremum need not be attained (P unbounded); accept a nearly feasible iterate
    if sol.status is Status.NUMERICAL_LIMIT and sol.max_infeasibility <= accept_tol:
        return sol.values["index"]
    raise SolverFailure(f"KYP program ended with {sol.status.value}", sol)


# -- grid oracle ---------------------------------------------------------------------

@dataclass
class OracleResult:
    rho_hat: list[float]
    index_hat: float
    n_stable: int
    n_points: int
    refined: int


def _pad(arrs: Sequence[np.ndarray]) -> np.ndarray:
    width = max(len(a) for a in arrs)
    return np.stack([np.concatenate([np.zeros(width - len(a)), a]) for a in arrs])


def grid_oracle(g0: RationalTransfer, basis: ControllerBasis, box: ParamBox,
                kind: IndexKind | str = IndexKind.IFP, resolution: int = 50,
                n_points: int = SWEEP_POINTS, chunk: int = 256) -> OracleResult:
    """Best sweep index over a uniform grid of stable closed loops.

    Coarse sweep values are computed for every stable grid point; exact
    (refined) sweeps are then run in decreasing order of the coarse value
    until no remaining point can beat the best refined one, since
    refinement only lowers a value.  Ties go to the lexicographically
    smallest rho.
    """
    kind = IndexKind(kind)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    cl = compose_closed_loop(g0, basis)
    pts = box.grid(resolution)
    num = _desc(cl.pN)
    parts = _pad([_desc(p) for p in cl.pD.parts()])
    dens = parts[0][None, :] + pts @ parts[1:]
    if kind is IndexKind.OFP and not stable_roots(num, cl.domain):
        raise NonMinimumPhase("closed-loop numerator has zeros outside the stable region")
    stable = np.array([np.any(d != 0) and stable_roots(np.trim_zeros(d, "f"), cl.domain) for d in dens])
    idx = np.flatnonzero(stable)
    if idx.size == 0:
        raise NoStablePoint(f"no stable closed loop on the {resolution}-per-axis grid")

    grid = sweep_grid(cl.domain, n_points)
    x = boundary_points(cl.domain, grid)
    xpow = np.vander(x, parts.shape[1])  # columns: x^(k-1) .. x^0
    nx = np.polyval(num, x)
    coarse = np.empty(idx.size)
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        dx = dens[sel] @ xpow.T
        v = np.real(nx[None, :] / dx) if kind is IndexKind.IFP else np.real(dx / nx[None, :])
        v = np.where(np.isfinite(v), v, np.inf)
        coarse[start:start + chunk] = v.min(axis=1)
    if cl.domain is Domain.CT:
        lim = np.array([_limit_ct(num, np.trim_zeros(dens[k], "f"), kind) for k in idx])
        coarse = np.minimum(coarse, lim)

    order = np.lexsort((idx, -coarse))
    best_val, best_k, refined = -math.inf, -1, 0
    for o in order:
        if coarse[o] < best_val:
            break
        k = idx[o]
        r = _sweep_arrays(num, np.trim_zeros(dens[k], "f"), cl.domain, kind, n_points)
        refined += 1
        if r.index > best_val or (r.index == best_val and k < best_k):
            best_val, best_k = r.index, k
    return OracleResult([float(v) for v in pts[best_k]], float(best_val), int(idx.size),
                        int(len(pts)), refined)


# -- positive realness ---------------------------------------------------------------

@dataclass
class PositiveRealReport:
    positive_real: bool
    min_real_part: float
    unstable_poles: list[complex] = field(default_factory=list)
    boundary_poles: list[complex] = field(default_factory=list)
    residues: list[complex] = field(default_factory=list)
    reasons: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.positive_real


def positive_real_check(g: RationalTransfer, tol: float = 1e-9, pole_tol: float = 1e-7,
                        n_points: int = SWEEP_POINTS) -> PositiveRealReport:
    """Analyticity, boundary nonnegativity and boundary-pole residue conditions."""
    reasons = []
    num, den = _desc(g.num), _desc(g.den)
    if len(num) > len(den):
        reasons.append("improper")
    poles = np.roots(den)
    if g.domain is Domain.CT:
        on_b = np.abs(poles.real) <= pole_tol
        outside = poles.real > pole_tol
    else:
        on_b = np.abs(np.abs(poles) - 1) <= pole_tol
        outside = np.abs(poles) > 1 + pole_tol
    unstable = poles[outside]
    if unstable.size:
        reasons.append("pole in the open unstable region")
    bpoles = poles[on_b]
    residues = []
    dden = np.polyder(den)
    for p in bpoles:
        if np.sum(np.abs(bpoles - p) <= 1e-5) > 1 or abs(np.polyval(dden, p)) <= 1e-9:
            reasons.append(f"repeated boundary pole {p}")
            residues.append(complex("nan"))
            continue
        res = np.polyval(num, p) / np.polyval(dden, p)
        residues.append(complex(res))
        # CT: residue real and >= 0; DT: res * conj(z0) real and >= 0
        w = res if g.domain is Domain.CT else res * np.conj(p)
        if abs(w.imag) > 1e-7 * max(1.0, abs(w)) or w.real < -tol:
            reasons.append(f"boundary pole {p} has inadmissible residue {res}")
    grid = sweep_grid(g.domain, n_points)
    if g.domain is Domain.CT:
        grid = np.concatenate([-grid[::-1], grid])
    else:
        grid = np.concatenate([grid, grid[1:] + np.pi])
    x = boundary_points(g.domain, grid)
    dvals = np.polyval(den, x)
    keep = np.abs(dvals) > 1e-6 * np.abs(den).max()
    re = np.real(np.polyval(num, x[keep]) / dvals[keep])
    min_re = float(re.min()) if re.size else math.inf
    if min_re < -tol:
        reasons.append(f"real part reaches {min_re:.6g} on the boundary")
    return PositiveRealReport(not reasons, min_re, list(unstable), list(bpoles), residues, reasons)


# -- sampled stability ---------------------------------------------------------------

def closed_loop_roots(cl, rho: Sequence[float]) -> np.ndarray:
    parts = _pad([_desc(p) for p in cl.pD.parts()])
    den = np.trim_zeros(parts[0] + np.asarray(rho, dtype=float) @ parts[1:], "f")
    return np.roots(den) if den.size else np.zeros(0, dtype=complex)


def stable_at(cl, rho: Sequence[float], margin: float = ROOT_TOL) -> bool:
    return bool(np.all(in_stable_region(closed_loop_roots(cl, rho), cl.domain, tol=margin)))


def find_destabilizing(cl, box: ParamBox, n_samples: int = 200, seed: int = 0) -> list[float] | None:
    """First box corner or uniform sample whose closed loop is not strictly stable."""
    corners = np.array(np.meshgrid(*[[float(a), float(b)] for a, b in zip(box.lower, box.upper)],
                                   indexing="ij")).reshape(box.dim, -1).T
    for rho in np.vstack([corners, box.sample(n_samples, seed)]):
        if not stable_at(cl, rho):
            return [float(v) for v in rho]
    return None
