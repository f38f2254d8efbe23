"""A small dense semidefinite program solver.

Programs are stated with free scalar variables, symmetric matrix variables
constrained PSD, affine equalities and a linear objective to maximize.
Internally everything is mapped to the cone form

    minimize    c'x
    subject to  G x + s = h,   A x = b,   s in K

with K a product of PSD cones (1x1 cones for scalar bounds), and solved by a
primal-dual path-following method on the homogeneous self-dual embedding with
Nesterov-Todd scaling and a Mehrotra predictor-corrector.  The embedding gives
infeasibility certificates for free, which the bisection in the synthesis
layer relies on.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


class Affine:
    """Affine expression ``sum coef*var + const`` over program variables.

    Variable keys are ``("x", index)`` for scalars and ``("B", block, i, j)``
    (``i <= j``) for matrix entries; matrix keys denote the entry itself, so
    ``X[0,1]`` and ``X[1,0]`` are the same key.
    """
    __slots__ = ("terms", "const")

    def __init__(self, terms: dict | None = None, const: float = 0.0):
        self.terms = dict(terms or {})
        self.const = float(const)

    @staticmethod
    def lift(v) -> "Affine":
        return v if isinstance(v, Affine) else Affine({}, float(v))

    def copy(self) -> "Affine":
        return Affine(self.terms, self.const)

    def __add__(self, other) -> "Affine":
        other = Affine.lift(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Affine(out, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "Affine":
        return Affine({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other) -> "Affine":
        return self + (-Affine.lift(other))

    def __rsub__(self, other) -> "Affine":
        return Affine.lift(other) - self

    def __mul__(self, c) -> "Affine":
        c = float(c)
        return Affine({k: c * v for k, v in self.terms.items()}, c * self.const)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Affine":
        return self * (1.0 / float(c))

    def iadd_scaled(self, other: "Affine", c: float) -> None:
        """In-place ``self += c*other`` (hot path in coefficient matching)."""
        for k, v in other.terms.items():
            self.terms[k] = self.terms.get(k, 0.0) + c * v
        self.const += c * other.const

    def is_constant(self) -> bool:
        return all(v == 0 for v in self.terms.values())

    def value(self, sol: "Solution") -> float:
        return sol.evaluate(self)

    def __repr__(self) -> str:
        return f"Affine({self.terms!r}, {self.const!r})"


class BlockVar:
    """Handle to a symmetric matrix variable of a :class:`ConicProgram`."""

    def __init__(self, index: int, dim: int, name: str):
        self.index, self.dim, self.name = index, dim, name

    def __getitem__(self, ij) -> Affine:
        i, j = ij
        if not (0 <= i < self.dim and 0 <= j < self.dim):
            raise IndexError(ij)
        if i > j:
            i, j = j, i
        return Affine({("B", self.index, i, j): 1.0})


@dataclass
class ConicProgram:
    """Maximize a linear objective over free scalars and PSD blocks."""
    scalars: list[str] = field(default_factory=list)
    lower: list[float | None] = field(default_factory=list)
    upper: list[float | None] = field(default_factory=list)
    blocks: list[tuple[str, int]] = field(default_factory=list)
    equalities: list[tuple[Affine, float]] = field(default_factory=list)
    objective: Affine = field(default_factory=Affine)

    def add_scalar(self, name: str, lower: float | None = None,
                   upper: float | None = None) -> Affine:
        if lower is not None and upper is not None and lower > upper:
            raise ValueError(f"empty interval for {name}: [{lower}, {upper}]")
        self.scalars.append(name)
        self.lower.append(None if lower is None else float(lower))
        self.upper.append(None if upper is None else float(upper))
        return Affine({("x", len(self.scalars) - 1): 1.0})

    def scalar(self, name: str) -> Affine:
        return Affine({("x", self.scalars.index(name)): 1.0})

    def add_block(self, name: str, dim: int) -> BlockVar:
        if dim < 1:
            raise ValueError("block dimension must be positive")
        self.blocks.append((name, dim))
        return BlockVar(len(self.blocks) - 1, dim, name)

    def add_equality(self, lhs, rhs=0.0) -> int:
        """Add ``lhs == rhs``; returns the row index."""
        expr = Affine.lift(lhs) - Affine.lift(rhs)
        self.equalities.append((Affine(expr.terms), -expr.const))
        return len(self.equalities) - 1

    def maximize(self, expr) -> None:
        self.objective = Affine.lift(expr)

    @property
    def n_equalities(self) -> int:
        return len(self.equalities)

    def dump(self, path: str | Path) -> None:
        """Write the program in a plain SDPA-like text format for diffing."""
        Path(path).write_text(to_sdpa_text(self))


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_LIMIT = "numerical_limit"


@dataclass
class SolverOptions:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 200
    step: float = 0.99
    stall_iters: int = 20


@dataclass
class Solution:
    status: Status
    values: dict[str, float]
    block_values: list[np.ndarray]
    objective_value: float
    dual_value: float
    duality_gap: float
    max_infeasibility: float
    iterations: int
    certificate_residual: float | None = None  # normalized infeasibility ray residual
    x: np.ndarray | None = field(default=None, repr=False)
    y: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def evaluate(self, expr: Affine) -> float:
        total = expr.const
        for key, c in expr.terms.items():
            if key[0] == "x":
                total += c * self._scalar_by_index[key[1]]
            else:
                total += c * self.block_values[key[1]][key[2], key[3]]
        return total

    _scalar_by_index: list[float] = field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# compilation to cone form


def _svec_index(dim: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def _svec_matrix(dim: int) -> np.ndarray:
    """U with svec(M) = U vec(M) for symmetric M; vec(M) = U.T svec(M)."""
    idx = _svec_index(dim)
    U = np.zeros((len(idx), dim * dim))
    for p, (i, j) in enumerate(idx):
        if i == j:
            U[p, i * dim + i] = 1.0
        else:
            U[p, i * dim + j] = U[p, j * dim + i] = 1.0 / SQRT2
    return U


def svec(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    return np.array([M[i, j] * (1.0 if i == j else SQRT2) for i, j in _svec_index(d)])


def smat(v: np.ndarray, dim: int) -> np.ndarray:
    M = np.zeros((dim, dim))
    for p, (i, j) in enumerate(_svec_index(dim)):
        if i == j:
            M[i, i] = v[p]
        else:
            M[i, j] = M[j, i] = v[p] / SQRT2
    return M


@dataclass
class _ConeForm:
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    A: np.ndarray
    b: np.ndarray
    dims: list[int]          # PSD cone block sizes, in order
    row_scale: np.ndarray     # equality row norms used for normalization
    obj_const: float
    n_scalar: int
    block_offsets: list[int]  # start of each user block inside x


def _compile(prog: ConicProgram) -> _ConeForm:
    ns = len(prog.scalars)
    offsets, n = [], ns
    for _, d in prog.blocks:
        offsets.append(n)
        n += d * (d + 1) // 2
    block_pos = []
    for (_, d) in prog.blocks:
        block_pos.append({ij: p for p, ij in enumerate(_svec_index(d))})

    def column(key) -> int:
        if key[0] == "x":
            return key[1]
        _, k, i, j = key
        return offsets[k] + block_pos[k][(i, j)]

    rows_A, b = [], []
    for expr, rhs in prog.equalities:
        row = np.zeros(n)
        for key, v in expr.terms.items():
            row[column(key)] += v
        rows_A.append(row)
        b.append(rhs)

    # fixed scalars (lower == upper) become equalities, not degenerate cones
    g_rows, h, dims = [], [], []
    for i in range(ns):
        lo, hi = prog.lower[i], prog.upper[i]
        if lo is not None and hi is not None and lo == hi:
            row = np.zeros(n)
            row[i] = 1.0
            rows_A.append(row)
            b.append(lo)
            continue
        if lo is not None:
            row = np.zeros(n)
            row[i] = -1.0
            g_rows.append(row)
            h.append(-lo)
            dims.append(1)
        if hi is not None:
            row = np.zeros(n)
            row[i] = 1.0
            g_rows.append(row)
            h.append(hi)
            dims.append(1)
    for k, (_, d) in enumerate(prog.blocks):
        m = d * (d + 1) // 2
        blk = np.zeros((m, n))
        for p, (i, j) in enumerate(_svec_index(d)):
            blk[p, offsets[k] + p] = -(1.0 if i == j else SQRT2)
        g_rows.extend(blk)
        h.extend([0.0] * m)
        dims.append(d)

    A = np.array(rows_A).reshape(len(rows_A), n)
    b = np.array(b, dtype=float)
    scale = np.linalg.norm(A, axis=1) if len(b) else np.zeros(0)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale
    G = np.array(g_rows).reshape(len(g_rows), n)
    c = np.zeros(n)
    for key, v in prog.objective.terms.items():
        c[column(key)] -= v
    return _ConeForm(c, G, np.array(h, dtype=float), A, b, dims, scale,
                     prog.objective.const, ns, offsets)


# ---------------------------------------------------------------------------
# cone helpers (s and z are svec-stacked over all blocks)


class _Cone:
    def __init__(self, dims: list[int]):
        self.dims = dims
        self.sizes = [d * (d + 1) // 2 for d in dims]
        self.starts = np.cumsum([0] + self.sizes)[:-1]
        self.degree = sum(dims)
        self._U = {d: _svec_matrix(d) for d in set(dims)}

    def blocks(self, v: np.ndarray):
        for d, st, sz in zip(self.dims, self.starts, self.sizes):
            yield d, slice(st, st + sz)

    def identity(self) -> np.ndarray:
        return np.concatenate([svec(np.eye(d)) for d in self.dims]) if self.dims else np.zeros(0)


@dataclass
class _Scaling:
    R: list[np.ndarray]
    Rinv: list[np.ndarray]
    lam: list[np.ndarray]


def _nt_scaling(cone: _Cone, s: np.ndarray, z: np.ndarray) -> _Scaling:
    R, Rinv, lam = [], [], []
    for d, sl in cone.blocks(s):
        if d == 1:
            r = (s[sl][0] / z[sl][0]) ** 0.25
            R.append(np.array([[r]]))
            Rinv.append(np.array([[1.0 / r]]))
            lam.append(np.array([math.sqrt(s[sl][0] * z[sl][0])]))
            continue
        S, Z = smat(s[sl], d), smat(z[sl], d)
        L1 = np.linalg.cholesky(S)
        L2 = np.linalg.cholesky(Z)
        U, sv, Vt = np.linalg.svd(L2.T @ L1)
        Rk = L1 @ Vt.T / np.sqrt(sv)
        R.append(Rk)
        Rinv.append(np.sqrt(sv)[:, None] * (Vt @ sla.solve_triangular(L1, np.eye(d), lower=True)))
        lam.append(sv)
    return _Scaling(R, Rinv, lam)


def _apply(cone: _Cone, v: np.ndarray, mats: list[np.ndarray], transpose_left: bool) -> np.ndarray:
    """Blockwise congruence: M^T V M (transpose_left) or M V M^T."""
    out = np.empty_like(v)
    for (d, sl), M in zip(cone.blocks(v), mats):
        V = smat(v[sl], d) if d > 1 else v[sl].reshape(1, 1)
        W = M.T @ V @ M if transpose_left else M @ V @ M.T
        out[sl] = svec(W) if d > 1 else W.ravel()
    return out


def _scale_mat(cone: _Cone, G: np.ndarray, mats: list[np.ndarray], transpose_left: bool) -> np.ndarray:
    """Apply the blockwise congruence to every column of G."""
    out = np.empty_like(G)
    for (d, sl), M in zip(cone.blocks(G[:, 0] if G.shape[1] else np.zeros(G.shape[0])), mats):
        if d == 1:
            out[sl] = G[sl] * (M[0, 0] ** 2)
            continue
        U = cone._U[d]
        K = np.kron(M.T, M.T) if transpose_left else np.kron(M, M)
        out[sl] = (U @ K @ U.T) @ G[sl]
    return out


def _jordan(cone: _Cone, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    for d, sl in cone.blocks(u):
        U, V = smat(u[sl], d), smat(v[sl], d)
        out[sl] = svec((U @ V + V @ U) / 2)
    return out


def _lam_solve(cone: _Cone, lam: list[np.ndarray], r: np.ndarray) -> np.ndarray:
    """Solve lam o u = r for u (lam diagonal in scaled coordinates)."""
    out = np.empty_like(r)
    for (d, sl), l in zip(cone.blocks(r), lam):
        Rm = smat(r[sl], d)
        out[sl] = svec(2 * Rm / (l[:, None] + l[None, :]))
    return out


def _max_step(cone: _Cone, lam: list[np.ndarray], dv: np.ndarray) -> float:
    """Largest alpha with lam + alpha*dv in the cone (dv in scaled coordinates)."""
    alpha = np.inf
    for (d, sl), l in zip(cone.blocks(dv), lam):
        D = smat(dv[sl], d)
        isq = 1.0 / np.sqrt(l)
        ev = np.linalg.eigvalsh(isq[:, None] * D * isq[None, :]).min()
        if ev < 0:
            alpha = min(alpha, -1.0 / ev)
    return alpha


# ---------------------------------------------------------------------------


_observers: list = []


def add_observer(fn) -> None:
    """Register ``fn(prog, solution)``, called after every solve (for audits and logging)."""
    _observers.append(fn)


def remove_observer(fn) -> None:
    _observers.remove(fn)


def solve(prog: ConicProgram, opts: SolverOptions | None = None) -> Solution:
    """Solve ``prog``; never reports OPTIMAL without meeting the tolerances."""
    opts = opts or SolverOptions()
    cf = _compile(prog)
    c, G, h, A, b = cf.c, cf.G, cf.h, cf.A, cf.b
    n, p, m = len(c), len(b), len(h)
    cone = _Cone(cf.dims)

    x = np.zeros(n)
    y = np.zeros(p)
    s = cone.identity()
    z = cone.identity()
    tau = kappa = 1.0

    resx0 = max(1.0, np.linalg.norm(c, np.inf))
    resy0 = max(1.0, np.linalg.norm(b, np.inf)) if p else 1.0
    resz0 = max(1.0, np.linalg.norm(h, np.inf)) if m else 1.0

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        status, cert, it, x, y, s, z, tau = _hsd_loop(
            prog, cf, cone, opts, c, G, h, A, b, n, p, m, x, y, s, z, tau, kappa,
            resx0, resy0, resz0)
    sol = _extract(prog, cf, cone, x, y, s, z, tau, status, it, cert)
    for fn in list(_observers):
        fn(prog, sol)
    return sol


def _hsd_loop(prog, cf, cone, opts, c, G, h, A, b, n, p, m, x, y, s, z, tau, kappa,
              resx0, resy0, resz0):
    status = Status.NUMERICAL_LIMIT
    cert = None
    it = 0
    best_merit, best_it = np.inf, 0
    for it in range(opts.max_iter + 1):
        rx = A.T @ y + G.T @ z + c * tau
        ry = b * tau - A @ x
        rz = h * tau - G @ x - s
        rt = -c @ x - b @ y - h @ z - kappa
        mu = (s @ z + tau * kappa) / (cone.degree + 1)

        pres = max(np.linalg.norm(ry, np.inf) / resy0 if p else 0.0,
                   np.linalg.norm(rz, np.inf) / resz0 if m else 0.0) / tau
        dres = np.linalg.norm(rx, np.inf) / resx0 / tau
        pcost = c @ x / tau
        dcost = -(b @ y + h @ z) / tau
        gap = abs(pcost - dcost) / max(1.0, abs(pcost))
        log.debug("it %d pcost %.9g dcost %.9g pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e",
                  it, pcost, dcost, pres, dres, gap, tau, kappa)
        if (pres <= opts.feas_tol and dres <= opts.feas_tol and gap <= opts.gap_tol
                and _raw_ok(prog, cf, x / tau, opts.feas_tol)):
            status = Status.OPTIMAL
            break
        hzby = h @ z + b @ y
        if hzby < 0:
            pinf = np.linalg.norm(A.T @ y + G.T @ z, np.inf) / resx0 / (-hzby)
            if pinf <= opts.feas_tol:
                status, cert = Status.INFEASIBLE, pinf
                break
        cx = c @ x
        if cx < 0:
            dinf = max(np.linalg.norm(A @ x, np.inf) / resy0 if p else 0.0,
                       np.linalg.norm(G @ x + s, np.inf) / resz0 if m else 0.0) / (-cx)
            if dinf <= opts.feas_tol:
                status, cert = Status.UNBOUNDED, dinf
                break
        if it == opts.max_iter:
            break
        # give up once neither feasibility nor the gap has improved for a while
        merit = max(pres, dres, gap)
        if not np.isfinite(merit):
            break
        if merit < 0.5 * best_merit:
            best_merit, best_it = merit, it
        elif it - best_it >= opts.stall_iters:
            log.debug("no progress since iteration %d", best_it)
            break

        try:
            W = _nt_scaling(cone, s, z)
        except np.linalg.LinAlgError:
            log.debug("lost positive definiteness at iteration %d", it)
            break
        lam = W.lam
        Gt = _scale_mat(cone, G, W.Rinv, transpose_left=False)   # W^{-T} G
        ht = _apply(cone, h, W.Rinv, transpose_left=False)       # W^{-T} h
        K = np.zeros((n + p + 1, n + p + 1))
        K[:n, :n] = Gt.T @ Gt
        K[:n, n:n + p] = A.T
        K[:n, -1] = c - Gt.T @ ht
        K[n:n + p, :n] = -A
        K[n:n + p, -1] = b
        K[-1, :n] = -c - ht @ Gt
        K[-1, n:n + p] = -b
        K[-1, -1] = ht @ ht + kappa / tau
        if not np.all(np.isfinite(K)):
            break
        try:
            lu = sla.lu_factor(K, check_finite=True)
        except (ValueError, np.linalg.LinAlgError):
            break
        lam_vec = np.concatenate([svec(np.diag(l)) for l in lam]) if m else np.zeros(0)
        lam_sq = _jordan(cone, lam_vec, lam_vec) if m else np.zeros(0)

        def newton(eta, rc, rtc):
            # rc: target for lam o (ds + dz); rtc: target for tau*dkappa + kappa*dtau
            u = _lam_solve(cone, lam, rc) if m else np.zeros(0)
            r1 = -eta * rx
            r2 = -eta * ry
            r3t = _apply(cone, -eta * rz, W.Rinv, False) + u   # W^{-T} r3
            r4 = -eta * rt + rtc / tau
            rhs = np.concatenate([r1 - Gt.T @ r3t, r2, [r4 + ht @ r3t]])
            sol = sla.lu_solve(lu, rhs)
            if not np.all(np.isfinite(sol)):
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            dx, dy, dtau = sol[:n], sol[n:n + p], sol[-1]
            dzt = r3t + Gt @ dx - ht * dtau           # W dz
            dst = u - dzt                              # W^{-T} ds
            dkappa = (rtc - kappa * dtau) / tau
            return dx, dy, dzt, dst, dtau, dkappa

        def step_len(dzt, dst, dtau, dkappa):
            a = min(_max_step(cone, lam, dst), _max_step(cone, lam, dzt)) if m else np.inf
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        # predictor
        aff = newton(1.0, -lam_sq, -tau * kappa)
        a_aff = min(1.0, step_len(*aff[2:]))
        sigma = (1.0 - a_aff) ** 3
        # corrector
        corr = _jordan(cone, aff[3], aff[2]) if m else np.zeros(0)
        ident = cone.identity()
        dx, dy, dzt, dst, dtau, dkappa = newton(
            1.0 - sigma, sigma * mu * ident - lam_sq - corr,
            sigma * mu - tau * kappa - aff[4] * aff[5])
        alpha = min(1.0, opts.step * step_len(dzt, dst, dtau, dkappa))
        if not np.isfinite(alpha) or alpha < 1e-12:
            log.debug("step length collapsed at iteration %d", it)
            break
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * _apply(cone, dst, W.R, transpose_left=False)   # W^T ds~ = R ds~ R^T
        z = z + alpha * _apply(cone, dzt, W.Rinv, transpose_left=True)  # W^{-1} dz~
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    return status, cert, it, x, y, s, z, tau


def _extract(prog, cf, cone, x, y, s, z, tau, status, it, cert) -> Solution:
    xv = x if status in (Status.INFEASIBLE, Status.UNBOUNDED) else x / tau
    scalars, blocks = _unpack(prog, cf, xv)
    obj = -(cf.c @ xv) + cf.obj_const
    if status in (Status.OPTIMAL, Status.NUMERICAL_LIMIT) and tau > 0:
        dual = (cf.b @ (y / tau) + cf.h @ (z / tau)) + cf.obj_const
    else:
        dual = float("nan")
    infeas = max_infeasibility(prog, scalars, blocks)
    gap = abs(obj - dual) / max(1.0, abs(obj)) if np.isfinite(dual) else float("inf")
    sol = Solution(status, dict(zip(prog.scalars, scalars)), blocks, float(obj), float(dual),
                   float(gap), float(infeas), it, cert, x=xv, y=y / tau if tau > 0 else y)
    sol._scalar_by_index = scalars
    return sol


def _unpack(prog: ConicProgram, cf: _ConeForm, xv: np.ndarray):
    scalars = [float(v) for v in xv[:cf.n_scalar]]
    blocks = []
    for (_, d), off in zip(prog.blocks, cf.block_offsets):
        M = np.zeros((d, d))
        for p, (i, j) in enumerate(_svec_index(d)):
            M[i, j] = M[j, i] = xv[off + p]
        blocks.append(M)
    return scalars, blocks


def _raw_ok(prog, cf, xv, tol) -> bool:
    scalars, blocks = _unpack(prog, cf, xv)
    return max_infeasibility(prog, scalars, blocks) <= tol


def max_infeasibility(prog: ConicProgram, scalars: list[float], blocks: list[np.ndarray]) -> float:
    """Largest violation of equalities (relative to row size), bounds and PSD-ness."""
    worst = 0.0
    vals = {("x", i): v for i, v in enumerate(scalars)}
    for expr, rhs in prog.equalities:
        tot, nrm = 0.0, 0.0
        for key, cf in expr.terms.items():
            v = vals[key] if key[0] == "x" else blocks[key[1]][key[2], key[3]]
            tot += cf * v
            nrm += cf * cf
        worst = max(worst, abs(tot - rhs) / max(1.0, math.sqrt(nrm), abs(rhs)))
    for v, lo, hi in zip(scalars, prog.lower, prog.upper):
        if lo is not None:
            worst = max(worst, lo - v)
        if hi is not None:
            worst = max(worst, v - hi)
    for M in blocks:
        worst = max(worst, -np.linalg.eigvalsh(M).min())
    return worst


def to_sdpa_text(prog: ConicProgram) -> str:
    """Plain-text dump: header, block sizes, equality triplets, objective."""
    lines = [f'"fixedpass program: {len(prog.scalars)} scalars, {len(prog.blocks)} blocks"',
             f"scalars {len(prog.scalars)}"]
    for name, lo, hi in zip(prog.scalars, prog.lower, prog.upper):
        lines.append(f"  {name} {'-inf' if lo is None else repr(lo)} {'inf' if hi is None else repr(hi)}")
    lines.append(f"blocks {len(prog.blocks)}")
    lines.append(" ".join(str(d) for _, d in prog.blocks) or "-")
    lines.append(f"equalities {len(prog.equalities)}")

    def fmt(key):
        return f"x {key[1]}" if key[0] == "x" else f"B {key[1] + 1} {key[2] + 1} {key[3] + 1}"

    for r, (expr, rhs) in enumerate(prog.equalities, start=1):
        for key in sorted(expr.terms, key=lambda k: (k[0], k[1:])):
            lines.append(f"{r} {fmt(key)} {expr.terms[key]!r}")
        lines.append(f"{r} rhs {rhs!r}")
    lines.append("objective")
    for key in sorted(prog.objective.terms, key=lambda k: (k[0], k[1:])):
        lines.append(f"{fmt(key)} {prog.objective.terms[key]!r}")
    lines.append(f"const {prog.objective.const!r}")
    return "\n".join(lines) + "\n"
