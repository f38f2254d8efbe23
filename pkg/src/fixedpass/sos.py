"""Gram-matrix compilation of (matrix) sum-of-squares constraints.

A target is a q x q symmetric matrix whose entries are polynomials in ``r``
indeterminates with coefficients affine in program variables; it is stored as
a nested list of ``{monomial: Affine}`` maps.  ``sos_constrain`` adds one PSD
block Q of size q*sigma(r, d) and one equality per (monomial, entry) that
matches the target coefficient against the sum of the Q entries it collects.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegreeOverflow
from .poly import ParamPolynomial, Polynomial
from .sdp import Affine, BlockVar, ConicProgram, Solution

Monomial = tuple[int, ...]
PolyMap = dict[Monomial, Affine]

DEFAULT_MAX_BASIS = 64


def n_monomials(r: int, d: int) -> int:
    """sigma(r, d): number of monomials of degree <= d in r variables."""
    return math.comb(r + d, d)


def monomial_basis(r: int, d: int) -> list[Monomial]:
    """Monomials of degree <= d in graded lexicographic order."""
    out = []
    for deg in range(d + 1):
        level = [m for m in itertools.product(range(deg + 1), repeat=r) if sum(m) == deg]
        out.extend(sorted(level, reverse=True))
    return out


def _add(m1: Monomial, m2: Monomial) -> Monomial:
    return tuple(a + b for a, b in zip(m1, m2))


# -- conversions into PolyMap --------------------------------------------------

def poly_map(p: Polynomial, var_names: Sequence[str] | None = None) -> PolyMap:
    """A numeric polynomial as a PolyMap with constant coefficients."""
    if var_names is not None:
        p = p.with_vars(var_names)
    return {m: Affine({}, float(c)) for m, c in p.items()}


def param_poly_map(pp: ParamPolynomial, rho: Sequence[Affine], var_names: Sequence[str]) -> PolyMap:
    """base + sum rho_i coeffs_i with rho_i program expressions."""
    out: PolyMap = {}
    for c, part in zip([Affine({}, 1.0)] + list(rho), pp.parts()):
        for m, v in part.with_vars(var_names).items():
            out.setdefault(m, Affine()).iadd_scaled(c, float(v))
    return out


def map_add(a: PolyMap, b: PolyMap, cb: float = 1.0) -> PolyMap:
    out = {m: v.copy() for m, v in a.items()}
    for m, v in b.items():
        out.setdefault(m, Affine()).iadd_scaled(v, cb)
    return out


def map_scale(a: PolyMap, c: Affine | float) -> PolyMap:
    """Multiply by a number, or by an affine expression when ``a`` is numeric."""
    if isinstance(c, Affine):
        out = {}
        for m, v in a.items():
            if not v.is_constant():
                raise ValueError("product of two non-constant affine expressions")
            out[m] = c * v.const
        return out
    return {m: v * c for m, v in a.items()}


def map_mul_poly(a: PolyMap, p: Polynomial, var_names: Sequence[str]) -> PolyMap:
    """Multiply a PolyMap by a numeric polynomial."""
    out: PolyMap = {}
    for mp, cp in p.with_vars(var_names).items():
        for ma, va in a.items():
            out.setdefault(_add(ma, mp), Affine()).iadd_scaled(va, float(cp))
    return out


def constant_map(c, r: int) -> PolyMap:
    return {(0,) * r: Affine.lift(c)}


def _is_nonzero(v: Affine) -> bool:
    return v.const != 0 or any(c != 0 for c in v.terms.values())


def map_degree(a: PolyMap) -> int:
    degs = [sum(m) for m, v in a.items() if _is_nonzero(v)]
    return max(degs) if degs else -1


# -- Gram structure --------------------------------------------------------------

@dataclass
class GramStructure:
    """Gram layout: position k of Q pairs the monomial ``positions[k][0]`` with entry ``positions[k][1]``."""
    bases: list[list[Monomial]]
    positions: list[tuple[Monomial, int]]
    block: BlockVar
    # (a, b, monomial) -> [(row, col, multiplicity)] of Gram entries (row <= col)
    coeff_map: dict[tuple[int, int, Monomial], list[tuple[int, int, int]]]

    @property
    def q(self) -> int:
        return len(self.bases)

    @property
    def basis(self) -> list[Monomial]:
        return max(self.bases, key=len)

    @property
    def block_dim(self) -> int:
        return len(self.positions)

    def reconstruct(self, Q: np.ndarray) -> list[list[dict[Monomial, float]]]:
        """Coefficients of B^T Q B, entry by entry."""
        out = [[{} for _ in range(self.q)] for _ in range(self.q)]
        for (a, b, mono), entries in self.coeff_map.items():
            val = sum(mult * Q[i, j] for i, j, mult in entries)
            out[a][b][mono] = val
            out[b][a][mono] = val
        return out

    def evaluate(self, Q: np.ndarray, point: Sequence[float]) -> np.ndarray:
        """B(x)^T Q B(x) at a numeric point."""
        B = np.zeros((self.block_dim, self.q))
        for k, (m, a) in enumerate(self.positions):
            B[k, a] = np.prod([float(x) ** e for x, e in zip(point, m)])
        return B.T @ Q @ B


def gram_structure(prog: ConicProgram, r: int, degrees: int | Sequence[int], q: int, name: str,
                   max_basis: int = DEFAULT_MAX_BASIS) -> GramStructure:
    """One PSD block; entry a of the matrix uses monomials up to ``degrees[a]``.

    Positions are ordered monomial-major (graded lex), then by entry.
    """
    if isinstance(degrees, int):
        degrees = [degrees] * q
    top = max(degrees)
    sigma = n_monomials(r, top)
    if sigma > max_basis:
        raise DegreeOverflow(f"Gram basis of {sigma} monomials (r={r}, d={top}) exceeds cap {max_basis}")
    full = monomial_basis(r, top)
    bases = [[m for m in full if sum(m) <= d] for d in degrees]
    positions = [(m, a) for m in full for a in range(q) if sum(m) <= degrees[a]]
    block = prog.add_block(name, len(positions))
    coeff_map: dict = {}
    for k1, (m1, a1) in enumerate(positions):
        for k2 in range(k1, len(positions)):
            m2, a2 = positions[k2]
            a, b = min(a1, a2), max(a1, a2)
            # off-diagonal Q entries feed a diagonal matrix entry twice; for
            # a != b the mirrored entry feeds the (b, a) copy instead
            mult = 2 if (a1 == a2 and k1 != k2) else 1
            coeff_map.setdefault((a, b, _add(m1, m2)), []).append((k1, k2, mult))
    return GramStructure(bases, positions, block, coeff_map)


@dataclass
class SosHandle:
    structure: GramStructure
    target: list[list[PolyMap]]
    rows: list[int]

    @property
    def block_index(self) -> int:
        return self.structure.block.index


def _as_matrix(target) -> list[list[PolyMap]]:
    if isinstance(target, dict):
        return [[target]]
    return target


def _nvars(target: list[list[PolyMap]]) -> int:
    for row in target:
        for entry in row:
            for m in entry:
                return len(m)
    return 1


def gram_degrees(target: list[list[PolyMap]]) -> list[int]:
    """Per-entry basis degrees.

    For a scalar target this is ceil(deg/2).  For a matrix, component a of any
    SOS factor has degree at most floor(deg M_aa / 2), since leading terms of
    a sum of squares cannot cancel; using that bound removes Gram rows that
    are forced to zero and would otherwise break strict feasibility.
    """
    q = len(target)
    if q == 1:
        return [max(0, math.ceil(max(map_degree(target[0][0]), 0) / 2))]
    return [max(0, map_degree(target[a][a])) // 2 for a in range(q)]


def sos_constrain(prog: ConicProgram, target, name: str = "gram", nvars: int | None = None,
                  max_basis: int = DEFAULT_MAX_BASIS) -> SosHandle:
    """Constrain a scalar PolyMap or a symmetric matrix of PolyMaps to be SOS.

    Only the upper triangle of a matrix target is read; see ``gram_degrees``
    for the basis sizes.
    """
    target = _as_matrix(target)
    q = len(target)
    r = nvars if nvars is not None else _nvars(target)
    gs = gram_structure(prog, r, gram_degrees(target), q, name, max_basis)
    rows = []
    Q = gs.block
    for (a, b, mono), entries in gs.coeff_map.items():
        lhs = Affine()
        for i, j, mult in entries:
            lhs.iadd_scaled(Q[i, j], float(mult))
        rhs = target[a][b].get(mono, Affine())
        rows.append(prog.add_equality(lhs - rhs, 0.0))
    # target monomials the Gram basis cannot reach must vanish identically
    reach = {key[2] for key in gs.coeff_map}
    for a in range(q):
        for b in range(a, q):
            for mono, v in target[a][b].items():
                if mono not in reach and _is_nonzero(v):
                    rows.append(prog.add_equality(v, 0.0))
    return SosHandle(gs, target, rows)


def sos_multiplier(prog: ConicProgram, r: int, degree: int, name: str,
                   max_basis: int = DEFAULT_MAX_BASIS) -> tuple[GramStructure, PolyMap]:
    """A fresh SOS polynomial b(x)^T S b(x) of the given (even) degree."""
    if degree % 2:
        raise ValueError("multiplier degree must be even")
    gs = gram_structure(prog, r, degree // 2, 1, name, max_basis)
    S = gs.block
    out: PolyMap = {}
    for (_, _, mono), entries in gs.coeff_map.items():
        acc = out.setdefault(mono, Affine())
        for i, j, mult in entries:
            acc.iadd_scaled(S[i, j], float(mult))
    return gs, out


@dataclass
class Certificate:
    gram: np.ndarray
    residual: float
    min_eig: float

    def valid(self, tol: float = 1e-6, eig_tol: float = 1e-7) -> bool:
        return self.residual <= tol and self.min_eig >= -eig_tol


def recover_certificate(sol: Solution, handle: SosHandle) -> Certificate:
    """Gram block plus the largest coefficient-matching residual."""
    Q = sol.block_values[handle.block_index]
    rebuilt = handle.structure.reconstruct(Q)
    worst = 0.0
    q = handle.structure.q
    for a in range(q):
        for b in range(a, q):
            monos = set(rebuilt[a][b]) | set(handle.target[a][b])
            for mono in monos:
                want = sol.evaluate(handle.target[a][b][mono]) if mono in handle.target[a][b] else 0.0
                worst = max(worst, abs(rebuilt[a][b].get(mono, 0.0) - want))
    return Certificate(Q, worst, float(np.linalg.eigvalsh(Q).min()))
