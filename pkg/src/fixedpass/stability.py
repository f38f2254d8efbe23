"""Division-free Routh (CT) and Jury (DT) tables in rho, plus box certification.

Entries are exact polynomials in the controller parameters.  Each table's
first column f_1..f_{n+1} is positive at rho exactly when p_D(., rho) is
stable (given a positive leading coefficient), so robust stability over a
box reduces to positivity of finitely many polynomials, certified below with
one SOS program per entry.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegreeError, Inconclusive, SolverFailure
from .poly import ParamPolynomial, Polynomial
from .sdp import ConicProgram, SolverOptions, Status, solve
from .sos import (DEFAULT_MAX_BASIS, Certificate, map_add, map_mul_poly, poly_map,
                  recover_certificate, sos_constrain, sos_multiplier)
from .system import ParamBox

THETA_MIN = 1e-6


class TableKind(str, enum.Enum):
    ROUTH = "RouthModified"
    JURY = "JuryModified"


@dataclass(frozen=True)
class StabilityTable:
    rows: tuple[tuple[Polynomial, ...], ...]
    kind: TableKind
    rho_names: tuple[str, ...]

    @property
    def first_column(self) -> list[Polynomial]:
        return [row[0] for row in self.rows]

    @property
    def degree(self) -> int:
        return len(self.rows) - 1

    def first_column_at(self, rho: Sequence[float]) -> np.ndarray:
        vals = dict(zip(self.rho_names, (float(r) for r in rho)))
        return np.array([float(f.to_float().evaluate(vals)) if f.active_vars()
                         else float(f.evaluate({})) for f in self.first_column])

    def is_stable_at(self, rho: Sequence[float]) -> bool:
        return bool(np.all(self.first_column_at(rho) > 0))


def _coefficients(pD, rho_names: Sequence[str] | None) -> tuple[list[Polynomial], tuple[str, ...]]:
    """Descending coefficients a_n..a_0 as polynomials in rho."""
    if isinstance(pD, ParamPolynomial):
        names = tuple(rho_names or (f"rho{i + 1}" for i in range(pD.nparams)))
        var = pD.base.var_names[0]
        asc = pD.rho_coefficients(var, names)
    else:
        names = tuple(rho_names or ())
        if isinstance(pD, Polynomial):
            asc = [Polynomial.constant(c, names or ("rho1",)) for c in pD.coeffs()]
        else:
            asc = [c if isinstance(c, Polynomial) else Polynomial.constant(c, names or ("rho1",))
                   for c in pD]
        if not names:
            names = asc[0].var_names if asc else ("rho1",)
    while asc and asc[-1].is_zero():
        asc.pop()
    if len(asc) < 2:
        raise DegreeError("denominator has degree 0")
    return [a.with_vars(names) for a in reversed(asc)], names


def routh_modified(pD, rho_names: Sequence[str] | None = None) -> StabilityTable:
    """Division-free Routh table; rows are zero-padded to a common width."""
    a, names = _coefficients(pD, rho_names)
    n = len(a) - 1
    width = n // 2 + 1
    zero = Polynomial.zero(names)

    def pad(row):
        return list(row) + [zero] * (width + 1 - len(row))

    rows = [pad(a[0::2]), pad(a[1::2])]
    for _ in range(2, n + 1):
        r1, r2 = rows[-1], rows[-2]
        new = [r1[0] * r2[j + 1] - r1[j + 1] * r2[0] for j in range(width)]
        rows.append(pad(new))
    return StabilityTable(tuple(tuple(r[:width]) for r in rows), TableKind.ROUTH, names)


def jury_modified(pD, rho_names: Sequence[str] | None = None) -> StabilityTable:
    """Division-free Jury (Schur-Cohn) table; row i has n+2-i entries."""
    a, names = _coefficients(pD, rho_names)
    n = len(a) - 1
    rows = [list(a)]
    for i in range(2, n + 2):
        prev = rows[-1]
        last = len(prev) - 1
        rows.append([prev[j] * prev[0] - prev[last - j] * prev[last] for j in range(n + 2 - i)])
    return StabilityTable(tuple(tuple(r) for r in rows), TableKind.JURY, names)


def stability_table(pD: ParamPolynomial, domain, rho_names=None) -> StabilityTable:
    from .system import Domain
    build = routh_modified if Domain(domain) is Domain.CT else jury_modified
    return build(pD, rho_names)


# -- box certification ------------------------------------------------------

@dataclass
class EntryCertificate:
    index: int
    theta: float
    method: str  # "constant", "affine" or "sos"
    status: str = "optimal"
    certificate: Certificate | None = None
    iterations: int = 0


@dataclass
class BoxCertificate:
    theta_star: float
    entries: list[EntryCertificate] = field(default_factory=list)
    theta_min: float = THETA_MIN

    @property
    def certified(self) -> bool:
        return self.theta_star > self.theta_min

    @property
    def worst_index(self) -> int:
        return min(self.entries, key=lambda e: e.theta).index


def box_polynomials(box: ParamBox, names: Sequence[str]) -> list[Polynomial]:
    """c_j = (upper_j - rho_j)(rho_j - lower_j)."""
    out = []
    for j, name in enumerate(names):
        r = Polynomial.variable(name, names)
        out.append((r * -1 + box.upper[j]) * (r - box.lower[j]))
    return out


def _affine_box_min(f: Polynomial, box: ParamBox) -> float:
    const = f.terms.get((0,) * len(f.var_names), Fraction(0))
    lo = Fraction(const)
    for mono, c in f.items():
        if sum(mono) == 1:
            j = mono.index(1)
            lo += c * (box.lower[j] if c > 0 else box.upper[j])
    return float(lo)


def positivity_program(f: Polynomial, box: ParamBox, mult_degree: int = 2,
                       max_basis: int = DEFAULT_MAX_BASIS):
    """max theta s.t. f - sum_j s_j c_j - theta is SOS, s_j SOS of mult_degree."""
    names = f.var_names
    r = len(names)
    prog = ConicProgram()
    theta = prog.add_scalar("theta")
    target = poly_map(f)
    for j, c in enumerate(box_polynomials(box, names)):
        _, s = sos_multiplier(prog, r, mult_degree, f"s{j + 1}", max_basis)
        target = map_add(target, map_mul_poly(s, c, names), -1.0)
    target = map_add(target, {(0,) * r: theta}, -1.0)
    handle = sos_constrain(prog, target, "g", nvars=r, max_basis=max_basis)
    prog.maximize(theta)
    return prog, handle


def certify_box_stability(table: StabilityTable, box: ParamBox, mult_degree: int = 2,
                          opts: SolverOptions | None = None, theta_min: float = THETA_MIN,
                          short_circuit: bool = True, raise_on_fail: bool = True,
                          max_basis: int = DEFAULT_MAX_BASIS) -> BoxCertificate:
    """Certify every first-column entry positive on the box.

    Returns the per-entry optima and their minimum; raises Inconclusive when
    the minimum does not exceed ``theta_min`` (unless ``raise_on_fail`` is off).
    """
    if mult_degree < 0 or mult_degree % 2:
        raise ValueError("mult_degree must be even and nonnegative")
    if box.dim != len(table.rho_names):
        raise ValueError(f"box has {box.dim} axes, table has {len(table.rho_names)} parameters")
    entries = []
    for idx, f in enumerate(table.first_column, start=1):
        if f.is_zero():
            entries.append(EntryCertificate(idx, -math.inf, "constant", "identically_zero"))
            continue
        if short_circuit and f.degree() == 0:
            entries.append(EntryCertificate(idx, float(f.evaluate({})), "constant"))
            continue
        if short_circuit and f.degree() == 1:
            entries.append(EntryCertificate(idx, _affine_box_min(f, box), "affine"))
            continue
        prog, handle = positivity_program(f.to_float(), box, mult_degree, max_basis)
        sol = solve(prog, opts)
        if sol.status is Status.OPTIMAL:
            theta = sol.values["theta"]
            cert = recover_certificate(sol, handle)
        elif sol.status is Status.INFEASIBLE:
            theta, cert = -math.inf, None
        else:
            raise SolverFailure(f"first-column entry f{idx}: solver ended with {sol.status.value}", sol)
        entries.append(EntryCertificate(idx, theta, "sos", sol.status.value, cert, sol.iterations))
    result = BoxCertificate(min(e.theta for e in entries), entries, theta_min)
    if raise_on_fail and not result.certified:
        worst = min(entries, key=lambda e: e.theta)
        raise Inconclusive(f"box stability not certified: theta*={result.theta_star:.6g} "
                           f"(entry f{worst.index}, {worst.status}) at multiplier degree {mult_degree}",
                           result)
    return result
