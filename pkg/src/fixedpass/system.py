"""Plant and controller models, plant validation and closed-loop composition."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainMismatch, UnstableCancellation, ValidationFailed
from .poly import (EvenOddPair, ParamPolynomial, Polynomial, as_coeff,
                   even_odd_ct, moebius_lift)

# margin used for every numeric root-location test
ROOT_TOL = 1e-9


class Domain(str, enum.Enum):
    CT = "ct"
    DT = "dt"

    @property
    def var(self) -> str:
        return "s" if self is Domain.CT else "z"

    @property
    def boundary_var(self) -> str:
        return "w" if self is Domain.CT else "y"


def roots_of(p: Polynomial) -> np.ndarray:
    cs = [float(c) for c in p.coeffs()]
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(cs[::-1])


def in_stable_region(r, domain: Domain, closed: bool = False, tol: float = ROOT_TOL):
    """Root-location test: open (or closed) left half-plane / unit disk."""
    r = np.asarray(r)
    if domain is Domain.CT:
        return r.real <= tol if closed else r.real < -tol
    return np.abs(r) <= 1 + tol if closed else np.abs(r) < 1 - tol


def is_stable_poly(p: Polynomial, domain: Domain) -> bool:
    return bool(np.all(in_stable_region(roots_of(p), domain)))


@dataclass(frozen=True)
class RationalTransfer:
    num: Polynomial
    den: Polynomial
    domain: Domain

    def __post_init__(self):
        if self.den.is_zero():
            raise ValueError("denominator is identically zero")
        var = self.domain.var
        for p in (self.num, self.den):
            extra = set(p.active_vars()) - {var}
            if extra:
                raise ValueError(f"transfer function in {var!r} depends on {sorted(extra)}")
        object.__setattr__(self, "num", self.num.with_vars((var,)))
        object.__setattr__(self, "den", self.den.with_vars((var,)))

    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence, domain: Domain | str) -> "RationalTransfer":
        """Build from ascending coefficient arrays (index = power)."""
        domain = Domain(domain)
        return cls(Polynomial.from_coeffs(num, domain.var),
                   Polynomial.from_coeffs(den, domain.var), domain)

    @property
    def relative_degree(self) -> int:
        return self.den.degree() - max(self.num.degree(), 0)

    def poles(self) -> np.ndarray:
        return roots_of(self.den)

    def zeros(self) -> np.ndarray:
        return roots_of(self.num)

    def __call__(self, x):
        """Evaluate at complex points (numpy arrays welcome)."""
        x = np.asarray(x, dtype=complex)
        n = np.polyval([float(c) for c in self.num.coeffs()][::-1], x) if not self.num.is_zero() else 0 * x
        d = np.polyval([float(c) for c in self.den.coeffs()][::-1], x)
        return n / d

    def frequency_points(self, freqs):
        """s = j*w for CT, z = exp(j*theta) for DT."""
        freqs = np.asarray(freqs, dtype=float)
        return 1j * freqs if self.domain is Domain.CT else np.exp(1j * freqs)


@dataclass
class ValidationReport:
    passed: bool
    relative_degree: int
    zeros: list[complex]
    violating_zeros: list[complex]
    clause: str | None = None


def validate_plant(g: RationalTransfer, strict: bool = False, raise_on_fail: bool = True) -> ValidationReport:
    """Check the standing plant assumptions.

    ``strict=False``: relative degree 0 or 1 and zeros in the closed stable
    region.  ``strict=True`` asks for zeros in the open region, which is what
    the output-feedback index needs.
    """
    rd = g.relative_degree
    zeros = g.zeros()
    ok = in_stable_region(zeros, g.domain, closed=not strict)
    bad = [complex(z) for z in zeros[~ok]]
    clause = None
    assumption = "assumption-2" if strict else "assumption-1"
    if rd < 0:
        clause = "improper"
    elif rd >= 2:
        clause = f"{assumption}:relative-degree"
    elif bad:
        clause = f"{assumption}:zeros"
    report = ValidationReport(clause is None, rd, [complex(z) for z in zeros], bad, clause)
    if clause and raise_on_fail:
        if clause == "improper":
            msg = f"plant is improper (relative degree {rd})"
        elif clause.endswith("relative-degree"):
            msg = f"plant relative degree {rd} is not below 2"
        else:
            region = ("open" if strict else "closed") + (
                " left half-plane" if g.domain is Domain.CT else " unit disk")
            msg = f"plant zeros {bad} lie outside the {region}"
        raise ValidationFailed(msg, clause, report)
    return report


@dataclass(frozen=True)
class ControllerBasis:
    """The fixed vector of transfer functions; C(rho) = rho . entries."""
    entries: tuple[RationalTransfer, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("controller basis is empty")
        domains = {e.domain for e in entries}
        if len(domains) > 1:
            raise DomainMismatch("basis entries mix CT and DT")
        for k, e in enumerate(entries):
            if e.relative_degree < 0:
                raise ValidationFailed(f"basis entry {k} is improper", "basis-improper")
            if not is_stable_poly(e.den, e.domain):
                raise ValidationFailed(f"basis entry {k} has unstable poles {e.poles()}",
                                       "basis-unstable")

    @property
    def domain(self) -> Domain:
        return self.entries[0].domain

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ParamBox:
    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(as_coeff(v) for v in self.lower)
        hi = tuple(as_coeff(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("box bounds differ in length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box has lower > upper: {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, rho, tol: float = 0.0) -> bool:
        return all(float(a) - tol <= r <= float(b) + tol
                   for a, r, b in zip(self.lower, rho, self.upper))

    def center(self) -> np.ndarray:
        return np.array([(float(a) + float(b)) / 2 for a, b in zip(self.lower, self.upper)])

    def widths(self) -> np.ndarray:
        return np.array([float(b) - float(a) for a, b in zip(self.lower, self.upper)])

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo = np.array([float(a) for a in self.lower])
        return lo + rng.random((n, self.dim)) * self.widths()

    def grid(self, resolution: int) -> np.ndarray:
        axes = [np.linspace(float(a), float(b), resolution if b > a else 1)
                for a, b in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class ClosedLoop:
    """G(rho) = pN / (pD_base + sum_i rho_i pD_coeffs[i])."""
    pN: Polynomial
    pD: ParamPolynomial
    domain: Domain
    dN: int = field(init=False)
    dD: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dN", self.pN.degree())
        object.__setattr__(self, "dD", self.pD.degree())

    @property
    def pD_base(self) -> Polynomial:
        return self.pD.base

    @property
    def pD_coeffs(self) -> tuple[Polynomial, ...]:
        return self.pD.coeffs

    @property
    def nparams(self) -> int:
        return self.pD.nparams

    @property
    def rho_names(self) -> tuple[str, ...]:
        return tuple(f"rho{i + 1}" for i in range(self.nparams))

    def at(self, rho) -> RationalTransfer:
        return RationalTransfer(self.pN, self.pD.at([as_coeff(r) for r in rho]), self.domain)

    def scaled(self, c) -> "ClosedLoop":
        """Multiply numerator and denominator by the same constant."""
        return ClosedLoop(self.pN.scale(c), self.pD * as_coeff(c), self.domain)


def compose_closed_loop(g0: RationalTransfer, basis: ControllerBasis,
                        check_samples: Sequence[Sequence[float]] | None = None) -> ClosedLoop:
    """Negative-feedback loop G0 / (1 + G0 * rho.Cbar) with exact coefficients.

    Common roots of pN and pD in the closed unstable region are rejected at a
    few sampled parameter values.
    """
    if g0.domain is not basis.domain:
        raise DomainMismatch(f"plant is {g0.domain.value}, basis is {basis.domain.value}")
    N0, D0 = g0.num, g0.den
    dens = [e.den for e in basis.entries]
    prod_all = Polynomial.constant(1, (g0.domain.var,))
    for d in dens:
        prod_all = prod_all * d
    pN = N0 * prod_all
    base = D0 * prod_all
    coeffs = []
    for i, e in enumerate(basis.entries):
        others = Polynomial.constant(1, (g0.domain.var,))
        for j, d in enumerate(dens):
            if j != i:
                others = others * d
        coeffs.append(N0 * e.num * others)
    cl = ClosedLoop(pN, ParamPolynomial(base, tuple(coeffs)), g0.domain)
    p = cl.nparams
    samples = check_samples if check_samples is not None else (
        [[0.0] * p, [1.0] * p, [-1.0] * p] + [list(np.eye(p)[k]) for k in range(p)])
    _check_cancellation(cl, samples)
    return cl


def _check_cancellation(cl: ClosedLoop, samples, tol: float = 1e-7) -> None:
    zn = roots_of(cl.pN)
    zn = zn[~in_stable_region(zn, cl.domain)]
    if zn.size == 0:
        return
    for rho in samples:
        pd = cl.pD.at([as_coeff(float(r)) for r in rho])
        cs = np.array([float(c) for c in pd.coeffs()][::-1])
        scale = np.abs(cs).max()
        for z in zn:
            val = np.polyval(cs, z)
            if abs(val) <= tol * scale * max(1.0, abs(z)) ** (len(cs) - 1):
                raise UnstableCancellation(
                    f"pN and pD share the root {z} (outside the stable region) at rho={list(rho)}")


@dataclass(frozen=True)
class FreqDecomposition:
    """Boundary real/imaginary parts of the closed loop.

    CT: pN(jw) = num.even + j num.odd and similarly for pD.
    DT: pN(phi(y)) (1+y^2)^dN = num.even + j num.odd, and with dD for pD;
    in that case num = (p1, p2) and den = (p3, p4).
    """
    num: EvenOddPair
    den_re: ParamPolynomial
    den_im: ParamPolynomial
    domain: Domain
    dN: int
    dD: int

    @property
    def var(self) -> str:
        return self.domain.boundary_var

    def real_part_numerator(self) -> ParamPolynomial:
        """pNe*pDe + pNo*pDo (CT) or p1*p3 + p2*p4 (DT), affine in rho."""
        return self.den_re * self.num.even + self.den_im * self.num.odd

    def num_modulus(self) -> Polynomial:
        return self.num.even * self.num.even + self.num.odd * self.num.odd

    def circle_factor(self, k: int) -> Polynomial:
        """(1 + y^2)^k, the positive factor relating DT numerator and denominator lifts."""
        y = Polynomial.variable(self.var)
        return (y * y + 1) ** k

    def response(self, x, rho) -> complex:
        """Closed-loop response rebuilt from the decomposition (for checks)."""
        num = self.num.evaluate(x)
        den = self.den_re.at(rho).evaluate([x]) + 1j * self.den_im.at(rho).evaluate([x])
        g = num / den
        if self.domain is Domain.DT:
            g = g * (1 + x * x) ** (self.dD - self.dN)
        return g


def param_freq_decompose(cl: ClosedLoop) -> FreqDecomposition:
    if cl.domain is Domain.CT:
        num = even_odd_ct(cl.pN)
        parts = [even_odd_ct(p) for p in cl.pD.parts()]
    else:
        num = moebius_lift(cl.pN, cl.dN)
        parts = [moebius_lift(p, cl.dD) for p in cl.pD.parts()]
    den_re = ParamPolynomial(parts[0].even, tuple(q.even for q in parts[1:]))
    den_im = ParamPolynomial(parts[0].odd, tuple(q.odd for q in parts[1:]))
    return FreqDecomposition(num, den_re, den_im, cl.domain, cl.dN, cl.dD)
