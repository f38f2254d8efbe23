"""Sparse multivariate polynomials and the two frequency-domain lifts.

Coefficients are kept as :class:`fractions.Fraction` through every symbolic
stage and only turned into floats when numeric data is emitted.  A polynomial
is an immutable map from exponent tuples to nonzero coefficients together with
an ordered tuple of indeterminate names.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Number, Rational
from typing import Iterable, Mapping, Sequence

from .errors import DegreeError, NotUnivariate

Coeff = Fraction | float


def as_coeff(c) -> Coeff:
    """Convert ints/rationals/decimal strings to Fraction, keep floats."""
    if isinstance(c, Fraction):
        return c
    if isinstance(c, bool):
        return Fraction(int(c))
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c.strip())
    if isinstance(c, float):
        return c
    if isinstance(c, Number):
        return float(c)
    raise TypeError(f"unsupported coefficient {c!r}")


class Polynomial:
    __slots__ = ("_terms", "_vars", "_hash")

    def __init__(self, terms: Mapping[tuple[int, ...], object] | None = None,
                 var_names: Sequence[str] = ("s",)):
        var_names = tuple(var_names)
        if len(set(var_names)) != len(var_names):
            raise ValueError(f"duplicate variable names {var_names}")
        clean: dict[tuple[int, ...], Coeff] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != len(var_names) or min(mono, default=0) < 0:
                raise ValueError(f"bad exponent {mono} for variables {var_names}")
            c = as_coeff(c)
            if c != 0:
                clean[mono] = clean.get(mono, 0) + c
                if clean[mono] == 0:
                    del clean[mono]
        self._terms = clean
        self._vars = var_names
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c, var_names: Sequence[str] = ("s",)) -> "Polynomial":
        return cls({(0,) * len(var_names): c}, var_names)

    @classmethod
    def zero(cls, var_names: Sequence[str] = ("s",)) -> "Polynomial":
        return cls({}, var_names)

    @classmethod
    def variable(cls, name: str, var_names: Sequence[str] | None = None) -> "Polynomial":
        var_names = tuple(var_names) if var_names is not None else (name,)
        mono = tuple(1 if v == name else 0 for v in var_names)
        return cls({mono: 1}, var_names)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, var: str = "s") -> "Polynomial":
        """Univariate polynomial from ascending coefficients (index = power)."""
        return cls({(k,): c for k, c in enumerate(coeffs)}, (var,))

    # -- accessors --------------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], Coeff]:
        return dict(self._terms)

    @property
    def var_names(self) -> tuple[str, ...]:
        return self._vars

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self._terms)

    def degree(self, var: str | None = None) -> int:
        """Total degree, or the degree in ``var``; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        if var is None:
            return max(sum(m) for m in self._terms)
        if var not in self._vars:
            return 0
        k = self._vars.index(var)
        return max(m[k] for m in self._terms)

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def active_vars(self) -> tuple[str, ...]:
        return tuple(v for k, v in enumerate(self._vars)
                     if any(m[k] for m in self._terms))

    # -- variable universe --------------------------------------------------
    def with_vars(self, var_names: Sequence[str]) -> "Polynomial":
        """Re-express over ``var_names``; every active variable must be present."""
        var_names = tuple(var_names)
        if var_names == self._vars:
            return self
        missing = set(self.active_vars()) - set(var_names)
        if missing:
            raise ValueError(f"cannot drop active variables {sorted(missing)}")
        pos = [self._vars.index(v) if v in self._vars else None for v in var_names]
        out = {}
        for m, c in self._terms.items():
            out[tuple(m[p] if p is not None else 0 for p in pos)] = c
        return Polynomial(out, var_names)

    def _align(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if self._vars == other._vars:
            return self, other
        merged = self._vars + tuple(v for v in other._vars if v not in self._vars)
        return self.with_vars(merged), other.with_vars(merged)

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other, self._vars)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "Polynomial":
        a, b = self._align(self._lift(other))
        out = dict(a._terms)
        for m, c in b._terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(out, a._vars)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()}, self._vars)

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        a, b = self._align(other)
        out: dict[tuple[int, ...], Coeff] = {}
        for ma, ca in a._terms.items():
            for mb, cb in b._terms.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                out[m] = out.get(m, 0) + ca * cb
        return Polynomial(out, a._vars)

    def __rmul__(self, other) -> "Polynomial":
        return self.scale(other)

    def scale(self, c) -> "Polynomial":
        c = as_coeff(c)
        return Polynomial({m: c * v for m, v in self._terms.items()}, self._vars)

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1, self._vars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            if isinstance(other, Number):
                other = Polynomial.constant(other, self._vars)
            else:
                return NotImplemented
        a, b = self._align(other)
        return a._terms == b._terms

    def __hash__(self) -> int:
        if self._hash is None:
            # hash over active variables so aligned-equal polynomials collide
            act = tuple(sorted(self.active_vars()))
            p = self.with_vars(act) if act else Polynomial(
                {(): c for c in self._terms.values()}, ())
            self._hash = hash((act, frozenset(p._terms.items())))
        return self._hash

    # -- evaluation and conversion -------------------------------------------
    def __call__(self, *args, **kwargs):
        if len(args) > 1:
            return self.evaluate(list(args), **kwargs)
        return self.evaluate(*args, **kwargs)

    def evaluate(self, values=None, **named):
        """Evaluate at a point given positionally (by variable order) or by name.

        Values may be complex or numpy arrays; missing variables are an error.
        """
        if values is None:
            values = {}
        if not isinstance(values, Mapping):
            values = dict(zip(self._vars, values if isinstance(values, Sequence)
                              and not isinstance(values, str) else [values]))
        values = {**values, **named}
        total = 0
        for m, c in self._terms.items():
            term = c
            for v, e in zip(self._vars, m):
                if e:
                    term = term * values[v] ** e
            total = total + term
        return total

    def subs(self, values: Mapping[str, object]) -> "Polynomial":
        """Substitute numbers for some variables; they are removed from the result."""
        keep = tuple(v for v in self._vars if v not in values)
        idx = [self._vars.index(v) for v in keep]
        out: dict[tuple[int, ...], Coeff] = {}
        for m, c in self._terms.items():
            term = c
            for v, e in zip(self._vars, m):
                if e and v in values:
                    term = term * as_coeff(values[v]) ** e
            key = tuple(m[i] for i in idx)
            out[key] = out.get(key, 0) + term
        return Polynomial(out, keep)

    def to_float(self) -> "Polynomial":
        return Polynomial({m: float(c) for m, c in self._terms.items()}, self._vars)

    def collect(self, var: str) -> dict[int, "Polynomial"]:
        """Coefficients of powers of ``var`` as polynomials in the other variables."""
        k = self._vars.index(var)
        rest = self._vars[:k] + self._vars[k + 1:]
        groups: dict[int, dict] = {}
        for m, c in self._terms.items():
            groups.setdefault(m[k], {})[m[:k] + m[k + 1:]] = c
        return {e: Polynomial(t, rest) for e, t in sorted(groups.items())}

    def univariate_var(self) -> str:
        act = self.active_vars()
        if len(act) > 1:
            raise NotUnivariate(f"expected a univariate polynomial, got variables {act}")
        return act[0] if act else self._vars[0]

    def coeffs(self, var: str | None = None) -> list[Coeff]:
        """Ascending coefficient list of a univariate polynomial."""
        var = var or self.univariate_var()
        act = set(self.active_vars()) - {var}
        if act:
            raise NotUnivariate(f"polynomial also depends on {sorted(act)}")
        n = self.degree(var)
        out: list[Coeff] = [Fraction(0)] * (n + 1)
        k = self._vars.index(var) if var in self._vars else None
        for m, c in self._terms.items():
            out[m[k] if k is not None else 0] = c
        return out

    def rename(self, mapping: Mapping[str, str]) -> "Polynomial":
        return Polynomial(self._terms, tuple(mapping.get(v, v) for v in self._vars))

    def __repr__(self) -> str:
        return f"Polynomial({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m in sorted(self._terms, key=lambda m: (-sum(m), tuple(-e for e in m))):
            c = self._terms[m]
            mono = "*".join(v if e == 1 else f"{v}^{e}"
                            for v, e in zip(self._vars, m) if e)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def poly_arith(a: Polynomial, b, op: str) -> Polynomial:
    """Dispatch ``add``, ``sub``, ``mul`` or ``scale`` (``b`` a scalar)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        return a.scale(b)
    raise ValueError(f"unknown op {op!r}")


@dataclass(frozen=True)
class EvenOddPair:
    """Real and imaginary parts of a polynomial on the stability boundary.

    ``even`` holds only even powers and ``odd`` only odd powers of the
    boundary parameter (omega for CT, y for the DT lift).
    """
    even: Polynomial
    odd: Polynomial

    def evaluate(self, x):
        return self.even.evaluate([x]) + 1j * self.odd.evaluate([x])


def even_odd_ct(p: Polynomial, var: str = "w") -> EvenOddPair:
    """Split p(j*w) into real and imaginary real polynomials in ``w``."""
    s = p.univariate_var()
    even, odd = {}, {}
    for k, a in enumerate(p.coeffs(s)):
        if a == 0:
            continue
        if k % 2 == 0:
            even[(k,)] = a * (-1) ** (k // 2)
        else:
            odd[(k,)] = a * (-1) ** ((k - 1) // 2)
    return EvenOddPair(Polynomial(even, (var,)), Polynomial(odd, (var,)))


def _cmul(a: tuple[Polynomial, Polynomial], b: tuple[Polynomial, Polynomial]):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def moebius_lift(p: Polynomial, d: int, var: str = "y") -> EvenOddPair:
    """Real/imaginary parts of p(phi(y)) * (1 + y^2)^d on the unit circle.

    phi(y) = (1 - y^2 + 2jy) / (1 + y^2) runs over |z| = 1 (minus z = -1).
    Since 1 - y^2 + 2jy = (1 + jy)^2, the real part is even and the
    imaginary part odd in y.
    """
    z = p.univariate_var()
    coeffs = p.coeffs(z)
    if d < len(coeffs) - 1:
        raise DegreeError(f"clearing degree {d} below deg(p) = {len(coeffs) - 1}")
    y = Polynomial.variable(var)
    one = Polynomial.constant(1, (var,))
    zero = Polynomial.zero((var,))
    phi_num = (one - y * y, y.scale(2))
    circ = one + y * y
    re, im = zero, zero
    power = (one, zero)  # (1 - y^2 + 2jy)^k
    for k, a in enumerate(coeffs):
        if a != 0:
            w = circ ** (d - k)
            re = re + (power[0] * w).scale(a)
            im = im + (power[1] * w).scale(a)
        power = _cmul(power, phi_num)
    return EvenOddPair(re, im)


def phi(y):
    """The unit-circle parameterization as a complex number (numpy friendly)."""
    return (1 - y * y + 2j * y) / (1 + y * y)


@dataclass(frozen=True)
class ParamPolynomial:
    """A polynomial whose coefficients are affine in a parameter vector rho.

    Represents ``base + sum_i rho_i * coeffs[i]``; all parts share one
    variable universe and none of them depends on rho.
    """
    base: Polynomial
    coeffs: tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def nparams(self) -> int:
        return len(self.coeffs)

    def parts(self) -> tuple[Polynomial, ...]:
        return (self.base,) + self.coeffs

    def map(self, fn) -> "ParamPolynomial":
        """Apply a linear map to every part."""
        return ParamPolynomial(fn(self.base), tuple(fn(c) for c in self.coeffs))

    def at(self, rho: Sequence) -> Polynomial:
        out = self.base
        for r, c in zip(rho, self.coeffs, strict=True):
            out = out + c.scale(r)
        return out

    def __add__(self, other: "ParamPolynomial") -> "ParamPolynomial":
        if isinstance(other, Polynomial):
            return ParamPolynomial(self.base + other, self.coeffs)
        return ParamPolynomial(self.base + other.base,
                               tuple(a + b for a, b in zip(self.coeffs, other.coeffs, strict=True)))

    def __sub__(self, other) -> "ParamPolynomial":
        return self + (other * -1 if isinstance(other, ParamPolynomial) else -other)

    def __mul__(self, other) -> "ParamPolynomial":
        """Multiply by a rho-free polynomial or a scalar."""
        if isinstance(other, ParamPolynomial):
            raise TypeError("product of two rho-affine polynomials is not affine")
        return self.map(lambda p: p * other)

    __rmul__ = __mul__

    def degree(self, var: str | None = None) -> int:
        return max(p.degree(var) for p in self.parts())

    def rho_coefficients(self, var: str, rho_names: Sequence[str]) -> list[Polynomial]:
        """Ascending coefficients of ``var`` as affine polynomials in rho."""
        n = self.degree(var)
        rho_names = tuple(rho_names)
        out = []
        for k in range(n + 1):
            terms = {(0,) * len(rho_names): _coeff_at(self.base, var, k)}
            for i, c in enumerate(self.coeffs):
                mono = tuple(1 if j == i else 0 for j in range(len(rho_names)))
                terms[mono] = _coeff_at(c, var, k)
            out.append(Polynomial(terms, rho_names))
        return out

    def as_polynomial(self, rho_names: Sequence[str]) -> Polynomial:
        """The full polynomial over (frequency variables..., rho_1..rho_p)."""
        rho_names = tuple(rho_names)
        out = self.base.with_vars(self.base.var_names + rho_names)
        for name, c in zip(rho_names, self.coeffs, strict=True):
            r = Polynomial.variable(name, c.var_names + rho_names)
            out = out + r * c
        return out


def _coeff_at(p: Polynomial, var: str, k: int) -> Coeff:
    if p.is_zero():
        return Fraction(0)
    cs = p.coeffs(var)
    return cs[k] if k < len(cs) else Fraction(0)
