"""Shared random-problem generators for the property suites."""
from __future__ import annotations

from fractions import Fraction as F

import numpy as np

from fixedpass.system import ControllerBasis, ParamBox, RationalTransfer


def stable_poly(rng, degree: int, domain: str) -> list[float]:
    """Ascending coefficients of a monic polynomial with strictly stable roots."""
    roots = []
    while len(roots) < degree:
        if degree - len(roots) >= 2 and rng.random() < 0.5:
            if domain == "ct":
                re, im = -rng.uniform(0.2, 3.0), rng.uniform(0.1, 3.0)
            else:
                r, th = rng.uniform(0.05, 0.9), rng.uniform(0.1, np.pi - 0.1)
                re, im = r * np.cos(th), r * np.sin(th)
            roots += [complex(re, im), complex(re, -im)]
        else:
            roots.append(-rng.uniform(0.2, 3.0) if domain == "ct" else rng.uniform(-0.9, 0.9))
    return [float(c) for c in np.real(np.poly(roots))[::-1]]


def rational(x: float, digits: int = 3) -> F:
    return F(round(x * 10 ** digits), 10 ** digits)


def random_problem(seed: int, domain: str):
    """A biproper plant with minimum-phase zeros and a 2-entry basis on a small box.

    The plant is chosen stable so that small gains keep the loop stable.
    """
    rng = np.random.default_rng(seed)
    deg = 1 + seed % 2
    num = [rational(c) for c in stable_poly(rng, deg, domain)]
    den = [rational(c) for c in stable_poly(rng, deg, domain)]
    g0 = RationalTransfer.from_coeffs(num, den, domain)
    pole = rational(-rng.uniform(0.5, 2.0)) if domain == "ct" else rational(rng.uniform(-0.6, 0.6))
    basis = ControllerBasis((RationalTransfer.from_coeffs([1], [1], domain),
                             RationalTransfer.from_coeffs([1], [-pole, 1], domain)))
    lo = [F(0), F(0)]
    hi = [rational(rng.uniform(0.2, 0.8)), rational(rng.uniform(0.2, 0.8))]
    return g0, basis, ParamBox(tuple(lo), tuple(hi))


def random_stable_tf(seed: int, domain: str) -> RationalTransfer:
    rng = np.random.default_rng(1000 + seed)
    n = 1 + seed % 3
    den = stable_poly(rng, n, domain)
    m = int(rng.integers(0, n + 1))
    num = list(rng.normal(size=m + 1))
    num[-1] = abs(num[-1]) + 0.1
    return RationalTransfer.from_coeffs([rational(c, 4) for c in num], [rational(c, 4) for c in den], domain)


def constructed_sos(seed: int) -> np.ndarray:
    """Ascending coefficients of a sum of two or three random squares."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    total = np.zeros(2 * d + 1)
    for _ in range(int(rng.integers(2, 4))):
        q = np.round(rng.normal(size=d + 1), 2)
        q[-1] = q[-1] if abs(q[-1]) > 0.2 else 1.0
        total[: 2 * d + 1] += np.convolve(q, q)
    return total
