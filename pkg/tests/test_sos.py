import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixedpass.errors import DegreeOverflow
from fixedpass.poly import Polynomial
from fixedpass.sdp import Affine, ConicProgram, Status, solve
from fixedpass.sos import (gram_degrees, map_add, monomial_basis, n_monomials, poly_map,
                           recover_certificate, sos_constrain, sos_multiplier)

from helpers import constructed_sos


def upoly(coeffs):
    return Polynomial.from_coeffs(list(coeffs), "x")


def sos_feasible(p: Polynomial):
    prog = ConicProgram()
    handle = sos_constrain(prog, poly_map(p), "g", nvars=1)
    sol = solve(prog)
    return sol, handle


def global_min(coeffs_asc) -> float:
    """Exact-ish minimum of an even-degree univariate polynomial via critical points."""
    c = np.polynomial.Polynomial(coeffs_asc)
    crit = c.deriv().roots()
    crit = crit[np.abs(crit.imag) < 1e-9].real
    return float(np.min(c(crit))) if crit.size else float(c(0.0))


def test_basis_counts():
    assert n_monomials(2, 2) == 6 == len(monomial_basis(2, 2))
    assert monomial_basis(1, 3) == [(0,), (1,), (2,), (3,)]


@pytest.mark.parametrize("seed", range(100))
def test_sos_iff_nonnegative(seed):
    """s + delta is SOS; s - s(a) - delta (negative at a) is not."""
    delta = 1e-2
    s = constructed_sos(seed)
    plus = s.copy()
    plus[0] += delta
    sol, handle = sos_feasible(upoly(plus.tolist()))
    assert sol.status is Status.OPTIMAL
    assert recover_certificate(sol, handle).valid()

    a = np.random.default_rng(seed).uniform(-2, 2)
    minus = s.copy()
    minus[0] -= np.polynomial.Polynomial(s)(a) + delta
    assert np.polynomial.Polynomial(minus)(a) < 0
    sol, _ = sos_feasible(upoly(minus.tolist()))
    assert sol.status is not Status.OPTIMAL


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_sos_lower_bound_is_global_min(seed):
    """Univariate: max t with p - t SOS equals the global minimum (root oracle)."""
    s = constructed_sos(seed)
    prog = ConicProgram()
    t = prog.add_scalar("t")
    target = map_add(poly_map(upoly(s.tolist())), {(0,): t}, -1.0)
    handle = sos_constrain(prog, target, "g", nvars=1)
    prog.maximize(t)
    sol = solve(prog)
    assert sol.status is Status.OPTIMAL
    want = global_min(s)
    assert sol.values["t"] == pytest.approx(want, abs=1e-5 * max(1.0, abs(want)))
    cert = recover_certificate(sol, handle)
    assert cert.residual <= 1e-6 and cert.min_eig >= -1e-7


def test_odd_degree_not_sos():
    sol, _ = sos_feasible(upoly([0, 1]))
    assert sol.status is not Status.OPTIMAL
    sol, _ = sos_feasible(upoly([1, 0, 0, 1]))
    assert sol.status is not Status.OPTIMAL


def test_bivariate_motzkin_like_square():
    x = Polynomial.variable("x", ("x", "y"))
    y = Polynomial.variable("y", ("x", "y"))
    p = (x * x - y) ** 2 + (x * y + 1) ** 2
    prog = ConicProgram()
    handle = sos_constrain(prog, poly_map(p), "g")
    sol = solve(prog)
    assert sol.status is Status.OPTIMAL
    assert recover_certificate(sol, handle).valid()


def test_matrix_sos_and_degrees():
    one = {(0,): Affine({}, 1.0)}
    x2 = {(0,): Affine({}, 1.0), (2,): Affine({}, 1.0)}
    xm = {(1,): Affine({}, 1.0)}
    good = [[x2, xm], [xm, one]]  # [1+x^2, x; x, 1] = [x;1][x;1]^T + diag(1,0)
    assert gram_degrees(good) == [1, 0]
    prog = ConicProgram()
    h = sos_constrain(prog, good, "g", nvars=1)
    sol = solve(prog)
    assert sol.status is Status.OPTIMAL
    assert recover_certificate(sol, h).valid()
    two_x = {(1,): Affine({}, 2.0)}
    bad = [[x2, two_x], [two_x, one]]  # det = 1 - 3x^2 < 0 for large x
    prog = ConicProgram()
    sos_constrain(prog, bad, "g", nvars=1)
    assert solve(prog).status is not Status.OPTIMAL


def test_multiplier_is_sos():
    prog = ConicProgram()
    gs, s = sos_multiplier(prog, 2, 2, "s")
    assert gs.block_dim == 3
    assert max(sum(m) for m in s) == 2


def test_degree_overflow():
    x = Polynomial.variable("x", ("x", "y", "z"))
    p = x ** 20 + 1
    with pytest.raises(DegreeOverflow):
        sos_constrain(ConicProgram(), poly_map(p * Polynomial.constant(1, ("x", "y", "z"))), "g",
                      nvars=3, max_basis=64)
