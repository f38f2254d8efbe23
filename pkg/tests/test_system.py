from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixedpass.errors import DomainMismatch, UnstableCancellation, ValidationFailed
from fixedpass.poly import Polynomial
from fixedpass.system import (ControllerBasis, Domain, ParamBox, compose_closed_loop,
                              param_freq_decompose, validate_plant)

from conftest import tf


def Y(cs):
    return Polynomial.from_coeffs(cs, "y")


def W(cs):
    return Polynomial.from_coeffs(cs, "w")


def test_example1_closed_loop(example1):
    cl, _ = example1
    cl2 = cl.scaled(2)
    z = Polynomial.variable("z")
    assert cl2.pN == 2 * z * z - z
    # (2 rho1 + 2) z^2 + (2 rho2 - rho1 - 5) z + 2
    for rho in ([0, 0], [1, 0], [0, 1], [F(1, 10), F(3, 2)]):
        r1, r2 = rho
        want = Polynomial.from_coeffs([2, 2 * r2 - r1 - 5, 2 * r1 + 2], "z")
        assert cl2.pD.at(rho) == want
    assert (cl.dN, cl.dD) == (2, 2)


def test_example1_lift_fixtures(example1):
    cl, _ = example1
    dec = param_freq_decompose(cl.scaled(2))
    assert dec.num.even == Y([1, 0, -12, 0, 3])
    assert dec.num.odd == Y([0, 6, 0, -10])
    for rho in ([0, 0], [1, 0], [0, 1], [F(1, 10), F(3, 2)]):
        r1, r2 = rho
        assert dec.den_re.at(rho) == Y([r1 + 2 * r2 - 1, 0, -(12 * r1 + 8), 0, 3 * r1 - 2 * r2 + 9])
        assert dec.den_im.at(rho) == Y([0, 6 * r1 + 4 * r2 - 2, 0, -10 * r1 + 4 * r2 - 18])


def test_example2_decomposition(example2):
    cl, _ = example2
    dec = param_freq_decompose(cl)
    assert dec.num.even == W([6, 0, -6])
    assert dec.num.odd == W([0, 11, 0, -1])
    for r1, r2 in ([0, 0], [1, 0], [0, 1], [F(516, 1000), F(669, 1000)]):
        assert dec.den_re.at([r1, r2]) == W([2 + 6 * r1 + 6 * r2, 0, 2 - 6 * r1 - r2])
        assert dec.den_im.at([r1, r2]) == W([0, -1 + 11 * r1 + 5 * r2, 0, -1 - r1])


@given(st.floats(0, 1), st.floats(0, 1), st.floats(-20, 20))
def test_decomposition_rebuilds_ct_response(r1, r2, w):
    from conftest import example2_parts
    g0, basis, _ = example2_parts()
    cl = compose_closed_loop(g0, basis)
    dec = param_freq_decompose(cl)
    rho = [F(r1), F(r2)]
    g = cl.at(rho)
    want = complex(g(1j * w))
    got = dec.response(w, [float(r1), float(r2)])
    assert abs(want - got) <= 1e-8 * max(1.0, abs(want))


@given(st.floats(0.1, 1), st.floats(1, 2), st.floats(-10, 10))
def test_decomposition_rebuilds_dt_response(r1, r2, y):
    from conftest import example1_parts
    from fixedpass.poly import phi
    g0, basis, _ = example1_parts()
    cl = compose_closed_loop(g0, basis)
    dec = param_freq_decompose(cl)
    g = cl.at([F(r1), F(r2)])
    want = complex(g(phi(y)))
    got = dec.response(y, [float(r1), float(r2)])
    assert abs(want - got) <= 1e-8 * max(1.0, abs(want))


def test_closed_loop_matches_feedback_formula(example2):
    cl, _ = example2
    g0 = tf([6, 5, 1], [2, -3, 1], "ct")
    c = lambda s, r: r[0] + r[1] / (s + 1)
    for s in (0.3 + 1j, 2j, -0.5 + 0.2j):
        rho = [0.3, 0.7]
        want = g0(s) / (1 + g0(s) * c(s, rho))
        assert abs(cl.at(rho)(s) - want) < 1e-10


def test_validate_plant_clauses():
    assert validate_plant(tf([6, 5, 1], [2, -3, 1], "ct"), strict=True).passed
    with pytest.raises(ValidationFailed) as e:
        validate_plant(tf([1], [1, 2, 1], "ct"))
    assert e.value.clause == "assumption-1:relative-degree"
    with pytest.raises(ValidationFailed) as e:
        validate_plant(tf([-1, 1], [1, 1], "ct"), strict=True)
    assert e.value.clause == "assumption-2:zeros"
    # a zero on the axis is fine for the weak assumption but not the strict one
    assert validate_plant(tf([0, 1], [1, 1], "ct")).passed
    with pytest.raises(ValidationFailed):
        validate_plant(tf([0, 1], [1, 1], "ct"), strict=True)
    with pytest.raises(ValidationFailed) as e:
        validate_plant(tf([0, 0, 1], [1, 1], "ct"))
    assert e.value.clause == "improper"
    report = validate_plant(tf([-2, 1], [1, 1], "dt"), strict=True, raise_on_fail=False)
    assert not report.passed and report.clause == "assumption-2:zeros"


def test_basis_checks():
    with pytest.raises(DomainMismatch):
        ControllerBasis((tf([1], [1], "ct"), tf([1], [1], "dt")))
    with pytest.raises(ValidationFailed):
        ControllerBasis((tf([1], [-1, 1], "ct"),))
    with pytest.raises(ValidationFailed):
        ControllerBasis((tf([0, 0, 1], [1, 1], "ct"),))
    with pytest.raises(DomainMismatch):
        compose_closed_loop(tf([1], [1, 1], "dt"), ControllerBasis((tf([1], [1], "ct"),)))


def test_unstable_cancellation_rejected():
    g0 = tf([-1, 1], [-2, 1, 1], "ct")  # (s-1)/((s-1)(s+2))
    with pytest.raises(UnstableCancellation):
        compose_closed_loop(g0, ControllerBasis((tf([1], [1], "ct"),)))


def test_param_box():
    box = ParamBox(("0.1", 1), (1, 2))
    assert box.lower[0] == F(1, 10)
    assert box.contains([0.5, 1.5]) and not box.contains([0.05, 1.5])
    np.testing.assert_allclose(box.center(), [0.55, 1.5])
    pts = box.sample(100, seed=3)
    assert pts.shape == (100, 2) and all(box.contains(p) for p in pts)
    assert ParamBox((0, 1), (0, 2)).grid(5).shape == (5, 2)
    with pytest.raises(ValueError):
        ParamBox((1,), (0,))


def test_domain_helpers():
    assert Domain.CT.var == "s" and Domain.DT.boundary_var == "y"
