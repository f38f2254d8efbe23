from fractions import Fraction as F

import pytest

from fixedpass.errors import PreconditionFailed
from fixedpass.passivation import (Mode, PassivationProblem, SynthesisOptions, feasibility,
                                   maximize_ifp, maximize_ofp, synthesize)
from fixedpass.system import ControllerBasis, ParamBox, compose_closed_loop
from fixedpass.verify import IndexKind, freq_index, stable_at

from conftest import tf
from helpers import random_problem

ZERO_BOX = ParamBox((F(0),), (F(0),))


def fixed(num, den, domain="ct", mode=Mode.IFP, **kw):
    """Closed loop equal to the plant itself (single parameter pinned at 0)."""
    g0 = tf(num, den, domain)
    basis = ControllerBasis((tf([1], [1], domain),))
    return PassivationProblem(compose_closed_loop(g0, basis), ZERO_BOX, mode, SynthesisOptions(**kw))


def test_first_order_lead():
    # (s+2)/(s+1): Re-numerator 2 + w^2, min Re G = 1, min Re 1/G = 1/2
    prob = fixed([2, 1], [1, 1])
    assert feasibility(prob).epsilon_star == pytest.approx(2.0, abs=1e-5)
    res = maximize_ifp(prob)
    assert res.index_value == pytest.approx(1.0, abs=1e-3)
    assert res.rho_star == [pytest.approx(0.0, abs=1e-9)]
    ofp = maximize_ofp(fixed([2, 1], [1, 1], mode=Mode.OFP))
    assert ofp.index_value == pytest.approx(0.5, abs=1e-5)


def test_dt_first_order():
    # G(z) = (z + 1/2)/z; Re G(e^{jt}) = 1 + cos(t)/2, min 1/2
    prob = fixed([F(1, 2), 1], [0, 1], "dt")
    res = maximize_ifp(prob)
    assert res.index_value == pytest.approx(0.5, abs=1e-3)
    g = prob.cl.at([0])
    assert res.index_value <= freq_index(g) + 1e-6


@pytest.mark.parametrize("c", [F(1, 2), F(3)])
def test_scaling_of_indices(c):
    base = maximize_ifp(fixed([2, 1], [1, 1])).index_value
    scaled = maximize_ifp(fixed([2 * c, c], [1, 1])).index_value
    assert scaled == pytest.approx(float(c) * base, rel=2e-3)
    ofp = maximize_ofp(fixed([2 * c, c], [1, 1], mode=Mode.OFP)).index_value
    assert ofp == pytest.approx(0.5 / float(c), rel=1e-4)


def test_projective_scaling_invariance(example2):
    cl, box = example2
    a = maximize_ofp(PassivationProblem(cl, box, Mode.OFP))
    b = maximize_ofp(PassivationProblem(cl.scaled(3), box, Mode.OFP))
    assert a.index_value == pytest.approx(b.index_value, abs=1e-5)


def test_bisection_trace_is_consistent():
    res = maximize_ifp(fixed([2, 1], [1, 1], bisect_tol=1e-3))
    lo, hi = res.bracket
    assert hi - lo <= 1e-3
    assert res.gamma_star == lo
    for step in res.bisection_trace:
        if step.feasible:
            assert step.gamma <= lo
        else:
            assert step.gamma >= hi
    assert res.solves == len(res.bisection_trace)


def test_certificate_and_soundness():
    """The certified index never exceeds the true index at rho*."""
    g0, basis, box = random_problem(3, "ct")
    cl = compose_closed_loop(g0, basis)
    prob = PassivationProblem(cl, box)
    res = synthesize(prob)
    assert res.certificate.valid()
    assert res.certificate_residual <= 1e-6 and res.certificate.min_eig >= -1e-7
    assert box.contains(res.rho_star, tol=1e-7)
    assert stable_at(cl, res.rho_star)
    assert res.index_value <= freq_index(cl.at(res.rho_star)) + 1e-5


def test_ofp_rejects_nonminimum_phase():
    with pytest.raises(PreconditionFailed) as info:
        maximize_ofp(fixed([-1, 1], [1, 1], mode=Mode.OFP))
    assert info.value.clause == "assumption-2:zeros"


def test_ifp_requires_feasibility():
    # (s-1)/(s+1): Re-numerator w^2 - 1 is negative near w = 0
    prob = fixed([-1, 1], [1, 1])
    feas = feasibility(prob)
    assert not feas.passivatable
    assert feas.epsilon_star == pytest.approx(-1.0, abs=1e-5)
    with pytest.raises(PreconditionFailed):
        maximize_ifp(prob, feas)


def test_dump_dir(tmp_path):
    prob = fixed([2, 1], [1, 1], mode=Mode.OFP, dump_dir=str(tmp_path))
    maximize_ofp(prob)
    assert (tmp_path / "ofp.sdpa.txt").exists()


def test_box_dimension_checked(example1):
    cl, _ = example1
    with pytest.raises(ValueError):
        PassivationProblem(cl, ZERO_BOX)
