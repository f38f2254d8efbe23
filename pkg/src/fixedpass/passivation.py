"""Feedback passivation by SOS programming.

Three programs act on the boundary decomposition of the closed loop, with the
controller parameters rho as bounded decision variables:

* feasibility: max eps with Re-numerator(y, rho) - eps SOS in y;
* IFP: bisection on gamma, testing a 3x3 matrix SOS condition equivalent to
  Re G >= gamma^2 on the whole boundary;
* OFP: max xi with Re-numerator - xi |num|^2 SOS (xi enters linearly).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import PreconditionFailed, SolverFailure
from .poly import ParamPolynomial, Polynomial
from .sdp import Affine, ConicProgram, Solution, SolverOptions, Status, solve
from .sos import (DEFAULT_MAX_BASIS, Certificate, map_add, map_scale, param_poly_map, poly_map,
                  recover_certificate, sos_constrain)
from .system import ClosedLoop, Domain, FreqDecomposition, ParamBox, in_stable_region, param_freq_decompose, roots_of

THETA_MIN = 1e-6


class Mode(str, enum.Enum):
    IFP = "ifp"
    OFP = "ofp"


@dataclass
class SynthesisOptions:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 200
    bisect_tol: float = 1e-4
    gamma_cap: float = 2.0 ** 20
    theta_min: float = THETA_MIN
    max_basis: int = DEFAULT_MAX_BASIS
    dump_dir: str | None = None

    def solver(self) -> SolverOptions:
        return SolverOptions(gap_tol=self.gap_tol, feas_tol=self.feas_tol, max_iter=self.max_iter)


@dataclass
class PassivationProblem:
    cl: ClosedLoop
    box: ParamBox
    mode: Mode = Mode.IFP
    opts: SynthesisOptions = field(default_factory=SynthesisOptions)
    decomposition: FreqDecomposition = field(init=False)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.box.dim != self.cl.nparams:
            raise ValueError(f"box has {self.box.dim} axes but the controller has {self.cl.nparams} parameters")
        self.decomposition = param_freq_decompose(self.cl)

    @property
    def domain(self) -> Domain:
        return self.cl.domain

    @property
    def var(self) -> str:
        return self.decomposition.var


@dataclass
class FeasibilityResult:
    epsilon_star: float
    rho_witness: list[float] | None
    status: str
    certificate: Certificate | None = None
    theta_min: float = THETA_MIN

    @property
    def passivatable(self) -> bool:
        return self.epsilon_star > self.theta_min


@dataclass
class BisectionStep:
    gamma: float
    feasible: bool
    status: str
    iterations: int


@dataclass
class SynthesisResult:
    mode: Mode
    status: str  # "optimal" or "not_passivatable"
    index_value: float
    rho_star: list[float] | None
    epsilon_star: float | None = None
    gamma_star: float | None = None
    certificate: Certificate | None = None
    bisection_trace: list[BisectionStep] = field(default_factory=list)
    bracket: tuple[float, float] | None = None
    solves: int = 0

    @property
    def certificate_residual(self) -> float | None:
        return None if self.certificate is None else self.certificate.residual


# -- program assembly -------------------------------------------------------

def _new_program(prob: PassivationProblem) -> tuple[ConicProgram, list[Affine]]:
    prog = ConicProgram()
    rho = [prog.add_scalar(f"rho{i + 1}", float(lo), float(hi))
           for i, (lo, hi) in enumerate(zip(prob.box.lower, prob.box.upper))]
    return prog, rho


def _rho_values(sol: Solution, n: int) -> list[float]:
    return [sol.values[f"rho{i + 1}"] for i in range(n)]


def _dump(prob: PassivationProblem, prog: ConicProgram, tag: str) -> None:
    if prob.opts.dump_dir:
        out = Path(prob.opts.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        prog.dump(out / f"{tag}.sdpa.txt")


def _solve(prob: PassivationProblem, prog: ConicProgram, tag: str) -> Solution:
    _dump(prob, prog, tag)
    return solve(prog, prob.opts.solver())


def real_part_numerator(prob: PassivationProblem) -> ParamPolynomial:
    return prob.decomposition.real_part_numerator()


def feasibility(prob: PassivationProblem) -> FeasibilityResult:
    """max eps s.t. Re-numerator - eps is SOS with rho in the box."""
    v = prob.var
    prog, rho = _new_program(prob)
    eps = prog.add_scalar("eps")
    target = param_poly_map(real_part_numerator(prob), rho, (v,))
    target = map_add(target, {(0,): eps}, -1.0)
    handle = sos_constrain(prog, target, "gram", nvars=1, max_basis=prob.opts.max_basis)
    prog.maximize(eps)
    sol = _solve(prob, prog, "feasibility")
    if sol.status is Status.INFEASIBLE:
        return FeasibilityResult(-math.inf, None, sol.status.value, None, prob.opts.theta_min)
    if sol.status is Status.UNBOUNDED:
        return FeasibilityResult(math.inf, _rho_values(sol, prob.box.dim), sol.status.value,
                                 None, prob.opts.theta_min)
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(f"feasibility program ended with {sol.status.value}", sol)
    return FeasibilityResult(sol.values["eps"], _rho_values(sol, prob.box.dim), sol.status.value,
                             recover_certificate(sol, handle), prob.opts.theta_min)


def ifp_matrix(prob: PassivationProblem, rho: Sequence[Affine], gamma: float):
    """Entries of [[Pi, g*Re, g*Im], [., 1, 0], [., 0, 1]] as PolyMaps in y."""
    dec = prob.decomposition
    v = (prob.var,)
    pi = real_part_numerator(prob)
    if prob.domain is Domain.DT:
        pi = pi * dec.circle_factor(dec.dD - dec.dN)
    one, zero = {(0,): Affine({}, 1.0)}, {}
    re = map_scale(param_poly_map(dec.den_re, rho, v), gamma)
    im = map_scale(param_poly_map(dec.den_im, rho, v), gamma)
    return [[param_poly_map(pi, rho, v), re, im],
            [re, one, zero],
            [im, zero, one]]


def ifp_feasible(prob: PassivationProblem, gamma: float, tag: str = "ifp"):
    prog, rho = _new_program(prob)
    handle = sos_constrain(prog, ifp_matrix(prob, rho, gamma), "gram", nvars=1,
                           max_basis=prob.opts.max_basis)
    sol = _solve(prob, prog, tag)
    return sol, handle


def maximize_ifp(prob: PassivationProblem, feas: FeasibilityResult | None = None) -> SynthesisResult:
    """Largest nu = gamma^2 with Re G >= nu on the boundary for some rho in the box."""
    opts = prob.opts
    if feas is None:
        feas = feasibility(prob)
    if not feas.passivatable:
        raise PreconditionFailed(f"feasibility stage not passed (eps*={feas.epsilon_star:.6g})")
    trace: list[BisectionStep] = []
    best: tuple[Solution, object] | None = None
    solves = 0

    def test(gamma: float) -> bool:
        nonlocal best, solves
        sol, handle = ifp_feasible(prob, gamma, f"ifp_{solves:03d}")
        solves += 1
        ok = sol.status is Status.OPTIMAL
        trace.append(BisectionStep(gamma, ok, sol.status.value, sol.iterations))
        if ok:
            best = (sol, handle)
        return ok

    lo, hi = 0.0, 1.0
    while test(hi):
        lo = hi
        if hi >= opts.gamma_cap:
            break
        hi = min(2.0 * hi, opts.gamma_cap)
    if lo < hi:
        while hi - lo > opts.bisect_tol:
            mid = 0.5 * (lo + hi)
            if test(mid):
                lo = mid
            else:
                hi = mid
    if best is None:
        # gamma = 0 is the feasibility stage itself
        sol, handle = ifp_feasible(prob, 0.0, "ifp_zero")
        solves += 1
        if sol.status is not Status.OPTIMAL:
            raise SolverFailure(f"IFP program at gamma=0 ended with {sol.status.value}", sol)
        best = (sol, handle)
    sol, handle = best
    return SynthesisResult(Mode.IFP, "optimal", lo * lo, _rho_values(sol, prob.box.dim),
                           epsilon_star=feas.epsilon_star, gamma_star=lo,
                           certificate=recover_certificate(sol, handle), bisection_trace=trace,
                           bracket=(lo, hi), solves=solves)


def check_minimum_phase(prob: PassivationProblem) -> None:
    """Closed-loop numerator zeros must lie strictly inside the stability region."""
    zs = roots_of(prob.cl.pN)
    bad = zs[~in_stable_region(zs, prob.domain)]
    if bad.size:
        raise PreconditionFailed(f"closed-loop numerator has zeros outside the stable region: "
                                 f"{np.round(bad, 6).tolist()}", clause="assumption-2:zeros")


def ofp_target(prob: PassivationProblem, rho: Sequence[Affine], xi: Affine):
    dec = prob.decomposition
    v = (prob.var,)
    pi = real_part_numerator(prob)
    mod = dec.num_modulus()
    if prob.domain is Domain.DT:
        k = dec.dN - dec.dD
        if k >= 0:
            pi = pi * dec.circle_factor(k)
        else:
            mod = mod * dec.circle_factor(-k)
    return map_add(param_poly_map(pi, rho, v), map_scale(poly_map(mod, v), xi), -1.0)


def maximize_ofp(prob: PassivationProblem) -> SynthesisResult:
    """max xi s.t. Re-numerator - xi |num|^2 is SOS; one SDP."""
    check_minimum_phase(prob)
    prog, rho = _new_program(prob)
    xi = prog.add_scalar("xi")
    handle = sos_constrain(prog, ofp_target(prob, rho, xi), "gram", nvars=1,
                           max_basis=prob.opts.max_basis)
    prog.maximize(xi)
    sol = _solve(prob, prog, "ofp")
    if sol.status is Status.INFEASIBLE:
        return SynthesisResult(Mode.OFP, "not_passivatable", -math.inf, None, solves=1)
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(f"OFP program ended with {sol.status.value}", sol)
    value = sol.values["xi"]
    status = "optimal" if value >= -prob.opts.theta_min else "not_passivatable"
    return SynthesisResult(Mode.OFP, status, value, _rho_values(sol, prob.box.dim),
                           certificate=recover_certificate(sol, handle), solves=1)


def synthesize(prob: PassivationProblem) -> SynthesisResult:
    if prob.mode is Mode.IFP:
        return maximize_ifp(prob)
    return maximize_ofp(prob)
