"""Command-line front end: problem files in, JSON reports out.

Problem files are JSON with ascending coefficient arrays (index = power)::

    {"domain": "dt",
     "plant": {"num": [0, 1], "den": [-2, 1]},
     "basis": [{"num": [1], "den": [1]}, {"num": [1], "den": ["-0.5", 1]}],
     "box": {"lower": ["0.1", 1], "upper": [1, 2]},
     "options": {"mult_degree": 2}}

Numbers may be JSON numbers or decimal/fraction strings; both become exact
rationals.  Exit codes: 0 success, 2 certified negative, 1 failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FixedPassError, Inconclusive, ParseError, SchemaError
from .passivation import (Mode, PassivationProblem, SynthesisOptions, feasibility, maximize_ifp,
                          maximize_ofp)
from .sdp import SolverOptions
from .stability import THETA_MIN, certify_box_stability, stability_table
from .system import (ClosedLoop, ControllerBasis, Domain, ParamBox, RationalTransfer,
                     compose_closed_loop, validate_plant)
from .verify import (IndexKind, closed_loop_roots, find_destabilizing, freq_index, grid_oracle, kyp_index,
                     positive_real_check, stable_at, tf_to_ss)

REPORT_VERSION = 1
COMMANDS = ("stability", "feasibility", "max-ifp", "max-ofp", "verify")
EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

# cross-check tolerances an optimum must meet before it is reported
SWEEP_TOL = 5e-3
KYP_TOL = 1e-3

_TOP_KEYS = {"domain", "plant", "basis", "box", "options", "constraints", "name", "description"}
_TF_KEYS = {"num", "den"}
_BOX_KEYS = {"lower", "upper"}
_OPTION_KEYS = {"mult_degree", "bisect_tol", "grid_resolution", "direct_mode", "gap_tol",
                "feas_tol", "max_iter", "rho"}


@dataclass
class ProblemOptions:
    mult_degree: int = 2
    bisect_tol: float = 1e-4
    grid_resolution: int | None = None
    direct_mode: bool = False
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 200
    rho: list[Fraction] | None = None


@dataclass
class ProblemSpec:
    domain: Domain
    plant: RationalTransfer
    basis: ControllerBasis
    box: ParamBox
    options: ProblemOptions = field(default_factory=ProblemOptions)
    name: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemSpec":
        return _build_spec(data)


# -- parsing -------------------------------------------------------------------

def _exact(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise SchemaError(f"{where}: expected a number, got a boolean")
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, float)):
        return Fraction(str(v)) if isinstance(v, float) else Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"{where}: {v!r} is not a decimal or fraction") from None
    raise SchemaError(f"{where}: expected a number, got {type(v).__name__}")


def _check_keys(obj, allowed: set[str], where: str, required: set[str] = frozenset()) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SchemaError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")
    missing = sorted(required - set(obj))
    if missing:
        raise SchemaError(f"{where}: missing key(s) {', '.join(map(repr, missing))}")


def _coeff_list(v, where: str) -> list[Fraction]:
    if not isinstance(v, list) or not v:
        raise SchemaError(f"{where}: expected a non-empty coefficient array")
    return [_exact(c, f"{where}[{i}]") for i, c in enumerate(v)]


def _transfer(obj, domain: Domain, where: str) -> RationalTransfer:
    _check_keys(obj, _TF_KEYS, where, _TF_KEYS)
    num = _coeff_list(obj["num"], f"{where}.num")
    den = _coeff_list(obj["den"], f"{where}.den")
    if all(c == 0 for c in den):
        raise SchemaError(f"{where}.den: denominator is identically zero")
    return RationalTransfer.from_coeffs(num, den, domain)


def _options(obj) -> ProblemOptions:
    if obj is None:
        return ProblemOptions()
    _check_keys(obj, _OPTION_KEYS, "options")
    opts = ProblemOptions()
    for key, v in obj.items():
        if key in ("mult_degree", "grid_resolution", "max_iter"):
            if not isinstance(v, int) or isinstance(v, bool):
                raise SchemaError(f"options.{key}: expected an integer")
            setattr(opts, key, v)
        elif key == "direct_mode":
            if not isinstance(v, bool):
                raise SchemaError("options.direct_mode: expected a boolean")
            opts.direct_mode = v
        elif key == "rho":
            opts.rho = _coeff_list(v, "options.rho")
        else:
            setattr(opts, key, float(_exact(v, f"options.{key}")))
    if opts.mult_degree < 0 or opts.mult_degree % 2:
        raise SchemaError("options.mult_degree: must be even and nonnegative")
    return opts


def _build_spec(data) -> ProblemSpec:
    _check_keys(data, _TOP_KEYS, "problem", {"domain", "plant", "basis", "box"})
    if data.get("constraints") not in (None, [], {}):
        raise SchemaError("constraints: general parameter sets are reserved but not supported; use 'box'")
    if data["domain"] not in ("ct", "dt"):
        raise SchemaError(f"domain: expected 'ct' or 'dt', got {data['domain']!r}")
    domain = Domain(data["domain"])
    plant = _transfer(data["plant"], domain, "plant")
    if not isinstance(data["basis"], list) or not data["basis"]:
        raise SchemaError("basis: expected a non-empty array")
    basis = ControllerBasis(tuple(_transfer(e, domain, f"basis[{i}]") for i, e in enumerate(data["basis"])))
    _check_keys(data["box"], _BOX_KEYS, "box", _BOX_KEYS)
    lo = _coeff_list(data["box"]["lower"], "box.lower")
    hi = _coeff_list(data["box"]["upper"], "box.upper")
    if len(lo) != len(basis) or len(hi) != len(basis):
        raise SchemaError(f"box: bounds must have {len(basis)} entries (one per basis element)")
    if any(a > b for a, b in zip(lo, hi)):
        raise SchemaError("box: lower exceeds upper")
    opts = _options(data.get("options"))
    if opts.rho is not None and len(opts.rho) != len(basis):
        raise SchemaError(f"options.rho: expected {len(basis)} entries")
    name = data.get("name")
    if name is not None and not isinstance(name, str):
        raise SchemaError("name: expected a string")
    return ProblemSpec(domain, plant, basis, ParamBox(tuple(lo), tuple(hi)), opts, name)


def parse_text(text: str) -> ProblemSpec:
    try:
        data = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return _build_spec(data)


def parse_problem(path: str | Path) -> ProblemSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_text(text)


# -- report helpers ------------------------------------------------------------

def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else "-inf" if v < 0 else "nan"


def _vec(v):
    return None if v is None else [_num(x) for x in v]


def _error(exc: Exception) -> dict:
    out = {"code": getattr(exc, "code", "internal"), "type": type(exc).__name__, "message": str(exc)}
    clause = getattr(exc, "clause", None)
    if clause:
        out["clause"] = clause
    return out


@dataclass
class Flags:
    tol_gap: float | None = None
    tol_feas: float | None = None
    bisect_tol: float | None = None
    mult_degree: int | None = None
    grid: int | None = None
    direct: bool = False
    dump_sdp: str | None = None
    rho: list[float] | None = None


def effective_options(spec: ProblemSpec, flags: Flags) -> ProblemOptions:
    """File options, with explicitly given command-line flags taking precedence."""
    o = ProblemOptions(**asdict(spec.options))
    if flags.tol_gap is not None:
        o.gap_tol = flags.tol_gap
    if flags.tol_feas is not None:
        o.feas_tol = flags.tol_feas
    if flags.bisect_tol is not None:
        o.bisect_tol = flags.bisect_tol
    if flags.mult_degree is not None:
        o.mult_degree = flags.mult_degree
    if flags.grid is not None:
        o.grid_resolution = flags.grid
    if flags.direct:
        o.direct_mode = True
    if flags.rho is not None:
        o.rho = [Fraction(str(r)) for r in flags.rho]
    return o


def _synthesis_options(o: ProblemOptions, dump: str | None) -> SynthesisOptions:
    return SynthesisOptions(gap_tol=o.gap_tol, feas_tol=o.feas_tol, max_iter=o.max_iter,
                            bisect_tol=o.bisect_tol, dump_dir=dump)


def _stability_section(cl: ClosedLoop, box: ParamBox, o: ProblemOptions) -> tuple[dict, bool, list | None]:
    """Box certificate plus a sampled counterexample when it fails."""
    table = stability_table(cl.pD, cl.domain)
    cert = certify_box_stability(table, box, o.mult_degree,
                                 SolverOptions(gap_tol=o.gap_tol, feas_tol=o.feas_tol, max_iter=o.max_iter),
                                 raise_on_fail=False)
    section = {
        "table": table.kind.value,
        "theta_star": _num(cert.theta_star),
        "theta_min": THETA_MIN,
        "certified": cert.certified,
        "entries": [{"index": e.index, "theta": _num(e.theta), "method": e.method, "status": e.status,
                     "residual": _num(e.certificate.residual) if e.certificate else None}
                    for e in cert.entries],
        "first_column": [str(f) for f in table.first_column],
    }
    counter = None if cert.certified else find_destabilizing(cl, box)
    return section, cert.certified, counter


def _point_check(cl: ClosedLoop, rho) -> dict:
    table = stability_table(cl.pD, cl.domain)
    roots = closed_loop_roots(cl, rho)
    measure = float(np.max(roots.real)) if cl.domain is Domain.CT else float(np.max(np.abs(roots)))
    fc = table.first_column_at(rho)
    return {"stable_by_table": bool(np.all(fc > 0)), "stable_by_roots": stable_at(cl, rho),
            "first_column": [_num(v) for v in fc],
            ("max_root_real" if cl.domain is Domain.CT else "max_root_modulus"): measure}


def _verification(cl: ClosedLoop, rho, kind: IndexKind, claimed: float | None) -> tuple[dict, bool]:
    point = _point_check(cl, rho)
    stable = point["stable_by_table"] and point["stable_by_roots"]
    out = {"stable_at_rho_star": stable, "point": point}
    if not stable:
        return out, False
    g = cl.at(rho)
    sw = freq_index(g, kind)
    kyp = kyp_index(tf_to_ss(g), kind)
    out.update(sweep_index=_num(sw), kyp_index=_num(kyp),
               sweep_vs_kyp=_num(abs(sw - kyp)))
    ok = abs(sw - kyp) <= KYP_TOL
    if claimed is not None:
        out["sweep_vs_claimed"] = _num(abs(sw - claimed))
        ok = ok and abs(sw - claimed) <= SWEEP_TOL
    out["passed"] = ok
    return out, ok


def run(command: str, spec: ProblemSpec, flags: Flags | None = None) -> tuple[dict, int]:
    """Execute one command; returns (report, exit code).  Never raises for module errors."""
    flags = flags or Flags()
    o = effective_options(spec, flags)
    report: dict[str, Any] = {
        "report_version": REPORT_VERSION,
        "command": command,
        "problem": {"name": spec.name, "domain": spec.domain.value, "parameters": spec.box.dim,
                    "box": {"lower": [str(v) for v in spec.box.lower],
                            "upper": [str(v) for v in spec.box.upper]}},
        "options": {k: (_vec(v) if k == "rho" else v) for k, v in asdict(o).items()},
    }
    try:
        code = _dispatch(command, spec, o, flags, report)
    except FixedPassError as exc:
        report["status"] = "error"
        report["error"] = _error(exc)
        code = EXIT_ERROR
    report["exit_code"] = code
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return report, code


def _dispatch(command: str, spec: ProblemSpec, o: ProblemOptions, flags: Flags, report: dict) -> int:
    if command not in COMMANDS:
        raise SchemaError(f"unknown command {command!r}")
    strict = command == "max-ofp"
    if command in ("feasibility", "max-ifp", "max-ofp"):
        v = validate_plant(spec.plant, strict=strict)
        report["plant_validation"] = {"passed": v.passed, "relative_degree": v.relative_degree}
    cl = compose_closed_loop(spec.plant, spec.basis)
    report["closed_loop"] = {"pN": str(cl.pN), "pD": [str(p) for p in cl.pD.parts()],
                             "dN": cl.dN, "dD": cl.dD}

    if command == "verify":
        return _run_verify(cl, spec, o, report)

    if command == "stability" or not o.direct_mode:
        section, certified, counter = _stability_section(cl, spec.box, o)
        report["stability"] = section
        report["theta_star"] = section["theta_star"]
        if not certified:
            report["counterexample_rho"] = counter
            if counter is not None:
                report["status"] = "not_stabilizing"
                return EXIT_NEGATIVE
            raise Inconclusive(f"box stability not certified at multiplier degree {o.mult_degree} "
                               f"(theta*={section['theta_star']}) and no destabilizing sample found")
        if command == "stability":
            report["status"] = "stable"
            return EXIT_OK

    mode = Mode.OFP if command == "max-ofp" else Mode.IFP
    prob = PassivationProblem(cl, spec.box, mode, _synthesis_options(o, flags.dump_sdp))
    if mode is Mode.IFP:
        feas = feasibility(prob)
        report["epsilon_star"] = _num(feas.epsilon_star)
        report["rho_witness"] = _vec(feas.rho_witness)
        if not feas.passivatable:
            report["status"] = "not_passivatable"
            return EXIT_NEGATIVE
        if command == "feasibility":
            report["status"] = "passivatable"
            report["certificate_residual"] = _num(feas.certificate.residual) if feas.certificate else None
            return EXIT_OK
        res = maximize_ifp(prob, feas)
        report["gamma_star"] = _num(res.gamma_star)
        report["bisection"] = {"bracket": _vec(res.bracket), "tol": o.bisect_tol, "lower_start": 0.0,
                               "upper_start": 1.0, "upper_cap": prob.opts.gamma_cap}
        report["bisection_trace"] = [{"gamma": _num(s.gamma), "feasible": s.feasible,
                                      "status": s.status, "iterations": s.iterations}
                                     for s in res.bisection_trace]
    else:
        res = maximize_ofp(prob)
        if res.status != "optimal":
            report["status"] = "not_passivatable"
            report["index"] = _num(res.index_value)
            return EXIT_NEGATIVE
    report["index"] = _num(res.index_value)
    report["rho_star"] = _vec(res.rho_star)
    if res.certificate is not None:
        report["certificate_residual"] = _num(res.certificate.residual)
        report["certificate_min_eig"] = _num(res.certificate.min_eig)
    kind = IndexKind(mode.value)
    verification, ok = _verification(cl, res.rho_star, kind, res.index_value)
    if o.grid_resolution:
        orc = grid_oracle(spec.plant, spec.basis, spec.box, kind, o.grid_resolution)
        verification["grid_oracle"] = {"resolution": o.grid_resolution, "rho_hat": _vec(orc.rho_hat),
                                       "index_hat": _num(orc.index_hat)}
    report["verification"] = verification
    if not verification["stable_at_rho_star"]:
        report["status"] = "unstable_at_rho_star"
        return EXIT_NEGATIVE
    if not ok:
        report["status"] = "verification_failed"
        return EXIT_ERROR
    report["status"] = "optimal"
    return EXIT_OK


def _run_verify(cl: ClosedLoop, spec: ProblemSpec, o: ProblemOptions, report: dict) -> int:
    if o.rho is None:
        orc = grid_oracle(spec.plant, spec.basis, spec.box, IndexKind.IFP, o.grid_resolution or 50)
        rho = orc.rho_hat
        report["grid_oracle"] = {"resolution": o.grid_resolution or 50, "rho_hat": _vec(orc.rho_hat),
                                 "index_hat": _num(orc.index_hat)}
    else:
        rho = [float(r) for r in o.rho]
    report["rho"] = _vec(rho)
    point = _point_check(cl, rho)
    out: dict[str, Any] = {"point": point}
    stable = point["stable_by_roots"]
    out["stable_at_rho"] = stable
    if stable:
        g = cl.at(rho)
        ss = tf_to_ss(g)
        out["ifp"] = {"sweep_index": _num(freq_index(g, IndexKind.IFP)),
                      "kyp_index": _num(kyp_index(ss, IndexKind.IFP))}
        try:
            out["ofp"] = {"sweep_index": _num(freq_index(g, IndexKind.OFP)),
                          "kyp_index": _num(kyp_index(ss, IndexKind.OFP))}
        except FixedPassError as exc:
            out["ofp"] = {"error": _error(exc)}
        pr = positive_real_check(g)
        out["positive_real"] = {"passed": pr.positive_real, "min_real_part": _num(pr.min_real_part),
                                "reasons": pr.reasons}
    report["verification"] = out
    report["status"] = "verified" if stable else "unstable"
    return EXIT_OK if stable else EXIT_NEGATIVE


# -- entry point ---------------------------------------------------------------

def summary(report: dict) -> str:
    lines = [f"{report['command']}: {report.get('status')} (exit {report.get('exit_code')})"]
    for key in ("theta_star", "epsilon_star", "index", "rho_star", "counterexample_rho", "certificate_residual"):
        if report.get(key) is not None:
            lines.append(f"  {key} = {report[key]}")
    ver = report.get("verification") or {}
    for key in ("sweep_index", "kyp_index", "stable_at_rho_star"):
        if key in ver:
            lines.append(f"  verification.{key} = {ver[key]}")
    if "error" in report:
        err = report["error"]
        lines.append(f"  error [{err['code']}{'/' + err['clause'] if 'clause' in err else ''}]: {err['message']}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fixedpass", description="Robust stability and passivity-index "
                                 "synthesis for linearly parameterized controllers.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", "-i", required=True, help="problem file (JSON)")
    ap.add_argument("--output", "-o", help="write the JSON report here")
    ap.add_argument("--tol-gap", type=float, help="relative duality-gap tolerance")
    ap.add_argument("--tol-feas", type=float, help="primal/dual feasibility tolerance")
    ap.add_argument("--bisect-tol", type=float, help="bracket width at which gamma bisection stops")
    ap.add_argument("--mult-degree", type=int, help="degree of the box-multiplier SOS polynomials")
    ap.add_argument("--grid", type=int, help="grid-oracle resolution per axis (cross-check)")
    ap.add_argument("--direct", action="store_true",
                    help="skip the box-wide stability certificate; check stability at rho* only")
    ap.add_argument("--dump-sdp", metavar="DIR", help="write every assembled SDP to DIR")
    ap.add_argument("--rho", type=float, nargs="+", help="parameter point for the verify command")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = parse_problem(args.input)
    except FixedPassError as exc:
        report = {"report_version": REPORT_VERSION, "command": args.command, "status": "error",
                  "error": _error(exc), "exit_code": EXIT_ERROR}
        code = EXIT_ERROR
    else:
        flags = Flags(args.tol_gap, args.tol_feas, args.bisect_tol, args.mult_degree, args.grid,
                      args.direct, args.dump_sdp, args.rho)
        report, code = run(args.command, spec, flags)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(summary(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
