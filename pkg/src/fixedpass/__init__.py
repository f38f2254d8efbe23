"""Robust stability certificates and passivity-index synthesis for
linearly parameterized controllers, via SOS programs and a built-in SDP solver."""
from .errors import (FixedPassError, Inconclusive, PreconditionFailed, SolverFailure,
                     ValidationFailed)
from .passivation import (Mode, PassivationProblem, SynthesisOptions, SynthesisResult,
                          feasibility, maximize_ifp, maximize_ofp, synthesize)
from .poly import ParamPolynomial, Polynomial, even_odd_ct, moebius_lift
from .sdp import ConicProgram, SolverOptions, Status, solve
from .stability import certify_box_stability, jury_modified, routh_modified, stability_table
from .system import (ClosedLoop, ControllerBasis, Domain, ParamBox, RationalTransfer,
                     compose_closed_loop, param_freq_decompose, validate_plant)
from .verify import (IndexKind, freq_index, grid_oracle, kyp_index, positive_real_check,
                     tf_to_ss)

__version__ = "0.1.0"

__all__ = [
    "FixedPassError", "Inconclusive", "PreconditionFailed", "SolverFailure", "ValidationFailed",
    "Mode", "PassivationProblem", "SynthesisOptions", "SynthesisResult", "feasibility",
    "maximize_ifp", "maximize_ofp", "synthesize", "ParamPolynomial", "Polynomial",
    "even_odd_ct", "moebius_lift", "ConicProgram", "SolverOptions", "Status", "solve",
    "certify_box_stability", "jury_modified", "routh_modified", "stability_table",
    "ClosedLoop", "ControllerBasis", "Domain", "ParamBox", "RationalTransfer",
    "compose_closed_loop", "param_freq_decompose", "validate_plant", "IndexKind",
    "freq_index", "grid_oracle", "kyp_index", "positive_real_check", "tf_to_ss",
]
