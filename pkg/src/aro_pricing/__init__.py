"""Adaptive robust unit commitment with linear decision rules, and the prices it supports."""

from .checks import verify_instance
from .chull import convex_hull_prices
from .errors import (AroError, ConsistencyError, ConstructionError, InfeasibleError, LookupFailure,
                     ResourceLimitError, SchemaError, SolverStateError, UnsupportedNormError, ValidationError)
from .intraday import decentralized_profit, intraday_dispatch, realization_sweep, sweep_csv
from .lp import LpProblem, solve_lp
from .mip import MipProblem, solve_milp
from .model import (DemandNode, GeneratorSpec, RealizationVector, UCInstance, UncertaintySpec, builtin_instance,
                    dump_instance, load_instance)
from .norms import NormOrder, dual_order, max_linear_over_ball, norm
from .pricing import (PaymentTable, adaptive_uniform_day_ahead, deterministic_marginal, pay_as_bid_day_ahead,
                      worst_case_settlement)
from .robust import (build_robust_dual, build_robust_primal, ellipsoidal_outer_solve, solve_aro,
                     worst_case_realization)

__all__ = [
    "AroError", "ConsistencyError", "ConstructionError", "DemandNode", "GeneratorSpec", "InfeasibleError",
    "LookupFailure", "LpProblem", "MipProblem", "NormOrder", "PaymentTable", "RealizationVector",
    "ResourceLimitError", "SchemaError", "SolverStateError", "UCInstance", "UncertaintySpec",
    "UnsupportedNormError", "ValidationError", "adaptive_uniform_day_ahead", "build_robust_dual",
    "build_robust_primal", "builtin_instance", "convex_hull_prices", "decentralized_profit", "deterministic_marginal",
    "dual_order", "dump_instance", "ellipsoidal_outer_solve", "intraday_dispatch", "load_instance",
    "max_linear_over_ball", "norm", "pay_as_bid_day_ahead", "realization_sweep", "solve_aro", "solve_lp",
    "solve_milp", "sweep_csv", "verify_instance", "worst_case_settlement",
]
