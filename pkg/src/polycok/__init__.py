"""Exact enumeration checks for cokernels of P(X) over Z/p^{N+1}."""

from .errors import BudgetExceeded, ConformanceError, InvalidFiber, NotAUnit, NoWitness
from .ring import RingParams, parse_poly, format_poly
from .modtypes import (ModuleType, parse_partition, aut_order, aut_order_bruteforce,
                       theorem_rhs_count, theorem_rhs_probability, lemma_r_count, fw_rhs,
                       conjecture_rhs_count, cohen_lenstra_limit)
from .linalg import RingMatrix, smith_normal_form, cokernel_type, eval_poly, companion_cokernel
from .enumeration import (FiberSpec, TwistSpec, CountReport, count_poly_cokernel_fiber,
                          count_twisted_fiber, count_generalized_fiber, count_R_lift_fiber,
                          distribution_full_space, residue_distribution)
from .harness import ExperimentResult

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ConformanceError", "InvalidFiber", "NotAUnit", "NoWitness",
    "RingParams", "parse_poly", "format_poly",
    "ModuleType", "parse_partition", "aut_order", "aut_order_bruteforce", "theorem_rhs_count",
    "theorem_rhs_probability", "lemma_r_count", "fw_rhs", "conjecture_rhs_count",
    "cohen_lenstra_limit",
    "RingMatrix", "smith_normal_form", "cokernel_type", "eval_poly", "companion_cokernel",
    "FiberSpec", "TwistSpec", "CountReport", "count_poly_cokernel_fiber", "count_twisted_fiber",
    "count_generalized_fiber", "count_R_lift_fiber", "distribution_full_space",
    "residue_distribution", "ExperimentResult",
]
