from .barrier import solve_convex_qcqp
from .ccp import CcpIterate, CcpTrace, PenaltySchedule, penalty_ccp, refine_active_set
from .dual_qcqp import solve_single_qcqp_dual
from .lp import solve_lp
from .nelder_mead import SimplexResult, downhill_simplex
from .program import CanonicalProgram, Constraint, ProgramSolution, Status, kkt_residuals
from .qp import solve_qp

__all__ = [
    "CanonicalProgram", "Constraint", "ProgramSolution", "Status", "kkt_residuals",
    "solve_lp", "solve_qp", "solve_convex_qcqp", "penalty_ccp", "PenaltySchedule",
    "CcpIterate", "CcpTrace", "refine_active_set", "solve_single_qcqp_dual", "downhill_simplex",
    "SimplexResult",
]
