"""Model-free inverse optimal control for continuous-time LQR.

From a single expert trajectory of an unknown linear system driven by an
unknown quadratic cost, identify the feedback gain, assemble a convex
conic least-squares reformulation of the joint inverse problem, solve its
dual by block coordinate updates with closed-form PSD projections, and
recover an equivalent (A, B, Q, R, P) tuple that reproduces the expert's
behavior.
"""

from .assembly import AssembledProblem, DecisionLayout, assemble_multi, build_dual, build_layout, build_omega
from .data import (
    DataMatrices,
    Trajectory,
    build_data_matrices,
    estimate_derivatives,
    identify_gain,
    load_trajectory_csv,
    multi_traj_closed_loop,
    save_trajectory_csv,
)
from .errors import (
    AcceptanceMissError,
    GenerationFailureError,
    InfeasibleModelError,
    InsufficientExcitationError,
    MfiocError,
    NumericalBreakdownError,
    RecoveryFailureError,
    UsageError,
)
from .lqr import (
    CostWeights,
    LqrSolution,
    LtiSystem,
    is_stabilizable,
    random_system,
    simulate_closed_loop,
    solve_care,
    system_from_json,
    system_to_json,
)
from .pipeline import MonteCarloSummary, PipelineResult, RunConfig, monte_carlo, run_pipeline
from .recovery import (
    RecoveredModel,
    VerificationReport,
    are_residual,
    derivative_match_check,
    reconstruct,
    trajectory_mse,
    verify_model,
)
from .solver import (
    ConvergenceTrace,
    DualState,
    PrimalRecovery,
    SolverConfig,
    bsum_cycle,
    dual_objective,
    recover_primal,
    solve,
    step_coefficients,
)

__version__ = "0.1.0"
