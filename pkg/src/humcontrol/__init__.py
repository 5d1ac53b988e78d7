"""Null controls for a 1-D coupled fast-diffusion reaction-diffusion system
via the penalized Hilbert Uniqueness Method, with the experiment drivers that
reproduce the method's convergence and uniformity behavior."""

from .mesh import (
    Grid1D,
    TimeMesh,
    indicator,
    l2_norm,
    l2_norm_time,
    make_grid,
    make_time_mesh,
    mean_value,
)
from .operators import (
    BlockStepMatrix,
    LinearStencil,
    SingularPivotError,
    assemble_step_matrix,
    laplacian_dirichlet,
    laplacian_neumann,
    solve_block_tridiagonal,
)
from .solvers import (
    BlowUpError,
    CoupledStepper,
    NonlinearitySpec,
    SystemParams,
    Trajectory,
    average_series,
    solve_adjoint,
    solve_forward,
    solve_nonlocal_linear,
    solve_semilinear_nonlocal,
    stable_time_steps,
    step_coupled,
)
from .hum import (
    DIAGNOSTICS_COLUMNS,
    CgNoConvergenceError,
    CgOptions,
    DualVector,
    GramianOperator,
    HumSolution,
    apply_gramian,
    evaluate_primal,
    free_terminal,
    hum_constant,
    solve_penalized_hum,
    weighted_inner,
    weighted_norm,
)
from .experiments import (
    InitialData,
    Scenario,
    SlopeFit,
    SweepAborted,
    SweepRow,
    energy_ratio,
    fit_slope,
    run_average_convergence,
    run_controlled,
    run_limit_check,
    run_mesh_sweep,
    run_tau_sweep,
    run_uncontrolled,
    write_sweep_csv,
)

__all__ = [
    "Grid1D", "TimeMesh", "indicator", "l2_norm", "l2_norm_time", "make_grid",
    "make_time_mesh", "mean_value",
    "BlockStepMatrix", "LinearStencil", "SingularPivotError",
    "assemble_step_matrix", "laplacian_dirichlet", "laplacian_neumann",
    "solve_block_tridiagonal",
    "BlowUpError", "CoupledStepper", "NonlinearitySpec", "SystemParams",
    "Trajectory", "average_series", "solve_adjoint", "solve_forward",
    "solve_nonlocal_linear", "solve_semilinear_nonlocal", "stable_time_steps",
    "step_coupled",
    "DIAGNOSTICS_COLUMNS", "CgNoConvergenceError", "CgOptions", "DualVector",
    "GramianOperator", "HumSolution", "apply_gramian", "evaluate_primal",
    "free_terminal", "hum_constant", "solve_penalized_hum", "weighted_inner",
    "weighted_norm",
    "InitialData", "Scenario", "SlopeFit", "SweepAborted", "SweepRow",
    "energy_ratio", "fit_slope", "run_average_convergence", "run_controlled",
    "run_limit_check", "run_mesh_sweep", "run_tau_sweep", "run_uncontrolled",
    "write_sweep_csv",
]

__version__ = "0.1.0"
