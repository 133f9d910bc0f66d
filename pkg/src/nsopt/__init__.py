"""Nonsmooth constrained convex optimization with explicit oracle accounting.

Solvers access the objective through (stochastic) first-order oracles and
the constraint set through projection or linear-minimization oracles, with
every call tallied.  The Moreau-splitting methods obtain target accuracy
with far fewer set-oracle calls than projected subgradient baselines; the
harness measures those separations on desk-scale problems.
"""

from .errors import ConfigError, FormatError, NumericalError
from .geometry import (
    SetDescriptor,
    l1_ball,
    l2_ball,
    lmo_l1_ball,
    lmo_nuclear_ball,
    nuclear_ball,
    project_l1_ball,
    project_l2_ball,
    project_nuclear_ball,
    top_singular_pair,
)
from .harness import (
    ExperimentConfig,
    SlopeReport,
    fit_slopes,
    fit_slopes_from_csv,
    load_config,
    reference_optimum,
    run_experiment,
)
from .moreau import (
    JointObjective,
    ProxResult,
    envelope_gradient,
    grad_psi,
    joint_value,
    prox_subgradient,
)
from .oracles import (
    FirstOrderOracle,
    LinearMinimizationOracle,
    OracleCounters,
    ProjectionOracle,
    StochasticFirstOrderOracle,
    as_stochastic,
    estimate_variance,
    minibatch_sfo,
    wrap_counting,
)
from .problems import (
    AbsoluteValueInstance,
    HingeSvmInstance,
    MatrixSvmInstance,
    PiecewiseLinearInstance,
    hinge_value_and_subgradient,
    lipschitz_bound,
    load_dense_csv,
    matrix_hinge_value_and_subgradient,
    save_dense_csv,
    synth_hinge_data,
    synth_piecewise_linear,
)
from .solvers import (
    CSV_HEADER,
    RunTrace,
    SolverConfig,
    SolverResult,
    TraceRecord,
    compute_schedule,
    fw_pgd,
    fw_quadratic_projection,
    moles,
    mopes,
    moreau_subgradient_general,
    pgd,
    prox_slide,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
