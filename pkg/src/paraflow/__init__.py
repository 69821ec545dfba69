"""Coupled traffic density and logit routing dynamics on parallel roads.

The package models a parallel-path network fed by a constant inflow, where
per-path densities follow mass conservation and routing shares follow logit
dynamics driven by an announced information signal.  It computes equilibria,
certifies the signal conditions under which the free-flow equilibrium is
unique, asymptotically stable and positively invariant, and designs affine
signals trading aggregate travel time against information credibility.
"""

from .network import (
    CappedLinear,
    ExponentialSaturation,
    FundamentalDiagram,
    Greenshields,
    Network,
    Path,
    Triangular,
    sampled_modulus,
)
from .logit import lipschitz_bound, softmax, softmax_jacobian
from .signals import (
    AffineSignal,
    ConditionReport,
    CustomSignal,
    InformationSignal,
    SignalBounds,
    TravelTimeSignal,
    check_class_U,
    check_existence,
    check_necessity,
    check_uniqueness_stability,
)
from .dynamics import (
    DivergenceError,
    InvarianceReport,
    SystemState,
    Trajectory,
    centroid_state,
    check_invariance,
    integrate,
    integrate_batch,
    lyapunov,
    lyapunov_along,
    lyapunov_weight,
    rhs,
    sample_invariant_set,
    write_trajectory_csv,
)
from .equilibrium import (
    EquilibriumResult,
    ProbeReport,
    SolverError,
    multistart_uniqueness_probe,
    solve_extended,
    solve_free_flow,
    total_travel_time,
    write_equilibrium_csv,
)
from .design import (
    DesignError,
    DesignProblem,
    DesignResult,
    GammaPoint,
    TargetInversion,
    credibility_penalty,
    credibility_penalty_quadrature,
    feasible_b_from_target,
    format_design_result,
    gamma_sweep,
    optimize,
)

__version__ = "0.1.0"
