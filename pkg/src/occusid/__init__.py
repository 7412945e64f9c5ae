"""Parameter identification for nonlinear dynamical systems from trajectories.

Estimates coefficients theta in x' = h(x) + sum_i theta_i Y_i(x) from sampled
trajectories by integrating kernel-gradient features along each path, which
avoids numerical differentiation of the data and keeps the estimates stable
under measurement noise. Ships four kernel families, three quadrature rules,
dense/ridge/sparse/Gram solvers, a componentwise-integral baseline, and an
online streaming tracker, plus the `occusid` command line.
"""

from .dynamics import (
    EMPS_DEFAULT_THETA,
    BasisSet,
    MonomialSpec,
    VectorField,
    builtin_system,
    control_from_csv,
    integrate_rk4,
    lattice_centers,
    monomial_basis,
    monomial_exponents,
    monomial_index,
    monomial_label,
)
from .errors import (
    DivergenceError,
    IterationLimitError,
    TrajectoryParseError,
    UnsupportedKernelError,
)
from .gramsysid import (
    GramSystem,
    gram_assemble,
    gram_assemble_stacked,
    gram_solve,
    residual_quadratic,
)
from .kernels import (
    FeatureMapKernel,
    Kernel,
    exp_dot,
    from_name,
    gaussian_rbf,
    linear,
    polynomial,
)
from .quadrature import (
    OccupationKernelEstimate,
    QuadratureRule,
    empirical_order,
    homotopy_distance,
    integrate,
    norm_distance_squared,
    occupation_estimate,
    occupation_eval,
    occupation_inner,
    weights,
)
from .streaming import (
    ContinuityReport,
    StreamSnapshot,
    StreamState,
    gradient_chase_step,
    new_stream,
    snapshot,
    stream_matrices,
    stream_push,
    track_continuity,
)
from .sysid import (
    ConstraintSystem,
    Diagnostics,
    EstimationResult,
    assemble,
    assemble_multi,
    diagnostics,
    ils_assemble,
    ils_solve,
    solve_pinv,
    solve_ridge,
    solve_sparse,
)
from .trajectory import (
    Trajectory,
    TrajectorySet,
    add_measurement_noise,
    as_trajectory_set,
    concatenate,
    load_csv,
    moving_average,
    save_csv,
    segment,
    subsample,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSet",
    "ConstraintSystem",
    "ContinuityReport",
    "Diagnostics",
    "DivergenceError",
    "EMPS_DEFAULT_THETA",
    "EstimationResult",
    "FeatureMapKernel",
    "GramSystem",
    "IterationLimitError",
    "Kernel",
    "MonomialSpec",
    "OccupationKernelEstimate",
    "QuadratureRule",
    "StreamSnapshot",
    "StreamState",
    "Trajectory",
    "TrajectoryParseError",
    "TrajectorySet",
    "UnsupportedKernelError",
    "VectorField",
    "add_measurement_noise",
    "as_trajectory_set",
    "assemble",
    "assemble_multi",
    "builtin_system",
    "concatenate",
    "control_from_csv",
    "diagnostics",
    "empirical_order",
    "exp_dot",
    "from_name",
    "gaussian_rbf",
    "gradient_chase_step",
    "gram_assemble",
    "gram_assemble_stacked",
    "gram_solve",
    "homotopy_distance",
    "ils_assemble",
    "ils_solve",
    "integrate",
    "integrate_rk4",
    "lattice_centers",
    "linear",
    "load_csv",
    "monomial_basis",
    "monomial_exponents",
    "monomial_index",
    "monomial_label",
    "moving_average",
    "new_stream",
    "norm_distance_squared",
    "occupation_estimate",
    "occupation_eval",
    "occupation_inner",
    "polynomial",
    "residual_quadratic",
    "save_csv",
    "segment",
    "snapshot",
    "solve_pinv",
    "solve_ridge",
    "solve_sparse",
    "stream_matrices",
    "stream_push",
    "subsample",
    "track_continuity",
    "weights",
    "__version__",
]
