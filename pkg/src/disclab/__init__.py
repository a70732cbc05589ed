"""disclab: partition functions Z(g) = int exp(-g) dx of positive
even-degree forms, their Boltzmann-moment identities, and moment-SDP
volume bounds with divergence-theorem strengthening."""

from .boltzmann import (
    MomentMatrix,
    MomentVector,
    lambda_mu_matrix_relation,
    levelset_moment,
    levelset_moment_vector,
    mu_moment,
    mu_moment_matrix,
    mu_moment_vector,
    partition_function_direct,
    structural_zero,
)
from .errors import (
    DegenerateActionError,
    FactorizationError,
    FormParseError,
    MixedDegreeError,
    QuadratureError,
)
from .fixedpoint import (
    FixedPointReport,
    OrthonormalBasis,
    cd_identity_residual,
    cd_kernel,
    fixed_point_report,
    fixed_point_residual,
    moment_ratio_constant,
    orthonormalize,
    partition_from_identities,
    recover_form,
    tilde_coeffs,
    tilde_moments,
)
from .polyform import (
    GradedBasis,
    HomogeneousForm,
    check_action,
    enumerate_basis,
    enumerate_indices,
    enumerate_indices_upto,
    evaluate,
    format_form,
    gradient,
    min_on_sphere,
    monomial_matrix,
    normalize_action,
    parse_form,
)
from .sdp import (
    HierarchyLevel,
    SDPProblem,
    SolverReport,
    add_stokes_constraints,
    build_volume_relaxation,
    dump_problem,
    hierarchy,
    load_problem,
    moment_matrix_map,
    solve,
)
from .spherequad import (
    SphereRule,
    ball_moment,
    box_moment,
    build_rule,
    integrate_surface,
    surface_area,
    surface_moment,
)
from .variational import (
    EntropyReport,
    LogPartition,
    best_approx_of_one,
    entropy_report,
    log_partition,
    norm_minimality_check,
    ward_residuals,
)

__version__ = "0.1.0"
