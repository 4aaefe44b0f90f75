"""Gain-scheduled H2 state feedback for polytopic LPV plants, with a
feedback-linearizing attitude inner loop for small rotorcraft.

Layout:
    attitude    rigid-body kinematics/dynamics in ZYX Euler angles
    inner_loop  feedback-linearizing controller and its exact LTI model
    lpv         polytopic parameter regions and vertex plant models
    plantfile   JSON loader for plant definitions
    h2          Lyapunov/gramian machinery and H2 norms
    sdp         symmetric-cone problem container and solver wrapper
    synthesis   vertex LMI assembly and gain synthesis
    cli         command-line front end
"""

from .attitude import (
    AttitudeState,
    RigidBodyParams,
    Trajectory,
    angular_dynamics,
    euler_rate_matrix,
    euler_rate_matrix_dot,
    euler_rate_matrix_inv,
    integrate,
    skew,
)
from .errors import (
    DimensionMismatch,
    IllConditioned,
    Infeasible,
    LpvH2Error,
    NonFiniteState,
    NonSpdInertia,
    NonzeroFeedthrough,
    ParameterOutOfRegion,
    PlantFileError,
    RegularityViolated,
    SingularAttitude,
    SolverFailure,
    UnstableMatrix,
)
from .h2 import (
    StabilityCertificate,
    controllability_gramian,
    h2_norm,
    h2_norm_impulse_oracle,
    solve_lyapunov,
    verification_report,
    verify_quadratic_stability,
)
from .inner_loop import (
    DEFAULT_GAINS,
    InnerLoopCommand,
    InnerLoopGains,
    ReferenceTrajectory,
    build_inner_loop_lti,
    closed_loop_accel,
    feedback_linearizing_torque,
    is_hurwitz,
    project_x_il,
    simulate_inner_loop,
    simulate_reference_model,
    x_il_trajectory,
)
from .lpv import (
    ClosedLoopVertex,
    LpvVertexSystem,
    ParameterPolytope,
    PolytopicLpvPlant,
    close_loop,
    evaluate,
    instantiate_vertices,
)
from .plantfile import load_plant
from .sdp import (
    PsdBlock,
    SdpProblem,
    SdpSolution,
    SdpTolerances,
    check_solution,
    smat,
    solve,
    svec,
    svec_dim,
)
from .synthesis import (
    LmiBlock,
    SynthesisResult,
    VariableLayout,
    assemble_lmis,
    default_epsilon,
    find_common_lyapunov,
    riccati_h2_oracle,
    synthesize,
    to_sdp,
)

__version__ = "0.1.0"

__all__ = [
    "AttitudeState",
    "RigidBodyParams",
    "Trajectory",
    "angular_dynamics",
    "euler_rate_matrix",
    "euler_rate_matrix_dot",
    "euler_rate_matrix_inv",
    "integrate",
    "skew",
    "DimensionMismatch",
    "IllConditioned",
    "Infeasible",
    "LpvH2Error",
    "NonFiniteState",
    "NonSpdInertia",
    "NonzeroFeedthrough",
    "ParameterOutOfRegion",
    "PlantFileError",
    "RegularityViolated",
    "SingularAttitude",
    "SolverFailure",
    "UnstableMatrix",
    "StabilityCertificate",
    "controllability_gramian",
    "h2_norm",
    "h2_norm_impulse_oracle",
    "solve_lyapunov",
    "verification_report",
    "verify_quadratic_stability",
    "DEFAULT_GAINS",
    "InnerLoopCommand",
    "InnerLoopGains",
    "ReferenceTrajectory",
    "build_inner_loop_lti",
    "closed_loop_accel",
    "feedback_linearizing_torque",
    "is_hurwitz",
    "project_x_il",
    "simulate_inner_loop",
    "simulate_reference_model",
    "x_il_trajectory",
    "ClosedLoopVertex",
    "LpvVertexSystem",
    "ParameterPolytope",
    "PolytopicLpvPlant",
    "close_loop",
    "evaluate",
    "instantiate_vertices",
    "load_plant",
    "PsdBlock",
    "SdpProblem",
    "SdpSolution",
    "SdpTolerances",
    "check_solution",
    "smat",
    "solve",
    "svec",
    "svec_dim",
    "LmiBlock",
    "SynthesisResult",
    "VariableLayout",
    "assemble_lmis",
    "default_epsilon",
    "find_common_lyapunov",
    "riccati_h2_oracle",
    "synthesize",
    "to_sdp",
]
