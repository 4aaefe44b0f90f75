"""Exception types shared across the package."""


class LpvH2Error(Exception):
    """Base class for every error raised by this package."""


class SingularAttitude(LpvH2Error):
    """Pitch angle (or pitch command) too close to +/-pi/2 for Q(lambda) to be inverted."""


class NonSpdInertia(LpvH2Error):
    """Inertia matrix is not symmetric positive definite."""


class NonFiniteState(LpvH2Error):
    """A state vector contains NaN or infinite entries."""


class DimensionMismatch(LpvH2Error):
    """Matrix or vector dimensions are inconsistent."""


class ParameterOutOfRegion(LpvH2Error):
    """Scheduling parameter lies outside the plant's polytope."""


class UnstableMatrix(LpvH2Error):
    """Matrix required to be Hurwitz has an eigenvalue with nonnegative real part."""


class IllConditioned(LpvH2Error):
    """Linear system too ill-conditioned to solve reliably."""


class NonzeroFeedthrough(LpvH2Error):
    """D block must be zero for the H2 norm / synthesis to be defined."""


class Infeasible(LpvH2Error):
    """Solver certified that no feasible point exists."""


class SolverFailure(LpvH2Error):
    """Numerical breakdown or iteration limit inside the SDP solve."""


class RegularityViolated(LpvH2Error):
    """Riccati-based oracle preconditions (E'E invertible, clean Hamiltonian split) not met."""


class PlantFileError(LpvH2Error):
    """Plant definition file is malformed. Message carries file and line when known."""
