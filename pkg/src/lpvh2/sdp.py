"""Small dense semidefinite programs: problem contract, solver, verification.

Standard form:

    minimize    c' x
    subject to  smat(F_k x + g_k)  PSD   for every block k
                lower <= x <= upper      (optional)

Symmetric matrices travel as svec vectors (lower triangle, row-major pair
order, off-diagonal entries scaled by sqrt(2)) so Euclidean inner products
of svec vectors equal trace inner products of the matrices.

The solve itself is delegated to CVXOPT's primal-dual interior-point cone
LP (`conelp`), which certifies infeasibility and is deterministic;
`check_solution` re-verifies feasibility from scratch with plain eigenvalue
computations so no claim rests on the solver alone.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as _cvx_matrix
from cvxopt import solvers as _cvx_solvers

from .errors import DimensionMismatch


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec(M: np.ndarray) -> np.ndarray:
    """Isometric vectorization of a symmetric matrix (off-diagonals x sqrt(2))."""
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d):
        raise DimensionMismatch(f"svec needs a square matrix, got {M.shape}")
    rows, cols = np.tril_indices(d)
    scale = np.where(rows == cols, 1.0, math.sqrt(2.0))
    return M[rows, cols] * scale


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of svec."""
    v = np.asarray(v, dtype=float).reshape(-1)
    d = int(round((math.sqrt(8.0 * v.size + 1.0) - 1.0) / 2.0))
    if svec_dim(d) != v.size:
        raise DimensionMismatch(f"svec vector of length {v.size} has no matching dimension")
    rows, cols = np.tril_indices(d)
    scale = np.where(rows == cols, 1.0, 1.0 / math.sqrt(2.0))
    M = np.zeros((d, d))
    M[rows, cols] = v * scale
    M[cols, rows] = M[rows, cols]
    return M


@dataclass(frozen=True)
class PsdBlock:
    """One PSD constraint: smat(F x + g) must be positive semidefinite."""

    dim: int
    F: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        g = np.array(self.g, dtype=float).reshape(-1)
        if self.dim < 1:
            raise DimensionMismatch("block dimension must be >= 1")
        if F.ndim != 2 or F.shape[0] != svec_dim(self.dim) or g.shape[0] != svec_dim(self.dim):
            raise DimensionMismatch(
                f"affine map must have {svec_dim(self.dim)} rows for dimension {self.dim}"
            )
        F.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "g", g)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return smat(self.F @ x + self.g)


@dataclass(frozen=True)
class SdpProblem:
    num_vars: int
    objective: np.ndarray
    psd_constraints: tuple[PsdBlock, ...]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        if c.shape != (self.num_vars,):
            raise DimensionMismatch(f"objective must have length {self.num_vars}")
        blocks = tuple(self.psd_constraints)
        for blk in blocks:
            if blk.F.shape[1] != self.num_vars:
                raise DimensionMismatch(
                    f"block consumes {blk.F.shape[1]} variables, expected {self.num_vars}"
                )
        for name in ("lower", "upper"):
            bound = getattr(self, name)
            if bound is not None:
                b = np.array(bound, dtype=float).reshape(-1)
                if b.shape != (self.num_vars,):
                    raise DimensionMismatch(f"{name} bound must have length {self.num_vars}")
                b.flags.writeable = False
                object.__setattr__(self, name, b)
        c.flags.writeable = False
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "psd_constraints", blocks)


@dataclass(frozen=True)
class SdpTolerances:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if not (self.feas_tol > 0.0 and self.gap_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"
NUMERICAL_ERROR = "NumericalError"


@dataclass(frozen=True)
class SdpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    max_psd_violation: float
    iterations: int
    diagnostics: dict = field(default_factory=dict)


def _full_vec(sym: np.ndarray) -> np.ndarray:
    return sym.reshape(-1)


def check_solution(problem: SdpProblem, solution) -> dict:
    """Recompute feasibility of a candidate point, independent of the solver.

    Accepts an SdpSolution or a bare variable vector. Returns a report with
    the min eigenvalue of every block at x, any bound violation, and the
    overall max violation (0 when there are no constraints).
    """
    x = solution.x if isinstance(solution, SdpSolution) else np.asarray(solution, dtype=float)
    x = x.reshape(-1)
    if x.shape != (problem.num_vars,):
        raise DimensionMismatch(f"x must have length {problem.num_vars}")
    min_eigs = []
    worst = 0.0
    for blk in problem.psd_constraints:
        eig_min = float(np.linalg.eigvalsh(blk.evaluate(x)).min())
        min_eigs.append(eig_min)
        worst = max(worst, -eig_min)
    bound_violation = 0.0
    if problem.lower is not None:
        bound_violation = max(bound_violation, float(np.max(problem.lower - x, initial=0.0)))
    if problem.upper is not None:
        bound_violation = max(bound_violation, float(np.max(x - problem.upper, initial=0.0)))
    return {
        "block_min_eigs": min_eigs,
        "bound_violation": bound_violation,
        "max_violation": max(worst, bound_violation),
    }


def solve(problem: SdpProblem, tolerances: SdpTolerances = SdpTolerances()) -> SdpSolution:
    """Interior-point solve of the SDP; never raises for well-formed problems.

    Statuses: Optimal (gap and feasibility within tolerances), Infeasible /
    Unbounded (solver-certified), IterationLimit, NumericalError. The
    reported max_psd_violation is recomputed here via eigenvalues, not taken
    from the solver.
    """
    n = problem.num_vars
    c = problem.objective
    nan_x = np.full(n, np.nan)

    rows_l = []
    h_l = []
    if problem.upper is not None:
        for j in range(n):
            if np.isfinite(problem.upper[j]):
                row = np.zeros(n)
                row[j] = 1.0
                rows_l.append(row)
                h_l.append(problem.upper[j])
    if problem.lower is not None:
        for j in range(n):
            if np.isfinite(problem.lower[j]):
                row = np.zeros(n)
                row[j] = -1.0
                rows_l.append(row)
                h_l.append(-problem.lower[j])

    if not problem.psd_constraints and not rows_l:
        if np.any(c != 0.0):
            return SdpSolution(UNBOUNDED, nan_x, -math.inf, math.nan, 0)
        return SdpSolution(OPTIMAL, np.zeros(n), 0.0, 0.0, 0)

    g_parts = list(rows_l)
    h_parts = list(h_l)
    dims = {"l": len(rows_l), "q": [], "s": []}
    for blk in problem.psd_constraints:
        dims["s"].append(blk.dim)
        cols = np.empty((blk.dim * blk.dim, n))
        for j in range(n):
            cols[:, j] = -_full_vec(smat(blk.F[:, j]))
        g_parts.append(cols)
        h_parts.append(_full_vec(smat(blk.g)))

    G = np.vstack([np.atleast_2d(p) for p in g_parts])
    h = np.concatenate([np.atleast_1d(p) for p in h_parts])

    options = {
        "show_progress": False,
        "abstol": tolerances.gap_tol,
        "reltol": tolerances.gap_tol,
        "feastol": tolerances.feas_tol,
        "maxiters": tolerances.max_iter,
    }
    try:
        raw = _cvx_solvers.conelp(
            _cvx_matrix(c), _cvx_matrix(G), _cvx_matrix(h), dims, options=options
        )
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        return SdpSolution(NUMERICAL_ERROR, nan_x, math.nan, math.nan, 0, {"error": str(exc)})

    iterations = int(raw.get("iterations", 0))
    diagnostics = {
        key: float(raw[key])
        for key in ("gap", "relative gap", "primal infeasibility", "dual infeasibility")
        if raw.get(key) is not None
    }
    status = raw["status"]
    if status == "primal infeasible":
        return SdpSolution(INFEASIBLE, nan_x, math.nan, math.nan, iterations, diagnostics)
    if status == "dual infeasible":
        return SdpSolution(UNBOUNDED, nan_x, -math.inf, math.nan, iterations, diagnostics)
    if raw["x"] is None:
        return SdpSolution(NUMERICAL_ERROR, nan_x, math.nan, math.nan, iterations, diagnostics)

    x = np.array(raw["x"]).reshape(-1)
    objective_value = float(c @ x)
    violation = check_solution(problem, x)["max_violation"]
    if status == "optimal":
        # Feasibility is judged relative to the constraint data's scale so a
        # well-scaled solve is not rejected for roundoff on large offsets.
        scale = max(
            [1.0] + [float(np.abs(blk.g).max(initial=0.0)) for blk in problem.psd_constraints]
        )
        if violation <= tolerances.feas_tol * scale:
            return SdpSolution(OPTIMAL, x, objective_value, violation, iterations, diagnostics)
        return SdpSolution(NUMERICAL_ERROR, x, objective_value, violation, iterations, diagnostics)
    if iterations >= tolerances.max_iter:
        return SdpSolution(ITERATION_LIMIT, x, objective_value, violation, iterations, diagnostics)
    return SdpSolution(NUMERICAL_ERROR, x, objective_value, violation, iterations, diagnostics)


def dump_problem(problem: SdpProblem) -> str:
    """Plain-text dump (dimensions, objective, affine maps) for offline debugging.

    Format: a header line `sdp num_vars=<n> psd_blocks=<k>`, the objective as
    one whitespace-separated line, then per block a `block <i> dim=<d>` line,
    svec_dim rows of F, and one row g. Numbers use repr-faithful %.17g.
    """
    out = io.StringIO()
    out.write(f"sdp num_vars={problem.num_vars} psd_blocks={len(problem.psd_constraints)}\n")
    out.write("objective " + " ".join(f"{v:.17g}" for v in problem.objective) + "\n")
    for name in ("lower", "upper"):
        bound = getattr(problem, name)
        if bound is not None:
            out.write(f"{name} " + " ".join(f"{v:.17g}" for v in bound) + "\n")
    for i, blk in enumerate(problem.psd_constraints):
        out.write(f"block {i} dim={blk.dim}\n")
        for row in blk.F:
            out.write("F " + " ".join(f"{v:.17g}" for v in row) + "\n")
        out.write("g " + " ".join(f"{v:.17g}" for v in blk.g) + "\n")
    return out.getvalue()
