"""Vertex-LMI H2 state-feedback synthesis for polytopic LPV plants.

For decision variables X = X' > 0, W, Y and the scalar gamma^2, every
polytope vertex contributes two blocks

    syn1:  [[A X + X A' + B W + W' B', Bw ],
            [Bw',                      -I ]]  <= -eps I

    syn2:  [[Y,            C X + E W],
            [X C' + W' E', X        ]]  >= eps I

plus X >= eps I and the single epigraph constraint tr(Y) <= gamma^2.
Feasibility yields the gain K = W X^-1 with guaranteed quadratic stability
over the whole polytope and ||T_zw||_2 < gamma at every vertex (hence for
every parameter value). Strict inequalities are realized through the eps
margin; gamma^2 is minimized linearly.

Decision-variable layout (shared with to_sdp): z = [svec(X); vec(W) row-major;
svec(Y); gamma^2], gamma^2 last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import sdp
from .errors import (
    DimensionMismatch,
    Infeasible,
    NonzeroFeedthrough,
    RegularityViolated,
    SolverFailure,
)
from .h2 import StabilityCertificate, h2_norm, verify_quadratic_stability
from .lpv import ClosedLoopVertex, LpvVertexSystem, PolytopicLpvPlant, close_loop, instantiate_vertices
from .sdp import SdpProblem, SdpSolution, SdpTolerances, smat, svec, svec_dim


@dataclass(frozen=True)
class VariableLayout:
    """Index bookkeeping for z = [svec(X); vec(W); svec(Y); gamma^2]."""

    n: int
    m_u: int
    q: int

    @property
    def n_x(self) -> int:
        return svec_dim(self.n)

    @property
    def n_w(self) -> int:
        return self.m_u * self.n

    @property
    def n_y(self) -> int:
        return svec_dim(self.q)

    @property
    def num_vars(self) -> int:
        return self.n_x + self.n_w + self.n_y + 1

    @property
    def gamma2_index(self) -> int:
        return self.num_vars - 1

    def pack(self, X, W, Y, gamma2: float) -> np.ndarray:
        z = np.empty(self.num_vars)
        z[: self.n_x] = svec(np.asarray(X, dtype=float))
        z[self.n_x : self.n_x + self.n_w] = np.asarray(W, dtype=float).reshape(-1)
        z[self.n_x + self.n_w : -1] = svec(np.asarray(Y, dtype=float))
        z[-1] = gamma2
        return z

    def unpack(self, z: np.ndarray):
        z = np.asarray(z, dtype=float).reshape(-1)
        X = smat(z[: self.n_x])
        W = z[self.n_x : self.n_x + self.n_w].reshape(self.m_u, self.n)
        Y = smat(z[self.n_x + self.n_w : -1])
        return X, W, Y, float(z[-1])


@dataclass(frozen=True)
class LmiBlock:
    """One PSD constraint block in the synthesis SDP.

    kind: 'syn1' | 'syn2' | 'xpos' | 'trace'; vertex_index is None for the
    shared xpos/trace blocks. The affine map sends z to svec of the matrix
    required PSD (signs already arranged, e.g. syn1 stores -(block) - eps I).
    """

    kind: str
    vertex_index: int | None
    dim: int
    F: np.ndarray
    g: np.ndarray

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return smat(self.F @ np.asarray(z, dtype=float) + self.g)


def _sym_basis(d: int, j: int) -> np.ndarray:
    """j-th orthonormal symmetric basis matrix (the smat image of e_j)."""
    e = np.zeros(svec_dim(d))
    e[j] = 1.0
    return smat(e)


def _check_vertices(vertices: list[LpvVertexSystem]):
    if not vertices:
        raise DimensionMismatch("need at least one vertex system")
    first = vertices[0]
    for v in vertices[1:]:
        if not first.same_dims(v):
            raise DimensionMismatch("vertex systems must share dimensions")
    for i, v in enumerate(vertices):
        if np.any(v.D != 0.0):
            raise NonzeroFeedthrough(f"vertex {i} has a nonzero D block")
    return first.n, first.m_w, first.m_u, first.q


def assemble_lmis(vertices: list[LpvVertexSystem], epsilon: float) -> list[LmiBlock]:
    """Emit the syn1/syn2 blocks per vertex plus X-positivity and the trace block."""
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise ValueError("epsilon must be positive and finite")
    n, m_w, m_u, q = _check_vertices(vertices)
    layout = VariableLayout(n, m_u, q)
    nv = layout.num_vars

    x_bases = [_sym_basis(n, j) for j in range(layout.n_x)]
    w_bases = [np.zeros((m_u, n)) for _ in range(layout.n_w)]
    for idx in range(layout.n_w):
        w_bases[idx][idx // n, idx % n] = 1.0

    blocks: list[LmiBlock] = []
    for vi, sys_i in enumerate(vertices):
        A, Bw, B, C, E = sys_i.A, sys_i.Bw, sys_i.B, sys_i.C, sys_i.E

        # syn1: M(z) = -[[AX+XA'+BW+W'B', Bw],[Bw', -I]] - eps I  >= 0
        d1 = n + m_w
        F1 = np.zeros((svec_dim(d1), nv))
        for j, Sx in enumerate(x_bases):
            top = A @ Sx + Sx @ A.T
            mat = np.zeros((d1, d1))
            mat[:n, :n] = -top
            F1[:, j] = svec(mat)
        for j, U in enumerate(w_bases):
            top = B @ U + U.T @ B.T
            mat = np.zeros((d1, d1))
            mat[:n, :n] = -top
            F1[:, layout.n_x + j] = svec(mat)
        g1_mat = np.zeros((d1, d1))
        g1_mat[:n, n:] = -Bw
        g1_mat[n:, :n] = -Bw.T
        g1_mat[n:, n:] = np.eye(m_w)
        g1_mat -= epsilon * np.eye(d1)
        blocks.append(LmiBlock("syn1", vi, d1, F1, svec(g1_mat)))

        # syn2: M(z) = [[Y, CX+EW],[XC'+W'E', X]] - eps I  >= 0
        d2 = q + n
        F2 = np.zeros((svec_dim(d2), nv))
        for j, Sx in enumerate(x_bases):
            off = C @ Sx
            mat = np.zeros((d2, d2))
            mat[:q, q:] = off
            mat[q:, :q] = off.T
            mat[q:, q:] = Sx
            F2[:, j] = svec(mat)
        for j, U in enumerate(w_bases):
            off = E @ U
            mat = np.zeros((d2, d2))
            mat[:q, q:] = off
            mat[q:, :q] = off.T
            F2[:, layout.n_x + j] = svec(mat)
        for j in range(layout.n_y):
            mat = np.zeros((d2, d2))
            mat[:q, :q] = _sym_basis(q, j)
            F2[:, layout.n_x + layout.n_w + j] = svec(mat)
        blocks.append(LmiBlock("syn2", vi, d2, F2, svec(-epsilon * np.eye(d2))))

    # X >= eps I
    Fx = np.zeros((svec_dim(n), nv))
    for j in range(layout.n_x):
        Fx[j, j] = 1.0
    blocks.append(LmiBlock("xpos", None, n, Fx, svec(-epsilon * np.eye(n))))

    # trace epigraph: gamma^2 - tr(Y) >= 0 (1x1 block)
    Ft = np.zeros((1, nv))
    Ft[0, layout.gamma2_index] = 1.0
    for j in range(layout.n_y):
        Ft[0, layout.n_x + layout.n_w + j] = -float(np.trace(_sym_basis(q, j)))
    blocks.append(LmiBlock("trace", None, 1, Ft, np.zeros(1)))
    return blocks


def to_sdp(blocks: list[LmiBlock]) -> SdpProblem:
    """Package the LMI blocks as a standard-form SDP minimizing gamma^2."""
    if not blocks:
        raise ValueError("no blocks to assemble")
    nv = blocks[0].F.shape[1]
    for blk in blocks:
        if blk.F.shape[1] != nv:
            raise DimensionMismatch("blocks disagree on the number of decision variables")
    c = np.zeros(nv)
    c[nv - 1] = 1.0
    psd = tuple(sdp.PsdBlock(blk.dim, blk.F, blk.g) for blk in blocks)
    return SdpProblem(num_vars=nv, objective=c, psd_constraints=psd)


def default_epsilon(vertices: list[LpvVertexSystem]) -> float:
    """eps = 1e-7 (1 + max |A| entry across vertices)."""
    a_max = max(float(np.abs(v.A).max()) for v in vertices)
    return 1e-7 * (1.0 + a_max)


@dataclass(frozen=True)
class SynthesisResult:
    X: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    K: np.ndarray
    gamma: float
    solver_status: str
    epsilon: float
    certificate: StabilityCertificate
    vertex_h2: tuple[float, ...]
    cond_x: float
    ill_conditioned: bool
    solution: SdpSolution


def synthesize(
    plant: PolytopicLpvPlant,
    epsilon: float | None = None,
    tolerances: SdpTolerances = SdpTolerances(),
) -> SynthesisResult:
    """Solve the vertex LMIs, recover K = W X^-1, and re-verify the result.

    Raises Infeasible when the solver certifies there is no common-X gain
    (or eps is too large), SolverFailure on numerical breakdown / iteration
    limit, NonzeroFeedthrough if any vertex has D != 0.
    """
    vertices = instantiate_vertices(plant)
    n, m_w, m_u, q = _check_vertices(vertices)
    if epsilon is None:
        epsilon = default_epsilon(vertices)
    blocks = assemble_lmis(vertices, epsilon)
    problem = to_sdp(blocks)
    solution = sdp.solve(problem, tolerances)

    if solution.status == sdp.INFEASIBLE:
        raise Infeasible(
            "solver certified the vertex LMIs infeasible "
            "(no common-X stabilizing gain, or epsilon too large)"
        )
    if solution.status != sdp.OPTIMAL:
        raise SolverFailure(
            f"SDP solve ended with status {solution.status} "
            f"after {solution.iterations} iterations (diagnostics: {solution.diagnostics})"
        )

    layout = VariableLayout(n, m_u, q)
    X, W, Y, gamma2 = layout.unpack(solution.x)
    X = 0.5 * (X + X.T)
    Y = 0.5 * (Y + Y.T)
    K = np.linalg.solve(X, W.T).T
    cond_x = float(np.linalg.cond(X))
    ill = not (cond_x < 1e10)

    # The epigraph is active at the optimum; report gamma strictly above
    # tr(Y) so the bound chain tr(Y) < gamma^2 survives roundoff.
    trace_y = float(np.trace(Y))
    gamma = math.sqrt(max(gamma2, trace_y * (1.0 + 1e-12)))

    closed = [close_loop(v, K) for v in vertices]
    p_lyap = np.linalg.inv(X)
    p_lyap = 0.5 * (p_lyap + p_lyap.T)
    certificate = verify_quadratic_stability(p_lyap, closed, margin=0.0)
    vertex_h2 = tuple(h2_norm(cl) for cl in closed)
    if not certificate.valid or not all(h < gamma for h in vertex_h2):
        raise SolverFailure(
            "post-solve verification failed: "
            f"certificate valid={certificate.valid}, vertex H2 norms={vertex_h2}, gamma={gamma}"
        )
    return SynthesisResult(
        X=X,
        W=W,
        Y=Y,
        K=K,
        gamma=gamma,
        solver_status=solution.status,
        epsilon=float(epsilon),
        certificate=certificate,
        vertex_h2=vertex_h2,
        cond_x=cond_x,
        ill_conditioned=ill,
        solution=solution,
    )


def find_common_lyapunov(
    closed_vertices: list[ClosedLoopVertex],
    tolerances: SdpTolerances = SdpTolerances(),
    scale_cap: float = 1e6,
) -> np.ndarray | None:
    """Search for X > 0 with Ac' X + X Ac < 0 at every vertex.

    Solves min t s.t. I <= X <= scale_cap I and Ac' X + X Ac <= t I per
    vertex; a strictly negative optimum certifies quadratic stability and
    the X found is returned. Returns None when no certificate is found.
    """
    if not closed_vertices:
        raise DimensionMismatch("need at least one closed-loop vertex")
    n = closed_vertices[0].n
    n_x = svec_dim(n)
    nv = n_x + 1
    bases = [_sym_basis(n, j) for j in range(n_x)]

    psd = []
    for cl in closed_vertices:
        F = np.zeros((svec_dim(n), nv))
        for j, S in enumerate(bases):
            M = cl.Ac.T @ S + S @ cl.Ac
            F[:, j] = svec(-M)
        F[:, n_x] = svec(np.eye(n))
        psd.append(sdp.PsdBlock(n, F, np.zeros(svec_dim(n))))
    # I <= X
    F_lo = np.zeros((svec_dim(n), nv))
    F_lo[:n_x, :n_x] = np.eye(n_x)
    psd.append(sdp.PsdBlock(n, F_lo, svec(-np.eye(n))))
    # X <= scale_cap I
    F_hi = np.zeros((svec_dim(n), nv))
    F_hi[:n_x, :n_x] = -np.eye(n_x)
    psd.append(sdp.PsdBlock(n, F_hi, svec(scale_cap * np.eye(n))))

    c = np.zeros(nv)
    c[n_x] = 1.0
    problem = SdpProblem(num_vars=nv, objective=c, psd_constraints=tuple(psd))
    solution = sdp.solve(problem, tolerances)
    if solution.status != sdp.OPTIMAL or not solution.objective_value < 0.0:
        return None
    X = smat(solution.x[:n_x])
    return 0.5 * (X + X.T)


def riccati_h2_oracle(vertex: LpvVertexSystem):
    """Classical H2-optimal state feedback for one LTI vertex (test oracle).

    Solves the control algebraic Riccati equation by eigen-decomposition of
    the Hamiltonian matrix and returns (K_opt, gamma_opt) with
    gamma_opt^2 = tr(Bw' P Bw). Requires E'E invertible and a clean
    stable/antistable split of the Hamiltonian spectrum.
    """
    A, B, Bw, C, E = vertex.A, vertex.B, vertex.Bw, vertex.C, vertex.E
    n = vertex.n
    R = E.T @ E
    if np.linalg.matrix_rank(R) < R.shape[0] or np.linalg.cond(R) > 1e12:
        raise RegularityViolated("E'E must be invertible for the H2 Riccati oracle")
    R_inv = np.linalg.inv(R)
    S = C.T @ E
    A_s = A - B @ R_inv @ S.T
    Q_s = C.T @ C - S @ R_inv @ S.T

    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = A_s
    H[:n, n:] = -B @ R_inv @ B.T
    H[n:, :n] = -Q_s
    H[n:, n:] = -A_s.T
    eigvals, eigvecs = np.linalg.eig(H)
    stable = eigvals.real < 0.0
    if stable.sum() != n:
        raise RegularityViolated(
            f"Hamiltonian has {stable.sum()} stable eigenvalues, expected {n} "
            "(imaginary-axis zeros?)"
        )
    U = eigvecs[:, stable]
    U1, U2 = U[:n, :], U[n:, :]
    try:
        P = np.real(U2 @ np.linalg.inv(U1))
    except np.linalg.LinAlgError as exc:
        raise RegularityViolated("stable invariant subspace is degenerate") from exc
    P = 0.5 * (P + P.T)
    K_opt = -R_inv @ (B.T @ P + S.T)
    gamma_sq = float(np.trace(Bw.T @ P @ Bw))
    return K_opt, math.sqrt(max(gamma_sq, 0.0))
