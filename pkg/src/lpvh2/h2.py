"""Independent H2 / stability analysis oracles.

Everything here is deliberately free of the SDP machinery: Lyapunov
equations are solved by a dense Kronecker-product linear solve, H2 norms
come from the controllability Gramian (with an impulse-response quadrature
cross-check), and quadratic stability is certified by direct eigenvalue
computation at the vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import IllConditioned, NonzeroFeedthrough, UnstableMatrix
from .lpv import ClosedLoopVertex

# Eigenvalue real parts must clear this margin for a matrix to count as Hurwitz.
HURWITZ_MARGIN = 1e-9


def _square(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _require_hurwitz(A: np.ndarray, name: str) -> np.ndarray:
    eigs = np.linalg.eigvals(A)
    if eigs.real.max() >= -HURWITZ_MARGIN:
        raise UnstableMatrix(
            f"{name} has an eigenvalue with real part {eigs.real.max():.3e} >= -{HURWITZ_MARGIN}"
        )
    return eigs


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve A W + W A' + Q = 0 for Hurwitz A and symmetric Q.

    Dense Kronecker-product solve (n^2 x n^2), fine up to n ~ 30. The result
    is symmetrized and the residual checked against
    1e-10 (||A|| ||W|| + ||Q||) in Frobenius norm.
    """
    A = _square(A, "A")
    Q = _square(Q, "Q")
    if Q.shape != A.shape:
        raise ValueError(f"Q must match A, got {Q.shape} vs {A.shape}")
    if np.linalg.norm(Q - Q.T) > 1e-8 * max(1.0, np.linalg.norm(Q)):
        raise ValueError("Q must be symmetric")
    _require_hurwitz(A, "A")
    n = A.shape[0]
    eye = np.eye(n)
    kron = np.kron(A, eye) + np.kron(eye, A)
    try:
        w = np.linalg.solve(kron, -Q.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise IllConditioned("Kronecker system is singular") from exc
    W = w.reshape(n, n)
    W = 0.5 * (W + W.T)
    residual = np.linalg.norm(A @ W + W @ A.T + Q)
    bound = 1e-10 * (np.linalg.norm(A) * np.linalg.norm(W) + np.linalg.norm(Q))
    if residual > max(bound, 1e-300):
        raise IllConditioned(
            f"Lyapunov residual {residual:.3e} exceeds tolerance {bound:.3e}"
        )
    return W


def controllability_gramian(Ac, Bc) -> np.ndarray:
    """Controllability Gramian: solution of Ac W + W Ac' + Bc Bc' = 0."""
    Ac = _square(Ac, "Ac")
    Bc = np.asarray(Bc, dtype=float)
    if Bc.ndim != 2 or Bc.shape[0] != Ac.shape[0]:
        raise ValueError(f"Bc must be ({Ac.shape[0]}, m), got {Bc.shape}")
    BBt = Bc @ Bc.T
    return solve_lyapunov(Ac, 0.5 * (BBt + BBt.T))


def h2_norm(cl: ClosedLoopVertex) -> float:
    """Algebraic H2 norm sqrt(tr(Cc W_ctr Cc')) of a strictly proper closed loop."""
    if np.any(cl.Dc != 0.0):
        raise NonzeroFeedthrough("H2 norm requires Dc = 0")
    W = controllability_gramian(cl.Ac, cl.Bc)
    val = float(np.trace(cl.Cc @ W @ cl.Cc.T))
    return math.sqrt(max(val, 0.0))


def h2_norm_impulse_oracle(
    cl: ClosedLoopVertex, dt: float | None = None, horizon: float | None = None
) -> float:
    """H2 norm from the impulse response: Simpson quadrature of tr(H'H).

    H(t) = Cc exp(Ac t) Bc. Defaults: horizon = 40 / |slowest decay rate| and
    dt = 0.01 / spectral radius, so the exponential is well resolved and the
    truncated tail is negligible. Serves as the independent cross-check of
    h2_norm.
    """
    Ac = _square(cl.Ac, "Ac")
    eigs = _require_hurwitz(Ac, "Ac")
    alpha = -eigs.real.max()
    rho = np.abs(eigs).max()
    if horizon is None:
        horizon = 40.0 / alpha
    elif horizon < 20.0 / alpha:
        raise ValueError(f"horizon must cover at least 20/|max Re eig| = {20.0 / alpha:.3g}")
    if dt is None:
        dt = 0.01 / max(rho, 1e-12)
    if not (dt > 0.0 and horizon > 0.0):
        raise ValueError("dt and horizon must be positive")

    m = max(2, int(math.ceil(horizon / dt)))
    if m % 2:
        m += 1
    step = horizon / m
    E = expm(Ac * step)
    N = cl.Bc.copy()
    g = np.empty(m + 1)
    for k in range(m + 1):
        H = cl.Cc @ N
        g[k] = float(np.sum(H * H))
        if k < m:
            N = E @ N
    total = g[0] + g[m] + 4.0 * g[1:m:2].sum() + 2.0 * g[2:m:2].sum()
    return math.sqrt(max(total * step / 3.0, 0.0))


@dataclass(frozen=True)
class StabilityCertificate:
    """Common quadratic Lyapunov certificate over a set of closed-loop vertices.

    Valid iff X is positive definite and max eig(Ac' X + X Ac) < -margin at
    every vertex; by convexity of the max eigenvalue in the vertex matrices,
    validity at the vertices certifies the whole polytope.
    """

    X: np.ndarray
    per_vertex_max_eig: tuple[float, ...]
    margin: float
    x_min_eig: float

    @property
    def valid(self) -> bool:
        return self.x_min_eig > 0.0 and all(m < -self.margin for m in self.per_vertex_max_eig)


def verify_quadratic_stability(
    X, closed_vertices, margin: float = 0.0
) -> StabilityCertificate:
    """Evaluate a candidate common Lyapunov matrix at every closed-loop vertex.

    Never raises on an invalid certificate; inspect `.valid`.
    """
    X = _square(X, "X")
    if np.linalg.norm(X - X.T) > 1e-8 * max(1.0, np.linalg.norm(X)):
        raise ValueError("X must be symmetric")
    if margin < 0.0:
        raise ValueError("margin must be nonnegative")
    Xs = 0.5 * (X + X.T)
    maxima = []
    for cl in closed_vertices:
        M = cl.Ac.T @ Xs + Xs @ cl.Ac
        maxima.append(float(np.linalg.eigvalsh(0.5 * (M + M.T)).max()))
    x_min = float(np.linalg.eigvalsh(Xs).min())
    Xs.flags.writeable = False
    return StabilityCertificate(Xs, tuple(maxima), float(margin), x_min)


def verification_report(
    closed_vertices,
    certificate: StabilityCertificate | None,
    gamma: float | None,
) -> dict:
    """JSON-compatible per-vertex verification summary.

    For each vertex: the certificate eigenvalue maximum (if a certificate is
    given), the H2 norm (None when the vertex is unstable), and pass flags.
    Overall `passed` requires a valid certificate, all vertices stable, and
    all H2 norms strictly below gamma when gamma is given.
    """
    rows = []
    all_stable = True
    all_below = True
    for i, cl in enumerate(closed_vertices):
        entry: dict = {"vertex": i}
        if certificate is not None:
            entry["max_eig_lyapunov"] = certificate.per_vertex_max_eig[i]
        try:
            norm = h2_norm(cl)
            entry["h2_norm"] = norm
            entry["stable"] = True
            if gamma is not None:
                entry["h2_below_gamma"] = bool(norm < gamma)
                all_below &= norm < gamma
        except UnstableMatrix:
            entry["h2_norm"] = None
            entry["stable"] = False
            all_stable = False
            if gamma is not None:
                entry["h2_below_gamma"] = False
                all_below = False
        rows.append(entry)
    cert_ok = certificate.valid if certificate is not None else False
    report = {
        "quadratic_stability": cert_ok,
        "all_vertices_stable": all_stable,
        "gamma": gamma,
        "h2_below_gamma": all_below if gamma is not None else None,
        "vertices": rows,
        "passed": bool(cert_ok and all_stable and (gamma is None or all_below)),
    }
    return report
