"""Affine polytopic LPV plants: vertex instantiation, evaluation, closed loop.

A plant is the family

    x_dot = A(xi) x + Bw(xi) w + B(xi) u
    z     = C(xi) x + D(xi) w + E(xi) u

with xi ranging over a polytope. Two encodings are supported: the affine
form P(xi) = P0 + sum_k xi_k P_k (canonical) and a direct list of vertex
systems (covers non-affine polytopic embeddings).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import DimensionMismatch, ParameterOutOfRegion

MAX_PARAMETERS = 8
MEMBERSHIP_TOL = 1e-8

_BLOCK_NAMES = ("A", "Bw", "B", "C", "D", "E")


@dataclass(frozen=True)
class ParameterPolytope:
    """Parameter region, either a coordinate box or an explicit vertex list.

    `vertices` has shape (n_j, p). Box polytopes enumerate all 2^p corners
    in lexicographic order (first coordinate slowest) and keep their bounds
    for exact membership tests.
    """

    vertices: np.ndarray
    kind: str
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 1 or verts.shape[1] < 1:
            raise DimensionMismatch(f"vertices must be (n_j, p) with n_j, p >= 1, got {verts.shape}")
        if not np.isfinite(verts).all():
            raise ValueError("polytope vertices must be finite")
        if verts.shape[1] > MAX_PARAMETERS:
            raise ValueError(f"at most {MAX_PARAMETERS} parameters supported, got {verts.shape[1]}")
        if self.kind not in ("box", "vertices"):
            raise ValueError(f"unknown polytope kind {self.kind!r}")
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ValueError("box polytope requires lower/upper bounds")
            lo = np.array(self.lower, dtype=float).reshape(-1)
            hi = np.array(self.upper, dtype=float).reshape(-1)
            if lo.shape != (verts.shape[1],) or hi.shape != (verts.shape[1],):
                raise DimensionMismatch("box bounds must match the parameter dimension")
            if np.any(lo > hi):
                raise ValueError("box lower bounds must not exceed upper bounds")
            if verts.shape[0] != 2 ** lo.shape[0]:
                raise ValueError("box polytope must store all 2^p corner vertices")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_params(self) -> int:
        return self.vertices.shape[1]

    @classmethod
    def box(cls, lower, upper) -> "ParameterPolytope":
        lo = np.array(lower, dtype=float).reshape(-1)
        hi = np.array(upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 1:
            raise DimensionMismatch("box bounds must be 1-d vectors of equal length")
        if lo.size > MAX_PARAMETERS:
            raise ValueError(f"at most {MAX_PARAMETERS} parameters supported, got {lo.size}")
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        return cls(corners, "box", lo, hi)

    @classmethod
    def from_vertices(cls, vertices) -> "ParameterPolytope":
        return cls(np.array(vertices, dtype=float), "vertices")

    def membership(self, xi) -> tuple[bool, np.ndarray | None]:
        """Whether xi lies in the polytope, plus convex vertex weights when it does.

        Boxes are tested exactly against their bounds, with multilinear corner
        weights. Vertex lists solve the nonnegative least-squares feasibility
        problem for convex coefficients and accept residuals up to
        MEMBERSHIP_TOL.
        """
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.shape != (self.n_params,):
            raise DimensionMismatch(
                f"parameter must have length {self.n_params}, got {xi.shape[0]}"
            )
        if self.kind == "box":
            inside = bool(np.all(xi >= self.lower) and np.all(xi <= self.upper))
            return inside, self.box_weights(xi) if inside else None
        A = np.vstack([self.vertices.T, np.ones(self.n_vertices)])
        b = np.concatenate([xi, [1.0]])
        mu, resid = nnls(A, b)
        if resid > MEMBERSHIP_TOL:
            return False, None
        total = mu.sum()
        if total > 0.0:
            mu = mu / total
        return True, mu

    def box_weights(self, xi) -> np.ndarray:
        """Multilinear-interpolation convex weights of xi over the box corners."""
        if self.kind != "box":
            raise ValueError("box_weights requires a box polytope")
        xi = np.asarray(xi, dtype=float).reshape(-1)
        span = self.upper - self.lower
        w_hi = np.where(span > 0.0, (xi - self.lower) / np.where(span > 0.0, span, 1.0), 1.0)
        # Corner enumeration in box() picks the lower bound first for each
        # coordinate, so pick=0 carries weight (1 - w_hi[k]).
        weights = np.empty(self.n_vertices)
        for i, picks in enumerate(itertools.product(*[(0, 1)] * self.n_params)):
            w = 1.0
            for k, pick in enumerate(picks):
                w *= w_hi[k] if pick else 1.0 - w_hi[k]
            weights[i] = w
        return weights


@dataclass(frozen=True)
class LpvVertexSystem:
    """One LTI vertex: matrices A (nxn), Bw (nxm_w), B (nxm_u), C (qxn), D (qxm_w), E (qxm_u)."""

    A: np.ndarray
    Bw: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in _BLOCK_NAMES:
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise DimensionMismatch(f"{name} must be a 2-d matrix, got ndim {arr.ndim}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
            mats[name] = arr
        n = mats["A"].shape[0]
        if mats["A"].shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {mats['A'].shape}")
        m_w = mats["Bw"].shape[1]
        m_u = mats["B"].shape[1]
        q = mats["C"].shape[0]
        expected = {"Bw": (n, m_w), "B": (n, m_u), "C": (q, n), "D": (q, m_w), "E": (q, m_u)}
        for name, shape in expected.items():
            if mats[name].shape != shape:
                raise DimensionMismatch(
                    f"{name} must have shape {shape}, got {mats[name].shape}"
                )
        for name, arr in mats.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m_w(self) -> int:
        return self.Bw.shape[1]

    @property
    def m_u(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.C.shape[0]

    def same_dims(self, other: "LpvVertexSystem") -> bool:
        return (self.n, self.m_w, self.m_u, self.q) == (other.n, other.m_w, other.m_u, other.q)


def _combine(systems, weights) -> LpvVertexSystem:
    blocks = {
        name: sum(w * getattr(s, name) for s, w in zip(systems, weights))
        for name in _BLOCK_NAMES
    }
    return LpvVertexSystem(**blocks)


@dataclass(frozen=True)
class PolytopicLpvPlant:
    """Polytopic LPV plant in affine form (base + coefficients) or direct vertex form."""

    polytope: ParameterPolytope
    base: LpvVertexSystem | None = None
    coefficients: tuple[LpvVertexSystem, ...] | None = None
    vertex_systems: tuple[LpvVertexSystem, ...] | None = None
    name: str = ""

    def __post_init__(self):
        affine = self.base is not None
        direct = self.vertex_systems is not None
        if affine == direct:
            raise ValueError("plant must be either affine (base+coefficients) or direct (vertex_systems)")
        if affine:
            coeffs = tuple(self.coefficients or ())
            if len(coeffs) != self.polytope.n_params:
                raise DimensionMismatch(
                    f"affine form needs {self.polytope.n_params} coefficient blocks, got {len(coeffs)}"
                )
            for c in coeffs:
                if not self.base.same_dims(c):
                    raise DimensionMismatch("coefficient block dimensions differ from the base")
            object.__setattr__(self, "coefficients", coeffs)
        else:
            systems = tuple(self.vertex_systems)
            if len(systems) != self.polytope.n_vertices:
                raise DimensionMismatch(
                    f"direct form needs {self.polytope.n_vertices} vertex systems, got {len(systems)}"
                )
            for s in systems[1:]:
                if not systems[0].same_dims(s):
                    raise DimensionMismatch("vertex system dimensions are inconsistent")
            object.__setattr__(self, "vertex_systems", systems)

    @property
    def is_affine(self) -> bool:
        return self.base is not None

    @property
    def dims(self) -> tuple[int, int, int, int]:
        ref = self.base if self.is_affine else self.vertex_systems[0]
        return ref.n, ref.m_w, ref.m_u, ref.q


def instantiate_vertices(plant: PolytopicLpvPlant) -> list[LpvVertexSystem]:
    """Vertex systems P_i = P(xi_i) (affine form) or the stored list (direct form)."""
    if not plant.is_affine:
        return list(plant.vertex_systems)
    out = []
    for xi in plant.polytope.vertices:
        out.append(_combine([plant.base, *plant.coefficients], [1.0, *xi]))
    return out


def evaluate(plant: PolytopicLpvPlant, xi) -> LpvVertexSystem:
    """P(xi) for xi inside the polytope; raises ParameterOutOfRegion otherwise."""
    inside, mu = plant.polytope.membership(xi)
    if not inside:
        raise ParameterOutOfRegion(f"parameter {np.asarray(xi).tolist()} is outside the polytope")
    if plant.is_affine:
        xi = np.asarray(xi, dtype=float).reshape(-1)
        return _combine([plant.base, *plant.coefficients], [1.0, *xi])
    return _combine(plant.vertex_systems, mu)


@dataclass(frozen=True)
class ClosedLoopVertex:
    """Closed-loop vertex under u = K x: Ac = A + B K, Bc = Bw, Cc = C + E K, Dc = D."""

    Ac: np.ndarray
    Bc: np.ndarray
    Cc: np.ndarray
    Dc: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("Ac", "Bc", "Cc", "Dc"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise DimensionMismatch(f"{name} must be a 2-d matrix")
            mats[name] = arr
        n = mats["Ac"].shape[0]
        if mats["Ac"].shape != (n, n):
            raise DimensionMismatch("Ac must be square")
        m_w = mats["Bc"].shape[1]
        q = mats["Cc"].shape[0]
        if mats["Bc"].shape != (n, m_w) or mats["Cc"].shape != (q, n) or mats["Dc"].shape != (q, m_w):
            raise DimensionMismatch("closed-loop block dimensions are inconsistent")
        for name, arr in mats.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.Ac.shape[0]


def close_loop(vertex: LpvVertexSystem, K) -> ClosedLoopVertex:
    """Apply static state feedback u = K x to one vertex."""
    K = np.asarray(K, dtype=float)
    if K.shape != (vertex.m_u, vertex.n):
        raise DimensionMismatch(
            f"K must have shape ({vertex.m_u}, {vertex.n}), got {K.shape}"
        )
    return ClosedLoopVertex(
        Ac=vertex.A + vertex.B @ K,
        Bc=vertex.Bw,
        Cc=vertex.C + vertex.E @ K,
        Dc=vertex.D,
    )
