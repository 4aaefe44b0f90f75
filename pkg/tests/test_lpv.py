import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpvh2.errors import DimensionMismatch, ParameterOutOfRegion
from lpvh2.lpv import (
    MAX_PARAMETERS,
    ClosedLoopVertex,
    LpvVertexSystem,
    ParameterPolytope,
    PolytopicLpvPlant,
    close_loop,
    evaluate,
    instantiate_vertices,
)


def scalar_system(a, bw=1.0, b=1.0):
    return LpvVertexSystem(
        A=np.array([[a]]),
        Bw=np.array([[bw]]),
        B=np.array([[b]]),
        C=np.array([[1.0], [0.0]]),
        D=np.zeros((2, 1)),
        E=np.array([[0.0], [1.0]]),
    )


def random_system(rng, n=3, m_w=2, m_u=2, q=4):
    return LpvVertexSystem(
        A=rng.standard_normal((n, n)),
        Bw=rng.standard_normal((n, m_w)),
        B=rng.standard_normal((n, m_u)),
        C=rng.standard_normal((q, n)),
        D=np.zeros((q, m_w)),
        E=rng.standard_normal((q, m_u)),
    )


# -------------------------------------------------------------- polytope


def test_box_vertex_count_and_order():
    pol = ParameterPolytope.box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    assert pol.kind == "box"
    assert pol.vertices.shape == (4, 2)
    assert np.array_equal(pol.vertices, [[0, 0], [0, 1], [1, 0], [1, 1]])


@given(st.integers(1, 4))
def test_box_vertex_count_power_of_two(p):
    pol = ParameterPolytope.box(-np.ones(p), np.ones(p))
    assert pol.vertices.shape == (2**p, p)
    assert len({tuple(v) for v in pol.vertices}) == 2**p


def test_box_rejects_too_many_parameters():
    p = MAX_PARAMETERS + 1
    with pytest.raises(ValueError):
        ParameterPolytope.box(-np.ones(p), np.ones(p))


def test_box_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        ParameterPolytope.box(np.array([1.0]), np.array([0.0]))


def test_box_membership_exact_bounds():
    pol = ParameterPolytope.box(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
    inside, mu = pol.membership(np.array([0.5, 1.0]))
    assert inside
    assert mu is not None and abs(mu.sum() - 1.0) < 1e-12
    assert np.allclose(mu @ pol.vertices, [0.5, 1.0], atol=1e-12)
    on_edge, _ = pol.membership(np.array([1.0, 2.0]))
    assert on_edge
    outside, mu = pol.membership(np.array([1.0 + 1e-9, 1.0]))
    assert not outside and mu is None


def test_vertex_list_membership_feasibility():
    # triangle in the plane
    pol = ParameterPolytope.from_vertices(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    inside, mu = pol.membership(np.array([0.25, 0.25]))
    assert inside
    assert np.allclose(mu @ pol.vertices, [0.25, 0.25], atol=1e-8)
    outside, _ = pol.membership(np.array([0.8, 0.8]))
    assert not outside


@settings(max_examples=50)
@given(
    st.floats(-1.0, 1.0, allow_nan=False),
    st.floats(-1.0, 1.0, allow_nan=False),
)
def test_box_weights_reconstruct_point(x, y):
    pol = ParameterPolytope.box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    inside, mu = pol.membership(np.array([x, y]))
    assert inside
    assert mu.min() >= -1e-15
    assert abs(mu.sum() - 1.0) < 1e-12
    assert np.allclose(mu @ pol.vertices, [x, y], atol=1e-12)


# ---------------------------------------------------------- vertex system


def test_system_dimension_validation():
    with pytest.raises(DimensionMismatch):
        LpvVertexSystem(
            A=np.zeros((2, 2)),
            Bw=np.zeros((3, 1)),  # row mismatch
            B=np.zeros((2, 1)),
            C=np.zeros((1, 2)),
            D=np.zeros((1, 1)),
            E=np.zeros((1, 1)),
        )
    with pytest.raises(DimensionMismatch):
        LpvVertexSystem(
            A=np.zeros((2, 2)),
            Bw=np.zeros((2, 1)),
            B=np.zeros((2, 1)),
            C=np.zeros((1, 2)),
            D=np.zeros((2, 1)),  # q mismatch
            E=np.zeros((1, 1)),
        )


def test_system_dims_property():
    sys = scalar_system(-1.0)
    assert sys.n == 1 and sys.m_w == 1 and sys.m_u == 1 and sys.q == 2


# ----------------------------------------------------------------- plant


def test_plant_requires_exactly_one_form():
    pol = ParameterPolytope.from_vertices(np.array([[0.0]]))
    v = scalar_system(-1.0)
    with pytest.raises(ValueError):
        PolytopicLpvPlant(polytope=pol)
    with pytest.raises(ValueError):
        PolytopicLpvPlant(polytope=pol, base=v, coefficients=(v,), vertex_systems=(v,))


def test_constant_dependence_vertices_identical():
    pol = ParameterPolytope.box(np.array([-1.0]), np.array([1.0]))
    base = scalar_system(-2.0)
    zero = scalar_system(0.0, bw=0.0, b=0.0)
    zero = LpvVertexSystem(
        A=np.zeros((1, 1)), Bw=np.zeros((1, 1)), B=np.zeros((1, 1)),
        C=np.zeros((2, 1)), D=np.zeros((2, 1)), E=np.zeros((2, 1)),
    )
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=(zero,))
    verts = instantiate_vertices(plant)
    assert len(verts) == 2
    for v in verts:
        assert np.array_equal(v.A, base.A)
        assert np.array_equal(v.C, base.C)


def test_affine_scalar_endpoint_instantiation():
    # A(xi) = -1 + xi on [0, 0.5] -> vertex values {-1, -0.5}
    pol = ParameterPolytope.box(np.array([0.0]), np.array([0.5]))
    base = scalar_system(-1.0)
    coef = LpvVertexSystem(
        A=np.array([[1.0]]), Bw=np.zeros((1, 1)), B=np.zeros((1, 1)),
        C=np.zeros((2, 1)), D=np.zeros((2, 1)), E=np.zeros((2, 1)),
    )
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=(coef,))
    a_values = sorted(v.A[0, 0] for v in instantiate_vertices(plant))
    assert a_values == [-1.0, -0.5]
    assert evaluate(plant, np.array([0.5])).A[0, 0] == -0.5
    # affine midpoint on [0, 1] scaled: A(0.25) = -0.75
    assert np.isclose(evaluate(plant, np.array([0.25])).A[0, 0], -0.75)


def test_affinity_midpoint_property():
    rng = np.random.default_rng(8)
    pol = ParameterPolytope.box(-np.ones(3), np.ones(3))
    base = random_system(rng)
    coefs = tuple(random_system(rng) for _ in range(3))
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=coefs)
    for _ in range(20):
        x1 = rng.uniform(-1, 1, 3)
        x2 = rng.uniform(-1, 1, 3)
        mid = evaluate(plant, (x1 + x2) / 2)
        p1 = evaluate(plant, x1)
        p2 = evaluate(plant, x2)
        for name in ("A", "Bw", "B", "C", "D", "E"):
            avg = (getattr(p1, name) + getattr(p2, name)) / 2
            assert np.abs(getattr(mid, name) - avg).max() < 1e-12


def test_evaluate_at_vertex_matches_instantiation():
    rng = np.random.default_rng(9)
    pol = ParameterPolytope.box(np.array([-1.0, 0.5]), np.array([2.0, 3.0]))
    base = random_system(rng)
    coefs = tuple(random_system(rng) for _ in range(2))
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=coefs)
    verts = instantiate_vertices(plant)
    for xi, vert in zip(plant.polytope.vertices, verts):
        direct = evaluate(plant, xi)
        assert np.abs(direct.A - vert.A).max() < 1e-12


def test_evaluate_outside_region():
    pol = ParameterPolytope.box(np.array([0.0]), np.array([1.0]))
    base = scalar_system(-1.0)
    coef = LpvVertexSystem(
        A=np.array([[1.0]]), Bw=np.zeros((1, 1)), B=np.zeros((1, 1)),
        C=np.zeros((2, 1)), D=np.zeros((2, 1)), E=np.zeros((2, 1)),
    )
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=(coef,))
    with pytest.raises(ParameterOutOfRegion):
        evaluate(plant, np.array([1.5]))


def test_direct_form_barycentric_evaluation():
    pol = ParameterPolytope.from_vertices(np.array([[0.0], [1.0]]))
    plant = PolytopicLpvPlant(
        polytope=pol, vertex_systems=(scalar_system(-1.0), scalar_system(-3.0)), name="pair"
    )
    mid = evaluate(plant, np.array([0.5]))
    assert np.isclose(mid.A[0, 0], -2.0, atol=1e-8)


def test_direct_form_vertex_count_checked():
    pol = ParameterPolytope.from_vertices(np.array([[0.0], [1.0]]))
    with pytest.raises(DimensionMismatch):
        PolytopicLpvPlant(polytope=pol, vertex_systems=(scalar_system(-1.0),))


# ------------------------------------------------------------ closed loop


def test_close_loop_zero_gain_is_open_loop():
    sys = scalar_system(-1.5)
    cl = close_loop(sys, np.zeros((1, 1)))
    assert np.array_equal(cl.Ac, sys.A)
    assert np.array_equal(cl.Cc, sys.C)
    assert np.array_equal(cl.Bc, sys.Bw)
    assert np.array_equal(cl.Dc, sys.D)


def test_close_loop_scalar():
    sys = scalar_system(0.0)
    cl = close_loop(sys, np.array([[-2.0]]))
    assert cl.Ac[0, 0] == -2.0


def test_close_loop_reconstruction_invariant():
    rng = np.random.default_rng(12)
    for _ in range(50):
        sys = random_system(rng)
        K = rng.standard_normal((sys.m_u, sys.n))
        cl = close_loop(sys, K)
        assert np.abs(cl.Ac - (sys.A + sys.B @ K)).max() == 0.0
        assert np.abs(cl.Cc - (sys.C + sys.E @ K)).max() == 0.0


def test_close_loop_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        close_loop(scalar_system(-1.0), np.zeros((1, 2)))


# --------------------------------------------- convexity vertex reduction


def test_max_eig_sym_attains_max_at_vertex():
    # lambda_max of sym(A(xi)) is convex in xi for affine A, so a coarse grid
    # never beats the vertex maximum
    rng = np.random.default_rng(15)
    pol = ParameterPolytope.box(-np.ones(2), np.ones(2))
    base = random_system(rng, n=4)
    coefs = tuple(random_system(rng, n=4) for _ in range(2))
    plant = PolytopicLpvPlant(polytope=pol, base=base, coefficients=coefs)

    def max_eig(xi):
        A = evaluate(plant, xi).A
        return np.linalg.eigvalsh((A + A.T) / 2).max()

    vertex_max = max(max_eig(v) for v in pol.vertices)
    grid = np.linspace(-1.0, 1.0, 15)
    grid_max = max(max_eig(np.array([a, b])) for a in grid for b in grid)
    assert grid_max <= vertex_max + 1e-9
