import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from holoregge import complexes as cx
from holoregge.errors import BoundaryHingeError, InvalidComplexError, NotRealizableError
from holoregge.regge import (
    EdgeLengths,
    SimplicialComplex,
    action_gradient,
    complex_from_json,
    complex_to_json,
    critical_point_search,
    curvature_measure,
    deficit_angle,
    dihedral_angle,
    gram,
    interior_hinges,
    regge_action,
    simplex_volume,
    write_action_csv,
)

D4 = 2 * math.pi - 3 * math.acos(1.0 / 3.0)


def cayley_menger_volume(points) -> float:
    P = np.asarray(points, dtype=float)
    k = len(P) - 1
    D = np.sum((P[:, None] - P[None]) ** 2, axis=-1)
    M = np.ones((k + 2, k + 2))
    M[0, 0] = 0.0
    M[1:, 1:] = D
    vol2 = (-1) ** (k + 1) * np.linalg.det(M) / (2 ** k * math.factorial(k) ** 2)
    return math.sqrt(max(vol2, 0.0))


def embedded_dihedral(points, hinge_idx, other_idx) -> float:
    """Angle between the two facets, from coordinates."""
    P = np.asarray(points, dtype=float)
    H = P[list(hinge_idx)]
    base = H[0]
    B = (H[1:] - base).T
    if B.size:
        Qm, _ = np.linalg.qr(B)
        proj = lambda v: v - Qm @ (Qm.T @ v)
    else:
        proj = lambda v: v
    u = proj(P[other_idx[0]] - base)
    w = proj(P[other_idx[1]] - base)
    return math.acos(np.clip(u @ w / (np.linalg.norm(u) * np.linalg.norm(w)), -1, 1))


def tetra_complex(points):
    names = [f"p{i}" for i in range(len(points))]
    K = SimplicialComplex.from_maximal([names], names)
    coords = dict(zip(names, points))
    return K, cx.lengths_from_coordinates(K, coords), names


def flat_edge_star(count=7, seed=0):
    """Tetrahedra around a vertical edge with ring vertices in the plane z = 0."""
    rng = np.random.default_rng(seed)
    angles = np.linspace(0, 2 * np.pi, count, endpoint=False) + 0.2 * rng.uniform(-1, 1, count)
    coords = {"a": np.array([0.1, -0.05, -1.0]), "b": np.array([-0.05, 0.1, 1.2])}
    ring = []
    for i, t in enumerate(angles):
        name = f"r{i}"
        coords[name] = np.array([np.cos(t), np.sin(t), 0.0]) * (1 + 0.2 * rng.uniform())
        ring.append(name)
    tets = [("a", "b", ring[i], ring[(i + 1) % count]) for i in range(count)]
    K = SimplicialComplex.from_maximal(tets, ["a", "b"] + ring)
    return K, cx.lengths_from_coordinates(K, coords)


# complex validation

def test_missing_face_rejected():
    with pytest.raises(InvalidComplexError):
        SimplicialComplex(["a", "b", "c"], [("a", "b", "c"), ("a",), ("b",), ("c",), ("a", "b")])


def test_mixed_dimensions_rejected():
    with pytest.raises(InvalidComplexError):
        SimplicialComplex.from_maximal([("a", "b", "c"), ("c", "d")])


def test_non_positive_length_rejected():
    with pytest.raises(InvalidComplexError):
        EdgeLengths({frozenset(("a", "b")): 0.0})


def test_combinatorics_of_standard_complexes():
    K, _ = cx.boundary_4simplex()
    assert len(K.top) == 5 and len(K.edges) == 10 and K.top_dim == 3
    K, _ = cx.icosahedron()
    assert len(K.top) == 20 and len(K.vertices) == 12 and K.orientable
    K, _ = cx.cross_polytope_boundary()
    assert len(K.top) == 16 and len(K.edges) == 24


def test_unrealizable_triangle():
    K = SimplicialComplex.from_maximal([("a", "b", "c")])
    L = EdgeLengths({frozenset("ab"): 1.0, frozenset("bc"): 1.0, frozenset("ac"): 4.5})
    with pytest.raises(NotRealizableError):
        simplex_volume(("a", "b", "c"), L)


def test_boundary_hinge_has_no_deficit():
    K, L, _ = cx.flat_grid(3)
    with pytest.raises(BoundaryHingeError):
        deficit_angle(K, ("g0_0",), L)


# geometry against coordinate oracles

@given(st.lists(st.floats(-2, 2), min_size=12, max_size=12))
def test_volume_matches_cayley_menger(flat):
    P = np.array(flat).reshape(4, 3)
    vol = abs(np.linalg.det(P[1:] - P[0])) / 6
    assume(vol > 1e-2)
    K, L, names = tetra_complex(P)
    assert simplex_volume(tuple(names), L) == pytest.approx(cayley_menger_volume(P), rel=1e-9)
    assert simplex_volume(tuple(names), L) == pytest.approx(vol, rel=1e-9)


@given(st.lists(st.floats(-2, 2), min_size=12, max_size=12))
def test_dihedral_matches_embedding(flat):
    P = np.array(flat).reshape(4, 3)
    assume(abs(np.linalg.det(P[1:] - P[0])) / 6 > 5e-2)
    K, L, names = tetra_complex(P)
    for i, j in itertools.combinations(range(4), 2):
        others = [k for k in range(4) if k not in (i, j)]
        got = dihedral_angle(tuple(names), (names[i], names[j]), L)
        assert got == pytest.approx(embedded_dihedral(P, (i, j), others), abs=1e-9)


def test_dihedral_in_4d_simplex_matches_embedding():
    P = np.random.default_rng(3).normal(size=(5, 4))
    names = [f"p{i}" for i in range(5)]
    K = SimplicialComplex.from_maximal([names], names)
    L = cx.lengths_from_coordinates(K, dict(zip(names, P)))
    got = dihedral_angle(tuple(names), tuple(names[:3]), L)
    assert got == pytest.approx(embedded_dihedral(P, (0, 1, 2), (3, 4)), abs=1e-10)


def test_gram_base_independence():
    P = np.random.default_rng(5).normal(size=(4, 3))
    K, L, names = tetra_complex(P)
    dets = [np.linalg.det(gram(names, L, base=b)) for b in names]
    np.testing.assert_allclose(dets, dets[0], rtol=1e-10)


def test_regular_tetrahedron_dihedral():
    K, L = cx.boundary_4simplex()
    assert dihedral_angle(K.top[0], K.top[0][:2], L) == pytest.approx(math.acos(1 / 3), abs=1e-14)


# deficits

def test_five_triangle_star_deficit():
    K, L = cx.vertex_star(5)
    assert deficit_angle(K, ("c",), L) == pytest.approx(math.pi / 3, abs=1e-12)


def test_six_triangle_star_is_flat():
    K, L = cx.vertex_star(6)
    assert abs(deficit_angle(K, ("c",), L)) <= 1e-12


def test_boundary_4simplex_deficits():
    K, L = cx.boundary_4simplex()
    ds = [deficit_angle(K, h, L) for h in interior_hinges(K)]
    assert len(ds) == 10
    np.testing.assert_allclose(ds, D4, atol=1e-9)
    # frozen value of the closed form
    assert D4 == pytest.approx(2.5903070551572618, abs=1e-15)


def test_icosahedron_gauss_bonnet():
    K, L = cx.icosahedron()
    assert math.fsum(deficit_angle(K, h, L) for h in interior_hinges(K)) == pytest.approx(4 * math.pi, abs=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_perturbed_icosahedron_gauss_bonnet(seed):
    K, L = cx.icosahedron()
    L = cx.perturbed(K, L, seed, 0.1)
    assert math.fsum(deficit_angle(K, h, L) for h in interior_hinges(K)) == pytest.approx(4 * math.pi, abs=1e-9)


def test_flat_3d_edge_star_has_zero_deficit():
    K, L = flat_edge_star()
    assert interior_hinges(K) == [("a", "b")]
    assert abs(deficit_angle(K, ("a", "b"), L)) <= 1e-12


# action

def test_flat_grid_action_and_gradient_vanish():
    K, L, _ = cx.flat_grid(5, seed=1)
    assert abs(regge_action(K, L).total) <= 1e-12
    g = action_gradient(K, L, "schlafli")
    assert max(abs(v) for v in g.values()) <= 1e-12


def test_boundary_4simplex_action():
    K, L = cx.boundary_4simplex()
    S = regge_action(K, L).total
    assert S == pytest.approx(10 * D4, abs=1e-9)
    assert S == pytest.approx(25.903070551572618, abs=1e-12)


def test_cone_action_uses_unit_vertex_area():
    K, L = cx.vertex_star(5)
    assert regge_action(K, L).total == pytest.approx(math.pi / 3, abs=1e-12)


def test_label_invariance():
    K, L = cx.boundary_4simplex()
    L = cx.perturbed(K, L, 4)
    mapping = {v: f"x{(i * 3) % 5}" for i, v in enumerate(K.vertices)}
    K2 = K.relabel(mapping)
    L2 = EdgeLengths({frozenset(mapping[v] for v in e): val for e, val in L.values.items()})
    assert regge_action(K2, L2).total == pytest.approx(regge_action(K, L).total, abs=1e-12)


@given(st.floats(0.1, 10.0))
def test_scaling_behaviour(lam):
    K, L = cx.cross_polytope_boundary()
    L = cx.perturbed(K, L, 2)
    Ls = L.scaled(lam)
    for h in interior_hinges(K)[:6]:
        assert deficit_angle(K, h, Ls) == pytest.approx(deficit_angle(K, h, L), abs=1e-10)
        assert simplex_volume(h, Ls) == pytest.approx(math.sqrt(lam) * simplex_volume(h, L), rel=1e-10)


# curvature measure

def test_measure_of_one_is_action():
    K, L = cx.boundary_4simplex()
    L = cx.perturbed(K, L, 1)
    one = curvature_measure(K, L, lambda h, b: np.ones(len(b)))
    assert one == pytest.approx(regge_action(K, L).total, abs=1e-12)
    assert curvature_measure(K, L, lambda h, b: np.zeros(len(b))) == 0.0


def test_measure_is_local():
    K, L = cx.boundary_4simplex()
    L = cx.perturbed(K, L, 2)
    target = interior_hinges(K)[3]
    val = curvature_measure(K, L, lambda h, b: np.full(len(b), 1.0 if h == target else 0.0))
    rec = [r for r in regge_action(K, L).hinges if r.hinge == target][0]
    assert val == pytest.approx(rec.deficit * rec.area, abs=1e-14)


def test_measure_integrates_linear_functions_exactly():
    K, L = cx.boundary_4simplex()
    coords = {v: float(i) for i, v in enumerate(K.vertices)}

    def psi(h, bary):
        return bary @ np.array([coords[v] for v in h])

    expected = math.fsum(D4 * 1.0 * 0.5 * (coords[u] + coords[v]) for u, v in interior_hinges(K))
    assert curvature_measure(K, L, psi) == pytest.approx(expected, abs=1e-12)


# gradient

@pytest.mark.parametrize("builder,seed", [(cx.boundary_4simplex, 0), (cx.cross_polytope_boundary, 1),
                                          (cx.bipyramid_boundary, 2)])
def test_fd_and_schlafli_gradients_agree(builder, seed):
    K, L = builder()
    L = cx.perturbed(K, L, seed)
    fd = action_gradient(K, L, "fd")
    sch = action_gradient(K, L, "schlafli")
    scale = max(abs(v) for v in sch.values())
    assert max(abs(fd[e] - sch[e]) for e in K.edges) <= 1e-5 * scale


def test_symmetric_gradient_on_regular_4simplex():
    K, L = cx.boundary_4simplex()
    fd = action_gradient(K, L, "fd")
    sch = action_gradient(K, L, "schlafli")
    for e in K.edges:
        assert fd[e] == pytest.approx(sch[e], rel=1e-6)
        # d a / d l^2 = 1 / (2 l) with l = 1
        assert sch[e] == pytest.approx(0.5 * D4, rel=1e-12)


# critical points

def test_flat_start_is_already_critical():
    K, L, _ = cx.flat_grid(4, seed=3)
    free = [e for e in K.edges if sum(set(e) <= set(t) for t in K.top) == 2]
    res = critical_point_search(K, L, free)
    assert res.iterations == 0
    assert max(abs(deficit_angle(K, h, res.lengths)) for h in interior_hinges(K)) <= 1e-8


def test_critical_point_one_free_edge():
    K, L = cx.boundary_4simplex()
    L = cx.perturbed(K, L, 0)
    res = critical_point_search(K, L, [K.edges[0]], tol=1e-9)
    assert res.gradient_norm <= 1e-9
    g = action_gradient(K, res.lengths, "fd", [K.edges[0]])
    assert abs(g[K.edges[0]]) <= 1e-6


# serialization

def test_json_round_trip(tmp_path):
    K, L = cx.icosahedron()
    data = complex_to_json(K, L)
    K2, L2 = complex_from_json(json.loads(json.dumps(data)))
    assert K2.simplices == K.simplices
    assert all(L2[e] == L[e] for e in K.edges)


def test_json_unknown_key_rejected():
    data = complex_to_json(*cx.boundary_4simplex())
    data["extra"] = 1
    with pytest.raises(InvalidComplexError):
        complex_from_json(data)


def test_action_csv(tmp_path):
    K, L = cx.vertex_star(5)
    path = tmp_path / "action.csv"
    write_action_csv(regge_action(K, L), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "hinge,thetas,deficit,area"
    assert lines[1].startswith("c,")
