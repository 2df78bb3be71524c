"""Standard simplicial complexes with edge lengths."""
from __future__ import annotations

import itertools

import numpy as np

from .regge import EdgeLengths, SimplicialComplex


def lengths_from_coordinates(K: SimplicialComplex, coords: dict) -> EdgeLengths:
    return EdgeLengths({frozenset(e): float(np.sum((np.asarray(coords[e[0]]) - np.asarray(coords[e[1]])) ** 2))
                        for e in K.edges})


def unit_lengths(K: SimplicialComplex, value: float = 1.0) -> EdgeLengths:
    return EdgeLengths({frozenset(e): value for e in K.edges})


def perturbed(K: SimplicialComplex, lengths: EdgeLengths, seed: int, amount: float = 0.05) -> EdgeLengths:
    """Multiply every squared length by ``1 + amount * U(-1, 1)`` (seeded, in edge order)."""
    rng = np.random.default_rng(seed)
    factors = 1.0 + amount * rng.uniform(-1.0, 1.0, size=len(K.edges))
    return EdgeLengths({frozenset(e): lengths[e] * f for e, f in zip(K.edges, factors)})


def vertex_star(count: int, spoke_sq=None, rim_sq=None) -> tuple[SimplicialComplex, EdgeLengths]:
    """``count`` triangles around vertex ``"c"`` with rim vertices ``"r0".."r{count-1}"``."""
    rim = [f"r{i}" for i in range(count)]
    tris = [("c", rim[i], rim[(i + 1) % count]) for i in range(count)]
    K = SimplicialComplex.from_maximal(tris, ["c"] + rim)
    spoke_sq = [1.0] * count if spoke_sq is None else list(spoke_sq)
    rim_sq = [1.0] * count if rim_sq is None else list(rim_sq)
    values = {}
    for i in range(count):
        values[frozenset(("c", rim[i]))] = spoke_sq[i]
        values[frozenset((rim[i], rim[(i + 1) % count]))] = rim_sq[i]
    return K, EdgeLengths(values)


def icosahedron() -> tuple[SimplicialComplex, EdgeLengths]:
    """Regular icosahedron with unit edges."""
    p = (1 + 5 ** 0.5) / 2
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [(0, s1, s2 * p), (s1, s2 * p, 0), (s2 * p, 0, s1)]
    pts = np.array(pts, dtype=float)
    names = [f"v{i}" for i in range(12)]
    d2 = np.sum((pts[:, None] - pts[None]) ** 2, axis=-1)
    adj = np.isclose(d2, 4.0)
    tris = [(names[i], names[j], names[k]) for i, j, k in itertools.combinations(range(12), 3)
            if adj[i, j] and adj[j, k] and adj[i, k]]
    K = SimplicialComplex.from_maximal(tris, names)
    return K, unit_lengths(K)


def boundary_4simplex() -> tuple[SimplicialComplex, EdgeLengths]:
    names = [f"v{i}" for i in range(5)]
    K = SimplicialComplex.from_maximal(itertools.combinations(names, 4), names)
    return K, unit_lengths(K)


def cross_polytope_boundary() -> tuple[SimplicialComplex, EdgeLengths]:
    """Boundary of the 16-cell: vertices ``±e_i`` in R^4, edge length^2 = 2."""
    names = [f"{s}{i}" for i in range(4) for s in "pm"]
    coords = {}
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1.0
        coords[f"p{i}"] = e
        coords[f"m{i}"] = -e
    tets = [tuple(f"{s}{i}" for i, s in enumerate(signs)) for signs in itertools.product("pm", repeat=4)]
    K = SimplicialComplex.from_maximal(tets, names)
    return K, lengths_from_coordinates(K, coords)


def bipyramid_boundary(height: float = 0.8) -> tuple[SimplicialComplex, EdgeLengths]:
    """Boundary of a 4D bipyramid over a regular tetrahedron (8 tetrahedra)."""
    base = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(8)
    names = ["b0", "b1", "b2", "b3", "n", "s"]
    coords = {f"b{i}": np.append(base[i], 0.0) for i in range(4)}
    coords["n"] = np.array([0, 0, 0, height])
    coords["s"] = np.array([0, 0, 0, -height])
    tets = [tri + (apex,) for tri in itertools.combinations(names[:4], 3) for apex in ("n", "s")]
    K = SimplicialComplex.from_maximal(tets, names)
    return K, lengths_from_coordinates(K, coords)


def flat_grid(n: int, seed=None, jitter: float = 0.15) -> tuple[SimplicialComplex, EdgeLengths, dict]:
    """Triangulated ``n x n`` vertex grid in the plane.

    With a seed, interior vertices are moved randomly within the plane, so the
    metric stays flat. Returns the complex, lengths and coordinates.
    """
    rng = np.random.default_rng(seed)
    coords = {}
    for i in range(n):
        for j in range(n):
            p = np.array([i, j], dtype=float)
            if seed is not None and 0 < i < n - 1 and 0 < j < n - 1:
                p += jitter * rng.uniform(-1, 1, size=2)
            coords[f"g{i}_{j}"] = p
    tris = []
    for i in range(n - 1):
        for j in range(n - 1):
            a, b = f"g{i}_{j}", f"g{i + 1}_{j}"
            c, d = f"g{i}_{j + 1}", f"g{i + 1}_{j + 1}"
            tris += [(a, b, d), (a, d, c)]
    K = SimplicialComplex.from_maximal(tris, list(coords))
    return K, lengths_from_coordinates(K, coords), coords
