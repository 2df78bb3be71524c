"""Regge calculus on abstract simplicial complexes with squared edge lengths."""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BoundaryHingeError,
    InvalidComplexError,
    NoConvergenceError,
    NotRealizableError,
)

Vertex = Hashable
Simplex = tuple


class SimplicialComplex:
    """Finite family of vertex sets, closed under taking non-empty subsets.

    Simplices are stored as tuples sorted by vertex position in
    ``vertices``. ``top_dim`` is the common dimension of maximal simplices.
    """

    def __init__(self, vertices: Sequence[Vertex], simplices: Iterable[Iterable[Vertex]]):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise InvalidComplexError("duplicate vertex names")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        family = set()
        for s in simplices:
            s = tuple(s)
            if not s:
                raise InvalidComplexError("empty simplex")
            if len(set(s)) != len(s):
                raise InvalidComplexError(f"repeated vertex in simplex {s}")
            for v in s:
                if v not in self.index:
                    raise InvalidComplexError(f"unknown vertex {v!r}")
            family.add(self.canonical(s))
        for s in family:
            for k in range(1, len(s)):
                for face in itertools.combinations(s, k):
                    if face not in family:
                        raise InvalidComplexError(f"face {face} of {s} missing (not closed under subsets)")
        self.simplices = frozenset(family)
        maximal = [s for s in family if not any(len(t) > len(s) and set(s) <= set(t) for t in family)]
        dims = {len(s) - 1 for s in maximal}
        if len(dims) != 1:
            raise InvalidComplexError("maximal simplices have different dimensions")
        self.top_dim = dims.pop()
        self.top = tuple(sorted(maximal, key=self._key))
        self.orientable = self._orientable()

    @classmethod
    def from_maximal(cls, maximal: Iterable[Iterable[Vertex]], vertices: Optional[Sequence[Vertex]] = None):
        maximal = [tuple(s) for s in maximal]
        if vertices is None:
            seen = []
            for s in maximal:
                for v in s:
                    if v not in seen:
                        seen.append(v)
            vertices = seen
        closure = set()
        for s in maximal:
            for k in range(1, len(s) + 1):
                closure.update(itertools.combinations(s, k))
        return cls(vertices, closure)

    def _key(self, s):
        return tuple(self.index[v] for v in s)

    def canonical(self, s) -> Simplex:
        return tuple(sorted(s, key=self.index.__getitem__))

    def of_dim(self, k: int) -> list:
        return sorted((s for s in self.simplices if len(s) == k + 1), key=self._key)

    @property
    def edges(self) -> list:
        return self.of_dim(1)

    def hinges(self) -> list:
        return self.of_dim(self.top_dim - 2)

    def star(self, hinge) -> list:
        hs = set(hinge)
        return [t for t in self.top if hs <= set(t)]

    def link_cycle(self, hinge) -> Optional[list]:
        """Star of ``hinge`` ordered cyclically around it, or ``None`` if the link is not a circle."""
        hs = set(hinge)
        star = self.star(hinge)
        if len(star) < 3:
            return None
        pairs = [tuple(v for v in t if v not in hs) for t in star]
        adj: dict = {}
        for i, (u, v) in enumerate(pairs):
            adj.setdefault(u, []).append(i)
            adj.setdefault(v, []).append(i)
        if any(len(ix) != 2 for ix in adj.values()):
            return None
        order = [0]
        shared = pairs[0][1]
        while True:
            nxt = [i for i in adj[shared] if i != order[-1]][0]
            if nxt == 0:
                break
            order.append(nxt)
            u, v = pairs[nxt]
            shared = v if u == shared else u
        if len(order) != len(star):
            return None
        return [star[i] for i in order]

    def is_interior(self, hinge) -> bool:
        return self.link_cycle(hinge) is not None

    def _orientable(self) -> bool:
        n = self.top_dim
        if n == 0:
            return True
        facets: dict = {}
        for ti, t in enumerate(self.top):
            for j in range(n + 1):
                face = t[:j] + t[j + 1:]
                facets.setdefault(face, []).append((ti, (-1) ** j))
        sign = {0: 1}
        queue = [0]
        neighbours: dict = {}
        for face, inc in facets.items():
            if len(inc) > 2:
                return False
            if len(inc) == 2:
                (a, sa), (b, sb) = inc
                neighbours.setdefault(a, []).append((b, sa, sb))
                neighbours.setdefault(b, []).append((a, sb, sa))
        while queue:
            a = queue.pop()
            for b, sa, sb in neighbours.get(a, []):
                want = -sign[a] * sa * sb
                if b in sign:
                    if sign[b] != want:
                        return False
                else:
                    sign[b] = want
                    queue.append(b)
            if not queue:
                rest = [i for i in range(len(self.top)) if i not in sign]
                if rest:
                    sign[rest[0]] = 1
                    queue.append(rest[0])
        return True

    def relabel(self, mapping: dict) -> "SimplicialComplex":
        return SimplicialComplex([mapping[v] for v in self.vertices],
                                 [[mapping[v] for v in s] for s in self.simplices])


@dataclass
class EdgeLengths:
    """Squared edge lengths keyed by unordered vertex pairs."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = {frozenset(k): float(v) for k, v in dict(self.values).items()}
        for k, v in self.values.items():
            if len(k) != 2:
                raise InvalidComplexError(f"edge key {tuple(k)} is not a vertex pair")
            if not (v > 0 and math.isfinite(v)):
                raise InvalidComplexError(f"squared length of {tuple(k)} must be positive, got {v}")

    def __getitem__(self, edge) -> float:
        return self.values[frozenset(edge)]

    def get(self, u, v) -> float:
        try:
            return self.values[frozenset((u, v))]
        except KeyError:
            raise InvalidComplexError(f"no length for edge {u}-{v}") from None

    def with_value(self, edge, value: float) -> "EdgeLengths":
        new = dict(self.values)
        new[frozenset(edge)] = value
        out = EdgeLengths.__new__(EdgeLengths)
        out.values = new
        return out

    def scaled(self, lam: float) -> "EdgeLengths":
        return EdgeLengths({k: lam * v for k, v in self.values.items()})

    def check_complex(self, K: SimplicialComplex) -> None:
        for e in K.edges:
            if frozenset(e) not in self.values:
                raise InvalidComplexError(f"edge {e} has no length")


def gram(simplex, lengths: EdgeLengths, base=None) -> np.ndarray:
    """Gram matrix of edge vectors from the base vertex ``simplex[0]`` (or ``base``)."""
    verts = list(simplex)
    if base is not None:
        verts.remove(base)
        verts.insert(0, base)
    v0, rest = verts[0], verts[1:]
    k = len(rest)
    G = np.empty((k, k))
    d0 = [lengths.get(v0, v) for v in rest]
    for i in range(k):
        G[i, i] = d0[i]
        for j in range(i + 1, k):
            G[i, j] = G[j, i] = 0.5 * (d0[i] + d0[j] - lengths.get(rest[i], rest[j]))
    if k:
        tr = np.trace(G)
        if np.linalg.eigvalsh(G)[0] <= 1e-12 * tr:
            raise NotRealizableError(f"simplex {tuple(simplex)} is not realizable")
    return G


def simplex_volume(simplex, lengths: EdgeLengths) -> float:
    """``sqrt(det G) / k!``; points have volume 1."""
    k = len(simplex) - 1
    if k == 0:
        return 1.0
    G = gram(simplex, lengths)
    return math.sqrt(np.linalg.det(G)) / math.factorial(k)


def dihedral_angle(top, hinge, lengths: EdgeLengths) -> float:
    """Angle at ``hinge`` between the two facets of ``top`` containing it."""
    hinge = list(hinge)
    others = [v for v in top if v not in hinge]
    if len(others) != 2 or len(hinge) + 2 != len(top):
        raise ValueError("hinge must be a codimension-2 face of the simplex")
    if hinge:
        order = hinge + others
    else:
        raise ValueError("hinge must be non-empty")
    G = gram(order, lengths)
    m = len(hinge) - 1
    S = G[m:, m:]
    if m:
        C = G[:m, m:]
        S = S - C.T @ np.linalg.solve(G[:m, :m], C)
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    return math.atan2(math.sqrt(max(det, 0.0)), S[0, 1])


def deficit_angle(K: SimplicialComplex, hinge, lengths: EdgeLengths) -> float:
    cycle = K.link_cycle(hinge)
    if cycle is None:
        raise BoundaryHingeError(f"hinge {tuple(hinge)} is not interior")
    return 2.0 * math.pi - math.fsum(dihedral_angle(t, hinge, lengths) for t in cycle)


@dataclass
class HingeRecord:
    hinge: tuple
    thetas: list
    deficit: float
    area: float


@dataclass
class ActionReport:
    hinges: list
    total: float


def hinge_record(K: SimplicialComplex, hinge, lengths: EdgeLengths) -> HingeRecord:
    cycle = K.link_cycle(hinge)
    if cycle is None:
        raise BoundaryHingeError(f"hinge {tuple(hinge)} is not interior")
    thetas = [dihedral_angle(t, hinge, lengths) for t in cycle]
    return HingeRecord(tuple(hinge), thetas, 2.0 * math.pi - math.fsum(thetas),
                       simplex_volume(hinge, lengths))


def interior_hinges(K: SimplicialComplex) -> list:
    return [h for h in K.hinges() if K.is_interior(h)]


def regge_action(K: SimplicialComplex, lengths: EdgeLengths, hinges=None) -> ActionReport:
    """``S = sum_h d_h a_h`` over interior hinges (all of them, or the given subset)."""
    if hinges is None:
        hinges = interior_hinges(K)
    records = [hinge_record(K, h, lengths) for h in hinges]
    return ActionReport(records, math.fsum(r.deficit * r.area for r in records))


def simplex_rule(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree-2 barycentric rule on a k-simplex (weights sum to 1)."""
    if k == 0:
        return np.ones((1, 1)), np.ones(1)
    beta = (k + 2 - math.sqrt(k + 2)) / ((k + 1) * (k + 2))
    alpha = 1.0 - k * beta
    nodes = np.full((k + 1, k + 1), beta)
    np.fill_diagonal(nodes, alpha)
    return nodes, np.full(k + 1, 1.0 / (k + 1))


def curvature_measure(K: SimplicialComplex, lengths: EdgeLengths,
                      psi: Callable[[tuple, np.ndarray], np.ndarray]) -> float:
    """``sum_h d_h int_h psi``; ``psi(hinge, bary)`` takes barycentric nodes ``(q, k+1)``."""
    terms = []
    for h in interior_hinges(K):
        nodes, w = simplex_rule(len(h) - 1)
        vals = np.asarray(psi(h, nodes), dtype=float).reshape(-1)
        terms.append(deficit_angle(K, h, lengths) * simplex_volume(h, lengths) * float(w @ vals))
    return math.fsum(terms)


def _area_derivative(hinge, edge, lengths: EdgeLengths) -> float:
    """``d a_h / d l^2_edge`` via ``(a/2) tr(G^{-1} dG)``."""
    if not set(edge) <= set(hinge) or len(hinge) < 2:
        return 0.0
    verts = list(hinge)
    G = gram(verts, lengths)
    k = len(verts) - 1
    dG = np.zeros((k, k))
    u, v = edge
    iu, iv = verts.index(u), verts.index(v)
    if iu == 0 or iv == 0:
        i = max(iu, iv) - 1
        dG[i, :] += 0.5
        dG[:, i] += 0.5
    else:
        dG[iu - 1, iv - 1] = dG[iv - 1, iu - 1] = -0.5
    a = math.sqrt(np.linalg.det(G)) / math.factorial(k)
    return 0.5 * a * float(np.trace(np.linalg.solve(G, dG)))


def _affected_hinges(K: SimplicialComplex, edge, hinges) -> list:
    es = set(edge)
    return [h for h in hinges if es <= set(h) or any(es <= set(t) for t in K.star(h))]


def action_gradient(K: SimplicialComplex, lengths: EdgeLengths, mode: str = "fd",
                    edges=None, rel_step: float = 1e-5) -> dict:
    """Map edge -> dS/d(l^2). ``mode`` is ``"fd"`` or ``"schlafli"``."""
    edges = K.edges if edges is None else [K.canonical(e) for e in edges]
    hinges = interior_hinges(K)
    out = {}
    for e in edges:
        if mode == "schlafli":
            out[e] = math.fsum(deficit_angle(K, h, lengths) * _area_derivative(h, e, lengths)
                               for h in hinges if set(e) <= set(h))
        elif mode == "fd":
            local = _affected_hinges(K, e, hinges)
            x0 = lengths[e]
            step = rel_step * x0
            vals = {}
            for m in (-2, -1, 1, 2):
                try:
                    vals[m] = regge_action(K, lengths.with_value(e, x0 + m * step), local).total
                except NotRealizableError as exc:
                    raise NotRealizableError(f"probe at edge {e} leaves the realizable set") from exc
            out[e] = (-vals[2] + 8 * vals[1] - 8 * vals[-1] + vals[-2]) / (12 * step)
        else:
            raise ValueError(f"unknown gradient mode {mode!r}")
    return out


@dataclass
class CriticalPoint:
    lengths: EdgeLengths
    iterations: int
    gradient_norm: float


def critical_point_search(K: SimplicialComplex, lengths: EdgeLengths, free_edges,
                          tol: float = 1e-9, max_iter: int = 200, mode: str = "schlafli") -> CriticalPoint:
    """Damped Newton on the free squared lengths until ``max |dS| <= tol``."""
    free = [K.canonical(e) for e in free_edges]
    for e in free:
        if not K.is_interior(e) and K.top_dim == 3:
            raise BoundaryHingeError(f"free edge {e} is not interior")

    def grad(L):
        g = action_gradient(K, L, mode, free)
        return np.array([g[e] for e in free])

    def shifted(L, delta):
        for e, d in zip(free, delta):
            L = L.with_value(e, L[e] + d)
        for e in free:
            if L[e] <= 0:
                raise NotRealizableError("non-positive squared length")
        return L

    current = lengths
    g = grad(current)
    norm = float(np.max(np.abs(g))) if len(g) else 0.0
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise NoConvergenceError(f"no critical point after {max_iter} iterations (|grad| = {norm:.3e})")
        x = np.array([current[e] for e in free])
        H = np.empty((len(free), len(free)))
        for j in range(len(free)):
            h = 1e-4 * x[j]
            step = np.zeros(len(free))
            step[j] = h
            H[:, j] = (grad(shifted(current, step)) - grad(shifted(current, -step))) / (2 * h)
        H = 0.5 * (H + H.T)
        try:
            delta = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            delta = -g
        t = 1.0
        while True:
            try:
                trial = shifted(current, t * delta)
                gt = grad(trial)
                nt = float(np.max(np.abs(gt)))
                if nt < norm or t < 1e-8:
                    break
            except NotRealizableError:
                pass
            t *= 0.5
            if t < 1e-12:
                raise NoConvergenceError("line search failed to stay realizable")
        current, g, norm = trial, gt, nt
        it += 1
    return CriticalPoint(current, it, norm)


# ---------------------------------------------------------------------------
# file formats


def edge_key(K: SimplicialComplex, edge) -> str:
    u, v = K.canonical(edge)
    return f"{u}-{v}"


def complex_to_json(K: SimplicialComplex, lengths: EdgeLengths) -> dict:
    return {
        "vertices": [str(v) for v in K.vertices],
        "maximal_simplices": [[str(v) for v in t] for t in K.top],
        "edge_lengths_sq": {edge_key(K, e): lengths[e] for e in K.edges},
    }


def complex_from_json(data: dict) -> tuple[SimplicialComplex, EdgeLengths]:
    try:
        vertices = [str(v) for v in data["vertices"]]
        maximal = [[str(v) for v in s] for s in data["maximal_simplices"]]
        raw = data["edge_lengths_sq"]
    except (KeyError, TypeError) as exc:
        raise InvalidComplexError(f"malformed complex description: {exc}") from exc
    unknown = set(data) - {"vertices", "maximal_simplices", "edge_lengths_sq"}
    if unknown:
        raise InvalidComplexError(f"unknown keys {sorted(unknown)}")
    K = SimplicialComplex.from_maximal(maximal, vertices)
    values = {}
    for key, val in raw.items():
        parts = key.split("-")
        if len(parts) != 2:
            raise InvalidComplexError(f"bad edge key {key!r}")
        values[frozenset(parts)] = val
    L = EdgeLengths(values)
    L.check_complex(K)
    return K, L


def load_complex(path) -> tuple[SimplicialComplex, EdgeLengths]:
    with open(path) as fh:
        try:
            return complex_from_json(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InvalidComplexError(f"{path}: {exc}") from exc


def write_action_csv(report: ActionReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hinge", "thetas", "deficit", "area"])
        for r in report.hinges:
            w.writerow(["-".join(str(v) for v in r.hinge),
                        " ".join(f"{t:.17g}" for t in r.thetas),
                        f"{r.deficit:.17g}", f"{r.area:.17g}"])
