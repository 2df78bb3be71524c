"""Holonomy around a rectangle as an integral of transported curvature.

For an oriented rectangle ``T`` with corner paths ``gamma_-(x)`` (origin to
``x``) and ``gamma_+(x)`` (``x`` back to the origin around the far side),

    Hol(dT) - I = -int_T PT(gamma_+(x)) F(x)(axis0, axis1) PT(gamma_-(x)) dx.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._numerics import gauss_legendre, loglog_slope, weighted_sum
from .errors import GaugeConditionError, OutOfRectangleError
from .gauge import (
    ConnectionField,
    GaugeField,
    Path,
    curvature,
    gauge_transform,
    holonomy,
    inverse,
    transport_polylines,
)


@dataclass(frozen=True)
class Rectangle:
    origin: np.ndarray
    axis0: np.ndarray
    axis1: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        for name in ("origin", "axis0", "axis1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.a > 0 and self.b > 0):
            raise ValueError("rectangle sides must be positive")
        gram = np.array([[self.axis0 @ self.axis0, self.axis0 @ self.axis1],
                         [self.axis1 @ self.axis0, self.axis1 @ self.axis1]])
        if np.max(np.abs(gram - np.eye(2))) > 1e-12:
            raise ValueError("rectangle axes must be orthonormal")

    @classmethod
    def axis_aligned(cls, origin, a: float, b: float) -> "Rectangle":
        origin = np.asarray(origin, dtype=float)
        e = np.eye(len(origin))
        return cls(origin, e[0], e[1], a, b)

    def to_ambient(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return self.origin + c[..., :1] * self.axis0 + c[..., 1:2] * self.axis1

    def to_local(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.origin
        return np.stack([d @ self.axis0, d @ self.axis1], axis=-1)

    def check(self, c) -> None:
        c = np.asarray(c, dtype=float)
        tol = 1e-12 * max(self.a, self.b)
        if np.any(c[..., 0] < -tol) or np.any(c[..., 0] > self.a + tol) \
                or np.any(c[..., 1] < -tol) or np.any(c[..., 1] > self.b + tol):
            raise OutOfRectangleError("point lies outside the rectangle")

    def boundary(self) -> Path:
        corners = [(0, 0), (self.a, 0), (self.a, self.b), (0, self.b), (0, 0)]
        return Path.polyline(self.to_ambient(np.array(corners, dtype=float)), closed=True)


@dataclass(frozen=True)
class QuadratureRule2D:
    """Nodes in rectangle coordinates ``[0, a] x [0, b]`` and weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, a: float, b: float, order: int = 12) -> "QuadratureRule2D":
        t, w = gauss_legendre(order)
        X, Y = np.meshgrid(a * t, b * t, indexing="ij")
        W = np.outer(a * w, b * w)
        return cls(np.stack([X.ravel(), Y.ravel()], axis=-1), W.ravel())


@dataclass
class IdentityReport:
    lhs: np.ndarray
    rhs: np.ndarray
    defect: float
    quad_order: int
    pt_steps: int


def _minus_vertices(T: Rectangle, c) -> np.ndarray:
    c = np.atleast_2d(c)
    zero = np.zeros_like(c[:, 0])
    local = np.stack([np.stack([zero, zero], -1),
                      np.stack([c[:, 0], zero], -1),
                      c], axis=1)
    return T.to_ambient(local)


def _plus_vertices(T: Rectangle, c) -> np.ndarray:
    c = np.atleast_2d(c)
    zero = np.zeros_like(c[:, 0])
    b = np.full_like(zero, T.b)
    local = np.stack([c,
                      np.stack([c[:, 0], b], -1),
                      np.stack([zero, b], -1),
                      np.stack([zero, zero], -1)], axis=1)
    return T.to_ambient(local)


def gamma_minus(T: Rectangle, x) -> Path:
    """Polyline ``(0,0) -> (x0,0) -> (x0,x1)``; ``x`` in rectangle coordinates."""
    T.check(x)
    return Path.polyline(_minus_vertices(T, x)[0])


def gamma_plus(T: Rectangle, x) -> Path:
    """Polyline ``(x0,x1) -> (x0,b) -> (0,b) -> (0,0)``."""
    T.check(x)
    return Path.polyline(_plus_vertices(T, x)[0])


def _field_2form(A: ConnectionField, T: Rectangle, points) -> np.ndarray:
    F = curvature(A, points)
    return np.einsum("i,j,...ijab->...ab", T.axis0, T.axis1, F)


def curvature_integral(A: ConnectionField, T: Rectangle, quad: QuadratureRule2D,
                       pt_steps: int = 128) -> np.ndarray:
    """``-sum_k w_k PT(gamma_+(x_k)) F(x_k)(axis0, axis1) PT(gamma_-(x_k))``."""
    T.check(quad.nodes)
    pts = T.to_ambient(quad.nodes)
    F = _field_2form(A, T, pts)
    U_minus = transport_polylines(A, _minus_vertices(T, quad.nodes), pt_steps)
    U_plus = transport_polylines(A, _plus_vertices(T, quad.nodes), pt_steps)
    return -weighted_sum(quad.weights, U_plus @ F @ U_minus)


def verify_identity(A: ConnectionField, T: Rectangle, quad_order: int = 16,
                    pt_steps: int = 128) -> IdentityReport:
    hol = holonomy(A, T.boundary(), pt_steps)
    lhs = hol - np.eye(A.n)
    rhs = curvature_integral(A, T, QuadratureRule2D.gauss(T.a, T.b, quad_order), pt_steps)
    return IdentityReport(lhs, rhs, float(np.linalg.norm(lhs - rhs)), quad_order, pt_steps)


def radial_gauge(A: ConnectionField, T: Rectangle, pt_steps: int = 64, check: bool = True,
                 grid: int = 16, tol: float = 1e-7) -> tuple[ConnectionField, GaugeField]:
    """Gauge in which ``A'_0 = 0`` on ``T`` and ``A'_1 = 0`` on the edge ``x0 = 0``.

    ``Q(x)`` is the transport along ``x -> (0, x1) -> (0, 0)``. Its derivative
    is the exact derivative of the discrete transport, so the gauge
    conditions hold up to the integrator error.
    """
    dim = A.dim
    eye = np.eye(dim)

    def vertices(x):
        x = np.asarray(x, dtype=float)
        c1 = (x - T.origin) @ T.axis1
        mid = T.origin + c1[..., None] * T.axis1
        base = np.broadcast_to(T.origin, x.shape)
        return np.stack([x, mid, base], axis=-2)

    def q_eval(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, dim)
        U = transport_polylines(A, vertices(flat), pt_steps)
        return U.reshape(x.shape[:-1] + (A.n, A.n))

    def q_deriv(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, dim)
        V = vertices(flat)
        out = []
        for k in range(dim):
            dV = np.zeros_like(V)
            dV[:, 0] = eye[k]
            dV[:, 1] = (eye[k] @ T.axis1) * T.axis1
            _, dU = transport_polylines(A, V, pt_steps, dvertices=dV)
            out.append(dU)
        return np.stack(out, axis=1).reshape(x.shape[:-1] + (dim, A.n, A.n))

    Q = GaugeField(q_eval, q_deriv)
    samples = T.to_ambient(np.random.default_rng(7).uniform(0.05, 0.95, size=(8, 2)) * [T.a, T.b])
    A_new = gauge_transform(A, Q, sample_points=samples)
    if check:
        worst = max(gauge_condition_residuals(A_new, T, grid))
        if worst > tol:
            raise GaugeConditionError(f"radial gauge conditions violated by {worst:.3e}")
    return A_new, Q


def gauge_condition_residuals(A_new: ConnectionField, T: Rectangle, grid: int = 16) -> tuple[float, float]:
    """Max entries of ``A'_0`` on a grid over ``T`` and of ``A'_1`` on the edge ``x0 = 0``."""
    s = np.linspace(0.0, 1.0, grid)
    S0, S1 = np.meshgrid(T.a * s, T.b * s, indexing="ij")
    pts = T.to_ambient(np.stack([S0.ravel(), S1.ravel()], -1))
    a0 = np.einsum("i,...iab->...ab", T.axis0, A_new(pts))
    edge = T.to_ambient(np.stack([np.zeros(grid), T.b * s], -1))
    a1 = np.einsum("i,...iab->...ab", T.axis1, A_new(edge))
    return float(np.max(np.abs(a0))), float(np.max(np.abs(a1)))


@dataclass
class DefectScan:
    pairs: list
    slope: float


def naive_defect(A: ConnectionField, T: Rectangle, quad_order: int = 8, pt_steps: int = 64) -> float:
    """``||Hol(dT) - I + int_T F||`` with the plain (untransported) integral."""
    quad = QuadratureRule2D.gauss(T.a, T.b, quad_order)
    F = _field_2form(A, T, T.to_ambient(quad.nodes))
    hol = holonomy(A, T.boundary(), pt_steps)
    return float(np.linalg.norm(hol - np.eye(A.n) + weighted_sum(quad.weights, F)))


def defect_order_scan(A: ConnectionField, corner, h_list: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
                      quad_order: int = 8, pt_steps: int = 64,
                      axes: Optional[tuple] = None) -> DefectScan:
    corner = np.asarray(corner, dtype=float)
    if axes is None:
        e = np.eye(A.dim)
        axes = (e[0], e[1])
    pairs = []
    for h in h_list:
        T = Rectangle(corner, axes[0], axes[1], float(h), float(h))
        pairs.append((float(h), naive_defect(A, T, quad_order, pt_steps)))
    hs, ds = zip(*pairs)
    slope = loglog_slope(hs, ds) if min(ds) > 0 else float("nan")
    return DefectScan(pairs, slope)


def transported_difference(A_new: ConnectionField, A: ConnectionField, Q: GaugeField,
                           T: Rectangle, pt_steps: int = 64) -> float:
    """``||Hol_{A'}(dT) - Q(o) Hol_A(dT) Q(o)^{-1}||`` at the rectangle origin."""
    loop = T.boundary()
    q0 = Q(T.origin[None])[0]
    ref = q0 @ holonomy(A, loop, pt_steps) @ inverse(q0, A.group)
    return float(np.linalg.norm(holonomy(A_new, loop, pt_steps) - ref))
