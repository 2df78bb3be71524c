"""Matrix groups, connection one-forms, parallel transport and curvature.

Group and algebra elements are plain ``numpy`` arrays of shape ``(..., n, n)``.
A connection one-form on a box in R^d is stored through its coefficients
``A_0, ..., A_{d-1}``; evaluating it on a velocity ``v`` gives ``sum_i v^i A_i``.

Transport follows the convention ``dU/dt = -A(gamma(t))(gamma'(t)) U`` with
``U(0) = I``, so that in the abelian case ``PT = exp(-int_gamma A)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from ._numerics import gauss_legendre, weighted_sum
from .errors import (
    DomainError,
    InconsistentDerivativeError,
    NonAbelianError,
    NotClosedError,
)

SO_TAGS = ("SO2", "SO3")
GROUP_TAGS = SO_TAGS + ("GL",)

#: generator of so(2)
J = np.array([[0.0, -1.0], [1.0, 0.0]])

ORTHO_TOL = 1e-10


def hat(w) -> np.ndarray:
    """Map vectors ``(..., 3)`` to skew matrices ``(..., 3, 3)``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def infer_group(X) -> str:
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    skew = X.size == 0 or float(np.max(np.abs(X + np.swapaxes(X, -1, -2)))) <= 1e-12 * scale
    if skew and n == 2:
        return "SO2"
    if skew and n == 3:
        return "SO3"
    return "GL"


def exp_map(X, group: Optional[str] = None) -> np.ndarray:
    """Matrix exponential of algebra elements, batched over leading axes.

    SO(2) and SO(3) use closed forms (rotation / Rodrigues); anything else
    goes through scaling and squaring with a Pade approximant.
    """
    X = np.asarray(X, dtype=float)
    if group is None:
        group = infer_group(X)
    if group == "SO2":
        theta = 0.5 * (X[..., 1, 0] - X[..., 0, 1])
        c, s = np.cos(theta), np.sin(theta)
        out = np.empty(X.shape)
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
        return out
    if group == "SO3":
        K = 0.5 * (X - np.swapaxes(X, -1, -2))
        w2 = K[..., 2, 1] ** 2 + K[..., 0, 2] ** 2 + K[..., 1, 0] ** 2
        theta = np.sqrt(w2)
        small = theta < 1e-4
        safe = np.where(small, 1.0, theta)
        a = np.where(small, 1.0 - w2 / 6.0 + w2 * w2 / 120.0, np.sin(safe) / safe)
        b = np.where(small, 0.5 - w2 / 24.0 + w2 * w2 / 720.0, (1.0 - np.cos(safe)) / safe**2)
        return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)
    if X.ndim == 2:
        return scipy.linalg.expm(X)
    flat = X.reshape((-1,) + X.shape[-2:])
    return np.stack([scipy.linalg.expm(m) for m in flat]).reshape(X.shape) if len(flat) < 8 \
        else scipy.linalg.expm(flat).reshape(X.shape)


def orthogonality_defect(Q) -> np.ndarray:
    """Frobenius norm of ``Q^T Q - I`` (batched)."""
    Q = np.asarray(Q, dtype=float)
    eye = np.eye(Q.shape[-1])
    return np.linalg.norm(np.swapaxes(Q, -1, -2) @ Q - eye, axis=(-2, -1))


def reorthonormalize(Q) -> np.ndarray:
    """Nearest orthogonal matrix (polar factor), batched."""
    W, _, Vt = np.linalg.svd(np.asarray(Q, dtype=float))
    return W @ Vt


def _settle(U, group):
    if group in SO_TAGS and np.any(orthogonality_defect(U) > ORTHO_TOL):
        return reorthonormalize(U)
    return U


def inverse(Q, group: str) -> np.ndarray:
    if group in SO_TAGS:
        return np.swapaxes(Q, -1, -2)
    return np.linalg.inv(Q)


def commutator(X, Y) -> np.ndarray:
    return X @ Y - Y @ X


# ---------------------------------------------------------------------------
# fields and paths


@dataclass(frozen=True)
class ConnectionField:
    """Algebra-valued one-form on a box of R^dim.

    ``eval`` maps points ``(..., dim)`` to coefficients ``(..., dim, n, n)``.
    ``d_eval``, if given, maps points to ``(..., dim, dim, n, n)`` holding
    ``d_i A_j`` at index ``[i, j]``.
    """

    dim: int
    n: int
    eval: Callable[[np.ndarray], np.ndarray]
    d_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None
    box: Optional[tuple] = None
    group: str = "GL"

    def __post_init__(self):
        if self.group not in GROUP_TAGS:
            raise ValueError(f"unknown group tag {self.group!r}")
        if self.box is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.box)
            object.__setattr__(self, "box", (lo, hi))

    def __call__(self, points):
        return self.eval(np.asarray(points, dtype=float))

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.box is None:
            return np.ones(points.shape[:-1], dtype=bool)
        lo, hi = self.box
        tol = 1e-12 * (1.0 + np.abs(points))
        return np.all((points >= lo + margin - tol) & (points <= hi - margin + tol), axis=-1)

    def check_domain(self, points, margin: float = 0.0) -> None:
        if not np.all(self.contains(points, margin)):
            raise DomainError("points leave the domain of the connection")

    def diameter(self) -> float:
        if self.box is None:
            return 1.0
        lo, hi = self.box
        return float(np.linalg.norm(hi - lo))

    def contract(self, points, velocity) -> np.ndarray:
        """``A(x)(v) = sum_i v^i A_i(x)``."""
        return np.einsum("...i,...iab->...ab", velocity, self(points))


@dataclass(frozen=True)
class GaugeField:
    """Group-valued function ``Q`` with optional derivative ``(..., dim, n, n)``."""

    eval: Callable[[np.ndarray], np.ndarray]
    d_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, points):
        return self.eval(np.asarray(points, dtype=float))


@dataclass(frozen=True)
class Segment:
    """Smooth arc ``t in [0, 1] -> point`` with its velocity."""

    point: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    line: Optional[tuple] = field(default=None, compare=False)

    @classmethod
    def straight(cls, p0, p1) -> "Segment":
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        d = p1 - p0
        return cls(
            point=lambda t: p0 + np.asarray(t, dtype=float)[..., None] * d,
            velocity=lambda t: np.broadcast_to(d, np.shape(t) + d.shape).copy(),
            line=(p0, p1),
        )

    @classmethod
    def arc(cls, center, radius: float, a0: float, a1: float) -> "Segment":
        c = np.asarray(center, dtype=float)
        span = a1 - a0

        def point(t):
            ang = a0 + span * np.asarray(t, dtype=float)
            return c + radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)

        def velocity(t):
            ang = a0 + span * np.asarray(t, dtype=float)
            return radius * span * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)

        return cls(point, velocity)

    @property
    def start(self) -> np.ndarray:
        return self.point(np.array([0.0]))[0]

    @property
    def end(self) -> np.ndarray:
        return self.point(np.array([1.0]))[0]

    def reversed(self) -> "Segment":
        if self.line is not None:
            return Segment.straight(self.line[1], self.line[0])
        return Segment(lambda t: self.point(1.0 - np.asarray(t)),
                       lambda t: -self.velocity(1.0 - np.asarray(t)))

    def length(self, order: int = 24) -> float:
        t, w = gauss_legendre(order)
        return float(w @ np.linalg.norm(self.velocity(t), axis=-1))


@dataclass(frozen=True)
class Path:
    segments: tuple
    closed: bool = False

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("a path needs at least one segment")
        for a, b in zip(segs[:-1], segs[1:]):
            if not _close(a.end, b.start):
                raise ValueError("consecutive segments do not join")
        if self.closed and not _close(segs[-1].end, segs[0].start):
            raise ValueError("closed path does not return to its start")

    @classmethod
    def polyline(cls, points, closed: bool = False) -> "Path":
        pts = [np.asarray(p, dtype=float) for p in points]
        if closed and not _close(pts[-1], pts[0]):
            pts.append(pts[0])
        if len(pts) == 1:
            pts.append(pts[0])
        return cls(tuple(Segment.straight(p, q) for p, q in zip(pts[:-1], pts[1:])), closed)

    @classmethod
    def circle(cls, center, radius: float, start_angle: float = 0.0, pieces: int = 1) -> "Path":
        edges = start_angle + 2 * np.pi * np.arange(pieces + 1) / pieces
        segs = tuple(Segment.arc(center, radius, a, b) for a, b in zip(edges[:-1], edges[1:]))
        return cls(segs, closed=True)

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].start

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].end

    def reversed(self) -> "Path":
        return Path(tuple(s.reversed() for s in reversed(self.segments)), self.closed)

    def then(self, other: "Path") -> "Path":
        """Traverse ``self`` and afterwards ``other``."""
        segs = self.segments + other.segments
        return Path(segs, closed=_close(segs[-1].end, segs[0].start))

    def length(self) -> float:
        return sum(s.length() for s in self.segments)


def _close(p, q) -> bool:
    p = np.asarray(p)
    q = np.asarray(q)
    return bool(np.all(np.abs(p - q) <= 1e-12 * (1.0 + np.abs(p))))


# ---------------------------------------------------------------------------
# transport

# fourth-order commutator-free exponential integrator on two Gauss nodes
_C1 = 0.5 - np.sqrt(3.0) / 6.0
_C2 = 0.5 + np.sqrt(3.0) / 6.0
_W1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_W2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0


def _cf4_factors(M1, M2, group: str) -> np.ndarray:
    """One-step propagators from generators sampled at the two Gauss nodes.

    ``M1``/``M2`` already include the step length.
    """
    first = exp_map(_W2 * M1 + _W1 * M2, group)
    second = exp_map(_W1 * M1 + _W2 * M2, group)
    return second @ first


def ordered_product(F) -> np.ndarray:
    """``F[..., S-1, :, :] @ ... @ F[..., 0, :, :]`` by pairwise reduction."""
    F = np.asarray(F)
    while F.shape[-3] > 1:
        if F.shape[-3] % 2:
            eye = np.broadcast_to(np.eye(F.shape[-1]), F.shape[:-3] + (1,) + F.shape[-2:])
            F = np.concatenate([F, eye], axis=-3)
        F = F[..., 1::2, :, :] @ F[..., 0::2, :, :]
    return F[..., 0, :, :]


def _substep_times(steps: int) -> tuple[np.ndarray, float]:
    h = 1.0 / steps
    base = np.arange(steps) * h
    return np.stack([base + _C1 * h, base + _C2 * h]), h


def _segment_transport(A: ConnectionField, seg: Segment, steps: int) -> np.ndarray:
    times, h = _substep_times(steps)
    pts = seg.point(times.ravel())
    A.check_domain(np.concatenate([pts, seg.point(np.array([0.0, 1.0]))]))
    gen = -h * A.contract(pts, seg.velocity(times.ravel()))
    gen = gen.reshape((2, steps) + gen.shape[-2:])
    return ordered_product(_cf4_factors(gen[0], gen[1], A.group))


def parallel_transport(A: ConnectionField, path: Path, steps: int = 64) -> np.ndarray:
    """Transport matrix along ``path`` using ``steps`` substeps per segment."""
    if steps < 1:
        raise ValueError("steps must be positive")
    U = np.eye(A.n)
    for seg in path.segments:
        U = _segment_transport(A, seg, steps) @ U
    return _settle(U, A.group)


def holonomy(A: ConnectionField, path: Path, steps: int = 64) -> np.ndarray:
    if not path.closed:
        raise NotClosedError("holonomy needs a closed path")
    return parallel_transport(A, path, steps)


def transport_polylines(A: ConnectionField, vertices, steps: int = 64,
                        dvertices=None, fd_step: Optional[float] = None):
    """Transport along a batch of polylines ``vertices`` of shape ``(B, k, dim)``.

    With ``dvertices`` (same shape) also returns the derivative of the
    discrete transport with respect to a parameter moving the vertices with
    those velocities; the derivative is exact for the discrete scheme.
    """
    V = np.asarray(vertices, dtype=float)
    B, k, _ = V.shape
    A.check_domain(V)
    times, h = _substep_times(steps)
    n = A.n
    U = np.broadcast_to(np.eye(n if dvertices is None else 2 * n), (B,) + ((n, n) if dvertices is None else (2 * n, 2 * n))).copy()
    dV = None if dvertices is None else np.asarray(dvertices, dtype=float)
    for j in range(k - 1):
        p0, p1 = V[:, j], V[:, j + 1]
        vel = p1 - p0
        pts = p0[:, None, None, :] + times[None, :, :, None] * vel[:, None, None, :]
        coeffs = A(pts)
        gen = -h * np.einsum("zi,zcsiab->zcsab", vel, coeffs)
        if dV is None:
            factors = _cf4_factors(gen[:, 0], gen[:, 1], A.group)
        else:
            dp0, dp1 = dV[:, j], dV[:, j + 1]
            dvel = dp1 - dp0
            dpts = dp0[:, None, None, :] + times[None, :, :, None] * dvel[:, None, None, :]
            jac = jacobian(A, pts, fd_step)
            dcoeffs = np.einsum("zcsk,zcskiab->zcsiab", dpts, jac)
            dgen = -h * (np.einsum("zi,zcsiab->zcsab", vel, dcoeffs)
                         + np.einsum("zi,zcsiab->zcsab", dvel, coeffs))
            block = np.zeros(gen.shape[:-2] + (2 * n, 2 * n))
            block[..., :n, :n] = gen
            block[..., n:, n:] = gen
            block[..., :n, n:] = dgen
            factors = _cf4_factors(block[:, 0], block[:, 1], "GL")
        U = ordered_product(factors) @ U
    if dV is None:
        return _settle(U, A.group)
    return U[:, :n, :n], U[:, :n, n:]


def pt_abelian(A: ConnectionField, path: Path, quad_order: int = 16) -> np.ndarray:
    """``exp(-int_path A)`` for connections whose values commute along the path."""
    nseg = len(path.segments)
    samples = np.linspace(0.0, nseg, 8, endpoint=False) + 0.5 * nseg / 8
    mats = []
    for s in samples:
        idx = min(int(s), nseg - 1)
        mats.append(A(path.segments[idx].point(np.array([s - idx])))[0])
    mats = np.concatenate(mats)
    scale = max(1.0, float(np.max(np.abs(mats)))) ** 2
    comm = commutator(mats[:, None], mats[None, :])
    if float(np.max(np.abs(comm))) > 1e-10 * scale:
        raise NonAbelianError("connection values do not commute along the path")
    t, w = gauss_legendre(quad_order)
    total = np.zeros((A.n, A.n))
    for seg in path.segments:
        pts = seg.point(t)
        A.check_domain(pts)
        total += weighted_sum(w, A.contract(pts, seg.velocity(t)))
    return exp_map(-total, A.group if A.group in SO_TAGS else None)


# ---------------------------------------------------------------------------
# derivatives, gauge transforms, curvature


def _default_step(A: ConnectionField) -> float:
    return 1e-4 * A.diameter()


def _central4(f, x, h, dim):
    """Fourth-order central differences of ``f`` along each axis: ``(..., dim, ...)``."""
    out = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h
        d = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
        out.append(d)
    return np.stack(out, axis=x.ndim - 1)


def jacobian(A: ConnectionField, points, fd_step: Optional[float] = None) -> np.ndarray:
    """``[..., i, j] = d_i A_j`` from ``d_eval`` or fourth-order differences."""
    points = np.asarray(points, dtype=float)
    if A.d_eval is not None:
        return A.d_eval(points)
    h = fd_step or _default_step(A)
    return _central4(A, points, h, A.dim)


def curvature(A: ConnectionField, x, fd_step: Optional[float] = None) -> np.ndarray:
    """``F_ij = d_i A_j - d_j A_i + [A_i, A_j]`` at points ``(..., dim)``.

    Returns ``(..., dim, dim, n, n)``.
    """
    x = np.asarray(x, dtype=float)
    if A.d_eval is None:
        h = fd_step or _default_step(A)
        A.check_domain(x, margin=2 * h)
    else:
        A.check_domain(x)
    jac = jacobian(A, x, fd_step)
    coeffs = A(x)
    Ai = coeffs[..., :, None, :, :]
    Aj = coeffs[..., None, :, :, :]
    return jac - np.swapaxes(jac, -3, -4) + Ai @ Aj - Aj @ Ai


def _sample_points(A: ConnectionField, count: int, margin: float) -> np.ndarray:
    rng = np.random.default_rng(20240607)
    if A.box is None:
        return rng.uniform(-0.5, 0.5, size=(count, A.dim))
    lo, hi = A.box
    return rng.uniform(lo + margin, hi - margin, size=(count, A.dim))


def gauge_transform(A: ConnectionField, Q, dQ=None, check: bool = True,
                    sample_points=None) -> ConnectionField:
    """``A'_i = Q A_i Q^{-1} - (d_i Q) Q^{-1}``.

    ``Q`` maps points to group elements; ``dQ`` maps points to
    ``(..., dim, n, n)``. The derivative is checked against finite
    differences at 8 sample points (random in the box unless
    ``sample_points`` is given) unless ``check`` is false.
    """
    if isinstance(Q, GaugeField):
        dQ = dQ if dQ is not None else Q.d_eval
        Q = Q.eval
    if dQ is None:
        raise ValueError("gauge_transform needs the derivative of Q")
    group = A.group

    if check:
        h = 1e-3 * A.diameter()
        pts = _sample_points(A, 8, 2.5 * h) if sample_points is None \
            else np.asarray(sample_points, dtype=float)
        fd = _central4(Q, pts, h, A.dim)
        given = dQ(pts)
        err = np.linalg.norm(fd - given, axis=(-2, -1))
        ref = np.maximum(1.0, np.linalg.norm(fd, axis=(-2, -1)))
        if np.any(err > 1e-6 * ref):
            raise InconsistentDerivativeError(
                f"dQ disagrees with finite differences (max rel err {float(np.max(err / ref)):.3e})")

    def new_eval(points):
        points = np.asarray(points, dtype=float)
        q = Q(points)
        qinv = inverse(q, group)[..., None, :, :]
        return q[..., None, :, :] @ A(points) @ qinv - dQ(points) @ qinv

    return ConnectionField(A.dim, A.n, new_eval, None, A.box, group)


def rotation_angle(R) -> float:
    """Angle ``a`` with ``R = exp(a J)`` for a 2x2 rotation."""
    R = np.asarray(R)
    return float(np.arctan2(R[1, 0] - R[0, 1], R[0, 0] + R[1, 1]))


def polyline_points(points: Sequence) -> Path:
    return Path.polyline(points)
