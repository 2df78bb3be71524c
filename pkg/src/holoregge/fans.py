"""Piecewise-constant sector metrics around a point (2D) or a straight hinge (3D)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSectorError, InvalidFanError
from .regge import EdgeLengths, SimplicialComplex, dihedral_angle

CONTINUITY_TOL = 1e-12
ANGLE_TOL = 1e-12


def _spd(M) -> bool:
    return bool(np.all(np.linalg.eigvalsh(M) > 0))


def _reference_sector_angles(beta: np.ndarray) -> np.ndarray:
    return np.diff(np.append(beta, beta[0] + 2 * np.pi))


def _unwrap_angles(angles) -> np.ndarray:
    beta = np.asarray(angles, dtype=float)
    if beta.ndim != 1 or len(beta) < 2:
        raise InvalidFanError("need at least two half-lines")
    out = beta - 2 * np.pi * np.floor((beta - beta[0]) / (2 * np.pi))
    if np.any(np.diff(out) <= 0):
        raise InvalidFanError("boundary angles must be strictly increasing mod 2 pi")
    return out


def _check_continuity(tangents, metrics, label):
    I = len(metrics)
    for i in range(I):
        before, after = metrics[i - 1], metrics[i]
        for u in tangents[i]:
            for v in tangents[i]:
                x, y = u @ before @ v, u @ after @ v
                if abs(x - y) > CONTINUITY_TOL * max(1.0, abs(x), abs(y)):
                    raise InvalidFanError(f"{label} {i}: metrics disagree on tangential vectors ({x} vs {y})")


@dataclass(frozen=True)
class SectorFan2D:
    """Half-lines at reference angles ``boundary_angles``; sector ``s`` lies
    between half-line ``s`` and ``s + 1`` and carries ``sector_metrics[s]``."""

    boundary_angles: np.ndarray
    sector_metrics: np.ndarray

    def __post_init__(self):
        beta = _unwrap_angles(self.boundary_angles)
        rho = np.asarray(self.sector_metrics, dtype=float)
        if rho.shape != (len(beta), 2, 2):
            raise InvalidFanError("need one 2x2 metric per sector")
        if np.any(np.abs(rho - np.swapaxes(rho, 1, 2)) > 1e-14 * np.abs(rho).max()):
            raise InvalidFanError("sector metrics must be symmetric")
        for M in rho:
            if not _spd(M):
                raise InvalidFanError("sector metrics must be positive definite")
        alphas = _reference_sector_angles(beta)
        if np.any(alphas >= np.pi) or np.any(alphas <= 0):
            raise InvalidFanError("reference sector angles must lie in (0, pi)")
        object.__setattr__(self, "boundary_angles", beta)
        object.__setattr__(self, "sector_metrics", rho)
        _check_continuity([[t] for t in self.tangents], rho, "half-line")

    @property
    def count(self) -> int:
        return len(self.boundary_angles)

    @property
    def tangents(self) -> np.ndarray:
        b = self.boundary_angles
        return np.stack([np.cos(b), np.sin(b)], axis=-1)

    @property
    def reference_angles(self) -> np.ndarray:
        return _reference_sector_angles(self.boundary_angles)

    def transverse(self) -> tuple[np.ndarray, np.ndarray]:
        """Planar data for the weight engine: angles and metrics (2D: the fan itself)."""
        return self.boundary_angles, self.sector_metrics

    def to_json(self) -> dict:
        return {"dim": 2, "boundary_angles": self.boundary_angles.tolist(),
                "sector_metrics": self.sector_metrics.tolist()}


def unit_directions(fan: SectorFan2D, side: str = "after") -> np.ndarray:
    """``m_i = t_i / sqrt(rho(t_i, t_i))`` using the sector after (or before) half-line i."""
    T = fan.tangents
    rho = fan.sector_metrics
    idx = np.arange(fan.count) if side == "after" else np.arange(fan.count) - 1
    norms = np.sqrt(np.einsum("ia,iab,ib->i", T, rho[idx], T))
    return T / norms[:, None]


def sector_angles(fan) -> np.ndarray:
    """``theta_s`` = angle between ``m_s`` and ``m_{s+1}`` under ``rho_s``."""
    m = unit_directions(fan)
    rho = fan.sector_metrics
    nxt = np.roll(m, -1, axis=0)
    c = np.einsum("ia,iab,ib->i", m, rho, nxt)
    if np.any(np.abs(c) >= 1.0 - ANGLE_TOL):
        raise DegenerateSectorError("sector metric makes adjacent half-lines (anti)parallel")
    return np.arccos(np.clip(c, -1.0, 1.0))


def deficit(fan) -> float:
    return 2.0 * math.pi - math.fsum(sector_angles(fan))


def support_radius(fan, eps: float = 1.0) -> float:
    """Radius outside of which the smoothed metric has no curvature."""
    alphas = fan.reference_angles
    if np.any(alphas >= np.pi):
        raise DegenerateSectorError("sector reference angle >= pi")
    return float(eps * np.max(1.0 / np.sin(alphas / 2.0)))


def fan_from_angles(thetas: Sequence[float], lengths_sq: Optional[Sequence[float]] = None,
                    boundary_angles: Optional[Sequence[float]] = None) -> SectorFan2D:
    """Fan whose sector ``s`` is isometric to the corner of a triangle with
    angle ``thetas[s]`` between sides of squared length ``lengths_sq[s]`` and
    ``lengths_sq[s+1]``.

    Without ``boundary_angles`` the reference angles are proportional to
    ``thetas`` and rescaled to sum to 2 pi.
    """
    th = np.asarray(thetas, dtype=float)
    I = len(th)
    if np.any(th <= 0) or np.any(th >= np.pi):
        raise InvalidFanError("sector angles must lie in (0, pi)")
    ell = np.ones(I) if lengths_sq is None else np.sqrt(np.asarray(lengths_sq, dtype=float))
    if boundary_angles is None:
        alphas = th * (2 * np.pi / th.sum())
        beta = np.concatenate([[0.0], np.cumsum(alphas)[:-1]])
    else:
        beta = _unwrap_angles(boundary_angles)
    T = np.stack([np.cos(beta), np.sin(beta)], axis=-1)
    metrics = []
    for s in range(I):
        t0, t1 = T[s], T[(s + 1) % I]
        target = np.array([[ell[s], ell[(s + 1) % I] * math.cos(th[s])],
                           [0.0, ell[(s + 1) % I] * math.sin(th[s])]])
        L = target @ np.linalg.inv(np.column_stack([t0, t1]))
        M = L.T @ L
        metrics.append(0.5 * (M + M.T))
    metrics = np.array(metrics)
    # tangential values agree analytically; remove rounding so the invariant holds tightly
    for i in range(I):
        t = T[i]
        want = ell[i] ** 2
        for s in (i - 1, i):
            got = t @ metrics[s] @ t
            metrics[s] += (want - got) * np.outer(t, t)
    return SectorFan2D(beta, metrics)


def fan_from_vertex_star(K: SimplicialComplex, lengths: EdgeLengths, vertex) -> SectorFan2D:
    """Lay the star of an interior vertex of a 2D complex out as a sector fan."""
    cycle = K.link_cycle((vertex,))
    if cycle is None:
        raise InvalidFanError(f"vertex {vertex!r} is not interior")
    # orient the cycle: consecutive triangles share the spoke to rim[s+1]
    rim = []
    first = [v for v in cycle[0] if v != vertex]
    second = set(cycle[1]) - {vertex}
    start = first[0] if first[1] in second else first[1]
    rim.append(start)
    for tri in cycle:
        nxt = [v for v in tri if v not in (vertex, rim[-1])][0]
        rim.append(nxt)
    rim = rim[:-1]
    thetas = [dihedral_angle(tri, (vertex,), lengths) for tri in cycle]
    spokes = [lengths.get(vertex, w) for w in rim]
    return fan_from_angles(thetas, spokes)


def regular_cone_fan(count: int = 5) -> SectorFan2D:
    """Star of ``count`` unit equilateral triangles (deficit ``2 pi - count pi / 3``)."""
    return fan_from_angles([math.pi / 3] * count)


def wedge_fan(total_angle: float, count: int = 4) -> SectorFan2D:
    """Quadrant fan whose sectors share the total metric angle ``total_angle``."""
    return fan_from_angles([total_angle / count] * count)


def rotated(fan: SectorFan2D, phi: float) -> SectorFan2D:
    """Rotate half-lines by ``phi`` and conjugate the metrics accordingly."""
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    # pushforward: the new metric evaluates rotated vectors as the old one did
    metrics = R @ fan.sector_metrics @ R.T
    return SectorFan2D(fan.boundary_angles + phi, metrics)


def scaled_toward_reference(fan: SectorFan2D, s: float) -> SectorFan2D:
    """``s rho + (1 - s) g``."""
    return SectorFan2D(fan.boundary_angles, s * fan.sector_metrics + (1 - s) * np.eye(2))


# ---------------------------------------------------------------------------
# 3D hinge


def adapted_frame(axis) -> np.ndarray:
    """Orthonormal ``[u1, u2, f]`` (columns) with ``f`` the normalized hinge axis."""
    f = np.asarray(axis, dtype=float)
    f = f / np.linalg.norm(f)
    k = int(np.argmin(np.abs(f)))
    e = np.zeros(3)
    e[k] = 1.0
    u1 = e - (e @ f) * f
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(f, u1)
    return np.column_stack([u1, u2, f])


@dataclass(frozen=True)
class HingeFan3D:
    """Half-planes around the line spanned by ``hinge_axis``.

    Half-plane ``i`` is spanned by ``f`` and ``cos(b_i) u1 + sin(b_i) u2``
    where ``[u1, u2, f] = adapted_frame(hinge_axis)``.
    """

    hinge_axis: np.ndarray
    boundary_angles: np.ndarray
    sector_metrics: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.hinge_axis, dtype=float)
        if axis.shape != (3,) or np.linalg.norm(axis) == 0:
            raise InvalidFanError("hinge axis must be a non-zero 3-vector")
        beta = _unwrap_angles(self.boundary_angles)
        rho = np.asarray(self.sector_metrics, dtype=float)
        if rho.shape != (len(beta), 3, 3):
            raise InvalidFanError("need one 3x3 metric per sector")
        for M in rho:
            if np.max(np.abs(M - M.T)) > 1e-14 * np.abs(M).max() or not _spd(M):
                raise InvalidFanError("sector metrics must be symmetric positive definite")
        alphas = _reference_sector_angles(beta)
        if np.any(alphas >= np.pi) or np.any(alphas <= 0):
            raise InvalidFanError("reference sector angles must lie in (0, pi)")
        object.__setattr__(self, "hinge_axis", axis / np.linalg.norm(axis))
        object.__setattr__(self, "boundary_angles", beta)
        object.__setattr__(self, "sector_metrics", rho)
        _check_continuity([[self.axis, t] for t in self.tangents], rho, "half-plane")

    @property
    def count(self) -> int:
        return len(self.boundary_angles)

    @property
    def frame(self) -> np.ndarray:
        return adapted_frame(self.hinge_axis)

    @property
    def axis(self) -> np.ndarray:
        return self.hinge_axis

    @property
    def tangents(self) -> np.ndarray:
        R = self.frame
        b = self.boundary_angles
        return np.cos(b)[:, None] * R[:, 0] + np.sin(b)[:, None] * R[:, 1]

    @property
    def reference_angles(self) -> np.ndarray:
        return _reference_sector_angles(self.boundary_angles)

    def transverse(self) -> tuple[np.ndarray, np.ndarray]:
        """Angles and metrics expressed in adapted coordinates ``R^T rho R``."""
        R = self.frame
        return self.boundary_angles, np.einsum("ka,skl,lb->sab", R, self.sector_metrics, R)

    def to_json(self) -> dict:
        return {"dim": 3, "hinge_axis": self.hinge_axis.tolist(),
                "boundary_angles": self.boundary_angles.tolist(),
                "sector_metrics": self.sector_metrics.tolist()}


def hinge_unit_directions(fan: HingeFan3D) -> np.ndarray:
    """Unit vectors of each half-plane, rho-orthogonal to the hinge."""
    f = fan.axis
    out = []
    for i, t in enumerate(fan.tangents):
        rho = fan.sector_metrics[i]
        m = t - (f @ rho @ t) / (f @ rho @ f) * f
        out.append(m / math.sqrt(m @ rho @ m))
    return np.array(out)


def hinge_sector_angles(fan: HingeFan3D) -> np.ndarray:
    m = hinge_unit_directions(fan)
    c = np.einsum("ia,iab,ib->i", m, fan.sector_metrics, np.roll(m, -1, axis=0))
    if np.any(np.abs(c) >= 1.0 - ANGLE_TOL):
        raise DegenerateSectorError("degenerate sector around the hinge")
    return np.arccos(np.clip(c, -1.0, 1.0))


def hinge_deficit(fan: HingeFan3D) -> float:
    return 2.0 * math.pi - math.fsum(hinge_sector_angles(fan))


def product_hinge(fan2d: SectorFan2D, axis=(0.0, 0.0, 1.0), hinge_sq: float = 1.0) -> HingeFan3D:
    """Product of a planar fan with a line of metric ``hinge_sq dz^2``."""
    R = adapted_frame(axis)
    metrics = []
    for M in fan2d.sector_metrics:
        B = np.zeros((3, 3))
        B[:2, :2] = M
        B[2, 2] = hinge_sq
        metrics.append(R @ B @ R.T)
    return HingeFan3D(np.asarray(axis, float), fan2d.boundary_angles, np.array(metrics))


def sheared_hinge(fan2d: SectorFan2D, slopes: Sequence[float], axis=(0.0, 0.0, 1.0)) -> HingeFan3D:
    """Product fan pulled back by ``z -> z + h(x)`` with ``h`` continuous and
    linear in each sector; ``h = slopes[i] * (distance along half-line i)`` on half-line i."""
    I = fan2d.count
    T = fan2d.tangents
    slopes = np.asarray(slopes, dtype=float)
    R = adapted_frame(axis)
    metrics = []
    for s in range(I):
        t0, t1 = T[s], T[(s + 1) % I]
        grad = np.linalg.solve(np.vstack([t0, t1]), [slopes[s], slopes[(s + 1) % I]])
        P = np.eye(3)
        P[2, :2] = grad
        B = np.zeros((3, 3))
        B[:2, :2] = fan2d.sector_metrics[s]
        B[2, 2] = 1.0
        M = P.T @ B @ P
        metrics.append(R @ (0.5 * (M + M.T)) @ R.T)
    return HingeFan3D(np.asarray(axis, float), fan2d.boundary_angles, np.array(metrics))


def fan_from_json(data: dict):
    try:
        dim = int(data["dim"])
        beta = data["boundary_angles"]
        metrics = data["sector_metrics"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidFanError(f"malformed fan description: {exc}") from exc
    allowed = {"dim", "boundary_angles", "sector_metrics", "hinge_axis"}
    if set(data) - allowed:
        raise InvalidFanError(f"unknown keys {sorted(set(data) - allowed)}")
    if dim == 2:
        return SectorFan2D(beta, metrics)
    if dim == 3:
        if "hinge_axis" not in data:
            raise InvalidFanError("3D fans need a hinge_axis")
        return HingeFan3D(data["hinge_axis"], beta, metrics)
    raise InvalidFanError(f"unsupported fan dimension {dim}")


def load_fan(path):
    with open(path) as fh:
        try:
            return fan_from_json(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InvalidFanError(f"{path}: {exc}") from exc
