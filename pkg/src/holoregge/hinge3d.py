"""Checks of the smoothed metric around a straight hinge in three dimensions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fans import HingeFan3D, hinge_deficit, hinge_unit_directions, support_radius
from .smoothing import (
    GENERAL,
    RADON,
    GridSpec,
    QuadSpec,
    ScanRow,
    christoffel,
    classify,
    curvature_density,
    curvature_grid,
    smoothed_jet,
)


@dataclass(frozen=True)
class SampleSpec:
    count: int = 400
    seed: int = 0
    tube: float = 3.0


@dataclass
class Hinge3DReport:
    """(a) ``max |Gamma f|``, (b) ``max |Gamma m_i|`` on the single-interface
    regions, (c) ``max |kappa|`` outside the tube and ``max |kappa| eps^2``
    inside, plus the tangential agreement ``max |sigma(f,f) - rho(f,f)|``."""

    torsion: float
    m_parallel: float
    outside_tube: float
    inside_scaled: float
    tangential: float
    samples: int


def _ambient(fan: HingeFan3D, planar, along):
    R = fan.frame
    return planar[..., 0:1] * R[:, 0] + planar[..., 1:2] * R[:, 1] + along[..., None] * R[:, 2]


def hinge3d_invariant_checks(fan: HingeFan3D, eps: float, samples: SampleSpec = SampleSpec(),
                             quad: QuadSpec = QuadSpec()) -> Hinge3DReport:
    rng = np.random.default_rng(samples.seed)
    r_supp = support_radius(fan, eps)
    f = fan.axis
    beta = fan.boundary_angles

    # (a), (c): points in a disc around the hinge of radius well past the support
    outer = max(1.5 * r_supp, 2.0 * samples.tube * eps)
    rad = outer * np.sqrt(rng.uniform(0, 1, samples.count))
    ang = rng.uniform(0, 2 * np.pi, samples.count)
    planar = np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
    along = rng.uniform(-1, 1, samples.count)
    pts = _ambient(fan, planar, along)
    jet = smoothed_jet(fan, eps, pts, quad)
    G, _, _ = christoffel(jet)
    torsion = float(np.max(np.linalg.norm(np.einsum("...akj,j->...ak", G, f), axis=(-2, -1))))
    kappa, _ = curvature_density(jet)
    out = rad >= samples.tube * eps
    outside = float(np.max(np.abs(kappa[out]))) if np.any(out) else 0.0
    inside = float(np.max(np.abs(kappa[~out]))) * eps ** 2 if np.any(~out) else 0.0
    tangential = float(np.max(np.abs(np.einsum("i,...ij,j->...", f, jet.sigma, f) - f @ fan.sector_metrics[0] @ f)))

    # (b): points whose eps-ball meets only half-plane i
    m = hinge_unit_directions(fan)
    worst_m = 0.0
    per_ray = max(8, samples.count // (2 * fan.count))
    T = np.stack([np.cos(beta), np.sin(beta)], -1)
    for i in range(fan.count):
        t = T[i]
        n = np.array([-t[1], t[0]])
        s = rng.uniform(eps, 2.0 * r_supp + eps, 4 * per_ray)
        q = rng.uniform(-eps, eps, 4 * per_ray)
        cand = s[:, None] * t + q[:, None] * n
        mode, ray = classify(beta, cand / eps)
        keep = (mode == RADON) & (ray == i)
        cand = cand[keep][:per_ray]
        if not len(cand):
            continue
        jt = smoothed_jet(fan, eps, _ambient(fan, cand, rng.uniform(-1, 1, len(cand))), quad)
        Gi, _, _ = christoffel(jt)
        worst_m = max(worst_m, float(np.max(np.linalg.norm(np.einsum("...akj,j->...ak", Gi, m[i]), axis=(-2, -1)))))
    return Hinge3DReport(torsion, worst_m, outside, inside, tangential, samples.count)


def hinge_reference(fan: HingeFan3D, psi: Callable, z_range=(-3.0, 3.0), nodes: int = 401) -> float:
    """``int_F d psi`` with the line element induced by ``rho`` on the hinge."""
    z = np.linspace(z_range[0], z_range[1], nodes)
    h = z[1] - z[0]
    f = fan.axis
    line = np.sqrt(f @ fan.sector_metrics[0] @ f)
    vals = psi(z[:, None] * f)
    return hinge_deficit(fan) * line * float(np.sum(vals) * h)


def hinge3d_weak_convergence(fan: HingeFan3D, psi: Callable, eps_list: Sequence[float],
                             grid: GridSpec = GridSpec(), quad: QuadSpec = QuadSpec(),
                             z_range=(-3.0, 3.0), z_nodes: int = 401) -> list:
    """``|int psi kappa_eps mu_eps - int_F d psi|`` for each ``eps``.

    ``psi`` must vanish for hinge coordinates outside ``z_range``. The
    transverse density is computed once at ``eps = 1``; the hinge direction is
    integrated with the trapezoid rule (spectral for smooth compact ``psi``).
    """
    pts, vals, h = curvature_grid(fan, 1.0, grid, quad)
    z = np.linspace(z_range[0], z_range[1], z_nodes)
    hz = z[1] - z[0]
    mask = vals != 0.0
    P = pts[mask]
    V = vals[mask]
    ref = hinge_reference(fan, psi, z_range, z_nodes)
    rows = []
    for eps in eps_list:
        amb = _ambient(fan, eps * P[:, None, :], np.broadcast_to(z, (len(P), len(z))))
        line = np.sum(psi(amb), axis=-1) * hz
        value = float(np.sum(V * line) * h * h)
        rows.append(ScanRow(float(eps), value, ref, abs(value - ref)))
    return rows


def separable_psi(psi_hinge: Callable, psi_plane: Callable, fan: HingeFan3D) -> Callable:
    """``psi(x) = psi_hinge(x . f) psi_plane(x_perp)`` in adapted coordinates."""
    R = fan.frame

    def psi(x):
        y = np.asarray(x, dtype=float) @ R
        return psi_hinge(y[..., 2]) * psi_plane(y[..., :2])

    return psi
