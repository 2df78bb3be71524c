"""Mollified sector metrics: jets, curvature, integrals and holonomy.

The smoothed metric is written through sector weights. With ``h`` the sector
containing the point,

    sigma(x) = rho_h + sum_s W_s(x) (rho_s - rho_h),
    W_s(x)   = int_{sector s} phi_eps(x - z) dz,

and the derivatives of ``sigma`` only involve derivatives of the weights,
which fall on the kernel. Everything is evaluated at ``eps = 1`` in the
scaled variable ``y = x / eps`` and rescaled afterwards.

Depending on how the unit ball around ``y`` meets the fan, the weights are
computed in one of three ways:

* the ball misses every half-line: ``sigma = rho_h`` exactly;
* the ball meets exactly one half-line and not the apex: the weight of the
  neighbouring sector is a half-plane integral, given by the line marginal
  of the kernel (its derivatives are closed form);
* otherwise: per-sector quadrature in polar coordinates about the apex,
  Gauss-Legendre in angle and along each radial chord of the ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._numerics import gauss_legendre
from .errors import QuadratureResolutionError, RadiusTooSmallError, SingularMetricError
from .fans import HingeFan3D, SectorFan2D, deficit, scaled_toward_reference, sector_angles, support_radius
from .gauge import J, ConnectionField, Path, holonomy, rotation_angle
from .mollify import Mollifier, RadialKernel

MIN_NODES = 8

TRIVIAL, RADON, GENERAL = 0, 1, 2


@dataclass(frozen=True)
class QuadSpec:
    """Node counts for the convolution quadrature."""

    angular: int = 48
    radial: int = 48
    line: int = 64
    chunk: int = 128

    def check(self) -> None:
        if min(self.angular, self.radial, self.line) < MIN_NODES:
            raise QuadratureResolutionError(f"at least {MIN_NODES} nodes per direction are required")


@dataclass
class SmoothedMetricJet:
    """``sigma[..., i, j]``, ``dsigma[..., k, i, j]`` and ``ddsigma[..., k, l, i, j]``."""

    sigma: np.ndarray
    dsigma: np.ndarray
    ddsigma: np.ndarray
    mode: Optional[np.ndarray] = None

    def __getitem__(self, idx) -> "SmoothedMetricJet":
        mode = None if self.mode is None else self.mode[idx]
        return SmoothedMetricJet(self.sigma[idx], self.dsigma[idx], self.ddsigma[idx], mode)


# ---------------------------------------------------------------------------
# planar weight engine


def home_sector(beta: np.ndarray, y: np.ndarray) -> np.ndarray:
    ang = np.mod(np.arctan2(y[..., 1], y[..., 0]) - beta[0], 2 * np.pi) + beta[0]
    idx = np.searchsorted(beta, ang, side="right") - 1
    return np.clip(idx, 0, len(beta) - 1)


def classify(beta: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mode of every point and, for the single-interface mode, the half-line index."""
    T = np.stack([np.cos(beta), np.sin(beta)], axis=-1)
    r = np.linalg.norm(y, axis=-1)
    proj = y @ T.T
    perp = np.abs(y[..., :1] * T[:, 1] - y[..., 1:2] * T[:, 0])
    dist = np.where(proj >= 0, perp, r[..., None])
    near = dist < 1.0
    count = near.sum(axis=-1)
    mode = np.full(r.shape, GENERAL)
    mode[(r >= 1.0) & (count == 0)] = TRIVIAL
    mode[(r >= 1.0) & (count == 1)] = RADON
    ray = np.argmax(near, axis=-1)
    return mode, ray


def _radon_weights(beta, kernel: RadialKernel, y, home, ray, quad: QuadSpec):
    S = len(beta)
    P = len(y)
    t = np.stack([np.cos(beta[ray]), np.sin(beta[ray])], axis=-1)
    jt = np.stack([-t[:, 1], t[:, 0]], axis=-1)
    after = home == ray
    n = np.where(after[:, None], -jt, jt)
    other = np.where(after, (ray - 1) % S, ray)
    p = np.minimum(np.sum(n * y, axis=-1), 0.0)
    tau, w = gauss_legendre(quad.line)
    nodes = -1.0 + (p[:, None] + 1.0) * tau
    vals, _ = kernel.line_marginal(nodes)
    W = (p + 1.0) * np.sum(w * vals, axis=-1)
    m0, m1 = kernel.line_marginal(p)
    out_W = np.zeros((P, S))
    out_dW = np.zeros((P, S, 2))
    out_ddW = np.zeros((P, S, 2, 2))
    rows = np.arange(P)
    out_W[rows, other] = W
    out_dW[rows, other] = m0[:, None] * n
    out_ddW[rows, other] = m1[:, None, None] * (n[:, :, None] * n[:, None, :])
    return out_W, out_dW, out_ddW


def _general_weights(beta, kernel: RadialKernel, y, quad: QuadSpec):
    S = len(beta)
    P = len(y)
    edges = np.append(beta, beta[0] + 2 * np.pi)
    t_th, w_th = gauss_legendre(quad.angular)
    t_r, w_r = gauss_legendre(quad.radial)
    r = np.linalg.norm(y, axis=-1)
    inside = r < 1.0
    delta = np.arcsin(np.minimum(1.0, 1.0 / np.maximum(r, 1e-300)))
    center = np.arctan2(y[:, 1], y[:, 0])
    W = np.zeros((P, S))
    dW = np.zeros((P, S, 2))
    ddW = np.zeros((P, S, 2, 2))
    for s in range(S):
        a0, a1 = edges[s], edges[s + 1]
        mid = 0.5 * (a0 + a1)
        c = center + 2 * np.pi * np.round((mid - center) / (2 * np.pi))
        lo = np.where(inside, a0, np.maximum(a0, c - delta))
        hi = np.where(inside, a1, np.minimum(a1, c + delta))
        span = np.maximum(hi - lo, 0.0)
        theta = lo[:, None] + span[:, None] * t_th
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        b = np.einsum("pa,pja->pj", y, e)
        disc = np.maximum(b * b - (r * r)[:, None] + 1.0, 0.0)
        root = np.sqrt(disc)
        r_lo = np.maximum(b - root, 0.0)
        r_hi = np.maximum(b + root, 0.0)
        chord = r_hi - r_lo
        rad = r_lo[..., None] + chord[..., None] * t_r
        z = rad[..., None] * e[:, :, None, :]
        u = y[:, None, None, :] - z
        val, grad, hess = kernel.jet(u)
        wt = (span[:, None, None] * w_th[None, :, None]) * (chord[..., None] * w_r) * rad
        W[:, s] = np.sum(wt * val, axis=(1, 2))
        dW[:, s] = np.sum(wt[..., None] * grad, axis=(1, 2))
        ddW[:, s] = np.sum(wt[..., None, None] * hess, axis=(1, 2))
    return W, dW, ddW


def planar_weights(beta, kernel: RadialKernel, y, quad: QuadSpec = QuadSpec()):
    """Sector weights and their first two derivatives at scaled points ``y`` ``(P, 2)``.

    Returns ``home, mode, W, dW, ddW``.
    """
    quad.check()
    beta = np.asarray(beta, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    P, S = len(y), len(beta)
    home = home_sector(beta, y)
    mode, ray = classify(beta, y)
    W = np.zeros((P, S))
    dW = np.zeros((P, S, 2))
    ddW = np.zeros((P, S, 2, 2))
    sel = np.flatnonzero(mode == RADON)
    if len(sel):
        W[sel], dW[sel], ddW[sel] = _radon_weights(beta, kernel, y[sel], home[sel], ray[sel], quad)
    sel = np.flatnonzero(mode == GENERAL)
    for start in range(0, len(sel), quad.chunk):
        part = sel[start:start + quad.chunk]
        W[part], dW[part], ddW[part] = _general_weights(beta, kernel, y[part], quad)
    return home, mode, W, dW, ddW


def _assemble(metrics, home, W, dW, ddW):
    base = metrics[home]
    D = metrics[None, :, :, :] - base[:, None, :, :]
    sigma = base + np.einsum("ps,psij->pij", W, D)
    dsig = np.einsum("psk,psij->pkij", dW, D)
    ddsig = np.einsum("pskl,psij->pklij", ddW, D)
    return sigma, dsig, ddsig


def smoothed_jet(fan, mollifier, x, quad: QuadSpec = QuadSpec()) -> SmoothedMetricJet:
    """Jet of ``phi_eps * rho`` at points ``x`` (shape ``(..., dim)``).

    ``mollifier`` is a :class:`Mollifier` or a bare ``eps`` (bump in the fan's dimension).
    """
    if not isinstance(mollifier, Mollifier):
        mollifier = Mollifier(3 if isinstance(fan, HingeFan3D) else 2, float(mollifier))
    eps = mollifier.eps
    kernel = mollifier.planar_kernel()
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1])
    beta, metrics = fan.transverse()
    if isinstance(fan, HingeFan3D):
        if mollifier.dim != 3:
            raise ValueError("a hinge fan needs a 3D mollifier")
        R = fan.frame
        y = (flat @ R)[:, :2] / eps
        home, mode, W, dW, ddW = planar_weights(beta, kernel, y, quad)
        sig, d2, dd2 = _assemble(metrics, home, W, dW, ddW)
        P = len(y)
        d3 = np.zeros((P, 3, 3, 3))
        dd3 = np.zeros((P, 3, 3, 3, 3))
        d3[:, :2] = d2
        dd3[:, :2, :2] = dd2
        sigma = np.einsum("ia,pab,jb->pij", R, sig, R)
        dsig = np.einsum("kc,ia,pcab,jb->pkij", R, R, d3, R) / eps
        ddsig = np.einsum("kc,ld,ia,pcdab,jb->pklij", R, R, R, dd3, R) / eps ** 2
        dim = 3
    else:
        if mollifier.dim != 2:
            raise ValueError("a planar fan needs a 2D mollifier")
        home, mode, W, dW, ddW = planar_weights(beta, kernel, flat / eps, quad)
        sigma, dsig, ddsig = _assemble(metrics, home, W, dW, ddW)
        dsig = dsig / eps
        ddsig = ddsig / eps ** 2
        dim = 2
    return SmoothedMetricJet(
        sigma.reshape(lead + (dim, dim)),
        dsig.reshape(lead + (dim,) * 3),
        ddsig.reshape(lead + (dim,) * 4),
        mode.reshape(lead),
    )


# ---------------------------------------------------------------------------
# curvature from a jet


def christoffel(jet: SmoothedMetricJet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``Gamma[..., a, k, j]`` (upper index first), its derivative
    ``dGamma[..., m, a, k, j]`` and the inverse metric."""
    sig = jet.sigma
    if np.any(~np.isfinite(sig)) or np.any(np.linalg.det(sig) <= 0):
        raise SingularMetricError("smoothed metric is not positive definite")
    inv = np.linalg.inv(sig)
    ds = jet.dsigma
    dds = jet.ddsigma
    # first kind: G[l, i, j] = 1/2 (d_i s_jl + d_j s_il - d_l s_ij)
    first = 0.5 * (np.einsum("...ijl->...lij", ds) + np.einsum("...jil->...lij", ds) - ds)
    gamma = np.einsum("...al,...lij->...aij", inv, first)
    dfirst = 0.5 * (np.einsum("...mijl->...mlij", dds) + np.einsum("...mjil->...mlij", dds) - dds)
    dinv = -np.einsum("...ab,...mbc,...cd->...mad", inv, ds, inv)
    dgamma = np.einsum("...mal,...lij->...maij", dinv, first) + np.einsum("...al,...mlij->...maij", inv, dfirst)
    return gamma, dgamma, inv


def curvature_density(jet: SmoothedMetricJet) -> tuple[np.ndarray, np.ndarray]:
    """``(kappa, mu)`` with ``kappa`` half the scalar curvature (Gauss curvature
    in 2D) and ``mu = sqrt(det sigma)``."""
    G, dG, inv = christoffel(jet)
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    # Ricci R_{bd} = R^a_{bad}
    ric = (np.einsum("...aadb->...bd", dG) - np.einsum("...daab->...bd", dG)
           + np.einsum("...aae,...edb->...bd", G, G) - np.einsum("...ade,...eab->...bd", G, G))
    scalar = np.einsum("...bd,...bd->...", inv, ric)
    return 0.5 * scalar, np.sqrt(np.linalg.det(jet.sigma))


def kappa_mu(fan, eps: float, x, quad: QuadSpec = QuadSpec()) -> np.ndarray:
    k, m = curvature_density(smoothed_jet(fan, eps, x, quad))
    return k * m


# ---------------------------------------------------------------------------
# integrals


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with ``n`` (odd) points per axis on ``[-L, L]^2``,
    ``L = margin * support radius``."""

    n: int = 161
    margin: float = 1.5

    def check(self) -> None:
        if self.n < 17 or self.n % 2 == 0:
            raise QuadratureResolutionError("grid needs an odd number (>= 17) of points per axis")
        if self.margin < 1.0:
            raise QuadratureResolutionError("grid must cover the support ball")


@dataclass
class IntegralResult:
    value: float
    error_estimate: float


def _plane_grid(half: float, n: int):
    s = np.linspace(-half, half, n)
    h = s[1] - s[0]
    X, Y = np.meshgrid(s, s, indexing="ij")
    return np.stack([X, Y], axis=-1), h


def _trapezoid(values: np.ndarray, h: float) -> float:
    # integrand vanishes on the boundary, so plain sums are the trapezoid rule
    return float(np.sum(values) * h * h)


def curvature_grid(fan, eps: float, grid: GridSpec = GridSpec(), quad: QuadSpec = QuadSpec()):
    """``kappa mu`` on the integration grid of the transverse plane.

    Returns ``(points, values, h)`` with points in transverse coordinates.
    """
    grid.check()
    half = grid.margin * support_radius(fan, eps)
    pts, h = _plane_grid(half, grid.n)
    if isinstance(fan, HingeFan3D):
        amb = pts[..., 0:1] * fan.frame[:, 0] + pts[..., 1:2] * fan.frame[:, 1]
        vals = kappa_mu(fan, eps, amb, quad)
    else:
        vals = kappa_mu(fan, eps, pts, quad)
    return pts, vals, h


def integrate_curvature(fan, eps: float = 1.0, grid: GridSpec = GridSpec(),
                        quad: QuadSpec = QuadSpec()) -> IntegralResult:
    """``int kappa mu`` over the plane (over a transverse plane for a hinge)."""
    _, vals, h = curvature_grid(fan, eps, grid, quad)
    fine = _trapezoid(vals, h)
    coarse = _trapezoid(vals[::2, ::2], 2 * h)
    return IntegralResult(fine, abs(fine - coarse))


# ---------------------------------------------------------------------------
# Levi-Civita holonomy


def frame_connection(jet: SmoothedMetricJet) -> np.ndarray:
    """Coefficients ``a_k`` of the Levi-Civita connection in the frame obtained
    by Gram-Schmidt of the coordinate basis: ``nabla_k e1 = a_k e2``."""
    sig, ds = jet.sigma, jet.dsigma
    L = np.linalg.cholesky(sig)
    E = np.swapaxes(np.linalg.inv(L), -1, -2)
    G, _, _ = christoffel(jet)
    M = np.einsum("...ai,...kab,...bj->...kij", E, ds, E)
    tril = np.tril(np.ones((2, 2)), -1) + 0.5 * np.eye(2)
    dL = np.einsum("...ab,...kbc->...kac", L, M * tril)
    dE = -np.einsum("...ab,...kcb,...cd->...kad", E, dL, E)
    e1, e2 = E[..., :, 0], E[..., :, 1]
    nab = dE[..., :, :, 0] + np.einsum("...akj,...j->...ka", G, e1)
    return np.einsum("...a,...ab,...kb->...k", e2, sig, nab)


def lc_connection(fan: SectorFan2D, eps: float, quad: QuadSpec = QuadSpec()) -> ConnectionField:
    """Levi-Civita connection of the smoothed metric as an so(2) one-form ``a J``."""

    def ev(x):
        a = frame_connection(smoothed_jet(fan, eps, x, quad))
        return a[..., None, None] * J

    return ConnectionField(2, 2, ev, None, None, "SO2")


def lc_holonomy_angle(fan: SectorFan2D, eps: float, R: float, steps: int = 64,
                      quad: QuadSpec = QuadSpec(), pieces: int = 8) -> float:
    """Rotation angle of the holonomy around the circle of radius ``R``, in (-pi, pi]."""
    r = support_radius(fan, eps)
    if not R > r:
        raise RadiusTooSmallError(f"radius {R} does not exceed the support radius {r}")
    H = holonomy(lc_connection(fan, eps, quad), Path.circle([0.0, 0.0], R, pieces=pieces), steps)
    return rotation_angle(H)


def angle_distance(a: float, b: float) -> float:
    """Distance between two angles modulo 2 pi."""
    d = (a - b) % (2 * np.pi)
    return float(min(d, 2 * np.pi - d))


@dataclass
class HomotopyRow:
    s: float
    integral: float
    angle_sum: float
    k: int


def homotopy_integers(fan: SectorFan2D, s_values: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                      grid: GridSpec = GridSpec(n=81), quad: QuadSpec = QuadSpec(16, 16, 32)) -> list:
    """``k(s) = round((int kappa mu + sum theta) / 2 pi)`` along ``s rho + (1 - s) g``."""
    rows = []
    for s in s_values:
        f = scaled_toward_reference(fan, s)
        val = integrate_curvature(f, 1.0, grid, quad).value
        tsum = float(math.fsum(sector_angles(f)))
        rows.append(HomotopyRow(float(s), val, tsum, int(round((val + tsum) / (2 * np.pi)))))
    return rows


# ---------------------------------------------------------------------------
# weak convergence


@dataclass
class ScanRow:
    eps: float
    value: float
    reference: float
    abs_error: float


def weak_convergence_scan(fan: SectorFan2D, psi: Callable, eps_list: Sequence[float],
                          grid: GridSpec = GridSpec(), quad: QuadSpec = QuadSpec()) -> list:
    """``|int psi kappa_eps mu_eps - d psi(0)|`` for each ``eps``.

    Uses ``kappa_eps mu_eps (x) = eps^-2 (kappa_1 mu_1)(x / eps)``: the field is
    evaluated once at ``eps = 1`` and the test function is pulled back.
    """
    pts, vals, h = curvature_grid(fan, 1.0, grid, quad)
    d = deficit(fan)
    ref = d * float(np.asarray(psi(np.zeros((1, 2))))[0])
    rows = []
    for eps in eps_list:
        value = float(np.sum(vals * psi(eps * pts)) * h * h)
        rows.append(ScanRow(float(eps), value, ref, abs(value - ref)))
    return rows


def smooth_bump(radius: float = 2.0, center=None) -> Callable:
    """``exp(1 - 1/(1 - |x - c|^2 / radius^2))``: smooth, compact, ``max = 1``."""

    def psi(x):
        x = np.asarray(x, dtype=float)
        c = np.zeros(x.shape[-1]) if center is None else np.asarray(center, float)
        s2 = np.sum((x - c) ** 2, axis=-1) / radius ** 2
        inside = s2 < 1.0
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - s2, 1.0)), 0.0)

    return psi
