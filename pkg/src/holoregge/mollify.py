"""Radial bump kernels on the unit ball and their jets.

Every kernel here is written as ``phi(y) = c * K(a)`` with
``a = 1 / (1 - |y|^2)`` on the open unit ball and zero outside. Working in
``a`` keeps the derivatives compact:

    grad phi = c * 2 a^2 K'(a) y
    hess phi = c * (2 a^2 K'(a) I + (4 a^4 K''(a) + 8 a^3 K'(a)) y y^T)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

# beyond this value of a every profile is below 1e-300
A_MAX = 700.0


@lru_cache(maxsize=None)
def bump_constant(n: int) -> float:
    """``c_n`` with ``int_{B^n} c_n exp(-1/(1-|y|^2)) dy = 1``."""
    radial, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (n - 1), 0.0, 1.0,
                               epsabs=0.0, epsrel=1e-13, limit=200)
    sphere = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    return 1.0 / (sphere * radial)


def _a_of(s2):
    s2 = np.asarray(s2, dtype=float)
    inside = s2 < 1.0 - 1.0 / A_MAX
    a = np.where(inside, 1.0 / np.where(inside, 1.0 - s2, 1.0), A_MAX)
    return a, inside


# hyperu is fast for small arguments but slow for moderate ones; past this
# threshold a Gauss-Hermite rule on the substituted integral is used instead.
_HERMITE_FROM = 2.5
_HERMITE = np.polynomial.hermite.hermgauss(80)


def _marginal_g(a):
    """``g(a) = int_{-1}^{1} exp(-a / (1 - v^2)) dv`` and its first two derivatives."""
    a = np.asarray(a, dtype=float)
    g = np.empty_like(a)
    g1 = np.empty_like(a)
    g2 = np.empty_like(a)
    small = a < _HERMITE_FROM
    if np.any(small):
        s = a[small]
        e = np.exp(-s)
        rp = math.sqrt(math.pi)
        g[small] = rp * e * s * special.hyperu(1.5, 2.0, s)
        g1[small] = -rp * e * special.hyperu(0.5, 1.0, s)
        g2[small] = rp * e * special.hyperu(0.5, 2.0, s)
    big = ~small
    if np.any(big):
        # v^2 = u^2 / (b + u^2) turns g into b e^{-b} int e^{-u^2} (b + u^2)^{-3/2} du
        b = a[big]
        u, w = _HERMITE
        q = 1.0 / (b[:, None] + u * u)
        F0 = (q ** 1.5) @ w
        F1 = (q ** 2.5) @ w
        F2 = (q ** 3.5) @ w
        e = np.exp(-b)
        h = F0 * (1.0 - b) - 1.5 * b * F1
        dh = -1.5 * F1 * (1.0 - b) - F0 - 1.5 * F1 + 3.75 * b * F2
        g[big] = e * b * F0
        g1[big] = e * h
        g2[big] = e * (dh - h)
    return g, g1, g2


@dataclass(frozen=True)
class RadialKernel:
    """A radial kernel in dimension ``dim`` (the dimension it integrates to 1 in)."""

    name: str
    dim: int
    c: float

    def profile(self, a):
        """``K(a), K'(a), K''(a)``."""
        if self.name == "bump":
            e = np.exp(-a)
            return e, -e, e
        if self.name == "bump3-marginal":
            g, g1, g2 = _marginal_g(a)
            ra = np.sqrt(a)
            K = g / ra
            K1 = -0.5 * g / (a * ra) + g1 / ra
            K2 = 0.75 * g / (a * a * ra) - g1 / (a * ra) + g2 / ra
            return K, K1, K2
        raise ValueError(self.name)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        a, inside = _a_of(np.sum(y * y, axis=-1))
        K, _, _ = self.profile(a)
        return np.where(inside, self.c * K, 0.0)

    def jet(self, y):
        """Value ``(...)``, gradient ``(..., d)`` and Hessian ``(..., d, d)`` at ``y``."""
        y = np.asarray(y, dtype=float)
        a, inside = _a_of(np.sum(y * y, axis=-1))
        K, K1, K2 = self.profile(a)
        c = np.where(inside, self.c, 0.0)
        a2 = a * a
        val = c * K
        g = c * 2.0 * a2 * K1
        grad = g[..., None] * y
        h = c * (4.0 * a2 * a2 * K2 + 8.0 * a2 * a * K1)
        eye = np.eye(y.shape[-1])
        hess = g[..., None, None] * eye + h[..., None, None] * (y[..., :, None] * y[..., None, :])
        return val, grad, hess

    def line_marginal(self, t):
        """Integral of the kernel over the line ``{y : y . n = t}``, and its t-derivative."""
        t = np.asarray(t, dtype=float)
        a, inside = _a_of(t * t)
        if self.name == "bump":
            g, g1, _ = _marginal_g(a)
            ra = np.sqrt(a)
            K = g / ra
            K1 = -0.5 * g / (a * ra) + g1 / ra
            val = self.c * K
            der = self.c * K1 * 2.0 * t * a * a
        elif self.name == "bump3-marginal":
            e = np.exp(-a)
            val = math.pi * self.c * (e / a - special.exp1(a))
            der = -2.0 * math.pi * self.c * t * e
        else:
            raise ValueError(self.name)
        return np.where(inside, val, 0.0), np.where(inside, der, 0.0)


def bump_kernel(dim: int = 2) -> RadialKernel:
    """The normalized bump ``c exp(-1/(1-|y|^2))`` in dimension 2."""
    if dim != 2:
        raise ValueError("only the planar bump is used as a convolution kernel")
    return RadialKernel("bump", 2, bump_constant(2))


def hinge_kernel() -> RadialKernel:
    """Planar marginal of the 3D bump (integrated along the hinge direction)."""
    return RadialKernel("bump3-marginal", 2, bump_constant(3))


@dataclass(frozen=True)
class Mollifier:
    """Bump of support radius ``eps`` in dimension ``dim``, unit integral."""

    dim: int
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def c(self) -> float:
        return bump_constant(self.dim)

    def __call__(self, x):
        x = np.asarray(x, dtype=float) / self.eps
        a, inside = _a_of(np.sum(x * x, axis=-1))
        return np.where(inside, self.c * np.exp(-a), 0.0) / self.eps ** self.dim

    @property
    def support_radius(self) -> float:
        return self.eps

    def planar_kernel(self) -> RadialKernel:
        """Kernel used by the planar weight engine (exact marginal for ``dim = 3``)."""
        return bump_kernel(2) if self.dim == 2 else hinge_kernel()
