"""Concrete connection and gauge fields used by tests, fixtures and the CLI."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .gauge import J, ConnectionField, GaugeField, exp_map, hat


def so3_basis() -> np.ndarray:
    return hat(np.eye(3))


def so2_basis() -> np.ndarray:
    return J[None].copy()


@dataclass(frozen=True)
class PolynomialField:
    """Quadratic algebra-valued coefficients ``A_i(x) = sum_a p_ia(x) E_a``.

    ``p_ia(x) = const[i, a] + lin[i, k, a] x_k + quad[i, k, l, a] x_k x_l``
    with ``quad`` symmetric in ``k, l``.
    """

    basis: np.ndarray
    const: np.ndarray
    lin: np.ndarray
    quad: np.ndarray
    group: str
    box: tuple

    @property
    def dim(self) -> int:
        return self.const.shape[0]

    def coefficients(self, x):
        x = np.asarray(x, dtype=float)
        p = (self.const
             + np.einsum("ika,...k->...ia", self.lin, x)
             + np.einsum("ikla,...k,...l->...ia", self.quad, x, x))
        return np.einsum("...ia,abc->...ibc", p, self.basis)

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        dp = self.lin + 2.0 * np.einsum("ikla,...l->...ika", self.quad, x)
        # output index order [k, i]: d_k A_i
        return np.einsum("...ika,abc->...kibc", dp, self.basis)

    def connection(self) -> ConnectionField:
        return ConnectionField(self.dim, self.basis.shape[-1], self.coefficients,
                               self.derivatives, self.box, self.group)

    def to_json(self) -> dict:
        return {
            "kind": "polynomial",
            "group": self.group,
            "basis": self.basis.tolist(),
            "const": self.const.tolist(),
            "lin": self.lin.tolist(),
            "quad": self.quad.tolist(),
            "box": [np.asarray(self.box[0]).tolist(), np.asarray(self.box[1]).tolist()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PolynomialField":
        try:
            if data.get("kind") != "polynomial":
                raise ConfigError(f"unsupported field kind {data.get('kind')!r}")
            basis = np.asarray(data["basis"], dtype=float)
            const = np.asarray(data["const"], dtype=float)
            lin = np.asarray(data["lin"], dtype=float)
            quad = np.asarray(data["quad"], dtype=float)
            box = (np.asarray(data["box"][0], dtype=float), np.asarray(data["box"][1], dtype=float))
            group = data["group"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed field description: {exc}") from exc
        d, m = const.shape
        if basis.shape[0] != m or lin.shape != (d, d, m) or quad.shape != (d, d, d, m):
            raise ConfigError("inconsistent polynomial field shapes")
        return cls(basis, const, lin, 0.5 * (quad + np.swapaxes(quad, 1, 2)), group, box)


def _random_poly(rng, basis, dim, scale, box, group) -> PolynomialField:
    m = basis.shape[0]
    const = scale * rng.uniform(-1, 1, size=(dim, m))
    lin = scale * rng.uniform(-1, 1, size=(dim, dim, m))
    quad = scale * rng.uniform(-1, 1, size=(dim, dim, dim, m))
    quad = 0.5 * (quad + np.swapaxes(quad, 1, 2))
    lo = -np.ones(dim) if box is None else np.asarray(box[0], float)
    hi = np.ones(dim) if box is None else np.asarray(box[1], float)
    return PolynomialField(basis, const, lin, quad, group, (lo, hi))


def random_so3_field(seed: int, dim: int = 2, scale: float = 1.0, box=None) -> PolynomialField:
    """Seeded non-abelian SO(3) field with quadratic coefficients on ``[-1, 1]^dim``."""
    return _random_poly(np.random.default_rng(seed), so3_basis(), dim, scale, box, "SO3")


def random_abelian_field(seed: int, dim: int = 2, scale: float = 1.0, box=None) -> PolynomialField:
    """Seeded SO(2) field (all values multiples of ``J``)."""
    return _random_poly(np.random.default_rng(seed), so2_basis(), dim, scale, box, "SO2")


def constant_curvature_field(f: float, box=None) -> PolynomialField:
    """Abelian field ``A = f x^0 J dx^1`` whose curvature is ``F_01 = f J``."""
    lin = np.zeros((2, 2, 1))
    lin[1, 0, 0] = f
    lo = -np.ones(2) if box is None else np.asarray(box[0], float)
    hi = np.ones(2) if box is None else np.asarray(box[1], float)
    return PolynomialField(so2_basis(), np.zeros((2, 1)), lin, np.zeros((2, 2, 2, 1)), "SO2", (lo, hi))


def zero_field(n: int = 3, dim: int = 2, box=None) -> ConnectionField:
    lo = -np.ones(dim) if box is None else np.asarray(box[0], float)
    hi = np.ones(dim) if box is None else np.asarray(box[1], float)
    group = {2: "SO2", 3: "SO3"}.get(n, "GL")

    def ev(x):
        return np.zeros(np.shape(x)[:-1] + (dim, n, n))

    def dev(x):
        return np.zeros(np.shape(x)[:-1] + (dim, dim, n, n))

    return ConnectionField(dim, n, ev, dev, (lo, hi), group)


def load_field(path) -> ConnectionField:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if data.get("kind") == "zero":
        return zero_field(int(data.get("n", 3)), int(data.get("dim", 2)), data.get("box"))
    return PolynomialField.from_json(data).connection()


def exp_product_gauge(X1, X2, freq1, phase1, freq2, phase2, amp1: float = 1.0, amp2: float = 1.0,
                      group: Optional[str] = None) -> GaugeField:
    """``Q(x) = exp(f(x) X1) exp(g(x) X2)`` with ``f = amp1 sin(freq1.x + phase1)``.

    The derivative is analytic:
    ``d_k Q = d_k f X1 Q + exp(f X1) d_k g X2 exp(g X2)``.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    k1 = np.asarray(freq1, dtype=float)
    k2 = np.asarray(freq2, dtype=float)

    def parts(x):
        x = np.asarray(x, dtype=float)
        s1 = x @ k1 + phase1
        s2 = x @ k2 + phase2
        f, g = amp1 * np.sin(s1), amp2 * np.sin(s2)
        df = amp1 * np.cos(s1)[..., None] * k1
        dg = amp2 * np.cos(s2)[..., None] * k2
        E1 = exp_map(f[..., None, None] * X1, group)
        E2 = exp_map(g[..., None, None] * X2, group)
        return E1, E2, df, dg

    def ev(x):
        E1, E2, _, _ = parts(x)
        return E1 @ E2

    def dev(x):
        E1, E2, df, dg = parts(x)
        Q = (E1 @ E2)[..., None, :, :]
        left = df[..., None, None] * (X1 @ Q)
        right = E1[..., None, :, :] @ (dg[..., None, None] * X2) @ E2[..., None, :, :]
        return left + right

    return GaugeField(ev, dev)


def random_gauge(seed: int, n: int = 3, dim: int = 2) -> GaugeField:
    """Seeded smooth gauge field built from two algebra directions."""
    rng = np.random.default_rng(seed)
    if n == 3:
        X1, X2 = hat(rng.normal(size=3)), hat(rng.normal(size=3))
        group = "SO3"
    elif n == 2:
        X1, X2 = J, J
        group = "SO2"
    else:
        X1, X2 = rng.normal(size=(2, n, n))
        group = "GL"
    return exp_product_gauge(X1, X2, rng.uniform(-2, 2, dim), rng.uniform(0, 2 * np.pi),
                             rng.uniform(-2, 2, dim), rng.uniform(0, 2 * np.pi), group=group)
