"""Reproducible input files for the experiments."""
from __future__ import annotations

import json
import math
import os

import numpy as np

from . import complexes as cx
from .errors import ConfigError
from .fans import fan_from_vertex_star, product_hinge, regular_cone_fan, rotated, wedge_fan
from .fields import random_abelian_field, random_so3_field
from .regge import complex_to_json

FIXTURE_KINDS = (
    "polynomial-so3-field", "abelian-field", "triangle-fan", "wedge-fan", "product-hinge3d",
    "icosahedron", "boundary-4-simplex", "perturbed-flat-grid",
)


def _triangle_fan(seed: int):
    # seed 0: five equilateral triangles; other seeds: a scalene five-star
    if seed == 0:
        return regular_cone_fan(5)
    rng = np.random.default_rng(seed)
    K, L = cx.vertex_star(5, 1.0 + 0.15 * rng.uniform(-1, 1, 5), 1.0 + 0.15 * rng.uniform(-1, 1, 5))
    return fan_from_vertex_star(K, L, "c")


def _seed_angle(seed: int) -> float:
    return 0.0 if seed == 0 else float(np.random.default_rng(seed).uniform(0, 2 * math.pi))


def _hinge_axis(seed: int):
    if seed == 0:
        return (0.0, 0.0, 1.0)
    v = np.random.default_rng(seed).normal(size=3)
    return tuple(v / np.linalg.norm(v))


def fixture_data(kind: str, seed: int) -> dict:
    """JSON document for a fixture ``kind``."""
    if kind == "polynomial-so3-field":
        return random_so3_field(seed).to_json()
    if kind == "abelian-field":
        return random_abelian_field(seed).to_json()
    if kind == "triangle-fan":
        return _triangle_fan(seed).to_json()
    if kind == "wedge-fan":
        return rotated(wedge_fan(1.5 * math.pi, 4), _seed_angle(seed)).to_json()
    if kind == "product-hinge3d":
        return product_hinge(regular_cone_fan(5), axis=_hinge_axis(seed)).to_json()
    if kind == "icosahedron":
        return complex_to_json(*cx.icosahedron())
    if kind == "boundary-4-simplex":
        return complex_to_json(*cx.boundary_4simplex())
    if kind == "perturbed-flat-grid":
        K, L, _ = cx.flat_grid(5, seed)
        return complex_to_json(K, L)
    raise ConfigError(f"unknown fixture kind {kind!r}; choose from {', '.join(FIXTURE_KINDS)}")


def _encode(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return _encode(obj.item())
    return obj


def generate_fixture(kind: str, seed: int, out_dir) -> list:
    """Write ``<kind>-<seed>.json`` into ``out_dir``; returns the written paths."""
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    data = _encode(fixture_data(kind, seed))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{kind}-{seed}.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return [path]
