"""Experiment drivers: each experiment expands into independent cases that
produce result rows (value, reference, error, pass flag)."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import complexes as cx
from .errors import ConfigError
from .fans import (
    HingeFan3D,
    deficit,
    hinge_deficit,
    load_fan,
    product_hinge,
    regular_cone_fan,
    sheared_hinge,
    support_radius,
    wedge_fan,
)
from .fields import (
    load_field,
    random_abelian_field,
    random_gauge,
    random_so3_field,
    zero_field,
)
from .gauge import Path, gauge_transform, holonomy, inverse, parallel_transport, pt_abelian
from .hinge3d import SampleSpec, hinge3d_invariant_checks, hinge3d_weak_convergence, separable_psi
from .identity import (
    Rectangle,
    defect_order_scan,
    gauge_condition_residuals,
    radial_gauge,
    transported_difference,
    verify_identity,
)
from .regge import (
    action_gradient,
    critical_point_search,
    deficit_angle,
    edge_key,
    interior_hinges,
    load_complex,
    regge_action,
)
from .smoothing import (
    GridSpec,
    QuadSpec,
    angle_distance,
    homotopy_integers,
    integrate_curvature,
    lc_holonomy_angle,
    smooth_bump,
    weak_convergence_scan,
)

EXPERIMENTS = (
    "identity-check", "defect-order", "radial-gauge", "regge-action", "deficit-table",
    "cone-integral", "cone-holonomy", "delta-convergence", "hinge3d-invariants",
    "hinge3d-convergence", "critical-search",
)

NAN = float("nan")


@dataclass
class Row:
    case: int
    label: str
    quantity: str
    inputs: str
    value: float
    reference: float
    abs_error: float
    criterion: str
    passed: bool

    def as_dict(self) -> dict:
        def num(x):
            return None if x is None or math.isnan(x) else x
        return {"case": self.case, "label": self.label, "quantity": self.quantity,
                "inputs": self.inputs, "value": num(self.value), "reference": num(self.reference),
                "abs_error": num(self.abs_error), "criterion": self.criterion, "pass": self.passed}


@dataclass
class RunResult:
    experiment: str
    params: dict
    rows: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "passed": self.passed,
                "wall_time": self.wall_time, "rows": [r.as_dict() for r in self.rows]}


class _Rows:
    """Collects rows for one case."""

    def __init__(self, case: int, label: str):
        self.case = case
        self.label = label
        self.rows = []

    def _add(self, quantity, inputs, value, reference, err, criterion, ok):
        self.rows.append(Row(self.case, self.label, quantity, _fmt_inputs(inputs), float(value),
                             float(reference), float(err), criterion, bool(ok)))

    def near(self, quantity, value, reference, tol, **inputs):
        err = abs(value - reference)
        self._add(quantity, inputs, value, reference, err, f"abs_error<={tol:g}", err <= tol)

    def below(self, quantity, value, tol, **inputs):
        self._add(quantity, inputs, value, 0.0, abs(value), f"value<={tol:g}", abs(value) <= tol)

    def above(self, quantity, value, bound, reference=NAN, **inputs):
        err = abs(value - reference) if not math.isnan(reference) else NAN
        self._add(quantity, inputs, value, reference, err, f"value>={bound:g}", value >= bound)

    def data(self, quantity, value, reference=NAN, **inputs):
        err = abs(value - reference) if not math.isnan(reference) else NAN
        self._add(quantity, inputs, value, reference, err, "info", True)


def _fmt_inputs(inputs: dict) -> str:
    parts = []
    for k, v in inputs.items():
        if isinstance(v, float):
            v = f"{v:.17g}"
        parts.append(f"{k}={v}")
    return ";".join(parts)


# ---------------------------------------------------------------------------
# parameter defaults and per-experiment schemas

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int1 = {"type": "integer", "minimum": 1}
_seeds = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_pos_list = {"type": "array", "items": _pos, "minItems": 1}
_names = {"type": "array", "items": {"type": "string"}, "minItems": 1}
_odd = {"type": "integer", "minimum": 17}
_quad = {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 3, "maxItems": 3}
_fraction_list = {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1}

_FANS_2D = ["five-triangle-cone", "wedge-three-half-pi", "wedge-saddle"]

DEFAULTS = {
    "identity-check": {"variant": "identity", "field_kind": "so3", "seeds": [0, 1, 2, 3, 4],
                       "origin": [-0.4, -0.3], "size": [0.8, 0.6], "quad_order": 16, "pt_steps": 128,
                       "tolerance": 1e-6, "gauge_seed_offset": 100},
    "defect-order": {"field_kind": "so3", "seeds": [1], "corner": [-0.2, -0.2],
                     "h_list": [0.4, 0.2, 0.1, 0.05], "quad_order": 8, "pt_steps": 64, "min_slope": 2.7},
    "radial-gauge": {"field_kind": "so3", "seeds": [0, 1, 2], "origin": [-0.4, -0.3], "size": [0.8, 0.6],
                     "pt_steps": 64, "grid": 16, "tolerance": 1e-7},
    "regge-action": {"complexes": ["boundary-4-simplex", "icosahedron", "five-triangle-star",
                                   "boundary-4-simplex@0", "cross-polytope@1", "bipyramid@2"],
                     "perturb_amount": 0.05, "tolerance": 1e-9, "gradient_tolerance": 1e-5},
    "deficit-table": {"complexes": ["five-triangle-star", "boundary-4-simplex", "icosahedron"],
                      "tolerance": 1e-12, "sum_tolerance": 1e-9},
    "cone-integral": {"fans": _FANS_2D, "eps": 1.0, "grid_n": 161, "margin": 1.5, "quad": [48, 48, 64],
                      "tolerance": 1e-3},
    "cone-holonomy": {"fans": _FANS_2D, "eps": 1.0, "radius_factor": 1.5, "steps": 64, "pieces": 8,
                      "quad": [48, 48, 64], "tolerance": 1e-4, "s_values": [0.0, 0.25, 0.5, 0.75, 1.0],
                      "homotopy_grid_n": 81, "homotopy_quad": [16, 16, 32]},
    "delta-convergence": {"fans": _FANS_2D, "eps_list": [0.4, 0.2, 0.1], "psi_radius": 2.0,
                          "grid_n": 161, "margin": 1.5, "quad": [48, 48, 64], "rel_tolerance": 5e-2},
    "hinge3d-invariants": {"fans": ["product-cone", "sheared-cone"], "eps_list": [0.5, 0.25],
                           "samples": 400, "tube": 3.0, "invariant_tolerance": 1e-6,
                           "tube_tolerance": 1e-8, "tangential_tolerance": 1e-12, "max_inside_ratio": 2.0,
                           "quad": [48, 48, 64]},
    "hinge3d-convergence": {"fans": ["product-cone"], "eps_list": [0.4, 0.2], "hinge_radius": 2.5,
                            "psi_radius": 2.0, "grid_n": 161, "margin": 1.5, "quad": [48, 48, 64],
                            "z_nodes": 401, "rel_tolerance": 5e-2},
    "critical-search": {"complexes": ["perturbed-flat-grid@0", "boundary-4-simplex@0"], "free_edges": "auto",
                        "tolerance": 1e-9, "max_iter": 200, "deficit_tolerance": 1e-8,
                        "perturb_amount": 0.05},
}

PARAM_SCHEMAS = {
    "identity-check": {"variant": {"enum": ["identity", "abelian", "covariance"]},
                       "field_kind": {"enum": ["so3", "abelian", "zero"]}, "seeds": _seeds,
                       "origin": _pair, "size": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                       "quad_order": _int1, "pt_steps": _int1, "tolerance": _pos,
                       "gauge_seed_offset": {"type": "integer", "minimum": 0}},
    "defect-order": {"field_kind": {"enum": ["so3", "abelian", "zero"]}, "seeds": _seeds, "corner": _pair,
                     "h_list": {"type": "array", "items": _pos, "minItems": 2}, "quad_order": _int1,
                     "pt_steps": _int1, "min_slope": _num},
    "radial-gauge": {"field_kind": {"enum": ["so3", "abelian", "zero"]}, "seeds": _seeds, "origin": _pair,
                     "size": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                     "pt_steps": _int1, "grid": {"type": "integer", "minimum": 2}, "tolerance": _pos},
    "regge-action": {"complexes": _names, "perturb_amount": _pos, "tolerance": _pos,
                     "gradient_tolerance": _pos, "reference": _num},
    "deficit-table": {"complexes": _names, "tolerance": _pos, "sum_tolerance": _pos, "reference": _num},
    "cone-integral": {"fans": _names, "eps": _pos, "grid_n": _odd, "margin": {"type": "number", "minimum": 1},
                      "quad": _quad, "tolerance": _pos},
    "cone-holonomy": {"fans": _names, "eps": _pos, "radius_factor": {"type": "number", "exclusiveMinimum": 1},
                      "steps": _int1, "pieces": _int1, "quad": _quad, "tolerance": _pos,
                      "s_values": _fraction_list, "homotopy_grid_n": _odd, "homotopy_quad": _quad},
    "delta-convergence": {"fans": _names, "eps_list": _pos_list, "psi_radius": _pos, "grid_n": _odd,
                          "margin": {"type": "number", "minimum": 1}, "quad": _quad, "rel_tolerance": _pos},
    "hinge3d-invariants": {"fans": _names, "eps_list": _pos_list, "samples": _int1, "tube": _pos,
                           "invariant_tolerance": _pos, "tube_tolerance": _pos, "tangential_tolerance": _pos,
                           "max_inside_ratio": _pos, "quad": _quad},
    "hinge3d-convergence": {"fans": _names, "eps_list": _pos_list, "hinge_radius": _pos, "psi_radius": _pos,
                            "grid_n": _odd, "margin": {"type": "number", "minimum": 1}, "quad": _quad,
                            "z_nodes": {"type": "integer", "minimum": 3}, "rel_tolerance": _pos},
    "critical-search": {"complexes": _names,
                        "free_edges": {"oneOf": [{"enum": ["auto", "interior"]},
                                                 {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
                        "tolerance": _pos, "max_iter": _int1, "deficit_tolerance": _pos,
                        "perturb_amount": _pos},
}


# ---------------------------------------------------------------------------
# builtin inputs


def builtin_fan(name: str):
    table = {
        "five-triangle-cone": lambda: regular_cone_fan(5),
        "flat-hexagon": lambda: regular_cone_fan(6),
        "wedge-three-half-pi": lambda: wedge_fan(1.5 * math.pi, 4),
        "wedge-saddle": lambda: wedge_fan(2 * math.pi + 0.4, 4),
        "product-cone": lambda: product_hinge(regular_cone_fan(5)),
        "product-cone-tilted": lambda: product_hinge(regular_cone_fan(5), axis=(0.3, -0.5, 0.8)),
        "sheared-cone": lambda: sheared_hinge(regular_cone_fan(5), [0.3, -0.2, 0.5, 0.1, 0.0]),
    }
    if name not in table:
        raise ConfigError(f"unknown builtin fan {name!r}; choose from {sorted(table)}")
    return table[name]()


def builtin_complex(name: str, amount: float = 0.05):
    """``name`` or ``name@seed`` (squared lengths perturbed with that seed)."""
    base, _, seed = name.partition("@")
    table = {
        "boundary-4-simplex": cx.boundary_4simplex,
        "icosahedron": cx.icosahedron,
        "cross-polytope": cx.cross_polytope_boundary,
        "bipyramid": cx.bipyramid_boundary,
        "five-triangle-star": lambda: cx.vertex_star(5),
        "six-triangle-star": lambda: cx.vertex_star(6),
    }
    if base == "perturbed-flat-grid":
        K, L, _ = cx.flat_grid(5, int(seed) if seed else 0)
        return K, L
    if base not in table:
        raise ConfigError(f"unknown builtin complex {base!r}")
    K, L = table[base]()
    if seed:
        try:
            L = cx.perturbed(K, L, int(seed), amount)
        except ValueError as exc:
            raise ConfigError(f"bad perturbation seed in {name!r}") from exc
    return K, L


def _field_for(kind: str, seed: int):
    if kind == "so3":
        return random_so3_field(seed).connection()
    if kind == "abelian":
        return random_abelian_field(seed).connection()
    return zero_field(3)


def _source_list(inputs: list, names: list, tag: str) -> list:
    if inputs:
        return [{"file": p} for p in inputs]
    return [{tag: n} for n in names]


# ---------------------------------------------------------------------------
# case runners


def _rect(p) -> Rectangle:
    return Rectangle.axis_aligned(p["origin"], p["size"][0], p["size"][1])


def _field_source(src: dict, p: dict):
    if "file" in src:
        return load_field(src["file"])
    return _field_for(p["field_kind"], src["seed"])


def _run_identity(case: dict, p: dict, out: _Rows):
    A = _field_source(case["source"], p)
    variant = p["variant"]
    if variant == "identity":
        T = _rect(p)
        rep = verify_identity(A, T, p["quad_order"], p["pt_steps"])
        out.below("identity_defect", rep.defect, p["tolerance"], quad_order=p["quad_order"],
                  pt_steps=p["pt_steps"])
    elif variant == "abelian":
        paths = {
            "circle": Path.circle([0.1, -0.05], 0.6, pieces=8),
            "polyline": Path.polyline(np.array([[-0.7, -0.6], [0.5, -0.2], [0.3, 0.7], [-0.4, 0.2]])),
        }
        for name, path in paths.items():
            err = float(np.linalg.norm(parallel_transport(A, path, p["pt_steps"]) - pt_abelian(A, path, p["quad_order"])))
            out.below("abelian_closed_form", err, p["tolerance"], path=name, pt_steps=p["pt_steps"])
    else:
        seed = case["source"].get("seed", case["index"]) + p["gauge_seed_offset"]
        Q = random_gauge(seed, A.n, A.dim)
        A2 = gauge_transform(A, Q)
        pts = np.array([[-0.7, -0.6], [0.5, -0.2], [0.3, 0.7], [-0.4, 0.2]])
        path = Path.polyline(pts)
        x, y = Q(pts[:1])[0], Q(pts[-1:])[0]
        r1 = float(np.linalg.norm(parallel_transport(A2, path, p["pt_steps"]) @ x
                                  - y @ parallel_transport(A, path, p["pt_steps"])))
        out.below("transport_covariance", r1, p["tolerance"], gauge_seed=seed, pt_steps=p["pt_steps"])
        loop = Path.circle([0.1, 0.0], 0.5, pieces=8)
        q0 = Q(np.array([[0.6, 0.0]]))[0]
        H = holonomy(A, loop, p["pt_steps"])
        r2 = float(np.linalg.norm(holonomy(A2, loop, p["pt_steps"]) - q0 @ H @ inverse(q0, A.group)))
        out.below("holonomy_conjugation", r2, p["tolerance"], gauge_seed=seed, pt_steps=p["pt_steps"])


def _run_defect_order(case: dict, p: dict, out: _Rows):
    A = _field_source(case["source"], p)
    scan = defect_order_scan(A, p["corner"], p["h_list"], p["quad_order"], p["pt_steps"])
    for h, d in scan.pairs:
        out.data("naive_defect", d, h=h)
    out.above("loglog_slope", scan.slope, p["min_slope"], reference=3.0)


def _run_radial(case: dict, p: dict, out: _Rows):
    A = _field_source(case["source"], p)
    T = _rect(p)
    A2, Q = radial_gauge(A, T, p["pt_steps"], check=False, grid=p["grid"])
    r0, r1 = gauge_condition_residuals(A2, T, p["grid"])
    out.below("A0_residual", r0, p["tolerance"], grid=p["grid"])
    out.below("A1_edge_residual", r1, p["tolerance"], grid=p["grid"])
    out.below("holonomy_preserved", transported_difference(A2, A, Q, T, p["pt_steps"]), p["tolerance"])


def _complex_source(src: dict, p: dict):
    if "file" in src:
        return load_complex(src["file"])
    return builtin_complex(src["complex"], p.get("perturb_amount", 0.05))


def _equilateral_reference(K, L, hinge) -> float:
    """Deficit for a complex with all squared lengths equal: regular simplices
    have dihedral angle ``arccos(1/n)``."""
    vals = np.array([L[e] for e in K.edges])
    if np.ptp(vals) > 1e-14 * vals.max():
        return NAN
    return 2 * math.pi - len(K.star(hinge)) * math.acos(1.0 / K.top_dim)


def _regular_volume(k: int, edge_sq: float) -> float:
    """Volume of the regular k-simplex with squared edge length ``edge_sq``."""
    return edge_sq ** (k / 2) * math.sqrt(k + 1) / (math.factorial(k) * 2 ** (k / 2))


def _euler_reference(K) -> float:
    """``2 pi chi`` for closed 2D complexes, NaN otherwise."""
    if K.top_dim != 2 or any(not K.is_interior(h) for h in K.hinges()):
        return NAN
    chi = len(K.of_dim(0)) - len(K.of_dim(1)) + len(K.of_dim(2))
    return 2 * math.pi * chi


def _run_regge(case: dict, p: dict, out: _Rows):
    K, L = _complex_source(case["source"], p)
    rep = regge_action(K, L)
    hinges = interior_hinges(K)
    ref = p.get("reference", NAN)
    if math.isnan(ref):
        per = [_equilateral_reference(K, L, h) for h in hinges]
        if not any(math.isnan(x) for x in per):
            ref = math.fsum(per) * _regular_volume(K.top_dim - 2, L[K.edges[0]])
    if math.isnan(ref):
        out.data("action", rep.total, hinges=len(hinges))
    else:
        out.near("action", rep.total, ref, p["tolerance"], hinges=len(hinges))
    if K.top_dim >= 3 and all(K.is_interior(h) for h in K.hinges()):
        fd = action_gradient(K, L, "fd")
        sch = action_gradient(K, L, "schlafli")
        diff = max(abs(fd[e] - sch[e]) for e in K.edges)
        scale = max(abs(sch[e]) for e in K.edges)
        out.below("gradient_rel_diff", diff / scale if scale > 0 else diff, p["gradient_tolerance"],
                  edges=len(K.edges))


def _run_deficits(case: dict, p: dict, out: _Rows):
    K, L = _complex_source(case["source"], p)
    total = []
    for h in interior_hinges(K):
        d = deficit_angle(K, h, L)
        total.append(d)
        ref = p.get("reference", _equilateral_reference(K, L, h))
        name = "-".join(str(v) for v in h)
        if math.isnan(ref):
            out.data("deficit", d, hinge=name)
        else:
            out.near("deficit", d, ref, p["tolerance"], hinge=name)
    chi_ref = _euler_reference(K)
    if not math.isnan(chi_ref):
        out.near("deficit_sum", math.fsum(total), chi_ref, p["sum_tolerance"])


def _fan_source(src: dict):
    return load_fan(src["file"]) if "file" in src else builtin_fan(src["fan"])


def _qs(q) -> QuadSpec:
    return QuadSpec(q[0], q[1], q[2])


def _require_2d(fan):
    if isinstance(fan, HingeFan3D):
        raise ConfigError("this experiment needs a 2D fan")
    return fan


def _require_3d(fan):
    if not isinstance(fan, HingeFan3D):
        raise ConfigError("this experiment needs a 3D hinge fan")
    return fan


def _run_cone_integral(case: dict, p: dict, out: _Rows):
    fan = _fan_source(case["source"])
    d = hinge_deficit(fan) if isinstance(fan, HingeFan3D) else deficit(fan)
    res = integrate_curvature(fan, p["eps"], GridSpec(p["grid_n"], p["margin"]), _qs(p["quad"]))
    out.near("curvature_integral", res.value, d, p["tolerance"], eps=p["eps"], grid_n=p["grid_n"],
             error_estimate=res.error_estimate)


def _run_cone_holonomy(case: dict, p: dict, out: _Rows):
    fan = _require_2d(_fan_source(case["source"]))
    d = deficit(fan)
    R = p["radius_factor"] * support_radius(fan, p["eps"])
    angle = lc_holonomy_angle(fan, p["eps"], R, p["steps"], _qs(p["quad"]), p["pieces"])
    err = angle_distance(angle, d)
    out._add("holonomy_angle", {"eps": p["eps"], "R": R, "steps": p["steps"]}, angle, d, err,
             f"mod2pi_error<={p['tolerance']:g}", err <= p["tolerance"])
    rows = homotopy_integers(fan, p["s_values"], GridSpec(p["homotopy_grid_n"]), _qs(p["homotopy_quad"]))
    for r in rows:
        out.near("homotopy_k", float(r.k), 1.0, 0.0, s=r.s, integral=r.integral, angle_sum=r.angle_sum)


def _decrease_count(errors) -> int:
    return sum(1 for a, b in zip(errors, errors[1:]) if not b < a)


def _run_delta(case: dict, p: dict, out: _Rows):
    fan = _require_2d(_fan_source(case["source"]))
    psi = smooth_bump(p["psi_radius"])
    rows = weak_convergence_scan(fan, psi, p["eps_list"], GridSpec(p["grid_n"], p["margin"]), _qs(p["quad"]))
    # psi has sup norm 1
    bound = p["rel_tolerance"] * abs(deficit(fan))
    for r in rows:
        out.near("weighted_integral", r.value, r.reference, bound, eps=r.eps)
    out.below("non_decreasing_steps", _decrease_count([r.abs_error for r in rows]), 0.0)


def _run_hinge_invariants(case: dict, p: dict, out: _Rows):
    fan = _require_3d(_fan_source(case["source"]))
    previous = None
    for eps in p["eps_list"]:
        rep = hinge3d_invariant_checks(fan, eps, SampleSpec(p["samples"], 0, p["tube"]), _qs(p["quad"]))
        out.below("gamma_f", rep.torsion, p["invariant_tolerance"], eps=eps)
        out.below("gamma_m", rep.m_parallel, p["invariant_tolerance"], eps=eps)
        out.below("kappa_outside_tube", rep.outside_tube, p["tube_tolerance"], eps=eps, tube=p["tube"])
        out.below("tangential", rep.tangential, p["tangential_tolerance"], eps=eps)
        out.data("kappa_eps2_inside", rep.inside_scaled, eps=eps)
        if previous is not None and previous > 0:
            ratio = max(rep.inside_scaled / previous, previous / rep.inside_scaled)
            out.below("inside_bound_ratio", ratio, p["max_inside_ratio"], eps=eps)
        previous = rep.inside_scaled


def _hinge_bump(radius: float) -> Callable:
    def psi1(z):
        s2 = (np.asarray(z, dtype=float) / radius) ** 2
        inside = s2 < 1.0
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - s2, 1.0)), 0.0)
    return psi1


def _run_hinge_convergence(case: dict, p: dict, out: _Rows):
    fan = _require_3d(_fan_source(case["source"]))
    psi = separable_psi(_hinge_bump(p["hinge_radius"]), smooth_bump(p["psi_radius"]), fan)
    rows = hinge3d_weak_convergence(fan, psi, p["eps_list"], GridSpec(p["grid_n"], p["margin"]),
                                    _qs(p["quad"]), (-p["hinge_radius"], p["hinge_radius"]), p["z_nodes"])
    for r in rows:
        out.near("hinge_integral", r.value, r.reference, p["rel_tolerance"] * abs(r.reference), eps=r.eps)
    out.below("non_decreasing_steps", _decrease_count([r.abs_error for r in rows]), 0.0)


def _free_edges(K, spec) -> list:
    if isinstance(spec, list):
        by_key = {edge_key(K, e): e for e in K.edges}
        missing = [k for k in spec if k not in by_key]
        if missing:
            raise ConfigError(f"unknown free edges {missing}")
        return [by_key[k] for k in spec]
    if K.top_dim == 2:
        # edges not on the boundary (contained in two triangles)
        tris = K.of_dim(2)
        return [e for e in K.edges if sum(set(e) <= set(t) for t in tris) == 2]
    interior = [e for e in K.edges if K.is_interior(e)]
    return interior if spec == "interior" else interior[:1]


def _run_critical(case: dict, p: dict, out: _Rows):
    K, L = _complex_source(case["source"], p)
    free = _free_edges(K, p["free_edges"])
    res = critical_point_search(K, L, free, p["tolerance"], p["max_iter"])
    out.data("iterations", float(res.iterations), free_edges=len(free))
    out.below("gradient_norm", res.gradient_norm, p["tolerance"], free_edges=len(free))
    if K.top_dim == 2:
        worst = max((abs(deficit_angle(K, h, res.lengths)) for h in interior_hinges(K)), default=0.0)
        out.below("max_interior_deficit", worst, p["deficit_tolerance"])


_RUNNERS = {
    "identity-check": _run_identity,
    "defect-order": _run_defect_order,
    "radial-gauge": _run_radial,
    "regge-action": _run_regge,
    "deficit-table": _run_deficits,
    "cone-integral": _run_cone_integral,
    "cone-holonomy": _run_cone_holonomy,
    "delta-convergence": _run_delta,
    "hinge3d-invariants": _run_hinge_invariants,
    "hinge3d-convergence": _run_hinge_convergence,
    "critical-search": _run_critical,
}


def effective_params(experiment: str, params: Optional[dict]) -> dict:
    p = dict(DEFAULTS[experiment])
    if experiment == "identity-check" and params:
        variant = params.get("variant", "identity")
        if variant == "abelian":
            p.update({"field_kind": "abelian", "seeds": list(range(10)), "tolerance": 1e-9, "pt_steps": 64})
        elif variant == "covariance":
            p.update({"tolerance": 1e-7})
    p.update(params or {})
    return p


def build_cases(experiment: str, params: dict, inputs: list) -> list:
    if experiment in ("identity-check", "defect-order", "radial-gauge"):
        sources = [{"file": f} for f in inputs] if inputs else [{"seed": s} for s in params["seeds"]]
    elif experiment in ("regge-action", "deficit-table", "critical-search"):
        sources = _source_list(inputs, params["complexes"], "complex")
    else:
        sources = _source_list(inputs, params["fans"], "fan")
    cases = []
    for i, src in enumerate(sources):
        if "file" in src:
            label = os.path.basename(src["file"])
        else:
            label = next(f"{k}={v}" for k, v in src.items())
        cases.append({"index": i, "label": label, "source": src})
    return cases


def run_case(experiment: str, params: dict, case: dict) -> list:
    out = _Rows(case["index"], case["label"])
    _RUNNERS[experiment](case, params, out)
    return out.rows
