"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every criterion runs through the same experiment runners as ``holoregge run``
with the default parameters, then checks the rows at the criterion's own
tolerances and its wall-time limit. Run directly with
``python tests/test_acceptance.py`` for the summary alone.
"""
import math
import time
from dataclasses import dataclass
from typing import Callable

import pytest

from holoregge.cli import run, validate_config


@dataclass
class Criterion:
    number: int
    title: str
    experiments: list  # (experiment, params)
    limit: float  # seconds
    check: Callable  # rows -> (ok, summary)


def _all_pass(rows):
    bad = [r for r in rows if not r.passed]
    return not bad, f"{len(rows) - len(bad)}/{len(rows)} rows"


def _select(rows, quantity):
    return [r for r in rows if r.quantity == quantity]


def _max(rows, quantity, attr="value"):
    return max(getattr(r, attr) for r in _select(rows, quantity))


def _identity(rows):
    vals = _select(rows, "identity_defect")
    worst = max(r.value for r in vals)
    return len(vals) == 5 and worst <= 1e-6, f"5 seeds, max defect {worst:.2e}"


def _abelian(rows):
    vals = _select(rows, "abelian_closed_form")
    seeds = {r.case for r in vals}
    worst = max(r.value for r in vals)
    return len(seeds) == 10 and worst <= 1e-9, f"10 seeds, max |ODE - closed form| {worst:.2e}"


def _covariance(rows):
    worst = max(r.value for r in rows)
    kinds = {r.quantity for r in rows}
    ok = kinds == {"transport_covariance", "holonomy_conjugation"} and worst <= 1e-7
    return ok, f"max residual {worst:.2e}"


def _defect_order(rows):
    hs = sorted(float(r.inputs.split("=")[1]) for r in _select(rows, "naive_defect"))
    slope = _max(rows, "loglog_slope")
    return hs == [0.05, 0.1, 0.2, 0.4] and slope >= 2.7, f"slope {slope:.4f}"


def _radial(rows):
    worst = max(r.value for r in rows)
    return worst <= 1e-7 and all(r.passed for r in rows), f"max residual {worst:.2e}"


def _deficits(rows):
    star = [r for r in rows if r.label == "complex=five-triangle-star" and r.quantity == "deficit"]
    simplex = [r for r in rows if r.label == "complex=boundary-4-simplex" and r.quantity == "deficit"]
    ico = [r for r in rows if r.label == "complex=icosahedron" and r.quantity == "deficit_sum"]
    d4 = 2 * math.pi - 3 * math.acos(1 / 3)
    e_star = abs(star[0].value - math.pi / 3)
    e_simplex = max(abs(r.value - d4) for r in simplex)
    e_ico = abs(ico[0].value - 4 * math.pi)
    ok = len(star) == 1 and len(simplex) == 10 and e_star <= 1e-12 and e_simplex <= 1e-9 and e_ico <= 1e-9
    return ok, f"star {e_star:.1e}, 4-simplex {e_simplex:.1e}, icosahedron sum {e_ico:.1e}"


def _gradients(rows):
    g = _select(rows, "gradient_rel_diff")
    seeded = [r for r in g if "@" in r.label]
    worst = max(r.value for r in seeded)
    return len(seeded) == 3 and worst <= 1e-5, f"3 seeded complexes, max rel diff {worst:.2e}"


def _cone_integral(rows):
    refs = sorted(round(r.reference, 6) for r in rows)
    want = sorted(round(x, 6) for x in (math.pi / 3, math.pi / 2, -0.4))
    worst = max(r.abs_error for r in rows)
    return refs == want and worst <= 1e-3, f"max |int - d| {worst:.2e}"


def _holonomy(rows):
    ang = _select(rows, "holonomy_angle")
    ks = _select(rows, "homotopy_k")
    worst = max(r.abs_error for r in ang)
    ok = len(ang) == 3 and worst <= 1e-4 and len(ks) == 15 and all(r.value == 1.0 for r in ks)
    return ok, f"max angle error {worst:.2e}, k(s) = 1 at {len(ks)} points"


def _delta(rows):
    cases = sorted({r.case for r in rows})
    msgs = []
    ok = True
    for c in cases:
        sc = [r for r in rows if r.case == c and r.quantity == "weighted_integral"]
        errs = [r.abs_error for r in sc]
        d = abs(sc[0].reference)  # psi(0) = 1 = sup psi
        ok &= len(errs) == 3 and errs[0] > errs[1] > errs[2] and errs[-1] <= 5e-2 * d
        msgs.append(f"{errs[-1] / d:.1e}")
    return ok, "final rel errors " + ", ".join(msgs)


def _hinge(rows):
    prod = [r for r in rows if r.label == "fan=product-cone"]
    inv = [r for r in prod if r.quantity in ("gamma_f", "gamma_m")]
    tube = [r for r in prod if r.quantity == "kappa_outside_tube"]
    conv = [r for r in prod if r.quantity == "hinge_integral" and r.inputs == "eps=0.20000000000000001"]
    a_b = max(r.value for r in inv)
    out = max(r.value for r in tube)
    rel = conv[0].abs_error / abs(conv[0].reference)
    ok = a_b <= 1e-6 and out <= 1e-8 and len(conv) == 1 and rel <= 0.05
    return ok, f"(a),(b) {a_b:.1e}, outside tube {out:.1e}, rel error at eps=0.2 {rel:.2e}"


def _exp(name, **params):
    return (name, params)


CRITERIA = [
    Criterion(1, "exact identity", [_exp("identity-check")], 60, _identity),
    Criterion(2, "abelian closed form", [_exp("identity-check", variant="abelian")], 5, _abelian),
    Criterion(3, "gauge covariance", [_exp("identity-check", variant="covariance")], 10, _covariance),
    Criterion(4, "naive defect order", [_exp("defect-order")], 30, _defect_order),
    Criterion(5, "radial gauge", [_exp("radial-gauge")], 20, _radial),
    Criterion(6, "regge deficits", [_exp("deficit-table")], 5, _deficits),
    Criterion(7, "gradient agreement", [_exp("regge-action")], 60, _gradients),
    Criterion(8, "cone integral", [_exp("cone-integral")], 600, _cone_integral),
    Criterion(9, "holonomy consistency", [_exp("cone-holonomy")], 600, _holonomy),
    Criterion(10, "delta convergence", [_exp("delta-convergence")], 900, _delta),
    Criterion(11, "3D hinge", [_exp("hinge3d-invariants"), _exp("hinge3d-convergence")], 1800, _hinge),
]


def evaluate(c: Criterion):
    start = time.perf_counter()
    rows = []
    for name, params in c.experiments:
        result = run(validate_config({"experiment": name, "params": params}), 1, True)
        rows.extend(result.rows)
    elapsed = time.perf_counter() - start
    ok_rows, _ = _all_pass(rows)
    ok, summary = c.check(rows)
    ok = ok and ok_rows and elapsed <= c.limit
    line = (f"criterion {c.number:2d} {'PASS' if ok else 'FAIL'}  {c.title}: {summary}; "
            f"{elapsed:.1f} s (limit {c.limit:.0f} s)")
    return ok, line


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion-{c.number:02d}" for c in CRITERIA])
def test_acceptance(criterion, capsys):
    ok, line = evaluate(criterion)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
