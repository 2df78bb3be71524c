import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoregge.errors import OutOfRectangleError
from holoregge.fields import constant_curvature_field, random_abelian_field, random_gauge, random_so3_field, zero_field
from holoregge.gauge import J, ConnectionField, exp_map, gauge_transform, holonomy, parallel_transport, rotation_angle
from holoregge.identity import (
    QuadratureRule2D,
    Rectangle,
    curvature_integral,
    defect_order_scan,
    gamma_minus,
    gamma_plus,
    gauge_condition_residuals,
    radial_gauge,
    transported_difference,
    verify_identity,
)

T_STD = Rectangle.axis_aligned([-0.4, -0.3], 0.8, 0.6)


def test_rectangle_validation():
    with pytest.raises(ValueError):
        Rectangle.axis_aligned([0, 0], -1.0, 1.0)
    with pytest.raises(ValueError):
        Rectangle([0, 0], [1, 0], [1, 1], 1.0, 1.0)


def test_quadrature_weights_sum_to_area():
    q = QuadratureRule2D.gauss(0.8, 0.6, 12)
    assert q.weights.sum() == pytest.approx(0.48, abs=1e-12)


def test_gamma_minus_degenerate_at_origin():
    A = random_so3_field(0).connection()
    np.testing.assert_allclose(parallel_transport(A, gamma_minus(T_STD, [0.0, 0.0])), np.eye(3), atol=1e-15)


def test_gamma_path_lengths():
    a, b = T_STD.a, T_STD.b
    assert gamma_minus(T_STD, [a / 2, b / 2]).length() == pytest.approx((a + b) / 2, abs=1e-14)
    assert gamma_plus(T_STD, [a, 0.0]).length() == pytest.approx(2 * b + a, abs=1e-14)
    assert gamma_plus(T_STD, [0.0, b]).length() == pytest.approx(b, abs=1e-14)
    end = gamma_minus(T_STD, [a, b]).segments[-1].end
    np.testing.assert_allclose(end, T_STD.origin + [a, b], atol=1e-15)


def test_point_outside_rectangle():
    with pytest.raises(OutOfRectangleError):
        gamma_minus(T_STD, [0.9, 0.1])


def test_boundary_decomposition():
    A = random_so3_field(1).connection()
    corner = [T_STD.a, T_STD.b]
    split = parallel_transport(A, gamma_plus(T_STD, corner), 128) @ parallel_transport(A, gamma_minus(T_STD, corner), 128)
    np.testing.assert_allclose(split, holonomy(A, T_STD.boundary(), 128), atol=1e-12)


def test_zero_field_integral_vanishes():
    rhs = curvature_integral(zero_field(3), T_STD, QuadratureRule2D.gauss(0.8, 0.6, 8))
    assert np.array_equal(rhs, np.zeros((3, 3)))
    assert verify_identity(zero_field(3), T_STD).defect == 0.0


def test_constant_curvature_integral_matches_rotation():
    A = constant_curvature_field(0.3, box=((-1, -1), (1.5, 1.5))).connection()
    T = Rectangle.axis_aligned([-0.5, -0.5], 1.0, 1.0)
    rhs = curvature_integral(A, T, QuadratureRule2D.gauss(1.0, 1.0, 12), 128)
    assert np.linalg.norm(rhs - (exp_map(-0.3 * J) - np.eye(2))) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_identity_holds_for_so3_fields(seed):
    rep = verify_identity(random_so3_field(seed).connection(), T_STD, 16, 128)
    assert rep.defect <= 1e-6
    assert rep.lhs.shape == rep.rhs.shape == (3, 3)


def test_identity_on_tall_rectangle():
    T = Rectangle.axis_aligned([-0.2, -0.4], 0.5, 0.7)
    assert verify_identity(random_so3_field(11).connection(), T, 16, 128).defect <= 1e-7


def test_identity_on_rotated_rectangle():
    c, s = math.cos(0.4), math.sin(0.4)
    T = Rectangle([-0.3, -0.45], [c, s], [-s, c], 0.6, 0.5)
    assert verify_identity(random_so3_field(3).connection(), T, 16, 128).defect <= 1e-7


def test_abelian_identity_is_tight():
    assert verify_identity(random_abelian_field(2).connection(), T_STD, 16, 128).defect <= 1e-9


def test_defect_decreases_under_refinement():
    A = random_so3_field(6, scale=1.5).connection()
    coarse = verify_identity(A, T_STD, 4, 8).defect
    fine = verify_identity(A, T_STD, 8, 16).defect
    assert fine <= coarse


def test_identity_is_gauge_stable():
    A = random_so3_field(4).connection()
    A2 = gauge_transform(A, random_gauge(21))
    d1 = verify_identity(A, T_STD, 12, 64).defect
    d2 = verify_identity(A2, T_STD, 12, 64).defect
    assert abs(d1 - d2) <= 1e-7


@given(st.integers(0, 1000))
def test_identity_property_random_seeds(seed):
    A = random_so3_field(seed, scale=0.8).connection()
    T = Rectangle.axis_aligned([-0.3, -0.2], 0.5, 0.4)
    assert verify_identity(A, T, 10, 32).defect <= 1e-6


# radial gauge

def test_radial_gauge_of_zero_field():
    A2, Q = radial_gauge(zero_field(3), T_STD)
    x = np.array([[0.1, 0.2], [-0.3, 0.25]])
    np.testing.assert_allclose(Q(x), np.broadcast_to(np.eye(3), (2, 3, 3)), atol=1e-15)
    np.testing.assert_allclose(A2(x), 0.0, atol=1e-15)


def test_radial_gauge_abelian_field():
    c = 0.7

    def ev(x):
        out = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        out[..., 0, :, :] = c * J
        return out

    A = ConnectionField(2, 2, ev, lambda x: np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2)), ((-1, -1), (1, 1)), "SO2")
    A2, _ = radial_gauge(A, T_STD)
    r0, r1 = gauge_condition_residuals(A2, T_STD)
    assert max(r0, r1) <= 1e-10


@pytest.mark.parametrize("seed", range(2))
def test_radial_gauge_conditions_and_holonomy(seed):
    A = random_so3_field(seed).connection()
    A2, Q = radial_gauge(A, T_STD, check=True)
    r0, r1 = gauge_condition_residuals(A2, T_STD, 16)
    assert r0 <= 1e-7 and r1 <= 1e-7
    np.testing.assert_allclose(Q(T_STD.origin[None])[0], np.eye(3), atol=1e-15)
    assert transported_difference(A2, A, Q, T_STD) <= 1e-7


# naive defect order

def test_defect_scan_zero_field():
    scan = defect_order_scan(zero_field(3), [-0.2, -0.2])
    assert all(d == 0.0 for _, d in scan.pairs)


def test_defect_scan_abelian_matches_exponential_remainder():
    # Hol = exp(-int F) exactly, so the naive defect is the exponential's remainder
    A = random_abelian_field(0).connection()
    scan = defect_order_scan(A, [-0.2, -0.2])
    for h, d in scan.pairs:
        H = holonomy(A, Rectangle.axis_aligned([-0.2, -0.2], h, h).boundary(), 64)
        theta = rotation_angle(H)
        assert d == pytest.approx(np.linalg.norm(H - np.eye(2) - theta * J), rel=1e-6, abs=1e-14)
    assert scan.slope >= 3.7


def test_defect_order_slope_non_abelian():
    scan = defect_order_scan(random_so3_field(1).connection(), [-0.2, -0.2], (0.4, 0.2, 0.1, 0.05))
    assert scan.slope >= 2.7
    ds = [d for _, d in scan.pairs]
    assert all(b < a for a, b in zip(ds, ds[1:]))
