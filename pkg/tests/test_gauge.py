import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoregge.errors import DomainError, InconsistentDerivativeError, NonAbelianError, NotClosedError
from holoregge.fields import (
    constant_curvature_field,
    random_abelian_field,
    random_gauge,
    random_so3_field,
    zero_field,
)
from holoregge.gauge import (
    J,
    ConnectionField,
    GaugeField,
    Path,
    curvature,
    exp_map,
    gauge_transform,
    hat,
    holonomy,
    inverse,
    jacobian,
    parallel_transport,
    pt_abelian,
    rotation_angle,
    transport_polylines,
)


def series_exp(X, terms=30, squarings=10):
    """Taylor series at X / 2^s followed by repeated squaring."""
    Y = np.asarray(X, dtype=float) / 2.0 ** squarings
    out = np.eye(len(Y))
    term = np.eye(len(Y))
    for k in range(1, terms):
        term = term @ Y / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def constant_field(mats, box=((-1, -1), (1, 1))):
    mats = np.asarray(mats, dtype=float)

    def ev(x):
        return np.broadcast_to(mats, np.shape(x)[:-1] + mats.shape).copy()

    def dev(x):
        return np.zeros(np.shape(x)[:-1] + (mats.shape[0],) + mats.shape)

    group = "SO2" if mats.shape[-1] == 2 else "SO3"
    return ConnectionField(mats.shape[0], mats.shape[-1], ev, dev, box, group)


# exp_map

def test_exp_zero_is_identity():
    assert np.array_equal(exp_map(np.zeros((3, 3))), np.eye(3))


def test_exp_quarter_rotation():
    np.testing.assert_allclose(exp_map(0.5 * math.pi * J), [[0, -1], [1, 0]], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_exp_matches_series_oracle(seed):
    X = hat(np.random.default_rng(seed).normal(size=3) * 2.0)
    assert np.max(np.abs(exp_map(X) - series_exp(X))) <= 1e-12


def test_exp_general_matrix_matches_series():
    X = np.random.default_rng(3).normal(size=(4, 4))
    np.testing.assert_allclose(exp_map(X, "GL"), series_exp(X), rtol=1e-12, atol=1e-12)


@given(st.lists(st.floats(-4, 4), min_size=3, max_size=3))
def test_exp_of_skew_is_rotation(w):
    R = exp_map(hat(np.array(w)))
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-13)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-13)


# transport

def test_zero_field_transport_is_identity():
    A = zero_field(3)
    path = Path.polyline([[-0.5, -0.5], [0.3, 0.2], [0.6, -0.4]])
    assert np.array_equal(parallel_transport(A, path), np.eye(3))


def test_constant_field_on_unit_segment_rotates_by_minus_c():
    c = 0.7
    A = constant_field([c * J, 0 * J])
    U = parallel_transport(A, Path.polyline([[0.0, 0.0], [1.0, 0.0]]))
    np.testing.assert_allclose(U, exp_map(-c * J), atol=1e-14)
    assert rotation_angle(U) == pytest.approx(-c, abs=1e-14)


def test_abelian_segment_matches_closed_form():
    c, L = 0.4, 1.3
    A = constant_field([c * J, 0 * J], box=((-2, -2), (2, 2)))
    path = Path.polyline([[-0.6, 0.1], [-0.6 + L, 0.1]])
    np.testing.assert_allclose(parallel_transport(A, path, 64), pt_abelian(A, path), atol=1e-10)
    np.testing.assert_allclose(pt_abelian(A, path), exp_map(-c * L * J), atol=1e-14)


@pytest.mark.parametrize("f,a,b", [(0.3, 1.0, 1.0), (-1.2, 0.7, 0.4)])
def test_abelian_holonomy_stokes(f, a, b):
    A = constant_curvature_field(f).connection()
    loop = Path.polyline([[-0.5, -0.3], [-0.5 + a, -0.3], [-0.5 + a, -0.3 + b], [-0.5, -0.3 + b]], closed=True)
    H = holonomy(A, loop, 64)
    assert rotation_angle(H) == pytest.approx(-f * a * b, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_pt_abelian_agrees_with_integrator(seed):
    A = random_abelian_field(seed).connection()
    for path in (Path.circle([0.1, -0.05], 0.6, pieces=8),
                 Path.polyline([[-0.7, -0.6], [0.5, -0.2], [0.3, 0.7], [-0.4, 0.2]])):
        np.testing.assert_allclose(parallel_transport(A, path, 64), pt_abelian(A, path), atol=1e-9)


def test_pt_abelian_rejects_non_abelian():
    A = random_so3_field(0).connection()
    with pytest.raises(NonAbelianError):
        pt_abelian(A, Path.polyline([[0, 0], [0.5, 0.5]]))


def test_holonomy_requires_closed_path():
    with pytest.raises(NotClosedError):
        holonomy(zero_field(3), Path.polyline([[0, 0], [0.5, 0.5]]))


def test_path_outside_domain():
    with pytest.raises(DomainError):
        parallel_transport(random_so3_field(0).connection(), Path.polyline([[0, 0], [1.5, 0]]))


def test_integrator_is_fourth_order():
    A = random_so3_field(2).connection()
    path = Path.polyline([[-0.6, -0.5], [0.7, 0.2], [0.1, 0.8]])
    ref = parallel_transport(A, path, 512)
    errs = [np.linalg.norm(parallel_transport(A, path, n) - ref) for n in (4, 8, 16)]
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) > 3.7


@given(st.integers(0, 50), st.floats(0.1, 0.9))
def test_transport_composition_and_reversal(seed, frac):
    A = random_so3_field(seed).connection()
    p0, p1, p2 = np.array([-0.7, -0.2]), np.array([0.4, 0.6]), np.array([0.5, -0.6])
    mid = p0 + frac * (p1 - p0)
    first = Path.polyline([p0, mid])
    second = Path.polyline([mid, p1, p2])
    whole = first.then(second)
    U = parallel_transport(A, whole, 64)
    np.testing.assert_allclose(U, parallel_transport(A, second, 64) @ parallel_transport(A, first, 64), atol=1e-9)
    np.testing.assert_allclose(parallel_transport(A, whole.reversed(), 64) @ U, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(U @ U.T, np.eye(3), atol=1e-13)


def test_batched_polylines_match_single_paths():
    A = random_so3_field(4).connection()
    V = np.array([[[-0.5, -0.5], [0.2, -0.5], [0.2, 0.3]],
                  [[0.6, 0.1], [0.6, 0.6], [-0.1, 0.6]]])
    U = transport_polylines(A, V, 32)
    for b in range(2):
        np.testing.assert_allclose(U[b], parallel_transport(A, Path.polyline(V[b]), 32), atol=1e-14)


def test_polyline_derivative_matches_finite_differences():
    A = random_so3_field(5).connection()
    V = np.array([[[-0.3, -0.4], [0.2, -0.1], [0.1, 0.5]]])
    dV = np.array([[[0.3, -0.2], [0.1, 0.4], [0.0, 0.0]]])
    _, dU = transport_polylines(A, V, 32, dvertices=dV)
    h = 1e-5
    fd = (transport_polylines(A, V + h * dV, 32) - transport_polylines(A, V - h * dV, 32)) / (2 * h)
    np.testing.assert_allclose(dU, fd, atol=1e-8)


# curvature

def test_constant_field_curvature_is_commutator():
    X, Y = hat([0.3, -0.2, 0.5]), hat([0.1, 0.4, -0.3])
    A = constant_field([X, Y])
    F = curvature(A, np.array([0.1, 0.2]))
    np.testing.assert_allclose(F[0, 1], X @ Y - Y @ X, atol=1e-15)
    np.testing.assert_allclose(F[1, 0], -(X @ Y - Y @ X), atol=1e-15)


def test_linear_abelian_field_curvature():
    c = 0.8

    def ev(x):
        y = np.asarray(x)[..., 1]
        out = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        out[..., 0, :, :] = -c * y[..., None, None] * J
        return out

    A = ConnectionField(2, 2, ev, None, ((-1, -1), (1, 1)), "SO2")
    F = curvature(A, np.array([[0.2, 0.3], [-0.4, 0.1]]))
    np.testing.assert_allclose(F[:, 0, 1], np.broadcast_to(c * J, (2, 2, 2)), atol=1e-10)


def test_analytic_and_fd_jacobians_agree():
    P = random_so3_field(7)
    A = P.connection()
    A_fd = ConnectionField(2, 3, A.eval, None, A.box, "SO3")
    x = np.array([[0.1, -0.3], [0.5, 0.4]])
    np.testing.assert_allclose(jacobian(A_fd, x), jacobian(A, x), atol=1e-10)


# gauge transforms

def test_identity_gauge_leaves_field_unchanged():
    A = random_so3_field(1).connection()
    Q = GaugeField(lambda x: np.broadcast_to(np.eye(3), np.shape(x)[:-1] + (3, 3)).copy(),
                   lambda x: np.zeros(np.shape(x)[:-1] + (2, 3, 3)))
    A2 = gauge_transform(A, Q)
    x = np.array([[0.2, 0.1], [-0.5, 0.7]])
    np.testing.assert_allclose(A2(x), A(x), atol=1e-15)


def test_rotation_gauge_of_zero_field():
    A = zero_field(2)
    Q = GaugeField(lambda x: exp_map(np.asarray(x)[..., 0, None, None] * J, "SO2"),
                   lambda x: np.stack([J @ exp_map(np.asarray(x)[..., 0, None, None] * J, "SO2"),
                                       np.zeros(np.shape(x)[:-1] + (2, 2))], axis=-3))
    A2 = gauge_transform(A, Q)
    vals = A2(np.array([[0.3, -0.2], [-0.7, 0.5]]))
    np.testing.assert_allclose(vals[:, 0], np.broadcast_to(-J, (2, 2, 2)), atol=1e-14)
    np.testing.assert_allclose(vals[:, 1], 0.0, atol=1e-15)


def test_inconsistent_gauge_derivative_detected():
    A = zero_field(2)
    Q = GaugeField(lambda x: exp_map(np.asarray(x)[..., 0, None, None] * J, "SO2"),
                   lambda x: np.zeros(np.shape(x)[:-1] + (2, 2, 2)))
    with pytest.raises(InconsistentDerivativeError):
        gauge_transform(A, Q)


@pytest.mark.parametrize("seed", range(5))
def test_gauge_covariance(seed):
    A = random_so3_field(seed).connection()
    Q = random_gauge(100 + seed)
    A2 = gauge_transform(A, Q)
    pts = np.array([[-0.7, -0.6], [0.5, -0.2], [0.3, 0.7], [-0.4, 0.2]])
    path = Path.polyline(pts)
    lhs = parallel_transport(A2, path, 128) @ Q(pts[:1])[0]
    rhs = Q(pts[-1:])[0] @ parallel_transport(A, path, 128)
    assert np.linalg.norm(lhs - rhs) <= 1e-7
    loop = Path.circle([0.1, 0.0], 0.5, pieces=8)
    q0 = Q(np.array([[0.6, 0.0]]))[0]
    H2 = holonomy(A2, loop, 128)
    assert np.linalg.norm(H2 - q0 @ holonomy(A, loop, 128) @ inverse(q0, "SO3")) <= 1e-7


def test_curvature_transforms_by_conjugation():
    A = random_so3_field(3).connection()
    Q = random_gauge(9)
    A2 = gauge_transform(A, Q)
    x = np.array([[0.15, -0.25]])
    F = curvature(A, x)[0, 0, 1]
    F2 = curvature(A2, x, fd_step=1e-3)[0, 0, 1]
    q = Q(x)[0]
    np.testing.assert_allclose(F2, q @ F @ q.T, atol=1e-8)
