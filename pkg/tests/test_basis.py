"""Unit tests for shape functions, quadrature and operator matrices.

Expected values come from independent sources: closed-form monomial
integrals on the parent domains, finite differences of the isoparametric
map, and hand-evaluated curl/gradient identities.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from csfem import (
    MEMBRANE_KINDS,
    NODE_COUNTS,
    SingularJacobianError,
    eval_basis,
    operator_matrices,
    quadrature,
    strain_stress_basis,
)
from csfem.elements import reference_coords


def tri_monomial_integral(a, b):
    """Exact integral of x^a y^b over the unit right triangle."""
    from math import factorial
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def random_parent_point(rng, kind):
    if kind.startswith("CSMT"):
        x, y = rng.uniform(0.03, 0.9, 2)
        if x + y > 0.95:
            x, y = 0.95 - y, 0.95 - x
        return (x, y)
    return tuple(rng.uniform(-0.95, 0.95, 2))


# =====================================================================
# Shape function basics
# =====================================================================


@pytest.mark.parametrize("kind", MEMBRANE_KINDS)
def test_partition_of_unity(kind):
    rng = np.random.default_rng(17)
    coords = reference_coords(kind)
    for _ in range(20):
        pt = random_parent_point(rng, kind)
        for field in ("geometry", "u", "theta", "kappa", "mu"):
            if kind == "CSMT6" and field in ("kappa", "mu"):
                continue  # element-local mode set, not a nodal basis
            fb = eval_basis(kind, field, pt, coords)
            assert abs(fb.values.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("kind", MEMBRANE_KINDS)
def test_kronecker_delta_at_nodes(kind):
    coords = reference_coords(kind)
    # parent coordinates of the nodes equal the reference coordinates for
    # triangles, and the corner/mid layout for quads
    if kind.startswith("CSMT"):
        parent = coords
    else:
        parent = reference_coords(kind)
    for i, pt in enumerate(parent):
        fb = eval_basis(kind, "u", pt, coords)
        expected = np.zeros(NODE_COUNTS[kind])
        expected[i] = 1.0
        assert_allclose(fb.values, expected, atol=1e-13)


def test_csmt3_centroid_values():
    coords = reference_coords("CSMT3")
    fb = eval_basis("CSMT3", "u", (1 / 3, 1 / 3), coords)
    assert_allclose(fb.values, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)


def test_csmq4_unit_square_center():
    coords = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    fb = eval_basis("CSMQ4", "u", (0.0, 0.0), coords)
    assert_allclose(fb.values, [0.25] * 4, atol=1e-15)
    assert fb.det_jacobian == pytest.approx(0.25)


def test_bow_tie_raises():
    # nodes 3 and 4 swapped -> self-intersecting quad
    coords = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    with pytest.raises(SingularJacobianError):
        for pt in quadrature("CSMQ4").points:
            eval_basis("CSMQ4", "u", pt, coords)


@pytest.mark.parametrize("kind", MEMBRANE_KINDS)
def test_gradient_matches_finite_differences(kind):
    """Cartesian gradients agree with differencing the isoparametric map."""
    rng = np.random.default_rng(3)
    coords = reference_coords(kind) + 0.05 * rng.standard_normal(
        reference_coords(kind).shape)
    pt = random_parent_point(rng, kind)
    fb = eval_basis(kind, "u", pt, coords)
    h = 1e-6
    dirs = np.array([(h, 0.0), (0.0, h)])
    dvals = np.empty((2, NODE_COUNTS[kind]))
    dxy = np.empty((2, 2))
    for a, e in enumerate(dirs):
        fp = eval_basis(kind, "u", np.add(pt, e), coords)
        fm = eval_basis(kind, "u", np.subtract(pt, e), coords)
        dvals[a] = (fp.values - fm.values) / (2 * h)
        xp = eval_basis(kind, "geometry", np.add(pt, e), coords).values @ coords
        xm = eval_basis(kind, "geometry", np.subtract(pt, e), coords).values @ coords
        dxy[a] = (xp - xm) / (2 * h)
    grads_fd = np.linalg.solve(dxy, dvals).T
    assert_allclose(grads_fd, fb.grads_xy, rtol=1e-6, atol=1e-8)


# =====================================================================
# Quadrature rules
# =====================================================================


def test_csmq4_rule_is_2x2_gauss():
    rule = quadrature("CSMQ4")
    g = 1 / np.sqrt(3)
    pts = sorted(map(tuple, np.round(rule.points, 12)))
    expected = sorted([(-g, -g), (g, -g), (-g, g), (g, g)])
    assert_allclose(pts, expected, atol=1e-12)
    assert_allclose(rule.weights, np.ones(4))


def test_csmt3_rule_weights():
    rule = quadrature("CSMT3")
    assert_allclose(rule.weights, np.full(3, 1 / 6))
    assert rule.weights.sum() == pytest.approx(0.5)


@pytest.mark.parametrize("kind,measure", [
    ("CSMT3", 0.5), ("CSMT6", 0.5), ("CSMQ4", 4.0), ("CSMQ8", 4.0),
])
def test_weight_sums(kind, measure):
    assert quadrature(kind).weights.sum() == pytest.approx(measure)


def test_3x3_rule_integrates_x2y2_exactly():
    rule = quadrature("CSMQ8")
    val = sum(w * p[0] ** 2 * p[1] ** 2
              for p, w in zip(rule.points, rule.weights))
    assert val == pytest.approx(4 / 9, abs=1e-14)


@pytest.mark.parametrize("kind,degree", [("CSMT3", 2), ("CSMT6", 3)])
def test_triangle_rule_degree(kind, degree):
    rule = quadrature(kind)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            num = sum(w * p[0] ** a * p[1] ** b
                      for p, w in zip(rule.points, rule.weights))
            assert num == pytest.approx(tri_monomial_integral(a, b),
                                        abs=1e-14), (a, b)


def test_csmt6_rule_weights_positive():
    assert np.all(quadrature("CSMT6").weights > 0)


def test_quadrature_rejects_beam():
    with pytest.raises(ValueError):
        quadrature("BEAM2D")


# =====================================================================
# Strain/stress mode bases
# =====================================================================


def test_csmt3_modes_are_identity():
    phi_eps, phi_sig = strain_stress_basis("CSMT3")
    assert_allclose(phi_eps((0.3, 0.3)), np.eye(3))
    assert phi_sig is phi_eps


def test_csmq4_modes_vanish_at_centroid():
    phi_eps, _ = strain_stress_basis("CSMQ4")
    mat = phi_eps((1.5, -2.0), centroid=(1.5, -2.0), scale=3.0)
    assert_allclose(mat[:, 0:3], np.eye(3))
    assert_allclose(mat[:, 3:], np.zeros((3, 6)))


def test_stacked_modes_rank_is_nine():
    """Rank of phi_eps stacked over the 2x2 rule on a generic CSMQ4."""
    coords = np.array([(0.0, 0.0), (2.0, 0.1), (2.2, 1.9), (-0.1, 2.0)])
    phi_eps, _ = strain_stress_basis("CSMQ4")
    rule = quadrature("CSMQ4")
    rows = []
    for pt in rule.points:
        geom = eval_basis("CSMQ4", "geometry", pt, coords)
        xy = geom.values @ coords
        rows.append(phi_eps(xy, centroid=(1.0, 1.0), scale=2.0))
    stacked = np.vstack(rows)
    assert stacked.shape == (12, 9)
    assert np.linalg.matrix_rank(stacked) == 9


# =====================================================================
# Operator matrices
# =====================================================================


@pytest.fixture
def quad_ops():
    coords = np.array([(0.0, 0.0), (1.3, 0.1), (1.2, 1.1), (-0.1, 0.9)])
    pt = (0.21, -0.34)
    bu = eval_basis("CSMQ4", "u", pt, coords)
    bth = eval_basis("CSMQ4", "theta", pt, coords)
    bmu = eval_basis("CSMQ4", "mu", pt, coords)
    return coords, operator_matrices(bu, bth, bmu)


def test_curl_of_rigid_rotation(quad_ops):
    coords, ops = quad_ops
    u = np.empty(8)
    u[0::2] = -coords[:, 1]
    u[1::2] = coords[:, 0]
    assert (ops.B_curl_u @ u)[0] == pytest.approx(1.0, abs=1e-13)
    assert_allclose(ops.B_sym @ u, np.zeros(3), atol=1e-13)


def test_curl_theta_of_linear_field(quad_ops):
    coords, ops = quad_ops
    theta = coords[:, 0]  # theta_z = x at the nodes
    pair = ops.B_curl_theta @ theta
    assert_allclose(pair, [0.0, -0.5], atol=1e-13)
    # engineering curvature k = -2 kappa = (0, 1)
    assert_allclose(-2.0 * pair, [0.0, 1.0], atol=1e-13)


def test_uniform_translation_annihilated(quad_ops):
    _, ops = quad_ops
    u = np.empty(8)
    u[0::2] = 0.7
    u[1::2] = -0.4
    assert_allclose(ops.B_sym @ u, np.zeros(3), atol=1e-14)
    assert abs((ops.B_curl_u @ u)[0]) < 1e-14


@pytest.mark.parametrize("kind", MEMBRANE_KINDS)
def test_curl_exact_for_linear_fields(kind):
    """B_curl_u applied to u = a + B x returns (B21 - B12) / 2 exactly."""
    rng = np.random.default_rng(11)
    coords = reference_coords(kind) + 0.04 * rng.standard_normal(
        reference_coords(kind).shape)
    a = rng.standard_normal(2)
    B = rng.standard_normal((2, 2))
    u = np.empty(2 * NODE_COUNTS[kind])
    uu = a + coords @ B.T
    u[0::2] = uu[:, 0]
    u[1::2] = uu[:, 1]
    pt = random_parent_point(rng, kind)
    bu = eval_basis(kind, "u", pt, coords)
    ops = operator_matrices(bu, bu, bu)
    expected = 0.5 * (B[1, 0] - B[0, 1])
    assert (ops.B_curl_u @ u)[0] == pytest.approx(expected, abs=1e-12)
