"""Shape functions, quadrature rules and discrete differential operators.

Membrane elements interpolate five pointwise fields: geometry, displacement,
drilling rotation, curvature and couple stress.  All five use nodal shape
functions on the parent domain (unit triangle or biunit square); strain and
stress use element-local mode bases evaluated in physical coordinates.

The in-plane reductions of the symmetric-gradient and half-curl operators are
assembled here as plain matrices acting on nodal values:

* ``B_sym``        nodal (ux, uy)  ->  Voigt strain (eps_x, eps_y, gamma_xy)
* ``B_curl_u``     nodal (ux, uy)  ->  scalar (uy,x - ux,y) / 2
* ``B_curl_theta`` nodal theta_z   ->  pair (theta,y, -theta,x) / 2
* ``B_curl_mu``    nodal (mux,muy) ->  scalar (muy,x - mux,y) / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobianError

MEMBRANE_KINDS = ("CSMT3", "CSMT6", "CSMQ4", "CSMQ5", "CSMQ6", "CSMQ7", "CSMQ8")
BEAM_KIND = "BEAM2D"
ELEMENT_KINDS = MEMBRANE_KINDS + (BEAM_KIND,)

NODE_COUNTS = {
    "CSMT3": 3,
    "CSMT6": 6,
    "CSMQ4": 4,
    "CSMQ5": 5,
    "CSMQ6": 6,
    "CSMQ7": 7,
    "CSMQ8": 8,
    "BEAM2D": 2,
}

FIELDS = ("geometry", "u", "theta", "kappa", "mu")

# Edges carrying a mid-side node, indexed 0..3 for (1-2, 2-3, 3-4, 4-1).
_QUAD_MIDS = {
    "CSMQ4": (),
    "CSMQ5": (0,),
    "CSMQ6": (0, 2),
    "CSMQ7": (0, 1, 2),
    "CSMQ8": (0, 1, 2, 3),
}

# Parent coordinates of quad corners and edge midpoints.
_QUAD_CORNER = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
_QUAD_MIDPOINT = np.array([(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)])


@dataclass(frozen=True)
class FieldBasis:
    """Shape-function values and Cartesian gradients at one parent point."""

    values: np.ndarray      # (n,)
    grads_xy: np.ndarray    # (n, 2)
    det_jacobian: float


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray      # (n_ip, 2) parent coordinates
    weights: np.ndarray     # (n_ip,)


@dataclass(frozen=True)
class OperatorMatrices:
    B_sym: np.ndarray         # (3, 2n)
    B_curl_u: np.ndarray      # (1, 2n)
    B_curl_theta: np.ndarray  # (2, m)
    B_curl_mu: np.ndarray     # (1, 2p)


def _tri3(xi, eta):
    values = np.array([1.0 - xi - eta, xi, eta])
    dparent = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return values, dparent


def _tri6(xi, eta):
    lam = np.array([1.0 - xi - eta, xi, eta])
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    values = np.empty(6)
    dparent = np.empty((6, 2))
    for i in range(3):
        values[i] = lam[i] * (2.0 * lam[i] - 1.0)
        dparent[i] = (4.0 * lam[i] - 1.0) * dlam[i]
    # mid-side nodes on edges (1-2), (2-3), (3-1)
    for k, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        values[3 + k] = 4.0 * lam[a] * lam[b]
        dparent[3 + k] = 4.0 * (lam[a] * dlam[b] + lam[b] * dlam[a])
    return values, dparent


def _quad(xi, eta, mids):
    """Bilinear/serendipity basis with mid-side nodes on edges ``mids``."""
    n = 4 + len(mids)
    values = np.empty(n)
    dparent = np.empty((n, 2))
    mid_vals = {}
    mid_grads = {}
    for edge in mids:
        x0, e0 = _QUAD_MIDPOINT[edge]
        if x0 == 0.0:
            v = 0.5 * (1.0 - xi * xi) * (1.0 + e0 * eta)
            g = np.array([-xi * (1.0 + e0 * eta), 0.5 * e0 * (1.0 - xi * xi)])
        else:
            v = 0.5 * (1.0 + x0 * xi) * (1.0 - eta * eta)
            g = np.array([0.5 * x0 * (1.0 - eta * eta), -eta * (1.0 + x0 * xi)])
        mid_vals[edge] = v
        mid_grads[edge] = g
    for i in range(4):
        x0, e0 = _QUAD_CORNER[i]
        v = 0.25 * (1.0 + x0 * xi) * (1.0 + e0 * eta)
        g = np.array([0.25 * x0 * (1.0 + e0 * eta), 0.25 * e0 * (1.0 + x0 * xi)])
        # each corner shares the two adjacent edges (i-1, i)
        for edge in ((i - 1) % 4, i):
            if edge in mid_vals:
                v -= 0.5 * mid_vals[edge]
                g = g - 0.5 * mid_grads[edge]
        values[i] = v
        dparent[i] = g
    for k, edge in enumerate(mids):
        values[4 + k] = mid_vals[edge]
        dparent[4 + k] = mid_grads[edge]
    return values, dparent


def shape_functions(kind, point):
    """Full nodal basis of ``kind`` at parent ``point`` -> (values, dparent)."""
    xi, eta = float(point[0]), float(point[1])
    if kind == "CSMT3":
        return _tri3(xi, eta)
    if kind == "CSMT6":
        return _tri6(xi, eta)
    if kind in _QUAD_MIDS:
        return _quad(xi, eta, _QUAD_MIDS[kind])
    raise ValueError(f"unknown membrane kind {kind!r}")


def _tri_modes4(xi, eta):
    # element-local quadratic mode set; the four-point rule caps the
    # curvature/couple interpolation at four functions per component
    values = np.array([1.0, xi, eta, xi * eta])
    dparent = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [eta, xi]])
    return values, dparent


def field_basis_size(kind, field):
    """Number of scalar interpolation functions of ``field`` on ``kind``.

    Geometry, displacement and rotation always use the full nodal basis.
    The curvature and couple-stress fields are element-local (their
    coefficients are condensed), so their function count is limited by the
    quadrature rule; CSMT6 uses a four-function mode set instead of its
    six-node basis.
    """
    if field not in FIELDS:
        raise ValueError(f"unknown field {field!r}")
    if field in ("kappa", "mu") and kind == "CSMT6":
        return 4
    return NODE_COUNTS[kind]


def _field_shape_functions(kind, field, point):
    if kind == "CSMT6" and field in ("kappa", "mu"):
        return _tri_modes4(float(point[0]), float(point[1]))
    return shape_functions(kind, point)


def eval_basis(kind, field, point, node_coords):
    """Evaluate the basis of one field at a parent point.

    Cartesian gradients are obtained through the Jacobian of the full
    isoparametric geometry map; ``det_jacobian`` is its determinant.
    Raises :class:`SingularJacobianError` when the determinant is not
    positive.
    """
    coords = np.asarray(node_coords, dtype=float)
    if coords.shape != (NODE_COUNTS[kind], 2):
        raise ValueError(
            f"{kind} expects node_coords of shape ({NODE_COUNTS[kind]}, 2), "
            f"got {coords.shape}"
        )
    _, dgeom = shape_functions(kind, point)
    jac = coords.T @ dgeom  # jac[b, a] = d x_b / d xi_a
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0.0:
        raise SingularJacobianError(
            f"{kind}: non-positive Jacobian determinant {det:.3e} at parent "
            f"point ({point[0]:.4g}, {point[1]:.4g})"
        )
    inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    values, dparent = _field_shape_functions(kind, field, point)
    grads = dparent @ inv
    return FieldBasis(values=values, grads_xy=grads, det_jacobian=det)


def _gauss_1d(n):
    if n == 2:
        g = 1.0 / np.sqrt(3.0)
        return np.array([-g, g]), np.array([1.0, 1.0])
    if n == 3:
        g = np.sqrt(0.6)
        return np.array([-g, 0.0, g]), np.array([5.0, 8.0, 5.0]) / 9.0
    raise ValueError(n)


def _gauss_product(n):
    x, w = _gauss_1d(n)
    pts = np.array([(xi, eta) for eta in x for xi in x])
    wts = np.array([wi * wj for wj in w for wi in w])
    return QuadratureRule(points=pts, weights=wts)


def _tri_rule_3pt():
    # degree 2, interior points, weights 1/6 each
    pts = np.array([(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)])
    wts = np.full(3, 1 / 6)
    return QuadratureRule(points=pts, weights=wts)


def _tri_rule_4pt():
    # degree-3 conical product rule; all weights positive
    s6 = np.sqrt(6.0)
    u = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    y = np.array([(4.0 - s6) / 10.0, (4.0 + s6) / 10.0])
    wy = np.array([(9.0 + s6) / 72.0, (9.0 - s6) / 72.0])
    pts = []
    wts = []
    for j in range(2):
        for i in range(2):
            pts.append((u[i] * (1.0 - y[j]), y[j]))
            wts.append(wy[j])
    return QuadratureRule(points=np.array(pts), weights=np.array(wts))


_RULES = {
    "CSMT3": _tri_rule_3pt(),
    "CSMT6": _tri_rule_4pt(),
    "CSMQ4": _gauss_product(2),
    "CSMQ5": _gauss_product(3),
    "CSMQ6": _gauss_product(3),
    "CSMQ7": _gauss_product(3),
    "CSMQ8": _gauss_product(3),
}
for _r in _RULES.values():
    _r.points.flags.writeable = False
    _r.weights.flags.writeable = False


def quadrature(kind):
    """Integration rule of a membrane kind on its parent domain."""
    try:
        return _RULES[kind]
    except KeyError:
        raise ValueError(f"{kind!r} is not a membrane kind") from None


_TABLE_CACHE = {}


def rule_tables(kind, rule=None):
    """Stacked shape-function values/parent-gradients at rule points.

    The rule points are fixed per kind, so the parent-space evaluations are
    shared by every element of that kind.  Returns four stacked arrays
    ``(values, dparent, values_km, dparent_km)`` with a leading
    quadrature-point axis; the ``_km`` pair holds the (possibly reduced)
    curvature/couple basis.
    """
    if rule is None:
        table = _TABLE_CACHE.get(kind)
        if table is not None:
            return table
        rule = quadrature(kind)
        cache = True
    else:
        cache = False
    ns, dns, nks, dnks = [], [], [], []
    for pt in rule.points:
        n, dn = shape_functions(kind, pt)
        nk, dnk = _field_shape_functions(kind, "kappa", pt)
        ns.append(n)
        dns.append(dn)
        nks.append(nk)
        dnks.append(dnk)
    table = (np.array(ns), np.array(dns), np.array(nks), np.array(dnks))
    if cache:
        _TABLE_CACHE[kind] = table
    return table


def stress_mode_count(kind):
    """Number of strain/stress modes of a kind (columns of phi)."""
    if kind == "CSMT3":
        return 3
    return 18 if kind == "CSMQ8" else 9


def stress_mode_stack(kind, points_xy, centroid, scale):
    """Stacked strain/stress mode matrices at many physical points.

    Vectorized equivalent of evaluating :func:`strain_stress_basis` at each
    point; returns an array of shape ``(n_points, 3, n_modes)``.
    """
    pts = np.asarray(points_xy, dtype=float)
    n_pts = pts.shape[0]
    if kind == "CSMT3":
        return np.broadcast_to(np.eye(3), (n_pts, 3, 3)).copy()
    xh = (pts[:, 0] - centroid[0]) / scale
    yh = (pts[:, 1] - centroid[1]) / scale
    if kind == "CSMQ8":
        modes = (np.ones(n_pts), xh, yh, xh * xh, xh * yh, yh * yh)
    else:
        modes = (np.ones(n_pts), xh, yh)
    out = np.zeros((n_pts, 3, 3 * len(modes)))
    for m, vals in enumerate(modes):
        for a in range(3):
            out[:, a, 3 * m + a] = vals
    return out


def strain_stress_basis(kind):
    """Mode bases for the strain and stress fields of ``kind``.

    Returns a pair of callables ``phi(xy, centroid, scale) -> matrix``.
    CSMT3 uses constant fields (3x3 identity); the other kinds use complete
    polynomial mode sets per Voigt row, centred at the element centroid and
    scaled for conditioning: first order (3x9) everywhere except CSMQ8,
    whose sixteen displacement DoFs require the complete second-order set
    (3x18) to keep the stress projection full rank.  Strain and stress
    share the same basis.
    """
    if kind not in MEMBRANE_KINDS:
        raise ValueError(f"{kind!r} is not a membrane kind")
    if kind == "CSMT3":
        def phi(xy, centroid=(0.0, 0.0), scale=1.0):
            return np.eye(3)
        return phi, phi
    if kind == "CSMQ8":
        def phi(xy, centroid=(0.0, 0.0), scale=1.0):
            xh = (xy[0] - centroid[0]) / scale
            yh = (xy[1] - centroid[1]) / scale
            modes = (1.0, xh, yh, xh * xh, xh * yh, yh * yh)
            out = np.zeros((3, 18))
            for m, v in enumerate(modes):
                out[:, 3 * m:3 * m + 3] = v * np.eye(3)
            return out
        return phi, phi

    def phi(xy, centroid=(0.0, 0.0), scale=1.0):
        xh = (xy[0] - centroid[0]) / scale
        yh = (xy[1] - centroid[1]) / scale
        out = np.zeros((3, 9))
        out[:, 0:3] = np.eye(3)
        out[:, 3:6] = xh * np.eye(3)
        out[:, 6:9] = yh * np.eye(3)
        return out
    return phi, phi


def operator_matrices(basis_u, basis_theta, basis_mu):
    """Assemble the in-plane differential operator matrices at one point."""
    gu = basis_u.grads_xy
    n = gu.shape[0]
    B_sym = np.zeros((3, 2 * n))
    B_sym[0, 0::2] = gu[:, 0]
    B_sym[1, 1::2] = gu[:, 1]
    B_sym[2, 0::2] = gu[:, 1]
    B_sym[2, 1::2] = gu[:, 0]
    B_curl_u = np.zeros((1, 2 * n))
    B_curl_u[0, 0::2] = -0.5 * gu[:, 1]
    B_curl_u[0, 1::2] = 0.5 * gu[:, 0]

    gt = basis_theta.grads_xy
    B_curl_theta = np.zeros((2, gt.shape[0]))
    B_curl_theta[0] = 0.5 * gt[:, 1]
    B_curl_theta[1] = -0.5 * gt[:, 0]

    gm = basis_mu.grads_xy
    p = gm.shape[0]
    B_curl_mu = np.zeros((1, 2 * p))
    B_curl_mu[0, 0::2] = -0.5 * gm[:, 1]
    B_curl_mu[0, 1::2] = 0.5 * gm[:, 0]

    return OperatorMatrices(
        B_sym=B_sym,
        B_curl_u=B_curl_u,
        B_curl_theta=B_curl_theta,
        B_curl_mu=B_curl_mu,
    )
