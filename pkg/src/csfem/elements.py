"""Six-field mixed membrane element kernel and the companion 2D beam.

The element condenses four internal fields (strain, stress, curvature,
couple stress) onto the nodal displacement/drilling DoFs.  Five constant
coupling matrices are integrated once per element:

* ``H1 = -2 * int B_curl_u^T B_curl_mu``
* ``H2 =      int B_sym^T    phi_sig``
* ``H3 =  2 * int (phi_theta^T B_curl_mu - B_curl_theta^T phi_mu)``
* ``H4``   curvature/couple pairing, form dependent (see below)
* ``H5 =      int phi_eps^T  phi_sig``

Two equivalent curvature measures are supported.  With the mean-curvature
form, ``H4 = -2 * int phi_kap^T phi_mu``, the couple coefficients recover as
``s = -2 * H4^-1 int phi_kap^T mu_bar`` and the curvature tangent entering
``E2`` is four times the engineering one.  With the engineering measure,
``H4 = int phi_k^T phi_mu`` and both factors are unity.  Both routes produce
identical stiffness and resistance.

The default condensation inverts the constant ``H4``/``H5`` once at build
time; the alternative route inverting the moduli matrices ``E1``/``E2`` is
retained for verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import basis as _b
from .errors import ElementConstructionError, SingularJacobianError, StabilityError
from .materials import TangentPair, couple_update

FORM_KAPPA = "kappa_form"
FORM_K = "k_form"
FORMS = (FORM_KAPPA, FORM_K)

_COND_LIMIT = 1e12

# (H4 scale on int phi^T phi_mu, curvature-to-k factor, s-recovery factor,
#  E2 tangent factor) per curvature measure
_FORM_CONSTANTS = {
    FORM_KAPPA: (-2.0, -2.0, -2.0, 4.0),
    FORM_K: (1.0, 1.0, 1.0, 1.0),
}


@dataclass
class ElementArrays:
    """Constant matrices and quadrature bookkeeping for one element."""

    kind: str
    form: str
    thickness: float
    node_coords: np.ndarray
    n_nodes: int
    centroid: np.ndarray
    size: float                      # sqrt of element area
    weights: np.ndarray              # quadrature weight * detJ * thickness
    points_xy: np.ndarray            # (n_ip, 2) physical positions
    phi_eps: list
    phi_sig: list
    phi_kap: list
    phi_mu: list
    phi_theta: list
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    H4: np.ndarray
    H5: np.ndarray
    cond_H4: float = np.nan
    cond_H5: float = np.nan
    # equivalent strain matrices (per quadrature point) and their factors
    Q: np.ndarray | None = None      # H2 H5^-1
    P_u: np.ndarray | None = None    # H1 H4^-1
    P_th: np.ndarray | None = None   # H3 H4^-1
    G_eps: list = field(default_factory=list)
    G_kap_u: list = field(default_factory=list)
    G_kap_th: list = field(default_factory=list)
    # node-major precomputations for the update path
    Qn: np.ndarray | None = None         # (n_dof, n_modes), zero theta rows
    Gn_eps: np.ndarray | None = None     # (n_ip, 3, n_dof)
    Gn_curv: np.ndarray | None = None    # (n_ip, 2, n_dof)
    phi_eps_stack: np.ndarray | None = None
    phi_w_stack: np.ndarray | None = None   # weights folded into phi_eps^T
    K2_unit: np.ndarray | None = None    # couple-coupling stiffness per unit
                                         # of (4 eta), node-major
    _p_kap_stack: np.ndarray | None = None

    @property
    def n_ip(self):
        return len(self.weights)

    @property
    def n_dof(self):
        return 3 * self.n_nodes

    def dof_permutation(self):
        """Blocked (u..., theta...) -> node-major (ux, uy, rz) index map."""
        n = self.n_nodes
        perm = np.empty(3 * n, dtype=int)
        for i in range(n):
            perm[3 * i] = 2 * i
            perm[3 * i + 1] = 2 * i + 1
            perm[3 * i + 2] = 2 * n + i
        return perm


@dataclass
class PointFields:
    """Recovered independent fields at one quadrature point."""

    xy: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray
    eps: np.ndarray
    k: np.ndarray


@dataclass
class StabilityReport:
    kind: str
    n_ip: int
    i: int
    j: int
    m: int
    n: int
    n_k: int
    n_f: int
    lhs: int
    rhs: int
    inequality_ok: bool
    zero_modes: int
    spectral_ok: bool
    cond_H4: float
    cond_H5: float

    @property
    def discrepancy(self):
        return self.inequality_ok != self.spectral_ok


def build_arrays(kind, node_coords, form=FORM_K, thickness=1.0, rule=None,
                 need_inverses=True):
    """Integrate the constant element matrices for one membrane element.

    All matrices depend only on geometry and interpolation, so this runs
    once per element.  ``rule`` overrides the kind's quadrature (used by
    stability tests).  With ``need_inverses`` the inverses of ``H4`` and
    ``H5`` are computed and folded into per-point equivalent strain
    matrices; a condition number above 1e12 is rejected.
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}")
    coords = np.asarray(node_coords, dtype=float)
    if coords.shape != (_b.NODE_COUNTS[kind], 2):
        raise ValueError(
            f"{kind} expects node_coords of shape "
            f"({_b.NODE_COUNTS[kind]}, 2), got {coords.shape}")
    c_h4, _, _, _ = _FORM_CONSTANTS[form]

    if rule is None:
        rule = _b.quadrature(kind)
    ns, dns, nks, dnks = _b.rule_tables(kind, rule=None if rule is
                                        _b.quadrature(kind) else rule)
    n_ip = len(rule.weights)

    # isoparametric geometry at every rule point, vectorized over points
    jac = np.einsum("ba,gbc->gac", coords, dns)   # (g, 2, 2), dx_a/dxi_c
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0.0):
        g_bad = int(np.argmin(det))
        raise SingularJacobianError(
            f"{kind}: non-positive Jacobian determinant {det[g_bad]:.3e} "
            f"at parent point ({rule.points[g_bad][0]:.4g}, "
            f"{rule.points[g_bad][1]:.4g})")
    jac_inv = np.empty_like(jac)
    jac_inv[:, 0, 0] = jac[:, 1, 1]
    jac_inv[:, 0, 1] = -jac[:, 0, 1]
    jac_inv[:, 1, 0] = -jac[:, 1, 0]
    jac_inv[:, 1, 1] = jac[:, 0, 0]
    jac_inv /= det[:, None, None]

    weights = rule.weights * det * thickness
    points_xy = ns @ coords
    area = float(weights.sum()) / thickness
    centroid = (weights @ points_xy) / (thickness * area)
    size = np.sqrt(area)

    grads = dns @ jac_inv          # (g, n, 2) Cartesian gradients
    grads_km = dnks @ jac_inv

    n_nodes = coords.shape[0]
    n_u = 2 * n_nodes
    n_kap = 2 * nks.shape[1]

    phi_stack = _b.stress_mode_stack(kind, points_xy, centroid, size)
    n_modes = phi_stack.shape[2]

    b_sym = np.zeros((n_ip, 3, n_u))
    b_sym[:, 0, 0::2] = grads[:, :, 0]
    b_sym[:, 1, 1::2] = grads[:, :, 1]
    b_sym[:, 2, 0::2] = grads[:, :, 1]
    b_sym[:, 2, 1::2] = grads[:, :, 0]
    b_cu = np.zeros((n_ip, 1, n_u))
    b_cu[:, 0, 0::2] = -0.5 * grads[:, :, 1]
    b_cu[:, 0, 1::2] = 0.5 * grads[:, :, 0]
    b_cth = np.zeros((n_ip, 2, n_nodes))
    b_cth[:, 0] = 0.5 * grads[:, :, 1]
    b_cth[:, 1] = -0.5 * grads[:, :, 0]
    b_cmu = np.zeros((n_ip, 1, n_kap))
    b_cmu[:, 0, 0::2] = -0.5 * grads_km[:, :, 1]
    b_cmu[:, 0, 1::2] = 0.5 * grads_km[:, :, 0]
    p_kap = np.zeros((n_ip, 2, n_kap))
    p_kap[:, 0, 0::2] = nks
    p_kap[:, 1, 1::2] = nks
    p_th = ns[:, None, :]

    w3 = weights[:, None, None]
    H1 = -2.0 * (w3 * b_cu.transpose(0, 2, 1) @ b_cmu).sum(axis=0)
    H2 = (w3 * b_sym.transpose(0, 2, 1) @ phi_stack).sum(axis=0)
    H3 = 2.0 * (w3 * (p_th.transpose(0, 2, 1) @ b_cmu
                      - b_cth.transpose(0, 2, 1) @ p_kap)).sum(axis=0)
    H4 = c_h4 * (w3 * p_kap.transpose(0, 2, 1) @ p_kap).sum(axis=0)
    H5 = (w3 * phi_stack.transpose(0, 2, 1) @ phi_stack).sum(axis=0)

    arrays = ElementArrays(
        kind=kind, form=form, thickness=thickness, node_coords=coords,
        n_nodes=n_nodes, centroid=centroid, size=size,
        weights=weights, points_xy=points_xy,
        phi_eps=list(phi_stack), phi_sig=list(phi_stack),
        phi_kap=list(p_kap), phi_mu=list(p_kap), phi_theta=list(p_th),
        H1=H1, H2=H2, H3=H3, H4=H4, H5=H5,
    )
    arrays.phi_eps_stack = phi_stack
    arrays._p_kap_stack = p_kap
    if need_inverses:
        _fold_inverses(arrays)
    return arrays


def _fold_inverses(arrays):
    h_inv = {}
    for name, mat in (("H4", arrays.H4), ("H5", arrays.H5)):
        if mat.shape[0] != mat.shape[1]:
            raise ElementConstructionError(
                f"{arrays.kind}: {name} is {mat.shape[0]}x{mat.shape[1]}, "
                "not square"
            )
        try:
            inv = np.linalg.inv(mat)
        except np.linalg.LinAlgError:
            raise ElementConstructionError(
                f"{arrays.kind}: {name} is singular") from None
        # 1-norm condition number from the inverse already at hand
        cond = (np.abs(mat).sum(axis=0).max()
                * np.abs(inv).sum(axis=0).max())
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise ElementConstructionError(
                f"{arrays.kind}: {name} is numerically singular "
                f"(condition number {cond:.3e})"
            )
        setattr(arrays, f"cond_{name}", cond)
        h_inv[name] = inv
    arrays.Q = arrays.H2 @ h_inv["H5"]
    arrays.P_u = arrays.H1 @ h_inv["H4"]
    arrays.P_th = arrays.H3 @ h_inv["H4"]
    phi_stack = arrays.phi_eps_stack
    p_kap = arrays._p_kap_stack
    G_eps = phi_stack @ arrays.Q.T
    G_kap_u = p_kap @ arrays.P_u.T
    G_kap_th = p_kap @ arrays.P_th.T
    arrays.G_eps = list(G_eps)
    arrays.G_kap_u = list(G_kap_u)
    arrays.G_kap_th = list(G_kap_th)

    # node-major scatter of the same operators, plus the constant part of
    # the curvature coupling (the couple law is always linear in k)
    nd = arrays.n_dof
    n_ip = arrays.n_ip
    u_cols = np.flatnonzero(np.arange(nd) % 3 != 2)
    th_cols = np.flatnonzero(np.arange(nd) % 3 == 2)

    arrays.Qn = np.zeros((nd, arrays.H5.shape[0]))
    arrays.Qn[u_cols] = arrays.Q
    arrays.Gn_eps = np.zeros((n_ip, 3, nd))
    arrays.Gn_curv = np.zeros((n_ip, 2, nd))
    arrays.Gn_eps[:, :, u_cols] = G_eps
    arrays.Gn_curv[:, :, u_cols] = G_kap_u
    arrays.Gn_curv[:, :, th_cols] = G_kap_th
    arrays.phi_w_stack = np.ascontiguousarray(
        (arrays.weights[:, None, None] * phi_stack).transpose(0, 2, 1))

    _, _, _, c_d = _FORM_CONSTANTS[arrays.form]
    m_kap = (arrays.weights[:, None, None]
             * p_kap.transpose(0, 2, 1) @ p_kap).sum(axis=0)
    pb = np.zeros((nd, arrays.H4.shape[0]))
    pb[u_cols] = arrays.P_u
    pb[th_cols] = arrays.P_th
    arrays.K2_unit = c_d * (pb @ m_kap @ pb.T)


def _moduli_matrices(arrays, tangents):
    """E1 and E2 integrated against the current tangents."""
    _, _, _, c_d = _FORM_CONSTANTS[arrays.form]
    ne = arrays.H5.shape[0]
    nk = arrays.H4.shape[0]
    E1 = np.zeros((ne, ne))
    E2 = np.zeros((nk, nk))
    for g in range(arrays.n_ip):
        w = arrays.weights[g]
        pe = arrays.phi_eps[g]
        pk = arrays.phi_kap[g]
        E1 += w * (pe.T @ tangents[g].C_t @ pe)
        E2 += c_d * w * (pk.T @ tangents[g].D_t @ pk)
    return E1, E2


def _block_to_node_major(arrays, K_uu, K_ut, K_tt, R_u=None, R_th=None):
    n_u = 2 * arrays.n_nodes
    nd = arrays.n_dof
    K = np.empty((nd, nd))
    perm = arrays.dof_permutation()
    Kb = np.zeros((nd, nd))
    Kb[:n_u, :n_u] = K_uu
    Kb[:n_u, n_u:] = K_ut
    Kb[n_u:, :n_u] = K_ut.T
    Kb[n_u:, n_u:] = K_tt
    K = Kb[np.ix_(perm, perm)]
    if R_u is None:
        return K
    Rb = np.concatenate([R_u, R_th])
    return K, Rb[perm]


def stiffness_option2(arrays, tangents):
    """Elemental stiffness through the constant-matrix inverses.

    ``K = Q E1 Q^T`` on the translational block plus the curvature coupling
    ``[P_u; P_th] E2 [P_u; P_th]^T``; rows/columns are node-major
    (ux, uy, rz).
    """
    E1, E2 = _moduli_matrices(arrays, tangents)
    K_uu = arrays.Q @ E1 @ arrays.Q.T + arrays.P_u @ E2 @ arrays.P_u.T
    K_ut = arrays.P_u @ E2 @ arrays.P_th.T
    K_tt = arrays.P_th @ E2 @ arrays.P_th.T
    return _block_to_node_major(arrays, K_uu, K_ut, K_tt)


def stiffness_option1(arrays, tangents):
    """Elemental stiffness through the moduli-matrix inverses.

    Requires ``E1`` and ``E2`` to be invertible, which holds only with
    sufficient integration points; a rank-deficient matrix raises
    :class:`StabilityError` citing the quadrature stability requirement.
    Retained as a cross-check for the default route.
    """
    E1, E2 = _moduli_matrices(arrays, tangents)
    for name, mat in (("E1", E1), ("E2", E2)):
        if np.linalg.cond(mat) > _COND_LIMIT:
            raise StabilityError(
                f"{arrays.kind}: {name} is singular with {arrays.n_ip} "
                "integration points; the rule violates "
                "n_ip * min(field sizes) >= max(field sizes, n_k - n_f)"
            )
    A1 = np.linalg.inv(arrays.H5.T @ np.linalg.solve(E1, arrays.H5))
    A2 = np.linalg.inv(arrays.H4.T @ np.linalg.solve(E2, arrays.H4))
    K_uu = arrays.H2 @ A1 @ arrays.H2.T + arrays.H1 @ A2 @ arrays.H1.T
    K_ut = arrays.H1 @ A2 @ arrays.H3.T
    K_tt = arrays.H3 @ A2 @ arrays.H3.T
    return _block_to_node_major(arrays, K_uu, K_ut, K_tt)


def update_and_resist(arrays, d, points, material, eta):
    """Drive the element to the trial displacement ``d`` (node-major).

    Per quadrature point the strain and curvature follow from the constant
    equivalent strain matrices, the material point is updated, and the
    stress/couple coefficients are recovered by the weighted projections
    through the stored inverses.  No local iteration runs at element level.
    The couple law is linear in the curvature, so its resistance and
    stiffness contributions reduce to the prebaked ``4 eta K2_unit``.

    Returns ``(resistance, stiffness)`` in node-major ordering.
    """
    _, c_curv, _, _ = _FORM_CONSTANTS[arrays.form]
    d = np.asarray(d, dtype=float)

    eps_all = arrays.Gn_eps @ d            # (n_ip, 3)
    k_all = c_curv * (arrays.Gn_curv @ d)  # (n_ip, 2)
    n_ip = arrays.n_ip
    sig_all = np.empty((n_ip, 3))
    C_all = np.empty((n_ip, 3, 3))
    for g in range(n_ip):
        sig_all[g], C_all[g] = material.update(points[g], eps_all[g])
        points[g].k_trial = k_all[g]
        points[g].mu = 4.0 * eta * k_all[g]

    phw = arrays.phi_w_stack                       # (n_ip, ne, 3)
    vec_sig = (phw @ sig_all[:, :, None]).sum(axis=0)[:, 0]
    E1 = (phw @ (C_all @ arrays.phi_eps_stack)).sum(axis=0)

    K2 = (4.0 * eta) * arrays.K2_unit
    K = arrays.Qn @ E1 @ arrays.Qn.T + K2
    R = arrays.Qn @ vec_sig + K2 @ d
    return R, K


def elastic_stiffness(arrays, C, eta):
    """Constant stiffness of an element with fixed tangents (node-major)."""
    E1 = (arrays.phi_w_stack @ (C @ arrays.phi_eps_stack)).sum(axis=0)
    return arrays.Qn @ E1 @ arrays.Qn.T + (4.0 * eta) * arrays.K2_unit


def recover_fields(arrays, d, material, eta, points=None):
    """Evaluate the independent stress/couple fields at the trial state.

    The returned per-point fields come from the recovered coefficient
    vectors (not the pointwise constitutive response), so they satisfy the
    weak projection property against the strain/curvature bases.
    """
    from .materials import MaterialPoint

    _, c_curv, c_s, _ = _FORM_CONSTANTS[arrays.form]
    n = arrays.n_nodes
    d = np.asarray(d, dtype=float)
    perm = arrays.dof_permutation()
    db = np.empty_like(d)
    db[perm] = d
    p = db[: 2 * n]
    q = db[2 * n:]

    if points is None:
        points = [MaterialPoint() for _ in range(arrays.n_ip)]

    vec_sig = np.zeros(arrays.H5.shape[0])
    vec_mu = np.zeros(arrays.H4.shape[0])
    eps_all = []
    k_all = []
    for g in range(arrays.n_ip):
        w = arrays.weights[g]
        eps = arrays.G_eps[g] @ p
        k = c_curv * (arrays.G_kap_u[g] @ p + arrays.G_kap_th[g] @ q)
        sig, _ = material.update(points[g], eps)
        mu, _ = couple_update(k, eta)
        vec_sig += w * (arrays.phi_eps[g].T @ sig)
        vec_mu += w * (arrays.phi_kap[g].T @ mu)
        eps_all.append(eps)
        k_all.append(k)

    alpha = np.linalg.solve(arrays.H5, vec_sig)
    s = c_s * np.linalg.solve(arrays.H4, vec_mu)
    out = []
    for g in range(arrays.n_ip):
        out.append(PointFields(
            xy=arrays.points_xy[g].copy(),
            sigma=arrays.phi_sig[g] @ alpha,
            mu=arrays.phi_mu[g] @ s,
            eps=eps_all[g],
            k=k_all[g],
        ))
    return out


def reference_coords(kind):
    """Well-shaped reference geometry for a membrane kind."""
    if kind in ("CSMT3", "CSMT6"):
        corners = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
        if kind == "CSMT3":
            return corners
        mids = np.array([
            0.5 * (corners[0] + corners[1]),
            0.5 * (corners[1] + corners[2]),
            0.5 * (corners[2] + corners[0]),
        ])
        return np.vstack([corners, mids])
    corners = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
    mids = [0.5 * (corners[e] + corners[(e + 1) % 4])
            for e in _b._QUAD_MIDS[kind]]
    if mids:
        return np.vstack([corners, mids])
    return corners


def check_stability(kind, form=FORM_K, E=1.0, nu=0.3, l=1.0):
    """Evaluate the quadrature-count inequality and the spectral test.

    Both verdicts are reported separately: the inequality is a printed-form
    counting check, while the spectral test assembles one unconstrained
    elastic element and requires exactly three zero-energy modes.  The two
    can disagree (the counting check is conservative for some kinds); the
    spectral test is the authoritative one.
    """
    from .materials import elastic_tangent, shear_modulus

    coords = reference_coords(kind)
    arrays = build_arrays(kind, coords, form=form)
    i, j = arrays.phi_eps[0].shape
    m, n = arrays.phi_kap[0].shape
    n_k = arrays.n_dof
    n_f = 3
    lhs = arrays.n_ip * min(i, j, m, n)
    rhs = max(i, j, m, n, n_k - n_f)

    C = elastic_tangent(E, nu, "plane_stress")
    eta = l * l * shear_modulus(E, nu)
    tangents = [TangentPair(C, 4.0 * eta * np.eye(2))] * arrays.n_ip
    K = stiffness_option2(arrays, tangents)
    eig = np.linalg.eigvalsh(0.5 * (K + K.T))
    zero_modes = int(np.sum(np.abs(eig) < 1e-8 * np.abs(eig).max()))

    return StabilityReport(
        kind=kind, n_ip=arrays.n_ip, i=i, j=j, m=m, n=n, n_k=n_k, n_f=n_f,
        lhs=lhs, rhs=rhs, inequality_ok=lhs >= rhs,
        zero_modes=zero_modes, spectral_ok=zero_modes == n_f,
        cond_H4=arrays.cond_H4, cond_H5=arrays.cond_H5,
    )


def beam_stiffness(E, A, I, node_coords):
    """2D Euler-Bernoulli beam stiffness in the global frame (6x6).

    Node DoFs are (ux, uy, rz); the rotational DoF shares the drilling index
    of any membrane attached at the same node.
    """
    coords = np.asarray(node_coords, dtype=float)
    dx, dy = coords[1] - coords[0]
    L = float(np.hypot(dx, dy))
    if L <= 0.0:
        raise ValueError("zero-length beam")
    ea = E * A / L
    w1 = 12.0 * E * I / L**3
    w2 = 6.0 * E * I / L**2
    w3 = 4.0 * E * I / L
    w4 = 2.0 * E * I / L
    K_local = np.array([
        [ea, 0.0, 0.0, -ea, 0.0, 0.0],
        [0.0, w1, w2, 0.0, -w1, w2],
        [0.0, w2, w3, 0.0, -w2, w4],
        [-ea, 0.0, 0.0, ea, 0.0, 0.0],
        [0.0, -w1, -w2, 0.0, w1, -w2],
        [0.0, w2, w4, 0.0, -w2, w3],
    ])
    c = dx / L
    s = dy / L
    r = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    T = np.zeros((6, 6))
    T[:3, :3] = r
    T[3:, 3:] = r
    return T.T @ K_local @ T
