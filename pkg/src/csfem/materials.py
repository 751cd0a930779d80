"""Constitutive point models.

Provides plane-stress/plane-strain isotropic elasticity, the linear elastic
couple-stress law (mu = 4*eta*k acting on the engineering curvature pair),
and projected plane-stress J2 plasticity with linear isotropic
hardening/softening.

The hardening ratio ``b`` is defined so that the uniaxial post-yield tangent
equals ``b*E``; the corresponding plastic modulus is ``H = b*E / (1 - b)``.
The couple-stress law stays elastic in all cases, including plastic steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaterialFailureError

_J2_MAX_ITER = 50
# Deviatoric pairing matrix for plane stress, Voigt order (xx, yy, xy) with
# engineering shear: sigma' P sigma = (2/3) * sigma_eq^2.
_P = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 6.0]]) / 3.0


def elastic_tangent(E, nu, assumption):
    """3x3 Voigt stiffness for isotropic elasticity.

    The shear entry acts on the engineering shear strain.  Plane strain with
    nu -> 0.5 is rejected as incompressible.
    """
    if assumption == "plane_stress":
        f = E / (1.0 - nu * nu)
        return np.array([
            [f, f * nu, 0.0],
            [f * nu, f, 0.0],
            [0.0, 0.0, 0.5 * E / (1.0 + nu)],
        ])
    if assumption == "plane_strain":
        if abs(1.0 - 2.0 * nu) < 1e-12:
            raise ValueError("plane strain with nu = 0.5 is singular")
        c = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
        return np.array([
            [c * (1.0 - nu), c * nu, 0.0],
            [c * nu, c * (1.0 - nu), 0.0],
            [0.0, 0.0, 0.5 * E / (1.0 + nu)],
        ])
    raise ValueError(f"unknown assumption {assumption!r}")


def shear_modulus(E, nu):
    return 0.5 * E / (1.0 + nu)


def couple_update(k, eta):
    """Elastic couple-stress law: mu = 4*eta*k, tangent 4*eta*I.

    ``k`` is the engineering curvature pair; the law is the same inside
    plastic steps since the couple part of the stored energy stays elastic.
    """
    k = np.asarray(k, dtype=float)
    return 4.0 * eta * k, 4.0 * eta * np.eye(2)


@dataclass
class TangentPair:
    """Material tangents at one quadrature point."""

    C_t: np.ndarray  # (3, 3) strain tangent
    D_t: np.ndarray  # (2, 2) engineering-curvature tangent


@dataclass
class MaterialPoint:
    """Committed/trial constitutive state at one quadrature point.

    ``commit`` promotes the trial state after global convergence;
    ``rollback`` discards it.  ``peeq`` is non-decreasing across commits.
    """

    eps: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eps_trial: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sig: np.ndarray = field(default_factory=lambda: np.zeros(3))
    k: np.ndarray = field(default_factory=lambda: np.zeros(2))
    k_trial: np.ndarray = field(default_factory=lambda: np.zeros(2))
    mu: np.ndarray = field(default_factory=lambda: np.zeros(2))
    eps_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eps_p_trial: np.ndarray = field(default_factory=lambda: np.zeros(3))
    peeq: float = 0.0
    peeq_trial: float = 0.0
    # warm-start hint for the local return solve; not part of the state
    _dlam_hint: float = 0.0

    def commit(self):
        self.eps = self.eps_trial.copy()
        self.k = self.k_trial.copy()
        self.eps_p = self.eps_p_trial.copy()
        self.peeq = self.peeq_trial

    def rollback(self):
        self.eps_trial = self.eps.copy()
        self.k_trial = self.k.copy()
        self.eps_p_trial = self.eps_p.copy()
        self.peeq_trial = self.peeq


class ElasticLaw:
    """Linear isotropic elasticity under plane stress or plane strain."""

    def __init__(self, E, nu, assumption):
        self.E = E
        self.nu = nu
        self.assumption = assumption
        self.C = elastic_tangent(E, nu, assumption)
        self.G = shear_modulus(E, nu)

    def update(self, point, eps):
        eps = np.asarray(eps, dtype=float)
        sig = self.C @ eps
        point.eps_trial = eps.copy()
        point.sig = sig
        return sig, self.C


class J2PlaneStress:
    """Projected plane-stress J2 plasticity with linear isotropic hardening.

    The return mapping solves one scalar equation for the plastic multiplier
    (Newton, analytic derivative) and returns the consistent algorithmic
    tangent.  The trial state is written into the material point; nothing is
    committed until the point's ``commit`` is called.
    """

    # shared eigenbasis of the elastic matrix and the deviatoric pairing:
    # (1,1,0)/sqrt2, (1,-1,0)/sqrt2, (0,0,1)
    _V = np.array([
        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0), 0.0],
        [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
        [0.0, 0.0, 1.0],
    ])
    _p_eig = np.array([1.0 / 3.0, 1.0, 2.0])

    def __init__(self, E, nu, sigma_y, hardening_ratio):
        if not sigma_y > 0.0:
            raise ValueError("sigma_y must be positive")
        if not hardening_ratio < 1.0:
            raise ValueError("hardening ratio must be below 1")
        self.E = E
        self.nu = nu
        self.sigma_y0 = sigma_y
        self.b = hardening_ratio
        self.H = hardening_ratio * E / (1.0 - hardening_ratio)
        self.C = elastic_tangent(E, nu, "plane_stress")
        self.G = shear_modulus(E, nu)
        self._c_eig = np.array([E / (1.0 - nu), E / (1.0 + nu), self.G])
        # residual strength retained once linear softening exhausts the
        # yield stress, so the local problem stays well posed
        self.sigma_y_floor = 1e-8 * sigma_y

    def _yield_stress(self, peeq):
        value = self.sigma_y0 + self.H * peeq
        if value <= self.sigma_y_floor:
            return self.sigma_y_floor, 0.0
        return value, self.H

    def _consistency(self, dlam, xi_hat, peeq_n):
        """Residual of the scalar return equation and its derivative.

        Runs in the shared eigenbasis with plain floats; this sits in the
        innermost loop of every plastic quadrature-point update.
        """
        x1, x2, x3 = xi_hat
        c1, c2, c3 = self._c_eig
        p1, p2, p3 = self._p_eig
        d1 = 1.0 + dlam * c1 * p1
        d2 = 1.0 + dlam * c2 * p2
        d3 = 1.0 + dlam * c3 * p3
        s1 = c1 * x1 / d1
        s2 = c2 * x2 / d2
        s3 = c3 * x3 / d3
        sps = p1 * s1 * s1 + p2 * s2 * s2 + p3 * s3 * s3
        dsps = -2.0 * (p1 * p1 * c1 * s1 * s1 / d1
                       + p2 * p2 * c2 * s2 * s2 / d2
                       + p3 * p3 * c3 * s3 * s3 / d3)
        q = math.sqrt(2.0 / 3.0 * sps)
        dq = dsps / (3.0 * q) if q > 0.0 else 0.0
        peeq = peeq_n + dlam * q
        sy, hs = self._yield_stress(peeq)
        g = 0.5 * sps - sy * sy / 3.0
        dg = 0.5 * dsps - 2.0 / 3.0 * sy * hs * (q + dlam * dq)
        return g, dg, (s1, s2, s3), q, peeq, sy, hs

    def update(self, point, eps):
        eps = np.asarray(eps, dtype=float)
        xi = eps - point.eps_p
        x0, x1, x2 = float(xi[0]), float(xi[1]), float(xi[2])
        big = max(abs(x0), abs(x1), abs(x2))
        if not math.isfinite(big) or big > 1e6:
            raise MaterialFailureError(
                "trial strain out of range for a small-strain model")
        inv_sqrt2 = 0.7071067811865476
        xi_hat = ((x0 + x1) * inv_sqrt2, (x0 - x1) * inv_sqrt2, x2)
        c1, c2, c3 = self._c_eig
        s1, s2, s3 = c1 * xi_hat[0], c2 * xi_hat[1], c3 * xi_hat[2]
        p1, p2, p3 = self._p_eig
        f_tr = 0.5 * (p1 * s1 * s1 + p2 * s2 * s2 + p3 * s3 * s3)
        sy0, _ = self._yield_stress(point.peeq)
        if f_tr - sy0 * sy0 / 3.0 <= 1e-14 * sy0 * sy0:
            sig = np.array([(s1 + s2) * inv_sqrt2, (s1 - s2) * inv_sqrt2, s3])
            point.eps_trial = eps
            point.eps_p_trial = point.eps_p
            point.peeq_trial = point.peeq
            point.sig = sig
            return sig, self.C

        # bracketed Newton on the plastic multiplier; g(0) > 0 and
        # g -> -sy_floor^2/3 < 0 as dlam grows, so a root always exists
        tol_g = 1e-12 * max(f_tr, self.sigma_y0 ** 2)
        dlam = point._dlam_hint
        lo, hi = 0.0, None
        solved = False
        for _ in range(_J2_MAX_ITER):
            g, dg, sig_hat, q, peeq, sy, hs = self._consistency(
                dlam, xi_hat, point.peeq)
            if abs(g) <= tol_g:
                solved = True
                break
            if g > 0.0:
                lo = dlam
            else:
                hi = dlam
            newton = dlam - g / dg if dg < 0.0 else None
            if newton is not None and lo < newton and (hi is None
                                                       or newton < hi):
                dlam = newton
            elif hi is None:
                # expand the bracket; 1/c_max is the natural multiplier scale
                dlam = 2.0 * dlam if dlam > 0.0 else 0.5 / self._c_eig.max()
            else:
                dlam = 0.5 * (lo + hi)
        if not solved:
            raise MaterialFailureError(
                f"radial return did not converge within {_J2_MAX_ITER} "
                "iterations"
            )
        point._dlam_hint = dlam

        sig_hat = np.asarray(sig_hat)
        sig = self._V @ sig_hat
        ps = _P @ sig
        point.eps_trial = eps
        point.eps_p_trial = point.eps_p + dlam * ps
        point.peeq_trial = peeq
        point.sig = sig

        # consistent algorithmic tangent:
        # C_alg = Xi - th1 (Xi P s)(Xi P s)^T / (th2 + th1 s P Xi P s)
        den = 1.0 + dlam * self._c_eig * self._p_eig
        xi_eig = self._c_eig / den
        xi_mat = (self._V * xi_eig) @ self._V.T
        xps = self._V @ (xi_eig * self._p_eig * sig_hat)
        m = ps @ xps
        th1 = 1.0 - 4.0 / 9.0 * sy * hs * dlam / q
        th2 = 2.0 / 3.0 * sy * hs * q
        c_alg = xi_mat - (th1 / (th2 + th1 * m)) * np.outer(xps, xps)
        return sig, c_alg


def make_material(matdef):
    """Instantiate the point model described by a material definition."""
    if matdef.kind == "elastic":
        return ElasticLaw(matdef.E, matdef.nu, matdef.assumption)
    if matdef.kind == "j2":
        if matdef.assumption != "plane_stress":
            raise ValueError("the J2 model is implemented for plane stress only")
        return J2PlaneStress(matdef.E, matdef.nu, matdef.sigma_y, matdef.b)
    raise ValueError(f"unknown material kind {matdef.kind!r}")
