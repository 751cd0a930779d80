"""Constitutive model tests.

The J2 model is checked against two independent oracles: a one-dimensional
return-mapping routine implemented here (linear isotropic hardening with
uniaxial post-yield tangent b*E), and central finite differences of the
stress update for the algorithmic tangent.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from csfem import (
    ElasticLaw,
    J2PlaneStress,
    MaterialPoint,
    couple_update,
    elastic_tangent,
)


class Uniaxial1D:
    """Independent 1D elastoplastic oracle with plastic modulus bE/(1-b)."""

    def __init__(self, E, sigma_y, b):
        self.E = E
        self.sigma_y = sigma_y
        self.H = b * E / (1.0 - b)
        self.eps_p = 0.0
        self.peeq = 0.0

    def step(self, eps):
        sig_tr = self.E * (eps - self.eps_p)
        f = abs(sig_tr) - (self.sigma_y + self.H * self.peeq)
        if f <= 0.0:
            return sig_tr
        dgamma = f / (self.E + self.H)
        self.eps_p += np.sign(sig_tr) * dgamma
        self.peeq += dgamma
        return self.E * (eps - self.eps_p)


def drive_uniaxial(law, eps_x, point):
    """Impose eps_x with free lateral strain (sigma_y = 0, gamma = 0)."""
    eps_y = -law.nu * eps_x
    for _ in range(60):
        sig, C = law.update(point, np.array([eps_x, eps_y, 0.0]))
        if abs(sig[1]) < 1e-13 * law.E:
            return sig[0]
        eps_y -= sig[1] / C[1, 1]
    raise AssertionError("lateral-strain iteration did not converge")


# =====================================================================
# Elasticity
# =====================================================================


def test_plane_stress_matrix_closed_form():
    C = elastic_tangent(10.0, 0.25, "plane_stress")
    assert C[0, 0] == pytest.approx(10.0 / (1 - 0.25 ** 2))
    assert C[0, 0] == pytest.approx(10.666666666666666)
    assert C[0, 1] == pytest.approx(0.25 * C[0, 0])
    assert C[2, 2] == pytest.approx(10.0 / (2 * 1.25))


def test_plane_stress_1000_02():
    C = elastic_tangent(1000.0, 0.2, "plane_stress")
    assert C[0, 0] == pytest.approx(1041.6666666666667)


def test_nu_zero_decouples_axes():
    C = elastic_tangent(7.0, 0.0, "plane_stress")
    assert_allclose(C, np.diag([7.0, 7.0, 3.5]))
    C = elastic_tangent(7.0, 0.0, "plane_strain")
    assert_allclose(C, np.diag([7.0, 7.0, 3.5]))


def test_plane_strain_incompressible_rejected():
    with pytest.raises(ValueError):
        elastic_tangent(1.0, 0.5, "plane_strain")


def test_plane_strain_matrix():
    E, nu = 2.8, 0.4
    C = elastic_tangent(E, nu, "plane_strain")
    c = E / ((1 + nu) * (1 - 2 * nu))
    assert C[0, 0] == pytest.approx(c * (1 - nu))
    assert C[2, 2] == pytest.approx(1.0)  # shear modulus for these constants


def test_elastic_spd():
    for nu in (-0.3, 0.0, 0.2, 0.45):
        for ass in ("plane_stress", "plane_strain"):
            eig = np.linalg.eigvalsh(elastic_tangent(100.0, nu, ass))
            assert np.all(eig > 0)


# =====================================================================
# Couple-stress law
# =====================================================================


def test_couple_zero():
    mu, D = couple_update(np.zeros(2), 3.0)
    assert_allclose(mu, np.zeros(2))
    assert_allclose(D, 12.0 * np.eye(2))


def test_couple_direct_scaling():
    mu, _ = couple_update(np.array([0.0, 1.0]), 1.0)
    assert_allclose(mu, [0.0, 4.0])


def test_couple_from_characteristic_length():
    # l = 0.1, shear modulus 1 -> eta = 0.01 -> mu = 4*eta*k
    eta = 0.1 ** 2 * 1.0
    mu, _ = couple_update(np.array([1.0, 0.0]), eta)
    assert_allclose(mu, [0.04, 0.0])


def test_couple_linearity_exact():
    # dyadic rationals keep every product exact, so equality is bitwise
    eta = 2.375
    k1 = np.array([0.5, -2.0])
    k2 = np.array([4.0, 0.25])
    for a, b in [(2.0, 0.5), (-1.0, 8.0), (0.25, -0.125)]:
        lhs, _ = couple_update(a * k1 + b * k2, eta)
        m1, _ = couple_update(k1, eta)
        m2, _ = couple_update(k2, eta)
        assert_allclose(lhs, a * m1 + b * m2, rtol=0, atol=0)
    # generic arguments agree to rounding
    rng = np.random.default_rng(5)
    for _ in range(10):
        k1 = rng.standard_normal(2)
        k2 = rng.standard_normal(2)
        a, b = rng.standard_normal(2)
        lhs, _ = couple_update(a * k1 + b * k2, eta)
        m1, _ = couple_update(k1, eta)
        m2, _ = couple_update(k2, eta)
        assert_allclose(lhs, a * m1 + b * m2, rtol=1e-14, atol=1e-16)


# =====================================================================
# J2 plane stress
# =====================================================================


@pytest.fixture
def j2():
    return J2PlaneStress(E=1000.0, nu=0.2, sigma_y=1.0, hardening_ratio=-0.02)


def test_uniaxial_elastic_below_yield(j2):
    point = MaterialPoint()
    sig_x = drive_uniaxial(j2, 0.0005, point)
    assert sig_x == pytest.approx(0.5, abs=1e-12)
    assert point.peeq_trial == 0.0


def test_uniaxial_plastic_branch_matches_1d_oracle(j2):
    oracle = Uniaxial1D(E=1000.0, sigma_y=1.0, b=-0.02)
    point = MaterialPoint()
    eps = 0.002
    expected = oracle.step(eps)
    assert expected == pytest.approx(0.98)
    got = drive_uniaxial(j2, eps, point)
    assert got == pytest.approx(expected, abs=1e-8)
    assert point.peeq_trial > 0.0


def test_unload_reload_path_matches_1d_oracle(j2):
    """Reloading stays elastic until the updated yield surface is reached."""
    oracle = Uniaxial1D(E=1000.0, sigma_y=1.0, b=-0.02)
    point = MaterialPoint()
    path = [0.0015, 0.0005, 0.00097, 0.0018]
    for eps in path:
        expected = oracle.step(eps)
        got = drive_uniaxial(j2, eps, point)
        point.commit()
        assert got == pytest.approx(expected, abs=1e-8), eps
    # intermediate reload (third value) stayed on the elastic branch
    assert oracle.peeq == pytest.approx(point.peeq)


def test_peeq_nondecreasing_across_commits(j2):
    rng = np.random.default_rng(23)
    point = MaterialPoint()
    last = 0.0
    eps = np.zeros(3)
    for _ in range(30):
        eps = eps + 0.0008 * rng.standard_normal(3)
        j2.update(point, eps)
        point.commit()
        assert point.peeq >= last - 1e-16
        last = point.peeq


def test_trial_state_discarded_on_rollback(j2):
    point = MaterialPoint()
    j2.update(point, np.array([0.003, 0.0, 0.0]))
    assert point.peeq_trial > 0.0
    point.rollback()
    assert point.peeq_trial == 0.0
    assert_allclose(point.eps_p_trial, np.zeros(3))


@pytest.mark.parametrize("b", [-0.02, 0.0, 0.1])
def test_algorithmic_tangent_vs_finite_differences(b):
    """Consistent tangent against central differences, 100 increments."""
    law = J2PlaneStress(E=1000.0, nu=0.25, sigma_y=1.0, hardening_ratio=b)
    rng = np.random.default_rng(42)
    h = 1e-7
    n_checked = 0
    for _ in range(100):
        base = MaterialPoint()
        # random committed plastic state reached through a first update
        eps0 = 0.004 * rng.standard_normal(3)
        law.update(base, eps0)
        base.commit()
        eps = eps0 + 0.002 * rng.standard_normal(3)
        _, C_alg = law.update(base, eps)
        C_fd = np.empty((3, 3))
        for j in range(3):
            dp = eps.copy()
            dm = eps.copy()
            dp[j] += h
            dm[j] -= h
            sp, _ = law.update(base, dp)
            sm, _ = law.update(base, dm)
            C_fd[:, j] = (sp - sm) / (2 * h)
        scale = np.abs(C_alg).max()
        assert np.abs(C_fd - C_alg).max() / scale < 1e-5
        n_checked += 1
    assert n_checked == 100


def test_dissipation_nonnegative_hardening():
    law = J2PlaneStress(E=1000.0, nu=0.2, sigma_y=1.0, hardening_ratio=0.1)
    rng = np.random.default_rng(7)
    point = MaterialPoint()
    eps = np.zeros(3)
    for _ in range(40):
        eps = eps + 0.001 * rng.standard_normal(3)
        sig, _ = law.update(point, eps)
        deps_p = point.eps_p_trial - point.eps_p
        assert sig @ deps_p >= -1e-14
        point.commit()


def test_softening_stress_norm_never_grows_in_plastic_flow():
    """For b < 0 plastic flow never raises the stress above the yield value
    carried into the step; the updated stress sits on the shrunk surface."""
    law = J2PlaneStress(E=1000.0, nu=0.2, sigma_y=1.0, hardening_ratio=-0.02)
    P = np.array([[2, -1, 0], [-1, 2, 0], [0, 0, 6]]) / 3.0
    point = MaterialPoint()
    eps = np.zeros(3)
    rng = np.random.default_rng(9)
    direction = np.array([1.0, 0.3, 0.2])
    n_plastic = 0
    for i in range(25):
        eps = eps + 0.0006 * (direction + 0.1 * rng.standard_normal(3))
        sy_in = 1.0 + law.H * point.peeq
        sig, _ = law.update(point, eps)
        eq = np.sqrt(1.5 * sig @ (P @ sig))
        if point.peeq_trial > point.peeq:  # plastic step
            n_plastic += 1
            assert eq <= sy_in + 1e-10
            # consistency: stress lands on the updated surface
            assert eq == pytest.approx(1.0 + law.H * point.peeq_trial,
                                       abs=1e-9)
        point.commit()
    assert n_plastic > 5


def test_plastic_branch_continues_softening_line():
    """sigma = sigma_y + bE(eps - sigma_y/E) along monotonic extension."""
    law = J2PlaneStress(E=1000.0, nu=0.2, sigma_y=1.0, hardening_ratio=-0.02)
    point = MaterialPoint()
    for eps in np.linspace(0.0005, 0.004, 8):
        got = drive_uniaxial(law, eps, point)
        point.commit()
        expected = min(1000.0 * eps, 1.0 - 20.0 * (eps - 0.001))
        assert got == pytest.approx(expected, abs=1e-8), eps


def test_out_of_plane_stress_identically_zero():
    # plane stress by construction: only 3 in-plane components exist and the
    # return mapping operates on them directly
    law = J2PlaneStress(E=500.0, nu=0.3, sigma_y=2.0, hardening_ratio=0.05)
    point = MaterialPoint()
    sig, _ = law.update(point, np.array([0.01, -0.002, 0.004]))
    assert sig.shape == (3,)
