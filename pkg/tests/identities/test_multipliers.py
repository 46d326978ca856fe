import numpy as np
import pytest

from helmholtz_lab.eikonal import RadialPhase
from helmholtz_lab.identities import (
    MultiplierKind,
    PhiConstant,
    PhiThetaOverR,
    PsiEikonal,
    PsiQ,
    RadialPsi,
    multiplier_catalog,
    q_profile,
    smoothstep,
)


def ring(radii, dimension=2, angle=0.7):
    direction = np.zeros(dimension)
    direction[0], direction[1] = np.cos(angle), np.sin(angle)
    return np.asarray(radii, dtype=np.float64)[:, None] * direction


def test_smoothstep():
    np.testing.assert_allclose(smoothstep([-1.0, 0.0, 0.5, 1.0, 2.0]), [0.0, 0.0, 0.5, 1.0, 1.0])
    assert np.all(np.diff(smoothstep(np.linspace(0.0, 1.0, 101))) >= 0)


def test_q_profile():
    np.testing.assert_allclose(q_profile([0.0, 0.5, 1.0]), 0.0)
    np.testing.assert_allclose(q_profile([2.0, 3.0, 10.0]), [2.0, 3.0, 10.0])
    assert np.all(np.diff(q_profile(np.linspace(0.0, 3.0, 301))) >= 0)


class TestPhi:
    def test_constant(self):
        multiplier = PhiConstant(3, value=2.0)
        points = np.random.default_rng(0).normal(size=(10, 3))
        np.testing.assert_allclose(multiplier.phi(points), 2.0)
        np.testing.assert_allclose(multiplier.grad_phi(points), 0.0)
        assert multiplier.has_phi and not multiplier.has_psi

    def test_theta_over_r(self):
        multiplier = PhiThetaOverR(2, R=5.0)
        np.testing.assert_allclose(multiplier.phi(ring([0.5, 2.0, 3.9])), 0.1)
        np.testing.assert_allclose(multiplier.phi(ring([6.1, 9.0])), 0.0)
        np.testing.assert_allclose(multiplier.grad_phi(ring([1.0, 7.0])), 0.0)

    def test_theta_gradient(self):
        multiplier = PhiThetaOverR(2, R=5.0)
        points = ring([4.3, 5.0, 5.6])
        step = 1e-6
        numeric = (multiplier.phi(points * (1 + step)) - multiplier.phi(points * (1 - step))) / (2 * step)
        radial = np.sum(multiplier.grad_phi(points) * points, axis=-1)
        np.testing.assert_allclose(radial, numeric, rtol=1e-6, atol=1e-10)

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            PhiThetaOverR(2, R=0.0)


class TestRadialPsi:
    def test_morawetz_gradient(self):
        multiplier = RadialPsi(2, R=4.0)
        inner = ring([0.5, 1.0, 3.2])
        outer = ring([4.8, 6.0, 20.0])
        np.testing.assert_allclose(multiplier.grad_psi(inner), inner / 4.0, atol=1e-14)
        np.testing.assert_allclose(
            multiplier.grad_psi(outer), outer / np.linalg.norm(outer, axis=-1, keepdims=True), atol=1e-14
        )

    def test_band_spans_four_tenths_of_radius(self):
        # t = (3.6 - 3.2) / 1.6 = 1/4, S(1/4) = 53/512, F' = 0.9 + 0.1 S(1/4)
        multiplier = RadialPsi(2, R=4.0)
        points = ring([3.6])
        expected = 0.9 + 0.1 * 53.0 / 512.0
        np.testing.assert_allclose(multiplier.grad_psi(points), expected * points / 3.6, rtol=1e-12)

    def test_value_inside(self):
        multiplier = RadialPsi(3, R=4.0)
        points = ring([0.5, 2.0, 3.0], dimension=3)
        np.testing.assert_allclose(multiplier.psi(points), np.array([0.5, 2.0, 3.0]) ** 2 / 8.0, rtol=1e-12)

    def test_capped_hessian(self):
        multiplier = RadialPsi(3, R=2.0, profile="capped", R_cap=5.0)
        inner = ring([0.5, 1.0, 3.9], dimension=3)
        np.testing.assert_allclose(multiplier.hessian_psi(inner), np.broadcast_to(np.eye(3) / 2.0, (3, 3, 3)))
        np.testing.assert_allclose(multiplier.grad_psi(ring([6.5, 8.0], dimension=3)), 0.0, atol=1e-14)

    @pytest.mark.parametrize("profile", ["morawetz", "capped"])
    def test_derivatives_agree(self, profile):
        multiplier = RadialPsi(3, R=3.0, profile=profile)
        points = np.random.default_rng(3).uniform(-6.0, 6.0, size=(20, 3))
        np.testing.assert_allclose(
            multiplier.laplacian_psi(points), np.trace(multiplier.hessian_psi(points), axis1=-2, axis2=-1)
        )
        step = 1e-5
        numeric = np.stack(
            [
                (multiplier.laplacian_psi(points + step * e) - multiplier.laplacian_psi(points - step * e)) / (2 * step)
                for e in np.eye(3)
            ],
            axis=-1,
        )
        np.testing.assert_allclose(multiplier.grad_laplacian_psi(points), numeric, rtol=1e-5, atol=1e-7)

    def test_with_phi(self):
        multiplier = RadialPsi(2, R=4.0, with_phi=True)
        assert multiplier.has_psi and multiplier.has_phi
        np.testing.assert_allclose(multiplier.phi(ring([1.0])), 0.125)

    def test_invalid(self):
        with pytest.raises(ValueError):
            RadialPsi(2, R=1.0, profile="cubic")
        with pytest.raises(ValueError):
            RadialPsi(4, R=1.0)


class TestFiniteDifferencePsi:
    def test_psi_q(self):
        multiplier = PsiQ(2, R=2.0, n_inf="2 + 0.5*w1")
        points = ring([1.0, 5.0, 8.0], angle=0.0)
        np.testing.assert_allclose(multiplier.psi(points), [0.0, 2.5 * 2.5, 4.0 * 2.5])
        # grad psi = n_inf / R x/|x| on the e1 axis beyond 2R
        np.testing.assert_allclose(multiplier.grad_psi(points[1:]), [[1.25, 0.0], [1.25, 0.0]], rtol=1e-6, atol=1e-8)

    def test_psi_eikonal_radial_phase(self):
        multiplier = PsiEikonal(3, R1=2.0, delta=0.5, phase=RadialPhase(3))
        inner = ring([0.5, 1.5], dimension=3)
        outer = ring([3.0, 5.0], dimension=3)
        np.testing.assert_allclose(multiplier.grad_psi(inner), 0.0)
        radius = np.linalg.norm(outer, axis=-1, keepdims=True)
        np.testing.assert_allclose(multiplier.grad_psi(outer), np.sqrt(1.0 + radius) * outer / radius)

    def test_psi_eikonal_hessian(self):
        multiplier = PsiEikonal(2, R1=1.0, delta=1.0)
        points = ring([3.0, 4.0], angle=0.3)
        # psi = r^2/2 + r - const beyond 1.2 R1, so D^2 psi = I + (1/r)(I - w w^T)
        radius = np.linalg.norm(points, axis=-1)
        w = points / radius[:, None]
        expected = np.eye(2)[None] + (np.eye(2)[None] - w[:, :, None] * w[:, None, :]) / radius[:, None, None]
        np.testing.assert_allclose(multiplier.hessian_psi(points), expected, rtol=1e-5, atol=1e-6)

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            PsiEikonal(2, R1=2.0, delta=0.0)


class TestCatalog:
    @pytest.mark.parametrize(
        "kind,params,expected",
        [
            ("phi_const", {}, PhiConstant),
            ("phi_theta_over_R", {"R": 2.0}, PhiThetaOverR),
            ("psi_radial", {"R": 2.0, "profile": "capped"}, RadialPsi),
            ("psi_q", {"R": 2.0, "n_inf": "1 + w1^2"}, PsiQ),
            ("psi_eikonal", {"R1": 3.0, "delta": 0.5}, PsiEikonal),
        ],
    )
    def test_build(self, kind, params, expected):
        multiplier = multiplier_catalog(kind, dimension=3, **params)
        assert isinstance(multiplier, expected)
        assert multiplier.kind is MultiplierKind(kind)
        assert multiplier.describe()["kind"] == kind

    def test_unknown(self):
        with pytest.raises(ValueError):
            multiplier_catalog("psi_cubic")
