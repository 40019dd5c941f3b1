"""Energy functional, convolution and operator identities against closed forms."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

import hartreelab as hl
from conftest import NEAR_ZERO_KERNEL, plane_wave, random_field

PI = np.pi


def coulomb_gaussian_quartic_oracle():
    """iint e^{-|x|^2} |x-y|^{-1} e^{-|y|^2} via the radial spectral integral.

    With rho_hat(k) = pi^{3/2} e^{-k^2/4} and the 4 pi / k^2 transform of the
    Coulomb kernel the double integral collapses to a 1D quadrature.
    """
    val, _ = quad(lambda k: (PI**1.5 * np.exp(-(k**2) / 4.0)) ** 2 * 4 * PI / k**2
                  * 4 * PI * k**2 / (2 * PI) ** 3, 0, np.inf)
    return val


def inverse_square_gaussian_quartic_oracle():
    val, _ = quad(lambda k: (PI**1.5 * np.exp(-(k**2) / 4.0)) ** 2 * 2 * PI**2 / k
                  * 4 * PI * k**2 / (2 * PI) ** 3, 0, np.inf)
    return val


class TestDensity:
    def test_plane_wave_density_is_one(self, grid16):
        u, _ = plane_wave(grid16, (2, 0, 1))
        assert np.allclose(hl.density(u), 1.0, atol=1e-14)

    def test_gauge_invariance(self, grid16, rng):
        u = random_field(grid16, rng)
        v = hl.make_field(grid16, np.exp(1.3j) * u.values)
        assert np.allclose(hl.density(u), hl.density(v), rtol=1e-13)

    def test_density_mass_is_l4_norm_fourth(self, grid16, rng):
        u = random_field(grid16, rng)
        rho = hl.density(u)
        lhs = float(np.sum(rho**2)) * grid16.cell_volume
        assert np.isclose(lhs, hl.lp_norm(u, 4.0) ** 4, rtol=1e-12)


class TestConvolve:
    def test_single_cell_source_samples_kernel(self):
        # a weight-1 cell source reproduces the kernel at offsets up to the
        # band-limiting error of the sampled symbol (negligible at h = 0.25)
        g = hl.make_grid(64, 16.0)
        spec = hl.gaussian_well(1.0, 1.0)
        sym = hl.fourier_symbol(spec, g)
        rho = np.zeros((64, 64, 64))
        c = 32
        rho[c, c, c] = 1.0 / g.cell_volume
        out = hl.convolve(sym, rho)
        for off in (1, 4, 8):
            r = off * g.h
            assert abs(out[c + off, c, c] - hl.kernel_value(spec, r)) < 1e-8

    def test_linearity(self, grid16, rng):
        sym = hl.fourier_symbol(hl.coulomb(), grid16)
        r1 = np.abs(rng.standard_normal((16,) * 3))
        r2 = np.abs(rng.standard_normal((16,) * 3))
        lhs = hl.convolve(sym, r1 + r2)
        rhs = hl.convolve(sym, r1) + hl.convolve(sym, r2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))

    def test_coulomb_potential_of_gaussian_profile(self):
        # (w * e^{-r^2})(x) = -pi^{3/2} erf(r)/r, checked in the image-free zone
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)  # density e^{-r^2}
        phi = hl.convolve(hl.fourier_symbol(hl.coulomb(), g), hl.density(u))
        ctr = 32
        assert abs(phi[ctr, ctr, ctr] + 2 * PI) < 1e-8
        x = g.axis()
        for off in (1, 4, 8):
            r = x[ctr + off]
            ref = -PI**1.5 * erf(r) / r
            assert abs(phi[ctr + off, ctr, ctr] - ref) < 2e-4 * abs(ref)

    def test_shape_mismatch_rejected(self, grid16):
        sym = hl.fourier_symbol(hl.coulomb(), grid16)
        with pytest.raises(ValueError, match="base grid"):
            hl.convolve(sym, np.zeros((8, 8, 8)))


class TestInteraction:
    def test_gaussian_coulomb_closed_form(self):
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)
        oracle = coulomb_gaussian_quartic_oracle()
        assert abs(oracle - np.sqrt(2.0) * PI**2.5) < 1e-10
        got = hl.interaction(u, hl.coulomb())
        assert abs(got + oracle) / oracle < 1e-5

    def test_gaussian_inverse_square_closed_form(self):
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)
        oracle = inverse_square_gaussian_quartic_oracle()
        assert abs(oracle - PI**3) < 1e-10
        got = hl.interaction(u, hl.power_law(2.0))
        assert abs(got + oracle) / oracle < 1e-4

    def test_zero_field(self, grid16):
        assert hl.interaction(hl.zero_field(grid16), hl.coulomb()) == 0.0

    def test_attractive_sign(self, grid16, rng):
        u = random_field(grid16, rng)
        for spec in (hl.coulomb(), hl.gaussian_well(), hl.yukawa(), hl.compact_well()):
            assert hl.interaction(u, spec) < 0


class TestEnergy:
    def test_breakdown_identities(self, grid16, rng):
        u = random_field(grid16, rng)
        br = hl.energy(u, hl.coulomb())
        assert br.total == br.kinetic + br.interaction
        assert np.isclose(br.kinetic, 0.5 * hl.h1_seminorm_sq(u), rtol=1e-13)
        assert np.isclose(br.interaction, 0.25 * hl.interaction(u, hl.coulomb()), rtol=1e-13)

    def test_gaussian_coulomb_value(self):
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)
        br = hl.energy(u, hl.coulomb())
        expect = 0.5 * 1.5 * PI**1.5 - 0.25 * np.sqrt(2.0) * PI**2.5
        assert abs(br.total - expect) / abs(expect) < 1e-5

    def test_zero_field(self, grid16):
        br = hl.energy(hl.zero_field(grid16), hl.coulomb())
        assert br.kinetic == br.interaction == br.total == 0.0

    def test_translation_invariance(self, grid32, rng):
        # free-space energies see a circular shift only through the amplitude
        # wrapped across the faces, so a decayed field must be invariant
        vals = np.zeros((32,) * 3, dtype=complex)
        for c, a in (((-1.5, 0.5, 1.0), 1.0), ((1.5, -0.5, -1.0), 0.8 + 0.3j)):
            u = hl.gaussian_field(grid32, 0.8, center=c, amplitude=a)
            vals += u.values
        u = hl.make_field(grid32, vals)
        br0 = hl.energy(u, hl.gaussian_well())
        br1 = hl.energy(hl.translate(u, (1, -1, 1)), hl.gaussian_well())
        assert abs(br1.total - br0.total) < 1e-12 * (abs(br0.total) + br0.kinetic)

    def test_gauge_invariance(self, grid16, rng):
        u = random_field(grid16, rng)
        v = hl.make_field(grid16, np.exp(0.77j) * u.values)
        b0, b1 = hl.energy(u, hl.coulomb()), hl.energy(v, hl.coulomb())
        assert abs(b0.total - b1.total) < 1e-12 * (abs(b0.total) + b0.kinetic)


class TestHartreeOperator:
    def test_plane_wave_kinetic_eigenfunction(self, grid16):
        u, k2 = plane_wave(grid16, (1, 2, 0))
        hu = hl.hartree_apply(u, NEAR_ZERO_KERNEL)
        assert np.max(np.abs(hu.values - k2 * u.values)) < 1e-12 * k2

    def test_pairing_identity(self, grid16, rng):
        u = random_field(grid16, rng)
        hu = hl.hartree_apply(u, hl.coulomb())
        lhs = hl.inner(u, hu)
        rhs = hl.h1_seminorm_sq(u) + hl.interaction(u, hl.coulomb())
        assert abs(lhs.real - rhs) / abs(rhs) < 1e-10
        assert abs(lhs.imag) < 1e-10 * abs(rhs)

    def test_gauge_covariance(self, grid16, rng):
        u = random_field(grid16, rng)
        v = hl.make_field(grid16, np.exp(0.31j) * u.values)
        hu = hl.hartree_apply(u, hl.coulomb())
        hv = hl.hartree_apply(v, hl.coulomb())
        assert np.max(np.abs(hv.values - np.exp(0.31j) * hu.values)) < 1e-11 * np.max(np.abs(hu.values))

    def test_gradient_against_finite_differences(self, rng):
        # centered difference of the energy along 20 random directions:
        # |2 Re<v, H u> - (E(u+ev) - E(u-ev))/e| must decay at second order
        g = hl.make_grid(16, 12.0)
        spec = hl.gaussian_well(1.0, 1.5)
        for _ in range(20):
            u = hl.smooth_random_field(g, rng)
            v = hl.smooth_random_field(g, rng)
            hu = hl.hartree_apply(u, spec)
            deriv = 2.0 * hl.inner(v, hu).real
            errs = []
            for eps in (1e-2, 1e-3):
                up = hl.make_field(g, u.values + eps * v.values)
                dn = hl.make_field(g, u.values - eps * v.values)
                fd = (hl.energy(up, spec).total - hl.energy(dn, spec).total) / eps
                errs.append(abs(fd - deriv))
            assert errs[1] < 0.05 * errs[0] + 1e-10


class TestMultiplierAndResidual:
    def test_plane_wave(self, grid16):
        u, k2 = plane_wave(grid16, (0, 1, 1))
        assert abs(hl.multiplier(u, NEAR_ZERO_KERNEL) - k2) < 1e-12 * k2
        assert hl.residual(u, NEAR_ZERO_KERNEL) < 1e-12

    def test_gaussian_coulomb_multiplier(self):
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)
        expect = (1.5 * PI**1.5 - np.sqrt(2.0) * PI**2.5) / PI**1.5
        assert abs(hl.multiplier(u, hl.coulomb()) - expect) / abs(expect) < 1e-5

    def test_multiplier_scale_invariance_for_linear_part(self, grid16, rng):
        u = random_field(grid16, rng)
        v = hl.make_field(grid16, 3.0 * u.values)
        a = hl.multiplier(u, NEAR_ZERO_KERNEL)
        b = hl.multiplier(v, NEAR_ZERO_KERNEL)
        assert abs(a - b) < 1e-12 * abs(a)

    def test_gaussian_is_not_stationary(self):
        g = hl.make_grid(64, 16.0)
        u = hl.gaussian_field(g, 1.0)
        r = hl.residual(u, hl.coulomb())
        assert 0.1 < r < 10.0  # order-one defect, recorded as a baseline

    def test_zero_field_rejected(self, grid16):
        with pytest.raises(ValueError):
            hl.multiplier(hl.zero_field(grid16), hl.coulomb())
        with pytest.raises(ValueError):
            hl.residual(hl.zero_field(grid16), hl.coulomb())


class TestCoercivityWitness:
    def test_inverse_square_lower_bound(self, rng):
        """E(u) >= -(lam^2/2)||w1||_inf + (delta/4)|u|_H1^2 below the mass ceiling.

        Split the critical kernel at R = 1 (tail sup 1, core norm C2) and use
        the certified K lower bound; fields are drawn with masses up to 90%
        of the estimated ceiling.
        """
        spec = hl.power_law(2.0)
        c2 = hl.c2_estimate(spec)
        k_est = hl.GAUSSIAN_INVERSE_SQUARE_RATIO
        lam_star = hl.lambda_star_upper(c2, k_est)
        g = hl.make_grid(16, 12.0)
        w1_inf = 1.0  # tail sup of r^-2 outside R = 1
        for _ in range(100):
            lam = rng.uniform(0.05, 0.9) * lam_star
            u = hl.normalize_mass(hl.smooth_random_field(g, rng), lam)
            delta = 1.0 - lam / lam_star
            bound = -(lam**2 / 2.0) * w1_inf + (delta / 4.0) * hl.h1_seminorm_sq(u)
            assert hl.energy(u, spec).total >= bound - 1e-12
