import math
from dataclasses import replace

import numpy as np
import pytest
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from channelest.channel_model import (
    SEUCE, LinkGeometry, SystemConfig, cascade, draw_realization, exponential_pdp, link_budget,
    q1_sampler, sample_rayleigh_taps, sample_rician_user_irs, superimpose,
)
from channelest.exceptions import InvalidArgumentError


@pytest.mark.unit
class SystemConfigTest(SimpleTestCase):
    """Scenario dimensions and their consistency checks"""

    def test_default_lengths(self):
        """Test the default scenario has L = 4 and M+1 training slots"""
        config = SystemConfig()
        self.assertEqual(config.Lr, 4)
        self.assertEqual(config.L, 4)
        self.assertEqual(config.tau, 9)
        self.assertEqual(config.eta, 16)

    def test_seuce_models_dominant_tap_only(self):
        """Test the sequential scheme uses L1 as the cascaded length"""
        config = SystemConfig(L1=4, L2=1, scheme=SEUCE)
        self.assertEqual(config.Lr, 4)
        self.assertEqual(config.L, 4)

    def test_rejects_short_cyclic_prefix(self):
        """Test a cyclic prefix shorter than L-1 is rejected"""
        with self.assertRaises(InvalidArgumentError):
            SystemConfig(Lcp=2)

    def test_rejects_sub_surface_mismatch(self):
        """Test M0 must be a multiple of M"""
        with self.assertRaises(InvalidArgumentError):
            SystemConfig(M0=100)

    def test_rejects_long_user_irs_link(self):
        """Test a multipath user-IRS link must be shorter than both other links"""
        with self.assertRaises(InvalidArgumentError):
            SystemConfig(L1=3, L2=3, Ld=4, Lcp=6)

    def test_rejects_seuce_cascade_overflow(self):
        """Test the sequential scheme needs Ld >= L1 + L2 - 1"""
        with self.assertRaises(InvalidArgumentError):
            SystemConfig(L1=3, L2=2, Ld=3, scheme=SEUCE)

    def test_rejects_unknown_scheme(self):
        """Test an unknown scheme name is rejected"""
        with self.assertRaises(InvalidArgumentError):
            SystemConfig(scheme='joint')


@pytest.mark.unit
class MultipathSamplingTest(SimpleTestCase):
    """Power delay profiles, Rayleigh taps and the Rician user-IRS link"""

    def test_exponential_pdp_examples(self):
        """Test normalized exponential profiles for one, two and four taps"""
        assert_allclose(exponential_pdp(1, 2), [1.0])
        assert_allclose(exponential_pdp(2, 2), [2 / 3, 1 / 3])
        assert_allclose(exponential_pdp(4, 2), [8 / 15, 4 / 15, 2 / 15, 1 / 15])

    def test_exponential_pdp_needs_taps(self):
        """Test a profile with no taps is rejected"""
        with self.assertRaises(InvalidArgumentError):
            exponential_pdp(0, 2)

    def test_rayleigh_unit_power(self):
        """Test a single-tap Rayleigh channel has unit average power"""
        taps = sample_rayleigh_taps(1, [1.0], np.random.default_rng(7), size=400_000)
        self.assertEqual(taps.shape, (400_000, 1))
        power = np.mean(np.abs(taps) ** 2)
        self.assertTrue(0.99 <= power <= 1.01)

    def test_rayleigh_follows_profile(self):
        """Test per-tap variances follow the power delay profile"""
        taps = sample_rayleigh_taps(2, [2 / 3, 1 / 3], np.random.default_rng(11), size=100_000)
        variances = np.mean(np.abs(taps) ** 2, axis=0)
        assert_allclose(variances, [2 / 3, 1 / 3], rtol=0.02)

    def test_rayleigh_reproducible(self):
        """Test identical seeds give identical taps"""
        first = sample_rayleigh_taps(3, exponential_pdp(3, 2), np.random.default_rng(5), size=10)
        second = sample_rayleigh_taps(3, exponential_pdp(3, 2), np.random.default_rng(5), size=10)
        assert_array_equal(first, second)

    def test_rayleigh_rejects_unnormalized_profile(self):
        """Test a profile that does not sum to one is rejected"""
        with self.assertRaises(InvalidArgumentError):
            sample_rayleigh_taps(2, [1.0, 1.0], np.random.default_rng(0))

    def test_rician_single_tap_is_pure_los(self):
        """Test L2 = 1 gives unit-modulus entries"""
        U = sample_rician_user_irs(1, 32, 10 ** 0.45, np.random.default_rng(3))
        self.assertEqual(U.shape, (1, 32))
        assert_allclose(np.abs(U), 1.0)

    def test_rician_strong_los_suppresses_nlos(self):
        """Test a huge Rician factor leaves almost no NLoS power"""
        U = sample_rician_user_irs(2, 64, 1e6, np.random.default_rng(3))
        ratio = np.sum(np.abs(U[1]) ** 2) / np.sum(np.abs(U) ** 2)
        self.assertLess(ratio, 1e-5)

    def test_rician_los_fraction(self):
        """Test the LoS share of the column power is kappa / (kappa + 1)"""
        kappa = 10 ** 0.45
        U = sample_rician_user_irs(2, 100_000, kappa, np.random.default_rng(9))
        fraction = np.sum(np.abs(U[0]) ** 2) / np.sum(np.abs(U) ** 2)
        self.assertAlmostEqual(fraction / (kappa / (kappa + 1)), 1.0, delta=0.02)


@pytest.mark.unit
class CascadeTest(SimpleTestCase):
    """Cascaded channel taps and the per-slot superposition"""

    def test_single_tap_user_link(self):
        """Test a unit user-IRS tap copies the IRS-AP taps"""
        assert_allclose(cascade([1.0], [0.5, -0.25j], 2), [0.5, -0.25j])

    def test_convolution_with_padding(self):
        """Test two-tap links convolve and zero pad to L"""
        assert_allclose(cascade([1, 1], [1, 1], 4), [1, 2, 1, 0])

    def test_zero_user_link(self):
        """Test a zero user-IRS link gives a zero cascade"""
        assert_allclose(cascade([0, 0], [1, 2, 3], 4), np.zeros(4))

    def test_rejects_short_target(self):
        """Test the target length must hold the whole convolution"""
        with self.assertRaises(InvalidArgumentError):
            cascade([1, 1], [1, 1], 2)

    def test_superimpose_zero_phases_returns_direct(self):
        """Test zero reflection coefficients leave only the direct channel"""
        d = np.array([1 + 1j, 0.5])
        Q = np.ones((2, 3))
        assert_allclose(superimpose(Q, np.zeros(3), d), d)

    def test_superimpose_hand_value(self):
        """Test a two sub-surface superposition against a hand computation"""
        Q = np.array([[1, 2], [3, 4]])
        result = superimpose(Q, np.array([1j, -1]), np.array([1, 1]))
        assert_allclose(result, [-1 + 1j, -3 + 3j])

    def test_superimpose_is_linear_in_theta(self):
        """Test the reflected part is linear in the phase vector"""
        rng = np.random.default_rng(1)
        Q = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        a, b = np.exp(1j * rng.uniform(0, 2 * np.pi, (2, 3)))
        zero = np.zeros(4)
        assert_allclose(superimpose(Q, a + b, zero), superimpose(Q, a, zero) + superimpose(Q, b, zero))

    def test_superimpose_shape_mismatch(self):
        """Test mismatched shapes are rejected"""
        with self.assertRaises(InvalidArgumentError):
            superimpose(np.ones((4, 3)), np.ones(2), np.ones(4))


@pytest.mark.unit
class LinkBudgetTest(SimpleTestCase):
    """Average received SNR and the path-loss geometry"""

    def setUp(self):
        self.unit = SystemConfig(N=1, M=1, M0=1, Ld=1, L1=1, L2=1, Lcp=0, K=1)

    def test_unit_plug_in(self):
        """Test all-unit inputs give an SNR of two"""
        self.assertAlmostEqual(link_budget(self.unit, 1, 1, 1, 1, 1, 1, 1), 2.0)

    def test_doubling_power_doubles_snr(self):
        """Test the SNR is linear in the transmit power"""
        config = SystemConfig(sigma2=1e-11)
        args = (1.5, 50.0, 50.02, 2.2, 2.4, 3.5, 1e-3)
        self.assertAlmostEqual(link_budget(replace(config, P=2.0), *args) / link_budget(config, *args), 2.0)

    def test_no_irs_leaves_direct_link(self):
        """Test M0 = 0 keeps only the direct path"""
        config = SystemConfig(M0=0, sigma2=1.0)
        self.assertAlmostEqual(link_budget(config, 1, 1, 2, 1, 1, 1, 0.5), 0.5 * 2 ** -1 / 16)

    def test_rejects_zero_distance(self):
        """Test a zero link distance is rejected"""
        with self.assertRaises(InvalidArgumentError):
            link_budget(self.unit, 0, 1, 1, 1, 1, 1, 1)

    def test_user_distance_geometry(self):
        """Test the user-AP distance follows the semicircle geometry"""
        self.assertAlmostEqual(LinkGeometry().D3, math.hypot(50.0, 1.5))
        self.assertAlmostEqual(LinkGeometry(user_angle_deg=0).D3, 48.5)

    def test_irs_ap_gain_includes_elements_per_sub_surface(self):
        """Test the IRS-AP power gain carries the M0/M element factor"""
        gains = LinkGeometry().gains(SystemConfig())
        self.assertAlmostEqual(gains.irs_ap / (1e-3 * 50.0 ** -2.4), 16.0)

    def test_power_for_snr_hits_target(self):
        """Test the transmit power solved for an SNR reproduces it"""
        geometry = LinkGeometry()
        config = SystemConfig(sigma2=1e-11)
        P = geometry.power_for_snr(config, 10.0)
        self.assertAlmostEqual(geometry.snr(replace(config, P=P)), 10.0, places=9)


@pytest.mark.unit
class RealizationTest(SimpleTestCase):
    """Full channel draws of every user"""

    def test_cascade_matches_links(self):
        """Test every cascaded column is the convolution of its two links"""
        config = SystemConfig()
        realization = draw_realization(config, np.random.default_rng(21))
        span = config.L1 + config.L2 - 1
        for k in range(config.K):
            for m in range(config.M):
                expected = np.convolve(realization.U[k, :, m], realization.G[:, m])
                assert_allclose(realization.Q[k, :span, m], expected)

    def test_direct_channel_zero_padded(self):
        """Test direct taps beyond Ld are zero when L > Ld"""
        config = SystemConfig(Ld=3, L1=4, L2=2, Lcp=6)
        realization = draw_realization(config, np.random.default_rng(4))
        self.assertEqual(realization.d.shape, (config.K, 5))
        assert_array_equal(realization.d[:, 3:], 0)

    def test_cascaded_channel_zero_padded(self):
        """Test cascaded taps beyond L1 + L2 - 1 are zero when Ld is longer"""
        config = SystemConfig(Ld=6, L1=3, L2=2, Lcp=6)
        realization = draw_realization(config, np.random.default_rng(4))
        assert_array_equal(realization.Q[:, 4:, :], 0)

    def test_reproducible(self):
        """Test identical seeds give identical realizations"""
        config = SystemConfig()
        first = draw_realization(config, np.random.default_rng(8))
        second = draw_realization(config, np.random.default_rng(8))
        assert_array_equal(first.Q, second.Q)
        assert_array_equal(first.d, second.d)

    def test_q_tilde_and_normalized_gains(self):
        """Test the stacked channel layout and the reference-normalized gains"""
        config = SystemConfig(L1=4, L2=1, scheme=SEUCE, K=3)
        realization = draw_realization(config, np.random.default_rng(2))
        self.assertEqual(realization.q_tilde(1).shape, (4, 9))
        assert_allclose(realization.normalized_gains(0), np.ones(8))
        a = realization.normalized_gains(2)
        assert_allclose(realization.Q[0] * a[None, :], realization.Q[2])

    def test_q1_sampler_shape(self):
        """Test reference cascaded draws carry L1 nonzero rows"""
        config = SystemConfig(L1=3, L2=1, Ld=4, scheme=SEUCE)
        Q1 = q1_sampler(config)(np.random.default_rng(0))
        self.assertEqual(Q1.shape, (4, 8))
        assert_array_equal(Q1[3], 0)
        self.assertTrue(np.all(np.abs(Q1[0]) > 0))
