import math
import unittest
from ddt import ddt, data, unpack

from wdmqkd.errors import DomainError, FitError
from wdmqkd.link import *
from wdmqkd.source import channel_plan
from wdmqkd.config import load_config, build_scenario, load_table

RESIDUAL = (-90.7, -65.2, -39.7, -14.1, 11.5, 37.0, 62.6, 88.2, 113.6)
TIMING = (109, 89, 72, 62, 61, 70, 87, 107, 128)


def scenario(name):
    return build_scenario(load_config(name))


@ddt
class Test(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.scenarios = dict((name, scenario(name)) for name in ('201km', '301km', '404km'))

    def test_segment_loss(self):
        self.assertEqual(segment_loss(FiberSegment(50, 0.165, connector_loss=0.25)), 8.5)
        with self.assertRaises(DomainError):
            FiberSegment(-1)
        with self.assertRaises(DomainError):
            FiberSegment(10, 0)

    @data(('201km', 62.0), ('301km', 84.0), ('404km', 110.0))
    @unpack
    def test_loss_budget(self, name, total):
        s = self.scenarios[name]
        budget = link_loss_budget(s.arm_a, s.arm_b)
        self.assertEqual(budget.total, total)
        self.assertEqual([label for label, _ in budget.items],
                         ['Source', 'ULLF with FOAs', 'SNSPD', 'PAM', 'WDM', 'DCM', 'DCF'])
        self.assertEqual(arm_loss(s.arm_a) + arm_loss(s.arm_b), total)

    def test_loss_budget_301km_items(self):
        s = self.scenarios['301km']
        items = dict(link_loss_budget(s.arm_a, s.arm_b).items)
        self.assertEqual(items['Source'], 17.0)
        self.assertEqual(items['DCM'], 10.0)
        self.assertEqual(items['DCF'], 1.0)

    def test_zero_link(self):
        budget = link_loss_budget(ArmPlan(), ArmPlan())
        self.assertEqual(budget.total, 0)
        self.assertEqual(arm_transmittance(ArmPlan()), 1.0)

    def test_endpoint_losses(self):
        with self.assertRaises(DomainError):
            ArmPlan(endpoint_losses={'splice': 1.0})
        with self.assertRaises(DomainError):
            ArmPlan(endpoint_losses={'wdm': -1.0})

    def test_accumulated_dispersion(self):
        arm = ArmPlan([FiberSegment(100)])
        self.assertAlmostEqual(accumulated_dispersion(1550.0, arm), 1700.0)
        self.assertAlmostEqual(accumulated_dispersion(1560.0, arm), 1700.0 + 100 * 0.06 * 10)
        device = CompensationDevice('DCM', -1700.0, -6.0)
        self.assertAlmostEqual(accumulated_dispersion(1550.0, arm._replace(devices=(device, ))), 0.0)
        with self.assertRaises(DomainError):
            accumulated_dispersion(0, arm)

    def test_device(self):
        with self.assertRaises(DomainError):
            CompensationDevice('DCM', 10.0, 0.0)
        with self.assertRaises(DomainError):
            CompensationDevice('FBG', -10.0, 0.0)
        half = CompensationDevice('DCF', -170.0, -0.6, 1.5).scaled(0.5)
        self.assertEqual((half.D0, half.S0, half.insertion_loss), (-85.0, -0.3, 1.5))

    def test_group_delay(self):
        arm = ArmPlan([FiberSegment(100)])
        propagation = 100 * 1e15 * GROUP_INDEX / constants.c
        self.assertAlmostEqual(group_delay(1550.0, arm), propagation, places=3)
        # the derivative of the delay is the dispersion
        slope = (group_delay(1550.5, arm) - group_delay(1549.5, arm))
        self.assertAlmostEqual(slope, accumulated_dispersion(1550.0, arm), places=6)

    def test_device_fits(self):
        fits = self.scenarios['301km'].fits
        self.assertAlmostEqual(fits['DCM'].D0, -1736.0, delta=1.0)
        self.assertAlmostEqual(fits['DCM'].S0, -5.993, delta=0.01)
        self.assertIsNone(fits['DCM'].outlier)
        self.assertAlmostEqual(fits['DCF'].D0, -173.36, delta=0.5)
        self.assertAlmostEqual(fits['DCF'].S0, -0.639, delta=0.01)
        self.assertEqual(fits['DCF'].outlier, 0)

    def test_fit_degenerate(self):
        with self.assertRaises(FitError):
            fit_device_coefficients('DCM', [-10.0], [1550.0])
        with self.assertRaises(FitError):
            fit_device_coefficients('DCM', [-10.0, -11.0], [1550.0, 1550.0])

    def test_fit_recovers_a_line(self):
        wavelengths = [1530.0 + 2 * i for i in range(9)]
        rows = [(-1700.0 - 6.0 * (w - 1550.0)) * 1.25 for w in wavelengths]
        fit = fit_device_coefficients('DCM', rows, wavelengths)
        self.assertAlmostEqual(fit.D0, -1700.0, places=6)
        self.assertAlmostEqual(fit.S0, -6.0, places=6)
        self.assertIsNone(fit.outlier)

    def test_dispersion_table_301km(self):
        s = self.scenarios['301km']
        rows = dict(dispersion_table(s.plan.pairs, s.arm_a, s.arm_b, s.plan.channel_fwhm, s.sigma0))
        for value, expected in zip(rows['Residual chromatic dispersion'], RESIDUAL):
            self.assertAlmostEqual(value, expected, delta=10)
        for value, expected in zip(rows['Timing uncertainty (analysis)'], TIMING):
            self.assertAlmostEqual(value, expected, delta=2)

    def test_residual_matches_table_sum(self):
        s = self.scenarios['301km']
        pair = s.plan.pairs[4]
        rows = dict(dispersion_table([pair], s.arm_a, s.arm_b, s.plan.channel_fwhm, s.sigma0))
        total = rows['Fiber chromatic dispersion'][0] + rows['DCF'][0] + rows['DCM'][0]
        self.assertAlmostEqual(total, residual_dispersion_per_channel(pair, s.arm_a, s.arm_b), places=6)

    def test_timing_uncertainty(self):
        self.assertEqual(timing_uncertainty(60.0).deltaT, 60.0)
        self.assertAlmostEqual(timing_uncertainty(60.0, 300.0, 0.0, -220.0).deltaT, 100.0)
        with self.assertRaises(DomainError):
            timing_uncertainty(0)

    def test_sigma_c_range(self):
        s = self.scenarios['301km']
        low, high = sigma_c_range(s.plan.pairs, s.arm_a, s.plan.channel_fwhm)
        self.assertLess(low, high)
        self.assertLess(high, 0)
        self.assertIsNone(sigma_c_range([], s.arm_a))

    @data((10.0, 0.0, 10.0), (10.0, 100.0, math.sqrt(2) * 10))
    @unpack
    def test_nonlocal_broadening(self, sigma, gvd, expected):
        self.assertAlmostEqual(nonlocal_broadening(sigma, gvd), expected)

    def test_pmd_bound(self):
        self.assertAlmostEqual(pmd_bound(301, 0.04), 0.04 * math.sqrt(301))
        self.assertEqual(pmd_bound(0), 0)
        with self.assertRaises(DomainError):
            pmd_bound(-1)

    @data(('201km', 2, 1), ('301km', 3, 1), ('404km', 4, 3))
    @unpack
    def test_plan_compensation(self, name, dcm, dcf):
        s = self.scenarios[name]
        target = channel_plan(['C50'], 780.3).pairs[0]
        plan = plan_compensation(s.arm_a, s.arm_b, s.catalog, target, s.plan.pairs, threshold=100.0)
        self.assertEqual(plan.counts, dict(DCM=dcm, DCF=dcf))
        self.assertTrue(plan.feasible)
        self.assertEqual(len(plan.profile), len(s.plan.pairs))
        self.assertEqual(plan.counts, brute_force_plan(s.arm_a, s.arm_b, s.catalog, target))

    def test_plan_compensation_infeasible(self):
        s = self.scenarios['301km']
        target = channel_plan(['C50'], 780.3).pairs[0]
        long_arm = s.arm_a._replace(segments=s.arm_a.segments * 4)
        plan = plan_compensation(long_arm, s.arm_b, s.catalog, target, max_devices=2)
        self.assertFalse(plan.feasible)
        with self.assertRaises(DomainError):
            plan_compensation(s.arm_a, s.arm_b, {}, target)

    def test_catalog(self):
        catalog, fits = device_catalog(load_table('dispersion_301km.json'))
        self.assertEqual(catalog['DCM'].insertion_loss, 3.5)
        self.assertEqual(catalog['DCF'].insertion_loss, 1.5)
        self.assertEqual(sorted(fits), ['DCF', 'DCM'])
