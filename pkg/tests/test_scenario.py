import copy
import unittest
from ddt import ddt, data, unpack

from wdmqkd.config import load_config, build_scenario
from wdmqkd.scenario import key_report

AGGREGATE = set(['raw', 'sifted', 'secure', 'skr_bits_per_s', 'qber'])
ROW = set(['label', 'raw', 'sifted', 'qber', 'secure', 'skr_bits_per_s', 'rates'])


@ddt
class Test(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.configs = dict((name, load_config(name)) for name in ('201km', '301km', '404km'))

    def scenario(self, name, **analysis):
        config = copy.deepcopy(self.configs[name])
        config['analysis'].update(analysis)
        return build_scenario(config)

    @data(('201km', 'finite'), ('301km', 'asymptotic'), ('404km', 'finite'))
    @unpack
    def test_report_layout(self, name, mode):
        report = key_report(self.scenario(name), mode)
        self.assertEqual(set(report['aggregate']), AGGREGATE)
        self.assertEqual(len(report['per_channel']), 9)
        for row in report['per_channel']:
            self.assertEqual(set(row), ROW)
            self.assertAlmostEqual(row['sifted'], row['raw'] / 2.0)
        self.assertEqual(report['mode'], mode)
        self.assertEqual(report['origin'], 'measured')

    @data(('201km', 676519, 0.0512, 264259), ('301km', 32882, 0.064, 9172))
    @unpack
    def test_default_finite_report(self, name, sifted, qber, secure):
        report = key_report(self.scenario(name))
        aggregate = report['aggregate']
        self.assertEqual(report['block_policy'], 'pooled')
        self.assertEqual(report['ordering'], 'printed')
        self.assertEqual(aggregate['sifted'], sifted)
        self.assertEqual(aggregate['qber'], qber)
        self.assertAlmostEqual(aggregate['secure'] / float(secure), 1.0, delta=0.01)
        self.assertAlmostEqual(aggregate['skr_bits_per_s'], aggregate['secure'] / report['acquisition_time_s'])
        self.assertEqual(report['blocks'], [dict(m=sifted, secure=aggregate['secure'])])

    def test_asymptotic_aggregate(self):
        report = key_report(self.scenario('201km'), 'asymptotic')
        self.assertEqual(report['aggregate']['secure'], report['asymptotic_secure'])
        self.assertEqual(report['aggregate']['skr_bits_per_s'], report['asymptotic_skr'])
        self.assertNotIn('blocks', report)

    def test_per_channel_swapped_blocks(self):
        report = key_report(self.scenario('201km', block_policy='per_channel', ordering='swapped'))
        self.assertEqual(report['block_policy'], 'per_channel')
        self.assertEqual(len(report['blocks']), 9)
        self.assertAlmostEqual(report['aggregate']['secure'] / 130845.0, 1.0, delta=0.15)

    def test_channel_rows_follow_analysis(self):
        report = key_report(self.scenario('301km'), 'asymptotic')
        rows = report['per_channel']
        self.assertEqual(rows[0]['label'], 'C42L00')
        for row in rows:
            self.assertGreater(row['qber'], 0.0)
            self.assertLess(row['qber'], 0.5)
            self.assertGreaterEqual(row['secure'], 0.0)
        breakdown = report['qber_breakdown']
        self.assertAlmostEqual(breakdown['total_pp'],
                               breakdown['e_pol_pp'] + breakdown['e_acc_pp'] + breakdown['e_dark_pp'])
