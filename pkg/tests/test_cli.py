import os
import json
import shutil
import tempfile
import unittest
from ddt import ddt, data, unpack

from wdmqkd import cli
from wdmqkd import logger
from wdmqkd.config import load_config, config_hash


class Boom(cli.Budget):
    name = 'boom'

    def run(self):
        with open(self.output('partial.csv'), 'w') as f:
            f.write('item\n')
        raise RuntimeError('detector exploded')


class FakeCommand(object):
    name = 'fake'
    reason = None
    outputs = ['b.csv', 'a.csv']

    def __init__(self, status):
        self.status = status

    def get_status(self):
        return self.status

    def run_time(self):
        return 0.25

    def get_log_payload(self):
        return dict(config='301km')


@ddt
class Test(unittest.TestCase):
    def setUp(self):
        self.out = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.out)

    def run_cli(self, *args):
        return cli.main(['wdmqkd'] + list(args) + ['--out=%s' % self.out, '--logging=none'])

    def read_report(self, folder=None):
        with open(os.path.join(folder or self.out, 'report.json')) as f:
            return json.load(f)

    def test_budget(self):
        self.assertEqual(self.run_cli('budget', '--config=301km'), 0)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'budget.csv')))
        report = self.read_report()
        self.assertEqual(report['command'], 'budget')
        self.assertEqual(report['config_hash'], config_hash(load_config('301km')))
        self.assertEqual(report['provenance']['seed'], 301)
        self.assertAlmostEqual(report['summary']['total_db'], 84.0)
        with open(os.path.join(self.out, 'budget.csv')) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], 'item,loss_db')
        self.assertEqual(lines[-1], 'Total,84')

    def test_keyrate_is_reproducible(self):
        self.assertEqual(self.run_cli('keyrate', '--config=301km'), 0)
        with open(os.path.join(self.out, 'report.json'), 'rb') as f:
            first = f.read()
        other = tempfile.mkdtemp()
        try:
            self.assertEqual(cli.main(['wdmqkd', 'keyrate', '--config=301km', '--out=%s' % other,
                                       '--logging=none']), 0)
            with open(os.path.join(other, 'report.json'), 'rb') as f:
                self.assertEqual(f.read(), first)
        finally:
            shutil.rmtree(other)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'keyrate.csv')))
        with open(os.path.join(self.out, 'keyrate.json')) as f:
            keyrate = json.load(f)
        self.assertEqual(sorted(keyrate['aggregate']), ['qber', 'raw', 'secure', 'sifted', 'skr_bits_per_s'])
        self.assertEqual(len(keyrate['per_channel']), 9)
        self.assertEqual(self.read_report()['summary']['aggregate'], keyrate['aggregate'])

    def test_seed_override_changes_hash(self):
        self.assertEqual(self.run_cli('budget', '--config=301km', '--seed=5'), 0)
        report = self.read_report()
        self.assertEqual(report['provenance']['seed'], 5)
        self.assertNotEqual(report['config_hash'], config_hash(load_config('301km')))

    def test_options_follow_command(self):
        parser = cli.option_parser()
        self.assertEqual(parser.parse_command_line(['wdmqkd', '--config=301km', '--out=x']), [])
        self.assertEqual(parser.config, '301km')
        self.assertEqual(self.run_cli('budget', '--config=301km'), 0)

    @data(('budget', dict(seed='abc'), 'must be an unsigned integer'),
          ('budget', dict(mode='fast'), 'must be one of finite, asymptotic'),
          ('budget', dict(channels='C60'), 'channels: C60 not in the configured plan'),
          ('keyrate', dict(channels='X1'), None))
    @unpack
    def test_validation_errors(self, name, option, reason):
        options = dict(config='301km', out=self.out)
        options.update(option)
        command = cli.COMMANDS[name](options)
        self.assertEqual(command.execute(), 1)
        if reason:
            self.assertIn(reason, command.reason)
        self.assertIsNone(command.scenario)
        self.assertEqual(os.listdir(self.out), [])

        flag = '--%s=%s' % list(option.items())[0]
        self.assertEqual(self.run_cli(name, '--config=301km', flag), 1)
        self.assertEqual(os.listdir(self.out), [])

    def test_missing_config(self):
        command = cli.Budget(dict(out=self.out))
        self.assertEqual(command.execute(), 1)
        self.assertIn('config', command.reason)
        self.assertEqual(cli.main(['wdmqkd', 'budget', '--out=%s' % self.out, '--logging=none']), 1)

    @data(['budget', '--config=301km', 'extra'], ['budget', '--colour=blue'], ['--config=301km'])
    def test_bad_command_line(self, args):
        self.assertEqual(self.run_cli(*args), 1)

    def test_bad_config_file(self):
        path = os.path.join(self.out, 'broken.cfg')
        with open(path, 'w') as f:
            f.write('{"source": {}, "link": {"arm_a": {"segments": [{"length": -5}]}, "arm_b": {}},'
                    ' "detection": {}, "analysis": {}}')
        command = cli.Budget(dict(config=path, out=self.out))
        self.assertEqual(command.execute(), 1)
        self.assertIn('link.arm_a.segments[0].length: must be >= 0', command.reason)
        self.assertEqual(command._log_error['errors'], ['link.arm_a.segments[0].length: must be >= 0'])

    @data([], ['launch'])
    def test_unknown_command(self, args):
        self.assertEqual(self.run_cli(*args), 1)

    def test_runtime_error_cleans_up(self):
        command = Boom(dict(config='301km', out=self.out))
        self.assertEqual(command.execute(), 2)
        self.assertEqual(command.reason, 'RuntimeError: detector exploded')
        self.assertFalse(os.path.exists(os.path.join(self.out, 'partial.csv')))
        self.assertEqual(command.outputs, [])

    def test_bell(self):
        self.assertEqual(self.run_cli('bell', '--config=301km'), 0)
        summary = self.read_report()['summary']
        self.assertAlmostEqual(summary['visibility'], 1 - 2 * 0.02197)
        self.assertAlmostEqual(summary['s_value'], 2.704, delta=0.03)

    def test_channels_subset(self):
        self.assertEqual(self.run_cli('channels', '--config=301km', '--channels=C42,C50'), 0)
        self.assertEqual(self.read_report()['summary']['pairs'], ['C42L00', 'C50L92'])

    def test_dispersion(self):
        self.assertEqual(self.run_cli('dispersion', '--config=301km'), 0)
        plan = self.read_report()['summary']['plan']
        self.assertEqual(plan['counts'], dict(DCM=3, DCF=1))
        self.assertTrue(plan['feasible'])

    def test_simulate_writes_timetags(self):
        self.assertEqual(self.run_cli('simulate', '--config=404km', '--channels=C50'), 0)
        files = os.listdir(self.out)
        self.assertIn('timetags_C50L92_a.bin', files)
        self.assertIn('timetags_C50L92_b.bin', files)
        self.assertIn('simulate.csv', files)

    @data((0, 'INFO'), (1, 'WARNING'), (2, 'ERROR'))
    @unpack
    def test_handler_levels(self, status, level):
        with self.assertLogs('wdmqkd', level='INFO') as logs:
            payload = logger.handler(FakeCommand(status))
        self.assertEqual(logs.records[0].levelname, level)
        self.assertEqual(payload['outputs'], ['a.csv', 'b.csv'])
        self.assertEqual(payload['ms'], '250')
        self.assertEqual(payload['config'], '301km')
        self.assertEqual(json.loads(logs.records[0].getMessage())['command'], 'fake')
