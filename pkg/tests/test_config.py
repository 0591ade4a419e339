import os
import copy
import json
import shutil
import tempfile
import unittest
from ddt import ddt, data, unpack

from wdmqkd.cli import Budget
from wdmqkd.errors import ConfigError
from wdmqkd.config import *

PRESET_NAMES = ('201km', '301km', '404km')


@ddt
class Test(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.configs = dict((name, load_config(name)) for name in PRESET_NAMES)

    @data(*PRESET_NAMES)
    def test_presets_round_trip(self, name):
        config = self.configs[name]
        self.assertEqual(parse_config(emit_config(config)), config)
        self.assertEqual(config_hash(parse_config(emit_config(config))), config_hash(config))

    def test_preset_path(self):
        self.assertEqual(load_config(os.path.join(PRESETS, '301km.cfg')), self.configs['301km'])

    def test_defaults_are_filled(self):
        config = self.configs['301km']
        self.assertEqual(config['link']['threshold'], 100.0)
        self.assertEqual(config['link']['arm_b']['devices'], [])
        self.assertEqual(config['link']['arm_a']['segments'][0]['D0'], 17.0)
        self.assertEqual(config['analysis']['sweep']['rates'], None)

    def test_empty_document(self):
        with self.assertRaises(ConfigError) as e:
            parse_config('')
        self.assertEqual(sorted(loc for loc, _ in e.exception.errors),
                         ['analysis', 'detection', 'link', 'source'])
        self.assertTrue(all(msg == 'is required' for _, msg in e.exception.errors))

    def test_negative_length(self):
        document = copy.deepcopy(self.configs['301km'])
        document['link']['arm_a']['segments'][0]['length'] = -5.0
        with self.assertRaises(ConfigError) as e:
            validate_config(document)
        self.assertEqual(e.exception.errors, [('link.arm_a.segments[0].length', 'must be >= 0')])
        self.assertEqual(len(e.exception), 1)

    def test_all_errors_reported(self):
        document = copy.deepcopy(self.configs['301km'])
        document['link']['arm_b']['colour'] = 'blue'
        document['detection']['e_pol'] = 2.0
        document['analysis']['seed'] = -1
        with self.assertRaises(ConfigError) as e:
            validate_config(document)
        locations = sorted(loc for loc, _ in e.exception.errors)
        self.assertEqual(locations, ['analysis.seed', 'detection.e_pol', 'link.arm_b.colour'])
        self.assertIn('link.arm_b.colour: unknown key', str(e.exception))

    @data('{', '[]', '"text"', '{"source": 5}', '{"source": {"pump_wavelength": true}}',
          '{"source": {}, "link": {"arm_a": {"segments": [1]}, "arm_b": {}}, "detection": {}, "analysis": {}}',
          '{"source": {"pump_power": NaN}}', '{"source": {"pump_power": 1e400}}',
          '{"channels": {"select": ["C42", "C42"]}}', '{"channels": {"select": [42]}}',
          '{"analysis": {"seed": 1.5}}', '{"analysis": {"s": "nine"}}',
          '{"detection": {"jitter": [30, 45]}}', '{"link": {"arm_a": {"devices": [{"kind": "FBG"}]}}}')
    def test_validation_is_total(self, text):
        with self.assertRaises(ConfigError) as e:
            parse_config(text)
        self.assertGreater(len(e.exception), 0)

    def test_target_must_be_selected(self):
        document = copy.deepcopy(self.configs['301km'])
        document['link']['target'] = 'C60'
        with self.assertRaises(ConfigError) as e:
            validate_config(document)
        self.assertEqual(e.exception.errors[0][0], 'link.target')

    def test_comments(self):
        config = copy.deepcopy(self.configs['301km'])
        text = '// leading comment\n' + emit_config(config).replace('{', '{ /* block */', 1)
        self.assertEqual(parse_config(text), config)

    def test_hash(self):
        config = self.configs['301km']
        self.assertEqual(len(config_hash(config)), 64)
        self.assertNotEqual(config_hash(config), config_hash(override(config, seed=5)))
        self.assertEqual(config_hash(config), config_hash(copy.deepcopy(config)))

    def test_override(self):
        config = self.configs['301km']
        changed = override(config, seed=5, mode='asymptotic', channels=['C42', 'C50'])
        self.assertEqual(changed['analysis']['seed'], 5)
        self.assertEqual(changed['analysis']['mode'], 'asymptotic')
        self.assertEqual(changed['channels']['select'], ['C42', 'C50'])
        self.assertEqual(config['analysis']['seed'], 301)
        with self.assertRaises(ConfigError):
            override(config, channels=['C60'])

    def test_build_scenario(self):
        scenario = build_scenario(self.configs['301km'])
        self.assertEqual(len(scenario.plan.pairs), 9)
        self.assertEqual(scenario.plan.pairs[0].label, 'C42L00')
        self.assertEqual(scenario.plan.pairs[-1].label, 'C58L84')
        self.assertEqual(scenario.arm_a.length, 200.0)
        self.assertEqual(scenario.arm_b.length, 100.0)
        self.assertEqual([d.kind for d in scenario.arm_a.devices], ['DCM', 'DCM', 'DCM', 'DCF'])
        self.assertEqual(scenario.hash, config_hash(self.configs['301km']))
        self.assertEqual(scenario.measured['raw'], 65764)

    def test_build_scenario_auto_channels(self):
        config = copy.deepcopy(self.configs['301km'])
        config['channels']['select'] = None
        scenario = build_scenario(config)
        self.assertAlmostEqual(len(scenario.plan.pairs), 18, delta=2)
        self.assertAlmostEqual(scenario.source.waveguide.grating_length, 76.7, delta=0.5)

    def test_missing_table(self):
        config = copy.deepcopy(self.configs['301km'])
        config['link']['catalog']['table'] = 'nowhere.json'
        with self.assertRaises(ConfigError):
            build_scenario(config)

    def test_table_next_to_config(self):
        folder = tempfile.mkdtemp()
        try:
            shutil.copy(os.path.join(PRESETS, 'dispersion_301km.json'), os.path.join(folder, 'table.json'))
            config = copy.deepcopy(self.configs['301km'])
            config['link']['catalog']['table'] = 'table.json'
            self.assertEqual(sorted(load_table('table.json', folder)['DCM'])[:1], [-6369.1])
            self.assertEqual(len(build_scenario(config, folder).plan.pairs), 9)
        finally:
            shutil.rmtree(folder)

    @data(('tuning_slope', 1e6), ('lobe_fwhm', 1e4))
    @unpack
    def test_unbuildable_waveguide(self, key, value):
        config = copy.deepcopy(self.configs['301km'])
        config['source']['waveguide'][key] = value
        self.assertEqual(validate_config(config), config)
        with self.assertRaises(ConfigError) as e:
            build_scenario(config)
        self.assertEqual([loc for loc, _ in e.exception.errors], ['source.waveguide'])

    def test_pump_outside_index_model(self):
        config = copy.deepcopy(self.configs['301km'])
        config['source']['pump_wavelength'] = 300.0
        with self.assertRaises(ConfigError) as e:
            build_scenario(config)
        self.assertEqual(e.exception.errors[0][0], 'source.waveguide')
        self.assertIn('index model band', e.exception.errors[0][1])

    @data(('DCM', 'missing'), ('devices', 'missing'), (None, 'Expecting'))
    @unpack
    def test_malformed_table(self, drop, message):
        folder = tempfile.mkdtemp()
        try:
            with open(os.path.join(PRESETS, 'dispersion_301km.json')) as f:
                table = json.load(f)
            with open(os.path.join(folder, 'table.json'), 'w') as f:
                if drop:
                    del table[drop]
                    json.dump(table, f)
                else:
                    f.write('{"channels": [')
            config = copy.deepcopy(self.configs['301km'])
            config['link']['catalog']['table'] = 'table.json'
            with self.assertRaises(ConfigError) as e:
                build_scenario(config, folder)
            self.assertEqual(e.exception.errors[0][0], 'link.catalog.table')
            self.assertIn(message, e.exception.errors[0][1])

            path = os.path.join(folder, 'link.cfg')
            with open(path, 'w') as f:
                f.write(emit_config(config))
            command = Budget(dict(config=path, out=folder))
            self.assertEqual(command.execute(), 1)
            self.assertIn('link.catalog.table', command.reason)
        finally:
            shutil.rmtree(folder)
