"""Scenario configuration: schema, total validation, normalization and assembly.

Documents are JSON with // and /* */ comments. Keys prefixed with + in the
schema are required; every other key is filled with its default, so a parsed
config is already normalized and ``parse_config(emit_config(c)) == c``.
"""
import os
import copy
import logging
from collections import namedtuple
from contextlib import contextmanager

import valideer
from valideer import ValidationError

from . import validators  # registers the named validators
from .errors import ConfigError
from .helpers import json_load, json_encode, canonical_hash
from .source import (SourceSpec, PhaseMatchParams, calibrate_thermal_scale, calibrate_lobe_width,
                     spdc_spectrum, channelize, channel_plan)
from .link import FiberSegment, ArmPlan, device_catalog
from .detection import DetectorSpec, JitterChain
from .scenario import Scenario


_log = logging.getLogger('wdmqkd')

PRESETS = os.path.join(os.path.dirname(__file__), 'presets')

Optional = namedtuple('Optional', ['schema'])
Free = namedtuple('Free', ['validator'])

SEGMENT = {'+length': 'nonnegative',
           'count': ('count', 1),
           'attenuation': ('positive', 0.165),
           'connector_loss': ('nonnegative', 0.0),
           'D0': ('real', 17.0),
           'S0': ('real', 0.06),
           'lambda0': ('wavelength', 1550.0)}

DEVICE = {'+kind': 'kind',
          'scale': ('positive', 1.0),
          'insertion_loss': ('nonnegative', None)}

ARM = {'segments': [SEGMENT],
       'devices': [DEVICE],
       'endpoint': {'source_share': ('nonnegative', 0.0),
                    'snspd': ('nonnegative', 0.0),
                    'pam': ('nonnegative', 0.0),
                    'wdm': ('nonnegative', 0.0)}}

DETECTOR = {'efficiency': ('efficiency', 1.0),
            'dark_rate': ('nonnegative', 30.0)}

SCHEMA = {
    '+source': {
        'pump_wavelength': ('wavelength', 780.3),
        'pump_power': ('nonnegative', 0.55),
        'brightness': ('positive', 2.4e10),
        'spectral_brightness': ('positive', 8.0e8),
        'coincidence_efficiency': ('efficiency', 0.105),
        'waveguide': {'grating_length': ('positive', 48.0),
                      'poling_period': ('positive', 16.4),
                      'temperature': ('real', 41.6),
                      'degenerate_temperature': ('real', 40.0),
                      'tuning_slope': ('positive', 10.0),
                      'lobe_fwhm': ('positive', 10.0)}},
    'channels': {
        'grid_spacing': ('positive', 200.0),
        'channel_fwhm': ('positive', 1.25),
        'threshold': ('fraction', 0.1),
        'select': ('channels', None)},
    '+link': {
        '+arm_a': ARM,
        '+arm_b': ARM,
        'catalog': {'table': ('path', 'dispersion_301km.json'),
                    'dcm_loss': ('nonnegative', 3.5),
                    'dcf_loss': ('nonnegative', 1.5)},
        'target': ('channel', 'C50'),
        'threshold': ('positive', 100.0),
        'pmd_coeff': ('nonnegative', 0.04)},
    '+detection': {
        'arm_a': DETECTOR,
        'arm_b': DETECTOR,
        'sigma0': ('positive', 60.0),
        'jitter': (Free('nonnegative'), {}),
        'excess_jitter': ('nonnegative', 0.0),
        'e_pol': ('fraction', 0.02197),
        'gate': ('gate', 'relative'),
        'gate_value': ('positive', 1.0)},
    '+analysis': {
        'mode': ('mode', 'finite'),
        's': ('count', 9),
        'fe': ('positive', 1.09),
        'duration': ('positive', 1.0),
        'seed': ('seed', 0),
        'block_policy': ('policy', 'pooled'),
        'ordering': ('ordering', 'printed'),
        'sweep': {'rates': ([('positive', None)], None),
                  'widths': ([('positive', None)], None),
                  'deltaT': ('positive', None),
                  'objective': ('mode', 'asymptotic')}},
    'measured': Optional({'+raw': 'count',
                          '+qber': 'fraction',
                          '+acquisition_time': 'positive'}),
}

_OMIT = object()


def _join(path, name):
    return '%s.%s' % (path, name) if path else name


def _default(spec, path, errors):
    if isinstance(spec, Optional):
        return _OMIT
    if isinstance(spec, dict):
        return _walk(spec, {}, path, errors)
    if isinstance(spec, list):
        return []
    if isinstance(spec, tuple):
        return copy.deepcopy(spec[1])
    return None


def _walk(schema, value, path, errors):
    if isinstance(schema, Optional):
        return _walk(schema.schema, value, path, errors)

    if isinstance(schema, tuple):
        schema = schema[0]

    if isinstance(schema, dict):
        if not isinstance(value, dict):
            errors.append((path, 'must be a table'))
            return None
        result, known = {}, set()
        for key, spec in schema.items():
            name = key.lstrip('+')
            known.add(name)
            location = _join(path, name)
            if value.get(name) is None:
                if key.startswith('+'):
                    errors.append((location, 'is required'))
                    continue
                default = _default(spec, location, errors)
                if default is not _OMIT:
                    result[name] = default
                continue
            result[name] = _walk(spec, value[name], location, errors)
        for name in value:
            if name not in known:
                errors.append((_join(path, name), 'unknown key'))
        return result

    if isinstance(schema, list):
        if not isinstance(value, list):
            errors.append((path, 'must be a list'))
            return None
        return [_walk(schema[0], item, '%s[%d]' % (path, i), errors) for i, item in enumerate(value)]

    if isinstance(schema, Free):
        if not isinstance(value, dict):
            errors.append((path, 'must be a table'))
            return None
        return dict((name, _walk(schema.validator, item, _join(path, name), errors))
                    for name, item in value.items())

    try:
        return valideer.parse(schema).validate(value)
    except ValidationError as e:
        errors.append((path, getattr(e, 'msg', str(e))))
        return None


def _check_references(config, errors):
    select = config.get('channels', {}).get('select')
    if select and config['link']['target'] not in select:
        errors.append(('link.target', 'not one of the selected channels'))
    sweep = config['analysis']['sweep']
    for key in ('rates', 'widths'):
        if sweep[key] is not None and not sweep[key]:
            errors.append(('analysis.sweep.%s' % key, 'must not be empty'))


def validate_config(document):
    """Normalized copy of a decoded document; raises ConfigError listing every problem"""
    errors = []
    if not isinstance(document, dict):
        raise ConfigError([('', 'document must be a table')])
    config = _walk(SCHEMA, document, '', errors)
    if not errors:
        _check_references(config, errors)
    if errors:
        raise ConfigError(errors)
    return config


def parse_config(text):
    try:
        document = json_load(text)
    except ValueError as e:
        raise ConfigError([('', 'not a valid document: %s' % e)])
    return validate_config(document)


def emit_config(config):
    return json_encode(config, indent=2) + '\n'


def config_hash(config):
    return canonical_hash(config)


def load_config(path):
    """Reads a config file; bare preset names such as 301km resolve to the bundled presets"""
    if not os.path.exists(path):
        preset = os.path.join(PRESETS, path if path.endswith('.cfg') else path + '.cfg')
        if os.path.exists(preset):
            path = preset
    with open(path, encoding='utf-8') as f:
        return parse_config(f.read())


def override(config, seed=None, mode=None, channels=None):
    """Copy of `config` with command line overrides applied"""
    config = copy.deepcopy(config)
    if seed is not None:
        config['analysis']['seed'] = seed
    if mode is not None:
        config['analysis']['mode'] = mode
    if channels:
        select = config['channels']['select']
        missing = [label for label in channels if select and label not in select]
        if missing:
            raise ConfigError([('channels', '%s not in the configured plan' % ', '.join(missing))])
        config['channels']['select'] = list(channels)
    return config


def _table_path(name, base_dir):
    for folder in (base_dir, PRESETS):
        if folder and os.path.exists(os.path.join(folder, name)):
            return os.path.join(folder, name)
    return name if os.path.isabs(name) else None


def load_table(name, base_dir=None):
    path = _table_path(name, base_dir)
    if not path or not os.path.exists(path):
        raise ConfigError([('link.catalog.table', 'no such file %r' % name)])
    with open(path, encoding='utf-8') as f:
        return json_load(f.read())


@contextmanager
def _building(location):
    """Model errors raised while assembling `location` become a ConfigError"""
    try:
        yield
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError([(location, 'missing %s' % e)])
    except (ValueError, TypeError, IndexError, ArithmeticError) as e:
        raise ConfigError([(location, str(e) or type(e).__name__)])


def _arm(section, catalog, location):
    segments = []
    for i, s in enumerate(section['segments']):
        with _building('%s.segments[%d]' % (location, i)):
            segment = FiberSegment(s['length'], s['attenuation'], s['D0'], s['S0'], s['lambda0'],
                                   s['connector_loss'])
        segments.extend([segment] * s['count'])
    devices = []
    for i, d in enumerate(section['devices']):
        if d['kind'] not in catalog:
            raise ConfigError([('%s.devices[%d].kind' % (location, i), 'not in the device catalog')])
        with _building('%s.devices[%d]' % (location, i)):
            devices.append(catalog[d['kind']].scaled(d['scale'], d['insertion_loss']))
    with _building(location):
        return ArmPlan(segments, devices, section['endpoint'])


def build_scenario(config, base_dir=None, name=None):
    """Assembles every model object a command needs from a normalized config.

    Documents that pass the schema but describe a system the models cannot
    build raise ConfigError located at the offending section.
    """
    src = config['source']
    guide = src['waveguide']
    with _building('source.waveguide'):
        params = PhaseMatchParams(guide['grating_length'], guide['poling_period'], guide['temperature'],
                                  guide['degenerate_temperature'])
        params = calibrate_thermal_scale(params, src['pump_wavelength'], guide['tuning_slope'])
        params = calibrate_lobe_width(params, src['pump_wavelength'], guide['lobe_fwhm'])
    with _building('source'):
        source = SourceSpec(src['pump_wavelength'], src['pump_power'], src['brightness'],
                            src['spectral_brightness'], src['coincidence_efficiency'], params)

    chan = config['channels']
    with _building('channels'):
        if chan['select']:
            plan = channel_plan(chan['select'], source.pump_wavelength, chan['grid_spacing'],
                                chan['channel_fwhm'])
        else:
            degenerate = 2 * source.pump_wavelength
            grid = [degenerate - 150 + 0.05 * i for i in range(6001)]
            spectrum = spdc_spectrum(params.temperature, params, grid, source.pump_wavelength)
            plan = channelize(spectrum, source.pump_wavelength, chan['grid_spacing'], chan['channel_fwhm'],
                              chan['threshold'])

    link = config['link']
    cat = link['catalog']
    with _building('link.catalog.table'):
        table = load_table(cat['table'], base_dir)
        catalog, fits = device_catalog(table, cat['dcm_loss'], cat['dcf_loss'])

    arm_a = _arm(link['arm_a'], catalog, 'link.arm_a')
    arm_b = _arm(link['arm_b'], catalog, 'link.arm_b')

    det = config['detection']
    with _building('detection'):
        detector_a = DetectorSpec(det['arm_a']['efficiency'], det['arm_a']['dark_rate'], det['sigma0'])
        detector_b = DetectorSpec(det['arm_b']['efficiency'], det['arm_b']['dark_rate'], det['sigma0'])
        jitter = JitterChain(sorted(det['jitter'].items()))

    _log.debug('built scenario %s with %d channel pairs', name, len(plan.pairs))
    return Scenario(name, source, plan, arm_a, arm_b, detector_a, detector_b, det['e_pol'], det['sigma0'], jitter,
                    det['excess_jitter'], det['gate'], det['gate_value'], catalog, fits, link['threshold'],
                    config['analysis'], config.get('measured'), config, config_hash(config))
