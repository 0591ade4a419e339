"""Secure key rate sweeps over generation rate and gate width, and what-if comparisons."""
import logging
from collections import namedtuple

import numpy as np

from . import scenario as _scenario
from .errors import DomainError
from .detection import channel_rates, predict_qber, sifted_fraction
from .security import asymptotic_key, pooled_inputs, finite_key, finite_key_problem, FE


_log = logging.getLogger('wdmqkd')

DEFAULT_WIDTHS = (40.0, 65.0, 80.0, 100.0, 130.0, 160.0)


class SweepSpec(namedtuple('SweepSpec', ['generation_rates', 'gate_widths', 'pair', 'arm_a', 'arm_b', 'detector_a',
                                         'detector_b', 'e_pol', 'deltaT', 'objective', 'fe', 'duration',
                                         'channel_fwhm', 'sigma0'])):
    """`deltaT` fixes the coincidence FWHM; None takes it from the link"""
    __slots__ = ()

    def __new__(cls, generation_rates, gate_widths, pair, arm_a, arm_b, detector_a, detector_b, e_pol,
                deltaT=None, objective='asymptotic', fe=FE, duration=1.0, channel_fwhm=1.25, sigma0=60.0):
        if not len(generation_rates) or not len(gate_widths):
            raise DomainError('sweep grids must not be empty')
        if min(generation_rates) <= 0 or min(gate_widths) <= 0:
            raise DomainError('generation rates and gate widths must be > 0')
        if objective not in ('asymptotic', 'finite'):
            raise DomainError('unknown objective %r' % objective)
        return super(SweepSpec, cls).__new__(cls, tuple(sorted(generation_rates)), tuple(sorted(gate_widths)), pair,
                                             arm_a, arm_b, detector_a, detector_b, e_pol, deltaT, objective, fe,
                                             duration, channel_fwhm, sigma0)


SweepPoint = namedtuple('SweepPoint', ['rate', 'width', 'qber', 'skr'])
SweepResult = namedtuple('SweepResult', ['points', 'best'])
WhatIf = namedtuple('WhatIf', ['base', 'edited', 'deltas', 'aggregate_delta', 'base_best', 'edited_best'])


def default_rates(points=25, low=1e7, high=1e10):
    return list(np.logspace(np.log10(low), np.log10(high), points))


def default_sweep(scenario, deltaT=None, objective=None, rates=None, widths=None):
    """Sweep over the plan's central channel with the grid defaults"""
    pairs = scenario.plan.pairs
    if not pairs:
        raise DomainError('channel plan is empty')
    sweep = scenario.analysis.get('sweep') or {}
    return SweepSpec(rates or sweep.get('rates') or default_rates(),
                     widths or sweep.get('widths') or DEFAULT_WIDTHS,
                     pairs[len(pairs) // 2], scenario.arm_a, scenario.arm_b,
                     scenario.detector_a, scenario.detector_b, scenario.e_pol,
                     deltaT if deltaT is not None else sweep.get('deltaT'),
                     objective or sweep.get('objective') or 'asymptotic',
                     scenario.analysis['fe'], scenario.analysis['duration'],
                     scenario.plan.channel_fwhm, scenario.sigma0)


def point_skr(spec, rate, width):
    """(qber, secure bits/s) for one grid point"""
    r = channel_rates(spec.pair, rate, spec.arm_a, spec.arm_b, spec.detector_a, spec.detector_b,
                      spec.channel_fwhm, spec.sigma0, 'fixed', width, spec.deltaT)
    total = r.true + r.accidental + r.dark
    if total <= 0:
        return None, 0.0
    qber = predict_qber(r.true, r.accidental, r.dark, spec.e_pol).total
    sifted = total * sifted_fraction()
    if spec.objective == 'asymptotic':
        return qber, asymptotic_key(pooled_inputs(sifted, qber, 1.0, spec.fe)).rate_bits_per_s
    m = int(sifted * spec.duration)
    if m < 1:
        return qber, 0.0
    return qber, finite_key(finite_key_problem(m, qber, fe=spec.fe)).secure_bits / float(spec.duration)


def sweep_skr(spec):
    """Full surface and its argmax; ties go to the smaller rate, then the smaller width"""
    points, best = [], None
    for rate in spec.generation_rates:
        for width in spec.gate_widths:
            qber, skr = point_skr(spec, rate, width)
            point = SweepPoint(rate, width, qber, skr)
            points.append(point)
            if best is None or skr > best.skr:
                best = point
    _log.debug('sweep optimum %.3g pairs/s at %g ps: %.4g bits/s', best.rate, best.width, best.skr)
    return SweepResult(points, best)


def apply_edits(scenario, edits):
    """Copy of `scenario` with link edits applied.

    Supported keys: remove_device / add_device (kind on arm A), segment_length
    ([arm, index, km]), extra_loss ([arm, dB] added to the WDM endpoint entry)
    and channel_fwhm (nm).
    """
    arms = dict(a=scenario.arm_a, b=scenario.arm_b)
    for key, value in sorted(edits.items()):
        if key == 'remove_device':
            devices = list(arms['a'].devices)
            matches = [i for i, d in enumerate(devices) if d.kind == value]
            if not matches:
                raise DomainError('arm A has no %s to remove' % value)
            del devices[matches[-1]]
            arms['a'] = arms['a']._replace(devices=tuple(devices))
        elif key == 'add_device':
            if value not in scenario.catalog:
                raise DomainError('catalog has no %s' % value)
            arms['a'] = arms['a']._replace(devices=arms['a'].devices + (scenario.catalog[value], ))
        elif key == 'segment_length':
            arm, index, length = value
            segments = list(arms[arm].segments)
            segments[index] = segments[index]._replace(length=float(length))
            arms[arm] = arms[arm]._replace(segments=tuple(segments))
        elif key == 'extra_loss':
            arm, loss = value
            endpoint = dict(arms[arm].endpoint_losses)
            endpoint['wdm'] += float(loss)
            arms[arm] = arms[arm]._replace(endpoint_losses=endpoint)
        elif key == 'channel_fwhm':
            scenario = scenario._replace(plan=scenario.plan._replace(channel_fwhm=float(value)))
        else:
            raise DomainError('unknown edit %r' % key)
    return scenario._replace(arm_a=arms['a'], arm_b=arms['b'])


def what_if(scenario, edits):
    """Per-channel and aggregate SKR of the base and edited scenarios, plus both sweep optima"""
    edited = apply_edits(scenario, edits)
    base_rows = _scenario.channel_skr(scenario)
    edited_rows = _scenario.channel_skr(edited)
    deltas = [(label, after - before) for (label, before, _), (_, after, _) in zip(base_rows, edited_rows)]
    aggregate = sum(d for _, d in deltas)
    base_best = sweep_skr(default_sweep(scenario)).best if scenario.plan.pairs else None
    edited_best = sweep_skr(default_sweep(edited)).best if edited.plan.pairs else None
    return WhatIf(base_rows, edited_rows, deltas, aggregate, base_best, edited_best)
