"""Fiber arms: loss budgets, chromatic dispersion, compensation devices and timing.

Arm A carries the signal (C-band) photon and holds every compensation device,
arm B carries the idler. Dispersion is in ps/nm, spreads and delays in ps.
"""
import math
import logging
import itertools
from decimal import Decimal
from collections import namedtuple

import numpy as np
from scipy import constants

from .errors import DomainError, FitError
from .source import wavelength_nm, label_frequency


_log = logging.getLogger('wdmqkd')

GROUP_INDEX = 1.468
ENDPOINT_ITEMS = ('source_share', 'snspd', 'pam', 'wdm')


class FiberSegment(namedtuple('FiberSegment', ['length', 'attenuation_coeff', 'D0', 'S0', 'lambda0',
                                               'connector_loss'])):
    __slots__ = ()

    def __new__(cls, length, attenuation_coeff=0.165, D0=17.0, S0=0.06, lambda0=1550.0, connector_loss=0.0):
        if length < 0:
            raise DomainError('segment length must be >= 0')
        if not attenuation_coeff > 0:
            raise DomainError('attenuation coefficient must be > 0')
        if connector_loss < 0:
            raise DomainError('connector loss must be >= 0')
        return super(FiberSegment, cls).__new__(cls, float(length), float(attenuation_coeff), float(D0),
                                                float(S0), float(lambda0), float(connector_loss))


class CompensationDevice(namedtuple('CompensationDevice', ['kind', 'D0', 'S0', 'insertion_loss', 'lambda0'])):
    """D0 (ps/nm) and S0 (ps/nm**2) are device totals at lambda0"""
    __slots__ = ()

    def __new__(cls, kind, D0, S0, insertion_loss=0.0, lambda0=1550.0):
        if kind not in ('DCM', 'DCF'):
            raise DomainError('unknown device kind %r' % kind)
        if not D0 < 0:
            raise DomainError('compensation devices need D0 < 0')
        if insertion_loss < 0:
            raise DomainError('insertion loss must be >= 0')
        return super(CompensationDevice, cls).__new__(cls, kind, float(D0), float(S0), float(insertion_loss),
                                                      float(lambda0))

    def scaled(self, scale, insertion_loss=None):
        """Same device type compensating `scale` times as much fiber"""
        if not scale > 0:
            raise DomainError('device scale must be > 0')
        return CompensationDevice(self.kind, self.D0 * scale, self.S0 * scale,
                                  self.insertion_loss if insertion_loss is None else insertion_loss,
                                  self.lambda0)


class ArmPlan(namedtuple('ArmPlan', ['segments', 'devices', 'endpoint_losses'])):
    __slots__ = ()

    def __new__(cls, segments=(), devices=(), endpoint_losses=None):
        losses = dict((k, 0.0) for k in ENDPOINT_ITEMS)
        for key, value in (endpoint_losses or {}).items():
            if key not in losses:
                raise DomainError('unknown endpoint loss %r' % key)
            if value < 0:
                raise DomainError('endpoint loss %s must be >= 0' % key)
            losses[key] = float(value)
        return super(ArmPlan, cls).__new__(cls, tuple(segments), tuple(devices), losses)

    @property
    def length(self):
        return sum(s.length for s in self.segments)


TimingBudget = namedtuple('TimingBudget', ['sigma0', 'sigma_DA', 'sigma_DB', 'sigma_C', 'deltaT'])
LossBudget = namedtuple('LossBudget', ['items', 'total'])
DeviceFit = namedtuple('DeviceFit', ['kind', 'D0', 'S0', 'rms', 'outlier'])
CompensationPlan = namedtuple('CompensationPlan', ['counts', 'devices', 'residual', 'profile', 'insertion_loss',
                                                   'feasible'])


def _dec(value):
    return Decimal(repr(float(value)))


def segment_loss(segment):
    return float(_dec(segment.length) * _dec(segment.attenuation_coeff) + _dec(segment.connector_loss))


def arm_loss(arm):
    total = sum((_dec(segment_loss(s)) for s in arm.segments), Decimal(0))
    total += sum((_dec(d.insertion_loss) for d in arm.devices), Decimal(0))
    total += sum((_dec(v) for v in arm.endpoint_losses.values()), Decimal(0))
    return float(total)


def arm_transmittance(arm):
    return 10 ** (-arm_loss(arm) / 10.0)


def link_loss_budget(arm_a, arm_b):
    """Itemized dB table over both arms. Addition is exact in decimal."""
    arms = (arm_a, arm_b)
    rows = [('Source', sum((_dec(a.endpoint_losses['source_share']) for a in arms), Decimal(0))),
            ('ULLF with FOAs', sum((_dec(segment_loss(s)) for a in arms for s in a.segments), Decimal(0))),
            ('SNSPD', sum((_dec(a.endpoint_losses['snspd']) for a in arms), Decimal(0))),
            ('PAM', sum((_dec(a.endpoint_losses['pam']) for a in arms), Decimal(0))),
            ('WDM', sum((_dec(a.endpoint_losses['wdm']) for a in arms), Decimal(0)))]
    for kind in ('DCM', 'DCF'):
        rows.append((kind, sum((_dec(d.insertion_loss) for a in arms for d in a.devices if d.kind == kind),
                               Decimal(0))))
    total = sum((v for _, v in rows), Decimal(0))
    return LossBudget([(label, float(v)) for label, v in rows], float(total))


def _fiber_dispersion(wavelength, segments):
    return sum(s.length * (s.D0 + s.S0 * (wavelength - s.lambda0)) for s in segments)


def _device_dispersion(wavelength, devices):
    return sum(d.D0 + d.S0 * (wavelength - d.lambda0) for d in devices)


def accumulated_dispersion(wavelength, arm):
    if not wavelength > 0:
        raise DomainError('wavelength must be > 0')
    return _fiber_dispersion(wavelength, arm.segments) + _device_dispersion(wavelength, arm.devices)


def group_delay(wavelength, arm):
    """Arrival delay in ps: propagation at the group index plus the integrated dispersion"""
    delay = 0.0
    for s in arm.segments:
        x = wavelength - s.lambda0
        delay += s.length * 1e15 * GROUP_INDEX / constants.c
        delay += s.length * (s.D0 * x + s.S0 * x * x / 2.0)
    for d in arm.devices:
        x = wavelength - d.lambda0
        delay += d.D0 * x + d.S0 * x * x / 2.0
    return delay


def pair_wavelengths(pair):
    return wavelength_nm(pair.signal_thz), wavelength_nm(pair.idler_thz)


def residual_dispersion_per_channel(pair, arm_a, arm_b, channel_fwhm=1.25):
    """Net two-photon spread in ps across the channel's optical bandwidth"""
    signal, idler = pair_wavelengths(pair)
    return (accumulated_dispersion(signal, arm_a) + accumulated_dispersion(idler, arm_b)) * channel_fwhm


def timing_uncertainty(sigma0, sigma_DA=0.0, sigma_DB=0.0, sigma_C=0.0):
    if not sigma0 > 0:
        raise DomainError('sigma0 must be > 0')
    net = sigma_DA + sigma_DB + sigma_C
    return TimingBudget(sigma0, sigma_DA, sigma_DB, sigma_C, math.hypot(sigma0, net))


def channel_timing(pair, arm_a, arm_b, channel_fwhm=1.25, sigma0=60.0):
    signal, idler = pair_wavelengths(pair)
    return timing_uncertainty(sigma0,
                              _fiber_dispersion(signal, arm_a.segments) * channel_fwhm,
                              _fiber_dispersion(idler, arm_b.segments) * channel_fwhm,
                              (_device_dispersion(signal, arm_a.devices)
                               + _device_dispersion(idler, arm_b.devices)) * channel_fwhm)


def dispersion_table(pairs, arm_a, arm_b, channel_fwhm=1.25, sigma0=60.0):
    """Rows of the per-channel dispersion compensation table, in ps"""
    rows = [('Fiber chromatic dispersion', []), ('DCF', []), ('DCM', []),
            ('Residual chromatic dispersion', []), ('Timing uncertainty (analysis)', [])]
    for pair in pairs:
        signal, idler = pair_wavelengths(pair)
        fiber = _fiber_dispersion(signal, arm_a.segments) + _fiber_dispersion(idler, arm_b.segments)
        kinds = []
        for kind in ('DCF', 'DCM'):
            kinds.append(_device_dispersion(signal, [d for d in arm_a.devices if d.kind == kind])
                         + _device_dispersion(idler, [d for d in arm_b.devices if d.kind == kind]))
        budget = channel_timing(pair, arm_a, arm_b, channel_fwhm, sigma0)
        values = (fiber * channel_fwhm, kinds[0] * channel_fwhm, kinds[1] * channel_fwhm,
                  budget.sigma_DA + budget.sigma_DB + budget.sigma_C, budget.deltaT)
        for (_, row), value in zip(rows, values):
            row.append(value)
    return rows


def sigma_c_range(pairs, arm_a, channel_fwhm=1.25):
    """Extremes of the applied compensation across a channel plan"""
    if not pairs:
        return None
    values = [_device_dispersion(pair_wavelengths(p)[0], arm_a.devices) * channel_fwhm for p in pairs]
    return min(values), max(values)


def nonlocal_broadening(sigma_cor, gvd_sum):
    """Correlation width after dispersion sum beta_A L_A + beta_B L_B (ps**2)"""
    if not sigma_cor > 0:
        raise DomainError('correlation time must be > 0')
    return math.sqrt(sigma_cor ** 4 + gvd_sum ** 2) / sigma_cor


def pmd_bound(total_length, pmd_coeff=0.04):
    if total_length < 0:
        raise DomainError('length must be >= 0')
    return pmd_coeff * math.sqrt(total_length)


def fit_device_coefficients(kind, rows, wavelengths, channel_fwhm=1.25, count=1, lambda0=1550.0):
    """Least-squares D0/S0 of one device from a table row in ps.

    The worst point is dropped and the line refit when it sits further than
    max(3 x median |residual|, 2 ps) from the first fit.
    """
    x = np.asarray(wavelengths, dtype=float) - lambda0
    y = np.asarray(rows, dtype=float)
    if len(x) < 2 or len(x) != len(y):
        raise FitError('need at least two rows with matching wavelengths')
    if np.ptp(x) == 0:
        raise FitError('all rows share one wavelength')

    keep = np.ones(len(x), dtype=bool)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    worst = int(np.argmax(np.abs(residuals)))
    outlier = None
    if len(x) > 2 and abs(residuals[worst]) > max(3 * np.median(np.abs(residuals)), 2.0):
        keep[worst] = False
        outlier = worst
        slope, intercept = np.polyfit(x[keep], y[keep], 1)
        residuals = y - (slope * x + intercept)
        _log.debug('%s row point %d treated as an outlier', kind, worst)

    rms = float(np.sqrt(np.mean(residuals[keep] ** 2)))
    scale = channel_fwhm * count
    return DeviceFit(kind, float(intercept / scale), float(slope / scale), rms, outlier)


def device_catalog(table, dcm_loss=3.5, dcf_loss=1.5, lambda0=1550.0):
    """Unit DCM and DCF fitted from a per-channel compensation table.

    `table` maps 'channels' (pair labels), 'channel_fwhm', 'devices' (counts
    used when the table was taken) and one row per device kind.
    """
    labels = table['channels']
    wavelengths = [wavelength_nm(label_frequency(label[:3])) for label in labels]
    fwhm = table.get('channel_fwhm', 1.25)
    losses = dict(DCM=dcm_loss, DCF=dcf_loss)
    catalog, fits = {}, {}
    for kind in ('DCM', 'DCF'):
        fit = fit_device_coefficients(kind, table[kind], wavelengths, fwhm, table['devices'][kind], lambda0)
        fits[kind] = fit
        catalog[kind] = CompensationDevice(kind, fit.D0, fit.S0, losses[kind], lambda0)
    return catalog, fits


def _allocation(catalog, counts):
    return [catalog[kind] for kind in ('DCM', 'DCF') for _ in range(counts[kind])]


def plan_compensation(arm_a, arm_b, catalog, target, pairs=(), channel_fwhm=1.25, max_devices=6,
                      threshold=100.0):
    """Device counts on arm A minimizing |residual| at the target channel.

    The residual is affine in each count, so for every DCF count only the two
    DCM counts around the zero crossing need checking. Ties go to the lower
    insertion loss, then fewer devices.
    """
    if not catalog:
        raise DomainError('device catalog is empty')
    bare = arm_a._replace(devices=())
    base = residual_dispersion_per_channel(target, bare, arm_b, channel_fwhm)
    signal = pair_wavelengths(target)[0]
    unit = dict((kind, _device_dispersion(signal, [d]) * channel_fwhm) for kind, d in catalog.items())

    def key(counts):
        residual = base + sum(unit[k] * n for k, n in counts.items())
        loss = sum(catalog[k].insertion_loss * n for k, n in counts.items())
        return (round(abs(residual), 9), round(loss, 9), sum(counts.values()), residual)

    best = None
    for n_dcf in (range(max_devices + 1) if 'DCF' in catalog else [0]):
        candidates = [0]
        if 'DCM' in catalog:
            ideal = -(base + unit.get('DCF', 0.0) * n_dcf) / unit['DCM']
            candidates = set(min(max_devices, max(0, int(f(ideal)))) for f in (math.floor, math.ceil))
        for n_dcm in sorted(candidates):
            counts = dict(DCM=n_dcm, DCF=n_dcf)
            if best is None or key(counts)[:3] < key(best)[:3]:
                best = counts

    devices = _allocation(catalog, best)
    planned = arm_a._replace(devices=tuple(devices))
    residual = key(best)[3]
    profile = [residual_dispersion_per_channel(p, planned, arm_b, channel_fwhm) for p in pairs]
    loss = sum(d.insertion_loss for d in devices)
    feasible = abs(residual) <= threshold
    _log.debug('compensation plan %r residual %.1f ps feasible=%s', best, residual, feasible)
    return CompensationPlan(best, devices, residual, profile, loss, feasible)


def brute_force_plan(arm_a, arm_b, catalog, target, channel_fwhm=1.25, max_devices=6):
    """Counts found by scanning every allocation, same ordering as plan_compensation"""
    scores = []
    for n_dcm, n_dcf in itertools.product(range(max_devices + 1), repeat=2):
        counts = dict(DCM=n_dcm, DCF=n_dcf)
        planned = arm_a._replace(devices=tuple(_allocation(catalog, counts)))
        residual = residual_dispersion_per_channel(target, planned, arm_b, channel_fwhm)
        loss = sum(d.insertion_loss for d in planned.devices)
        scores.append(((round(abs(residual), 9), round(loss, 9), n_dcm + n_dcf), counts))
    return min(scores, key=lambda s: s[0])[1]
