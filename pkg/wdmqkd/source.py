"""SPDC source model: photon energetics, phase matching, pair rates, channelization.

Wavelengths are in nm, frequencies in THz, temperatures in degC and rates in
pairs/s unless a name says otherwise. Phase mismatch is in 1/um.
"""
import math
import logging
from collections import namedtuple

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from .errors import DomainError


_log = logging.getLogger('wdmqkd')

PLANCK = constants.h
LIGHT = constants.c

# extraordinary index of congruent lithium niobate:
# a1..a6 then b1..b4, wavelength in um, f = (T - 24.5)(T + 570.82)
CONGRUENT_LN = (5.35583, 0.100473, 0.20692, 100.0, 11.34927, 1.5334e-2,
                4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5)

INDEX_BAND = (400.0, 5000.0)

ITU_ANCHOR = 190.0     # THz, C00
L_ANCHOR = 180.0       # THz, L00 wraps to 190.0


class PhaseMatchParams(namedtuple('PhaseMatchParams', ['grating_length', 'poling_period', 'temperature',
                                                       'degenerate_temperature', 'sellmeier',
                                                       'thermal_scale', 'grating_correction'])):
    """grating_length in mm, poling_period in um.

    `thermal_scale` stretches the temperature axis of the index model around the
    degenerate point and `grating_correction` (1/um) absorbs the waveguide's
    effective-index offset; both come from the calibrate_* helpers. After
    calibrate_lobe_width `grating_length` is the effective sinc length.
    """
    __slots__ = ()

    def __new__(cls, grating_length=48.0, poling_period=16.4, temperature=41.6, degenerate_temperature=40.0,
                sellmeier=CONGRUENT_LN, thermal_scale=1.0, grating_correction=0.0):
        if not grating_length > 0:
            raise DomainError('grating length must be > 0')
        if not poling_period > 0:
            raise DomainError('poling period must be > 0')
        if not thermal_scale > 0:
            raise DomainError('thermal scale must be > 0')
        return super(PhaseMatchParams, cls).__new__(cls, float(grating_length), float(poling_period),
                                                    float(temperature), float(degenerate_temperature),
                                                    tuple(sellmeier), float(thermal_scale),
                                                    float(grating_correction))


class SourceSpec(namedtuple('SourceSpec', ['pump_wavelength', 'pump_power', 'brightness', 'spectral_brightness',
                                           'coincidence_efficiency', 'waveguide'])):
    __slots__ = ()

    def __new__(cls, pump_wavelength=780.3, pump_power=0.55, brightness=2.4e10, spectral_brightness=8.0e8,
                coincidence_efficiency=0.105, waveguide=None):
        if not pump_wavelength > 0:
            raise DomainError('pump wavelength must be > 0')
        if pump_power < 0:
            raise DomainError('pump power must be >= 0')
        if not (brightness > 0 and spectral_brightness > 0):
            raise DomainError('brightness constants must be > 0')
        if not 0 < coincidence_efficiency <= 1:
            raise DomainError('coincidence efficiency must be within (0, 1]')
        return super(SourceSpec, cls).__new__(cls, float(pump_wavelength), float(pump_power), float(brightness),
                                              float(spectral_brightness), float(coincidence_efficiency),
                                              waveguide or PhaseMatchParams())


SpectrumSample = namedtuple('SpectrumSample', ['wavelength', 'relative_intensity'])
ChannelPair = namedtuple('ChannelPair', ['signal_thz', 'idler_thz', 'label'])
ChannelPlan = namedtuple('ChannelPlan', ['grid_spacing', 'channel_fwhm', 'pairs'])


def photon_energy(wavelength):
    """Energy in J of one photon of `wavelength` nm"""
    if not wavelength > 0:
        raise DomainError('wavelength must be > 0, got %r' % wavelength)
    return PLANCK * LIGHT / (wavelength * 1e-9)


def frequency_thz(wavelength):
    if not np.all(np.asarray(wavelength) > 0):
        raise DomainError('wavelength must be > 0, got %r' % wavelength)
    return LIGHT / wavelength * 1e-3


def wavelength_nm(frequency):
    if not np.all(np.asarray(frequency) > 0):
        raise DomainError('frequency must be > 0, got %r' % frequency)
    return LIGHT / frequency * 1e-3


def pair_generation_rate(raw_coincidence_rate, efficiency):
    """G = Rc / eta**2"""
    if not 0 < efficiency <= 1:
        raise DomainError('efficiency must be within (0, 1], got %r' % efficiency)
    if raw_coincidence_rate < 0:
        raise DomainError('coincidence rate must be >= 0')
    return raw_coincidence_rate / efficiency ** 2


def generation_rate(spec):
    return spec.brightness * spec.pump_power


def emitted_optical_power(pump_power, brightness, signal_wl, idler_wl):
    """Optical power in nW carried by both photons of every generated pair"""
    if pump_power < 0 or not brightness > 0:
        raise DomainError('pump power must be >= 0 and brightness > 0')
    pairs = brightness * pump_power
    return pairs * (photon_energy(signal_wl) + photon_energy(idler_wl)) * 1e9


def conjugate_wavelength(pump_wl, signal_wl):
    if not 0 < pump_wl < signal_wl:
        raise DomainError('need 0 < pump (%r) < signal (%r)' % (pump_wl, signal_wl))
    return 1.0 / (1.0 / pump_wl - 1.0 / signal_wl)


def channel_pair_rate(spec, channel_fwhm):
    return spec.spectral_brightness * channel_fwhm * spec.pump_power


def refractive_index(wavelength, temperature, coefficients=CONGRUENT_LN):
    if not (INDEX_BAND[0] <= np.min(wavelength) and np.max(wavelength) <= INDEX_BAND[1]):
        raise DomainError('wavelength outside the index model band %s nm' % (INDEX_BAND, ))
    a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = coefficients
    l2 = (np.asarray(wavelength, dtype=float) * 1e-3) ** 2
    f = (temperature - 24.5) * (temperature + 570.82)
    n2 = (a1 + b1 * f
          + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
          + (a4 + b4 * f) / (l2 - a5 ** 2)
          - a6 * l2)
    return np.sqrt(n2)


def _conjugates(signal_wl, pump_wl):
    """(short, long) wavelengths of the pair containing `signal_wl`.

    The pair is rebuilt from its rounded frequency detuning so a wavelength and
    its conjugate give bit-identical pairs.
    """
    nu_half = frequency_thz(pump_wl) / 2.0
    detuning = np.round(np.abs(frequency_thz(np.asarray(signal_wl, dtype=float)) - nu_half), 9)
    return wavelength_nm(nu_half + detuning), wavelength_nm(nu_half - detuning)


def _bulk_mismatch(signal_wl, temperature, params, pump_wl):
    short, long_ = _conjugates(signal_wl, pump_wl)
    if np.any(short <= pump_wl):
        raise DomainError('signal must be longer than the pump wavelength')
    t_eff = params.degenerate_temperature + params.thermal_scale * (temperature - params.degenerate_temperature)
    lp, ls, li = pump_wl * 1e-3, short * 1e-3, long_ * 1e-3
    n = lambda wl: refractive_index(wl, t_eff, params.sellmeier)
    return 2 * math.pi * (n(pump_wl) / lp - n(short) / ls - n(long_) / li - 1.0 / params.poling_period)


def phase_mismatch(signal_wl, temperature, params, pump_wl):
    """Delta k in 1/um for the pair through `signal_wl`, idler by energy conservation"""
    return _bulk_mismatch(signal_wl, temperature, params, pump_wl) - params.grating_correction


def calibrate_grating(params, pump_wl):
    """Sets the grating correction so the degenerate pair phase matches at T_d"""
    degenerate = 2.0 * pump_wl
    correction = float(_bulk_mismatch(degenerate, params.degenerate_temperature,
                                      params._replace(grating_correction=0.0), pump_wl))
    return params._replace(grating_correction=correction)


def spectral_peaks(temperature, params, pump_wl):
    """(short, long) phase-matched wavelengths; the degenerate point at or below T_d"""
    degenerate = 2.0 * pump_wl
    f = lambda wl: float(phase_mismatch(wl, temperature, params, pump_wl))
    if f(degenerate) <= 0:
        return degenerate, degenerate
    upper = 1.3 * degenerate
    if f(upper) >= 0:
        raise DomainError('no phase-matched peak below %.0f nm at %.2f degC' % (upper, temperature))
    long_ = brentq(f, degenerate, upper, xtol=1e-9)
    return conjugate_wavelength(pump_wl, long_), long_


def tuning_slope(params, pump_wl, span=(1.0, 5.0)):
    """Mean shift in nm/degC of the long-wavelength peak over T_d + span"""
    lo = spectral_peaks(params.degenerate_temperature + span[0], params, pump_wl)[1]
    hi = spectral_peaks(params.degenerate_temperature + span[1], params, pump_wl)[1]
    return (hi - lo) / (span[1] - span[0])


def calibrate_thermal_scale(params, pump_wl, slope=10.0, span=(1.0, 5.0)):
    params = calibrate_grating(params, pump_wl)
    error = lambda scale: tuning_slope(params._replace(thermal_scale=scale), pump_wl, span) - slope
    scale = brentq(error, 0.05, 10.0, xtol=1e-6)
    _log.debug('thermal scale %.5f for %.2f nm/degC', scale, slope)
    return params._replace(thermal_scale=scale)


def spdc_spectrum(temperature, params, wl_grid, pump_wl):
    """sinc**2(L dk / 2) sampled on `wl_grid`, normalized to a peak of 1"""
    if len(wl_grid) == 0:
        return []
    grid = np.asarray(wl_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise DomainError('wavelength grid must be sorted')
    dk = phase_mismatch(grid, temperature, params, pump_wl)
    # np.sinc is the normalized sinc, sin(pi x)/(pi x)
    intensity = np.sinc(params.grating_length * 1e3 * dk / (2 * math.pi)) ** 2
    peak = intensity.max()
    if peak > 0:
        intensity = intensity / peak
    return [SpectrumSample(float(wl), float(v)) for wl, v in zip(grid, intensity)]


def usable_span(spectrum, threshold=0.1):
    """Width in nm between the outermost samples at or above `threshold`"""
    above = [s.wavelength for s in spectrum if s.relative_intensity >= threshold]
    if not above:
        return 0.0
    return max(above) - min(above)


def _crossing(w0, v0, w1, v1, level):
    if v1 == v0:
        return w1
    return w0 + (level - v0) * (w1 - w0) / (v1 - v0)


def lobe_fwhm(spectrum, pump_wl):
    """FWHM in nm of the long-wavelength lobe; the inner edge stops at degeneracy"""
    degenerate = 2.0 * pump_wl
    lobe = [s for s in spectrum if s.wavelength >= degenerate]
    if not lobe:
        return 0.0
    wl = np.array([s.wavelength for s in lobe])
    v = np.array([s.relative_intensity for s in lobe])
    top = int(np.argmax(v))
    half = v[top] / 2.0

    lo = top
    while lo > 0 and v[lo - 1] >= half:
        lo -= 1
    left = wl[lo] if lo == 0 else _crossing(wl[lo - 1], v[lo - 1], wl[lo], v[lo], half)

    hi = top
    while hi < len(v) - 1 and v[hi + 1] >= half:
        hi += 1
    right = wl[hi] if hi == len(v) - 1 else _crossing(wl[hi], v[hi], wl[hi + 1], v[hi + 1], half)
    return float(right - left)


def calibrate_lobe_width(params, pump_wl, fwhm=10.0, offset=5.0, tolerance=1e-3, iterations=10):
    """Rescales the sinc length so the lobe at T_d + `offset` is `fwhm` nm wide.

    The bulk index model underestimates the waveguide's spectral selectivity;
    the lobe width goes as 1 / grating_length, so a few fixed-point steps converge.
    """
    if not fwhm > 0:
        raise DomainError('lobe FWHM must be > 0')
    grid = 2.0 * pump_wl + 0.05 * np.arange(3001)
    temperature = params.degenerate_temperature + offset
    for _ in range(iterations):
        width = lobe_fwhm(spdc_spectrum(temperature, params, grid, pump_wl), pump_wl)
        if not width > 0:
            raise DomainError('no lobe at %.2f degC to calibrate' % temperature)
        if abs(width - fwhm) < tolerance:
            _log.debug('grating length %.4f mm for a %.2f nm lobe', params.grating_length, fwhm)
            return params
        params = params._replace(grating_length=params.grating_length * width / fwhm)
    raise DomainError('lobe width did not converge to %.2f nm' % fwhm)


def grid_frequency(index, spacing):
    return round(ITU_ANCHOR + index * spacing / 1000.0, 6)


def channel_label(frequency, band=None):
    """ITU style label: Cnn from 190 THz up, Lnn (modulo 100) below; `band` forces one of the two"""
    if band is None:
        band = 'C' if frequency >= ITU_ANCHOR - 1e-6 else 'L'
    if band == 'C':
        return 'C%02d' % int(round((frequency - ITU_ANCHOR) * 10))
    return 'L%02d' % (int(round((frequency - L_ANCHOR) * 10)) % 100)


def label_frequency(label):
    """Center frequency of a C-band label such as C42"""
    if not label.startswith('C'):
        raise DomainError('only C-band labels select channels, got %r' % label)
    return round(ITU_ANCHOR + int(label[1:3]) / 10.0, 6)


def _pair(signal, pump_wl, grid_spacing):
    step = grid_spacing / 1000.0
    nu_pump = frequency_thz(pump_wl)
    index = int(round((nu_pump - signal - ITU_ANCHOR) / step))
    idler = grid_frequency(index, grid_spacing)
    return ChannelPair(signal, idler, channel_label(signal, 'C') + channel_label(idler, 'L'))


def channelize(spectrum, pump_wl, grid_spacing=200.0, channel_fwhm=1.25, threshold=0.1):
    """Conjugate ITU channel pairs whose members both sit above `threshold` of the peak"""
    if not spectrum:
        return ChannelPlan(grid_spacing, channel_fwhm, [])
    step = grid_spacing / 1000.0
    nu_pump = frequency_thz(pump_wl)
    order = sorted(spectrum, key=lambda s: s.wavelength)
    wl = np.array([s.wavelength for s in order])
    v = np.array([s.relative_intensity for s in order])
    level = threshold * v.max()
    intensity = lambda nu: float(np.interp(wavelength_nm(nu), wl, v, left=0.0, right=0.0))

    first = int(math.floor((nu_pump / 2.0 - ITU_ANCHOR) / step))
    last = int(math.ceil((frequency_thz(wl[0]) - ITU_ANCHOR) / step))
    pairs = []
    for index in range(first, last + 1):
        signal = grid_frequency(index, grid_spacing)
        if signal <= nu_pump / 2.0:
            continue
        pair = _pair(signal, pump_wl, grid_spacing)
        if pair.signal_thz - pair.idler_thz < step - 1e-9:
            continue
        if abs(pair.signal_thz + pair.idler_thz - nu_pump) > step / 2.0 + 1e-9:
            continue
        if intensity(pair.signal_thz) >= level and intensity(pair.idler_thz) >= level:
            pairs.append(pair)
    _log.debug('channelized %d pairs on a %g GHz grid', len(pairs), grid_spacing)
    return ChannelPlan(grid_spacing, channel_fwhm, pairs)


def channel_plan(labels, pump_wl, grid_spacing=200.0, channel_fwhm=1.25):
    """Explicit plan from C-band labels, e.g. C42 ... C58"""
    pairs = [_pair(label_frequency(label), pump_wl, grid_spacing) for label in labels]
    return ChannelPlan(grid_spacing, channel_fwhm, pairs)
