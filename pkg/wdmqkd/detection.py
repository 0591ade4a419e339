"""Analytic detection chain: jitter, singles, coincidences, accidentals and QBER.

Rates are per second, windows and jitters in ps.
"""
import math
from collections import namedtuple

from scipy.special import erf

from .errors import DomainError
from .link import arm_transmittance, channel_timing


class DetectorSpec(namedtuple('DetectorSpec', ['efficiency', 'dark_rate', 'jitter_fwhm'])):
    __slots__ = ()

    def __new__(cls, efficiency=1.0, dark_rate=30.0, jitter_fwhm=0.0):
        if not 0 <= efficiency <= 1:
            raise DomainError('efficiency must be within [0, 1]')
        if dark_rate < 0 or jitter_fwhm < 0:
            raise DomainError('dark rate and jitter must be >= 0')
        return super(DetectorSpec, cls).__new__(cls, float(efficiency), float(dark_rate), float(jitter_fwhm))


JitterChain = namedtuple('JitterChain', ['components'])
QberBreakdown = namedtuple('QberBreakdown', ['e_pol', 'e_accidental', 'e_dark', 'total'])
ChannelRates = namedtuple('ChannelRates', ['label', 'deltaT', 'window', 'capture', 'singles_a', 'singles_b',
                                           'true', 'accidental', 'dark'])


def combine_jitter(chain):
    """Root-sum-square of the FWHM of every component"""
    components = chain.components if isinstance(chain, JitterChain) else chain
    if not components:
        raise DomainError('jitter chain is empty')
    return math.sqrt(sum(fwhm ** 2 for _, fwhm in components))


def _check_fraction(**fractions):
    for name, value in fractions.items():
        if not 0 <= value <= 1:
            raise DomainError('%s must be within [0, 1], got %r' % (name, value))


def singles_rate(pair_rate, arm_transmittance, arm_efficiency, dark_rate):
    _check_fraction(arm_transmittance=arm_transmittance, arm_efficiency=arm_efficiency)
    return pair_rate * arm_transmittance * arm_efficiency + dark_rate


def capture_fraction(window, deltaT):
    """Share of a Gaussian peak of FWHM deltaT inside a centered gate"""
    if not window > 0:
        raise DomainError('window must be > 0')
    if math.isinf(window):
        return 1.0
    if not deltaT > 0:
        return 1.0
    return float(erf(math.sqrt(math.log(2)) * window / deltaT))


def coincidence_rates(pair_rate, trans_a, trans_b, eff_a, eff_b, singles_a, singles_b, window, deltaT):
    """(true, accidental) coincidence rates.

    `singles_*` are the photon singles feeding accidental pairings; dark counts
    are handled by dark_coincidence_rate.
    """
    _check_fraction(trans_a=trans_a, trans_b=trans_b, eff_a=eff_a, eff_b=eff_b)
    true = pair_rate * trans_a * trans_b * eff_a * eff_b * capture_fraction(window, deltaT)
    return true, singles_a * singles_b * window * 1e-12


def dark_coincidence_rate(dark_a, dark_b, singles_a, singles_b, window):
    return (dark_a * singles_b + dark_b * singles_a + dark_a * dark_b) * window * 1e-12


def predict_qber(true_rate, accidental_rate, dark_rate, e_pol):
    if min(true_rate, accidental_rate, dark_rate) < 0:
        raise DomainError('rates must be >= 0')
    _check_fraction(e_pol=e_pol)
    total = true_rate + accidental_rate + dark_rate
    if total == 0:
        raise DomainError('QBER is undefined without coincidences')
    parts = (e_pol * true_rate / total, 0.5 * accidental_rate / total, 0.5 * dark_rate / total)
    return QberBreakdown(parts[0], parts[1], parts[2], sum(parts))


def calibrate_e_pol(true_rate, accidental_rate, dark_rate, target):
    """Misalignment error that makes predict_qber return `target`"""
    if not true_rate > 0:
        raise DomainError('calibration needs a true coincidence rate')
    total = true_rate + accidental_rate + dark_rate
    e_pol = (target * total - 0.5 * accidental_rate - 0.5 * dark_rate) / true_rate
    if not 0 <= e_pol <= 1:
        raise DomainError('target QBER %.4f is unreachable from these rates' % target)
    return e_pol


def sifted_fraction():
    """Passive 50:50 basis choice on both arms"""
    return 0.5


def gate_window(deltaT, gate='relative', value=1.0):
    if gate == 'relative':
        return value * deltaT
    elif gate == 'fixed':
        return value
    raise DomainError('unknown gate policy %r' % gate)


def channel_rates(pair, pair_rate, arm_a, arm_b, detector_a, detector_b, channel_fwhm=1.25, sigma0=60.0,
                  gate='relative', gate_value=1.0, deltaT=None):
    """Analytic rates for one channel pair; `deltaT` overrides the link timing"""
    if deltaT is None:
        deltaT = channel_timing(pair, arm_a, arm_b, channel_fwhm, sigma0).deltaT
    window = gate_window(deltaT, gate, gate_value)
    trans_a, trans_b = arm_transmittance(arm_a), arm_transmittance(arm_b)
    photons_a = pair_rate * trans_a * detector_a.efficiency
    photons_b = pair_rate * trans_b * detector_b.efficiency
    true, accidental = coincidence_rates(pair_rate, trans_a, trans_b, detector_a.efficiency,
                                         detector_b.efficiency, photons_a, photons_b, window, deltaT)
    dark = dark_coincidence_rate(detector_a.dark_rate, detector_b.dark_rate, photons_a, photons_b, window)
    return ChannelRates(pair.label, deltaT, window, capture_fraction(window, deltaT),
                        photons_a + detector_a.dark_rate, photons_b + detector_b.dark_rate,
                        true, accidental, dark)


def link_qber(rates, e_pol):
    """QBER of the coincidences pooled over every channel"""
    return predict_qber(sum(r.true for r in rates), sum(r.accidental for r in rates),
                        sum(r.dark for r in rates), e_pol)
