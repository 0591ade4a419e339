"""Monte Carlo timetag streams, coincidence matching, histograms and peak fits.

Times are integer picoseconds (int64). Detector ids pack arm, basis and
outcome as ``arm * 4 + basis * 2 + outcome`` with arm A = 0, basis Z = 0.
"""
import json
import math
import logging
from collections import namedtuple

import numpy as np
from numba import njit
from scipy.special import erf
from scipy.optimize import curve_fit

from .errors import ContractError, DomainError, FitError
from .helpers import json_encode
from .link import group_delay, channel_timing, arm_transmittance, pair_wavelengths


_log = logging.getLogger('wdmqkd')

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
RECORD = np.dtype([('time', '<u8'), ('detector', 'u1')])

# substreams of one channel; dark counts draw from DARK + detector id
PAIRS, ONLY_A, ONLY_B = range(3)
DARK = 8


class TimetagStream(namedtuple('TimetagStream', ['times', 'detectors', 'duration', 'channel'])):
    """duration in s; times sorted and inside [0, duration)"""
    __slots__ = ()

    def __len__(self):
        return len(self.times)

    def check_sorted(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) < 0):
            raise ContractError('timetag stream %s is not sorted' % self.channel)
        return self


DetectorId = namedtuple('DetectorId', ['arm', 'basis', 'outcome'])
CoincidenceTally = namedtuple('CoincidenceTally', ['counts', 'window', 'offset'])
HistogramFit = namedtuple('HistogramFit', ['bins', 'fit_center', 'fit_fwhm', 'fit_amplitude', 'floor', 'rms'])
Outcomes = namedtuple('Outcomes', ['raw', 'sifted', 'errors_Z', 'errors_X', 'qber_Z', 'qber_X', 'qber_total'])
SimulatedChannel = namedtuple('SimulatedChannel', ['stream_a', 'stream_b', 'offset', 'deltaT'])


def detector_id(arm, basis, outcome):
    return arm * 4 + basis * 2 + outcome


def decode_detector(value):
    value = int(value)
    return DetectorId('AB'[value // 4], 'ZX'[(value // 2) % 2], value % 2)


def substream(seed, channel, stream):
    """Independent counter-based generator per (seed, channel, stream)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(channel), int(stream)])))


def _uniform_times(rng, count, start, stop):
    return rng.uniform(start, stop, count)


def _jitter(rng, times, fwhm):
    if fwhm <= 0:
        return times
    return times + rng.normal(0.0, fwhm / FWHM_PER_SIGMA, len(times))


def simulate_channel(pair, pair_rate, arm_a, arm_b, detector_a, detector_b, e_pol, duration, seed,
                     channel_index=0, channel_fwhm=1.25, sigma0=60.0, excess_jitter=0.0):
    """Timetag streams of both arms for one channel pair.

    Arm B detects with sigma0/sqrt(2) of jitter; arm A adds the rest of the
    link timing budget and any excess jitter, so the coincidence peak has
    FWHM sqrt(deltaT**2 + excess**2). Pairs are emitted early enough that
    arrivals in [0, duration) are stationary.
    """
    if not duration > 0:
        raise DomainError('duration must be > 0')
    if not 0 <= e_pol <= 1:
        raise DomainError('e_pol must be within [0, 1]')
    span = duration * 1e12
    signal, idler = pair_wavelengths(pair)
    delay_a, delay_b = group_delay(signal, arm_a), group_delay(idler, arm_b)
    base = min(delay_a, delay_b)
    delay_a, delay_b = delay_a - base, delay_b - base

    budget = channel_timing(pair, arm_a, arm_b, channel_fwhm, sigma0)
    jitter_b = sigma0 / math.sqrt(2.0)
    jitter_a = math.sqrt(max(budget.deltaT ** 2 + excess_jitter ** 2 - jitter_b ** 2, 0.0))
    lead = max(delay_a, delay_b) + 10 * max(jitter_a, jitter_b)
    window = span + lead

    p_a = arm_transmittance(arm_a) * detector_a.efficiency
    p_b = arm_transmittance(arm_b) * detector_b.efficiency
    emitted = pair_rate * window * 1e-12

    times_a, times_b, ids_a, ids_b = [], [], [], []

    rng = substream(seed, channel_index, PAIRS)
    n = rng.poisson(emitted * p_a * p_b)
    emission = _uniform_times(rng, n, -lead, span)
    basis_a = rng.integers(0, 2, n)
    basis_b = rng.integers(0, 2, n)
    outcome_a = rng.integers(0, 2, n)
    flip = rng.random(n) < e_pol
    random_b = rng.integers(0, 2, n)
    outcome_b = np.where(basis_a == basis_b, outcome_a ^ flip, random_b)
    times_a.append(_jitter(rng, emission + delay_a, jitter_a))
    times_b.append(_jitter(rng, emission + delay_b, jitter_b))
    ids_a.append(detector_id(0, basis_a, outcome_a))
    ids_b.append(detector_id(1, basis_b, outcome_b))

    for stream, prob, delay, jitter, times, ids, arm in (
            (ONLY_A, p_a * (1 - p_b), delay_a, jitter_a, times_a, ids_a, 0),
            (ONLY_B, p_b * (1 - p_a), delay_b, jitter_b, times_b, ids_b, 1)):
        rng = substream(seed, channel_index, stream)
        n = rng.poisson(emitted * prob)
        emission = _uniform_times(rng, n, -lead, span)
        times.append(_jitter(rng, emission + delay, jitter))
        ids.append(detector_id(arm, rng.integers(0, 2, n), rng.integers(0, 2, n)))

    for detector, times, ids, arm in ((detector_a, times_a, ids_a, 0), (detector_b, times_b, ids_b, 1)):
        for logical in range(4):
            rng = substream(seed, channel_index, DARK + arm * 4 + logical)
            n = rng.poisson(detector.dark_rate / 4.0 * duration)
            times.append(_uniform_times(rng, n, 0.0, span))
            ids.append(np.full(n, arm * 4 + logical))

    label = pair.label
    stream_a = _assemble(times_a, ids_a, span, duration, label)
    stream_b = _assemble(times_b, ids_b, span, duration, label)
    _log.debug('simulated %s: %d A events, %d B events', label, len(stream_a), len(stream_b))
    return SimulatedChannel(stream_a, stream_b, int(round(delay_b - delay_a)),
                            math.hypot(budget.deltaT, excess_jitter))


def _assemble(times, ids, span, duration, channel):
    times = np.floor(np.concatenate(times))
    ids = np.concatenate(ids).astype(np.uint8)
    keep = (times >= 0) & (times < span)
    times, ids = times[keep].astype(np.int64), ids[keep]
    order = np.lexsort((ids, times))
    return TimetagStream(times[order], ids[order], duration, channel)


@njit(cache=True)
def _match(ta, tb, window, offset):
    m = len(tb)
    used = np.zeros(m, np.bool_)
    ia = np.empty(min(len(ta), m), np.int64)
    ib = np.empty(min(len(ta), m), np.int64)
    count = 0
    lo = 0
    for i in range(len(ta)):
        if count == len(ia):
            break
        t = ta[i] + offset
        while lo < m and 2 * (t - tb[lo]) > window:
            lo += 1
        best = -1
        best_d = 0
        j = lo
        while j < m and 2 * (tb[j] - t) <= window:
            if not used[j]:
                d = abs(tb[j] - t)
                if best < 0 or d < best_d:
                    best = j
                    best_d = d
            j += 1
        if best >= 0:
            used[best] = True
            ia[count] = i
            ib[count] = best
            count += 1
    return ia[:count], ib[:count]


def match_events(a, b, window, offset=0):
    """Index pairs of greedy nearest-unused matches with 2|tB - tA - offset| <= window"""
    if not window > 0:
        raise DomainError('window must be > 0')
    a.check_sorted()
    b.check_sorted()
    return _match(np.asarray(a.times, np.int64), np.asarray(b.times, np.int64), float(window), int(offset))


def brute_force_coincidences(a, b, window, offset=0):
    """All-pairs version of match_events, quadratic, for verification"""
    used = set()
    ia, ib = [], []
    for i, ta in enumerate(a.times):
        candidates = [(abs(int(tb) - int(ta) - offset), j) for j, tb in enumerate(b.times)
                      if j not in used and 2 * abs(int(tb) - int(ta) - offset) <= window]
        if candidates:
            j = min(candidates)[1]
            used.add(j)
            ia.append(i)
            ib.append(j)
    return np.array(ia, np.int64), np.array(ib, np.int64)


def tally(a, b, ia, ib, window, offset=0):
    counts = np.zeros((4, 4), np.int64)
    np.add.at(counts, (a.detectors[ia].astype(np.int64) % 4, b.detectors[ib].astype(np.int64) % 4), 1)
    return CoincidenceTally(counts, window, offset)


def find_coincidences(a, b, window, offset=0):
    ia, ib = match_events(a, b, window, offset)
    return tally(a, b, ia, ib, window, offset)


def tally_outcomes(t):
    """Raw, sifted and error counts; a QBER is None when its basis has no sifted bits"""
    counts = np.asarray(t.counts)
    if counts.shape != (4, 4) or np.any(counts < 0):
        raise DomainError('tally must be a non-negative 4x4 matrix')
    sifted_z = int(counts[0:2, 0:2].sum())
    sifted_x = int(counts[2:4, 2:4].sum())
    errors_z = int(counts[0, 1] + counts[1, 0])
    errors_x = int(counts[2, 3] + counts[3, 2])
    ratio = lambda e, s: (e / float(s)) if s else None
    return Outcomes(int(counts.sum()), sifted_z + sifted_x, errors_z, errors_x,
                    ratio(errors_z, sifted_z), ratio(errors_x, sifted_x),
                    ratio(errors_z + errors_x, sifted_z + sifted_x))


@njit(cache=True)
def _histogram(ta, tb, start, bin_width, nbins):
    counts = np.zeros(nbins, np.int64)
    m = len(tb)
    lo = 0
    for i in range(len(ta)):
        t0 = ta[i] + start
        while lo < m and tb[lo] < t0:
            lo += 1
        j = lo
        while j < m:
            k = (tb[j] - t0) // bin_width
            if k >= nbins:
                break
            counts[k] += 1
            j += 1
    return counts


def delay_histogram(a, b, bin_width=10, span=4000, offset=0):
    """Counts of tB - tA - offset over [-span/2, span/2), as (centers, counts)"""
    bin_width, span = int(bin_width), int(span)
    if bin_width < 1 or span < bin_width:
        raise DomainError('need 1 <= bin_width <= span')
    a.check_sorted()
    b.check_sorted()
    nbins = span // bin_width
    start = -(nbins * bin_width) // 2
    counts = _histogram(np.asarray(a.times, np.int64), np.asarray(b.times, np.int64),
                        int(offset) + start, bin_width, nbins)
    centers = start + bin_width * (np.arange(nbins) + 0.5)
    return centers, counts


def _binned_peak(edges):
    def model(_, center, sigma, amplitude, floor):
        z = (edges - center) / (sigma * math.sqrt(2.0))
        return amplitude * 0.5 * np.diff(erf(z)) + floor
    return model


def fit_coincidence_peak(a, b, bin_width=10, span=4000, offset=0):
    """Least-squares Gaussian over a flat floor, integrated over each bin"""
    centers, counts = delay_histogram(a, b, bin_width, span, offset)
    nonzero = int(np.count_nonzero(counts))
    if nonzero < 5:
        raise FitError('only %d nonzero bins in the delay histogram, need 5' % nonzero)

    edges = np.append(centers - bin_width / 2.0, centers[-1] + bin_width / 2.0)
    floor = float(np.median(counts))
    top = int(np.argmax(counts))
    above = counts > floor + (counts[top] - floor) / 2.0
    sigma = max(np.count_nonzero(above) * bin_width / FWHM_PER_SIGMA, bin_width / 2.0)
    amplitude = max(float(counts.sum() - floor * len(counts)), 1.0)
    p0 = (centers[top], sigma, amplitude, floor)
    bounds = ([edges[0], bin_width * 1e-3, 0.0, 0.0], [edges[-1], float(span), np.inf, np.inf])
    try:
        params, _ = curve_fit(_binned_peak(edges), centers, counts.astype(float), p0=p0, bounds=bounds)
    except (RuntimeError, ValueError) as e:
        raise FitError('peak fit did not converge: %s' % e)

    center, sigma, amplitude, floor = params
    residual = counts - _binned_peak(edges)(centers, *params)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    _log.debug('peak at %.1f ps, FWHM %.1f ps', center, sigma * FWHM_PER_SIGMA)
    bins = [(float(c), int(n)) for c, n in zip(centers, counts)]
    return HistogramFit(bins, float(center), float(sigma * FWHM_PER_SIGMA), float(amplitude), float(floor), rms)


def write_stream(path, stream, meta=None):
    """Packed little-endian (u8 time_ps, u1 detector) records and a JSON sidecar"""
    records = np.empty(len(stream), RECORD)
    records['time'] = stream.times
    records['detector'] = stream.detectors
    with open(path, 'wb') as f:
        f.write(records.tobytes())
    header = dict(meta or {})
    header.update(duration=stream.duration, channel=stream.channel, count=len(stream),
                  detectors=dict((str(d), int(n)) for d, n in
                                 zip(*np.unique(stream.detectors, return_counts=True))))
    with open(path + '.json', 'w', encoding='utf-8') as f:
        f.write(json_encode(header, indent=2) + '\n')
    return path


def read_stream(path):
    with open(path + '.json', encoding='utf-8') as f:
        header = json.load(f)
    records = np.fromfile(path, RECORD)
    if len(records) != header['count']:
        raise ContractError('%s holds %d records, header says %d' % (path, len(records), header['count']))
    stream = TimetagStream(records['time'].astype(np.int64), records['detector'].copy(),
                           header['duration'], header['channel'])
    return stream.check_sorted(), header
