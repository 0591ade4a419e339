"""Key rates and entanglement quality.

Finite-key lengths follow the composable bound

    l = floor(n (1 - h(delta + nu)) - r - t + 2 log2(2 eps_pa))

maximized over (beta, nu, xi) with k = floor(beta m) bits spent on parameter
estimation, r = fe n h(delta) leaked by error correction and
eps_qkd = 10**-s = 2**-t + 2 eps_pe + eps_pa.
"""
import math
import logging
from collections import namedtuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError


_log = logging.getLogger('wdmqkd')

FE = 1.09
BELL_SETTINGS = ((0.0, math.pi / 8), (0.0, 3 * math.pi / 8), (math.pi / 4, math.pi / 8), (math.pi / 4, 3 * math.pi / 8))

KeyRateInputs = namedtuple('KeyRateInputs', ['sifted_Z', 'sifted_X', 'qber_Z', 'qber_X', 'fe', 'acquisition_time'])
AsymptoticKey = namedtuple('AsymptoticKey', ['secure_bits', 'rate_bits_per_s', 'secure_Z', 'secure_X'])
FiniteKeyProblem = namedtuple('FiniteKeyProblem', ['m', 'delta', 's', 'fe', 'ordering'])
Certificate = namedtuple('Certificate', ['alpha', 'beta', 'nu', 'xi'])
FiniteKey = namedtuple('FiniteKey', ['secure_bits', 'certificate'])
BlockKey = namedtuple('BlockKey', ['secure_bits', 'policy', 'blocks'])
BellResult = namedtuple('BellResult', ['settings', 'correlations', 's_value'])


def finite_key_problem(m, delta, s=9, fe=FE, ordering='printed'):
    if ordering not in ('swapped', 'printed'):
        raise DomainError('unknown constraint ordering %r' % ordering)
    return FiniteKeyProblem(int(m), float(delta), int(s), float(fe), ordering)


def binary_entropy(x):
    """h2(x) in bits; h2(0) = h2(1) = 0"""
    if not 0 <= x <= 1:
        raise DomainError('entropy argument must be within [0, 1], got %r' % x)
    if x in (0, 1):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _entropy(x):
    x = np.clip(x, 1e-300, 1 - 1e-16)
    return -x * np.log2(x) - (1 - x) * np.log2(1 - x)


def pooled_inputs(sifted, qber, acquisition_time, fe=FE):
    """Per-basis inputs when only pooled figures exist: bits split 50/50, one QBER"""
    half = sifted / 2.0
    return KeyRateInputs(half, sifted - half, qber, qber, fe, acquisition_time)


def asymptotic_key(inputs):
    """R = R_Z + R_X with R_Z = Q_Z [1 - fe h(E_Z) - h(E_X)], negative terms clamped"""
    if inputs.fe < 1:
        raise DomainError('error correction inefficiency must be >= 1')
    h_z, h_x = binary_entropy(inputs.qber_Z), binary_entropy(inputs.qber_X)
    secure_z = inputs.sifted_Z * max(0.0, 1 - inputs.fe * h_z - h_x)
    secure_x = inputs.sifted_X * max(0.0, 1 - inputs.fe * h_x - h_z)
    secure = secure_z + secure_x
    rate = secure / inputs.acquisition_time if inputs.acquisition_time else None
    return AsymptoticKey(secure, rate, secure_z, secure_x)


def _terms(problem, beta, nu, xi):
    """Continuous key length bound (before the floor); -inf where a constraint fails"""
    m, delta = problem.m, problem.delta
    beta, nu, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (beta, nu, xi)))
    k = np.floor(beta * m)
    n = m - k
    m_err = np.ceil(m * (delta + xi))
    gamma = np.maximum(1 / (n + 1) + 1 / (k + 1), 1 / (m_err + 1) + 1 / np.maximum(m - m_err + 1, 1))
    nu_prime = nu - xi
    excess = n * n * nu_prime * nu_prime - 1
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        eps_pe = np.sqrt(np.exp(-2 * m * k * xi * xi / (n + 1)) + np.exp(-2 * gamma * excess))
        t = (problem.s + 2) * math.log2(10)
        eps_pa = 10.0 ** -problem.s - 2.0 ** -t - 2 * eps_pe
        r = problem.fe * n * _entropy(delta)
        bound = n * (1 - _entropy(np.minimum(delta + nu, 0.5))) - r - t + 2 * np.log2(2 * eps_pa)

    if problem.ordering == 'swapped':
        ordered = (0 < xi) & (xi < nu) & (nu < 0.5 - delta)
    else:
        ordered = (0 < nu) & (nu < xi) & (xi < 0.5 - delta)
    feasible = ordered & (beta > 0) & (beta <= 0.5) & (k >= 1) & (n >= 1) & (excess > 0) & (eps_pa > 0)
    feasible &= (m_err <= m)
    return np.where(feasible, bound, -np.inf)


def _length(problem, bound):
    return int(min(problem.m, math.floor(bound))) if np.isfinite(bound) else -1


def check_certificate(problem, certificate):
    """Replays every constraint for `certificate`; True when it is feasible and attains alpha"""
    if certificate is None:
        return False
    bound = float(_terms(problem, certificate.beta, certificate.nu, certificate.xi))
    if not np.isfinite(bound):
        return False
    return 0 <= math.floor(certificate.alpha * problem.m) <= min(problem.m, bound)


def _grid(problem, points):
    half = 0.5 - problem.delta
    beta = np.arange(1, points[0] + 1) / float(points[0]) * 0.5
    outer = np.arange(1, points[1] + 1) / float(points[1] + 1) * half
    ratio = np.arange(1, points[2] + 1) / float(points[2] + 1)
    b, o, q = np.meshgrid(beta, outer, ratio, indexing='ij')
    inner = o * q
    if problem.ordering == 'swapped':
        return b, o, inner      # xi < nu
    return b, inner, o          # nu < xi


def finite_key(problem, points=(60, 80, 80), sweeps=3):
    """Largest secure length and the (alpha, beta, nu, xi) that certifies it.

    A coarse grid picks the start (first maximum in lexicographic order), then
    each coordinate is refined with a bounded scalar search. An infeasible
    problem returns 0 bits and no certificate.
    """
    if not problem.m > 0:
        raise DomainError('block length must be > 0')
    if not 0 <= problem.delta < 0.5:
        return FiniteKey(0, None)
    if problem.s < 1:
        raise DomainError('security exponent s must be >= 1')

    beta, nu, xi = _grid(problem, points)
    bound = _terms(problem, beta, nu, xi)
    best = int(np.argmax(bound))
    if not np.isfinite(bound.flat[best]):
        _log.debug('finite key infeasible for m=%d delta=%.4f', problem.m, problem.delta)
        return FiniteKey(0, None)

    x = [float(beta.flat[best]), float(nu.flat[best]), float(xi.flat[best])]
    value = float(bound.flat[best])
    half = 0.5 - problem.delta
    limits = ((1.0 / problem.m, 0.5), (0.0, half), (0.0, half))
    for _ in range(sweeps):
        for i, (lo, hi) in enumerate(limits):
            def objective(v, i=i):
                y = list(x)
                y[i] = v
                b = float(_terms(problem, *y))
                return -b if np.isfinite(b) else 1e300
            result = minimize_scalar(objective, bounds=(lo, hi), method='bounded', options=dict(xatol=1e-9))
            if result.fun < 1e300 and -result.fun > value:
                x[i] = float(result.x)
                value = -float(result.fun)

    secure = _length(problem, value)
    if secure <= 0:
        return FiniteKey(0, None)
    certificate = Certificate(min(1.0, (secure + 0.5) / problem.m), x[0], x[1], x[2])
    if not check_certificate(problem, certificate):
        raise DomainError('finite key certificate failed its constraint replay')
    _log.debug('finite key m=%d delta=%.4f -> %d bits at %r', problem.m, problem.delta, secure, certificate)
    return FiniteKey(secure, certificate)


def split_blocks(total, count):
    """`total` bits in `count` near-equal blocks, the remainder spread one bit each"""
    base, extra = divmod(int(total), int(count))
    return [base + (1 if i < extra else 0) for i in range(count)]


def finite_key_blocks(sifted, delta, channels, policy='pooled', s=9, fe=FE, ordering='printed'):
    """Finite key over one pooled block or one block per channel.

    'auto' keeps per-channel blocks when every block yields key, else pools.
    """
    if policy not in ('auto', 'pooled', 'per_channel'):
        raise DomainError('unknown block policy %r' % policy)
    if int(sifted) <= 0:
        return BlockKey(0, 'pooled' if policy == 'auto' else policy, [])

    def run(sizes):
        return [(size, finite_key(finite_key_problem(size, delta, s, fe, ordering)).secure_bits)
                for size in sizes if size > 0]

    if policy in ('auto', 'per_channel') and channels > 1:
        blocks = run(split_blocks(sifted, channels))
        if policy == 'per_channel' or all(bits > 0 for _, bits in blocks):
            return BlockKey(sum(bits for _, bits in blocks), 'per_channel', blocks)
    blocks = run([int(sifted)])
    return BlockKey(blocks[0][1], 'pooled', blocks)


def correlation_E(counts):
    """(n_pp + n_mm - n_pm - n_mp) / total"""
    total = counts['n_pp'] + counts['n_pm'] + counts['n_mp'] + counts['n_mm']
    if total <= 0:
        raise DomainError('correlation needs at least one count')
    return float(counts['n_pp'] + counts['n_mm'] - counts['n_pm'] - counts['n_mp']) / total


def chsh_s(correlations):
    if len(correlations) != 4:
        raise DomainError('CHSH needs four correlation values')
    e1, e2, e3, e4 = correlations
    return abs(e1 - e2 + e3 + e4)


def visibility(correct, error):
    if correct + error <= 0:
        raise DomainError('visibility needs at least one count')
    return float(correct - error) / (correct + error)


def model_correlation(phi1, phi2, visibility=1.0):
    """Phi+ state with white-noise visibility: E = V cos 2(phi1 - phi2)"""
    return visibility * math.cos(2 * (phi1 - phi2))


def sample_bell_counts(settings=BELL_SETTINGS, visibility=1.0, pairs=100000, seed=0):
    """Coincidence counts per setting pair drawn from the Phi+ model"""
    counts = []
    for index, (phi1, phi2) in enumerate(settings):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xBE11, index])))
        agree = (1 + model_correlation(phi1, phi2, visibility)) / 2.0
        same = int(rng.binomial(pairs, agree))
        n_pp = int(rng.binomial(same, 0.5))
        n_pm = int(rng.binomial(pairs - same, 0.5))
        counts.append(dict(n_pp=n_pp, n_mm=same - n_pp, n_pm=n_pm, n_mp=pairs - same - n_pm))
    return counts


def bell_test(counts, settings=BELL_SETTINGS):
    correlations = [correlation_E(c) for c in counts]
    return BellResult(list(settings), correlations, chsh_s(correlations))
