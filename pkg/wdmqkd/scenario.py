"""A fully assembled link scenario and the analytic chain run over it."""
from collections import namedtuple

from .link import arm_loss, channel_timing
from .source import channel_pair_rate
from .detection import channel_rates, link_qber, predict_qber, calibrate_e_pol, sifted_fraction
from .security import asymptotic_key, pooled_inputs, finite_key_blocks


Scenario = namedtuple('Scenario', ['name', 'source', 'plan', 'arm_a', 'arm_b', 'detector_a', 'detector_b',
                                   'e_pol', 'sigma0', 'jitter', 'excess_jitter', 'gate', 'gate_value',
                                   'catalog', 'fits', 'threshold', 'analysis', 'measured', 'config', 'hash'])


def pair_rate(scenario):
    """Per-channel generation rate G in pairs/s"""
    return channel_pair_rate(scenario.source, scenario.plan.channel_fwhm)


def rates(scenario, generation_rate=None, gate=None, gate_value=None, deltaT=None):
    """ChannelRates for every pair of the plan"""
    G = pair_rate(scenario) if generation_rate is None else generation_rate
    return [channel_rates(pair, G, scenario.arm_a, scenario.arm_b, scenario.detector_a, scenario.detector_b,
                          scenario.plan.channel_fwhm, scenario.sigma0,
                          gate or scenario.gate, scenario.gate_value if gate_value is None else gate_value,
                          deltaT)
            for pair in scenario.plan.pairs]


def timings(scenario):
    return [channel_timing(pair, scenario.arm_a, scenario.arm_b, scenario.plan.channel_fwhm, scenario.sigma0)
            for pair in scenario.plan.pairs]


def predicted_qber(scenario):
    return link_qber(rates(scenario), scenario.e_pol)


def calibrated_e_pol(scenario, target):
    """e_pol that makes this scenario predict `target` QBER"""
    rs = rates(scenario)
    return calibrate_e_pol(sum(r.true for r in rs), sum(r.accidental for r in rs), sum(r.dark for r in rs),
                           target)


def channel_skr(scenario, generation_rate=None):
    """Asymptotic secure bits per second for each channel at the operating point"""
    result = []
    fe = scenario.analysis['fe']
    for r in rates(scenario, generation_rate):
        total = r.true + r.accidental + r.dark
        if total <= 0:
            result.append((r.label, 0.0, None))
            continue
        qber = predict_qber(r.true, r.accidental, r.dark, scenario.e_pol).total
        key = asymptotic_key(pooled_inputs(total * sifted_fraction(), qber, 1.0, fe))
        result.append((r.label, key.rate_bits_per_s, qber))
    return result


def key_inputs(scenario):
    """(raw, qber, acquisition time, source) from measured data or the analytic chain.

    The acquisition time is the mean per-channel time; analytic raw bits pool
    every channel over analysis.duration.
    """
    measured = scenario.measured
    if measured:
        return measured['raw'], measured['qber'], measured['acquisition_time'], 'measured'
    duration = scenario.analysis['duration']
    rs = rates(scenario)
    raw = int(round(sum(r.true + r.accidental + r.dark for r in rs) * duration))
    return raw, link_qber(rs, scenario.e_pol).total, duration, 'analytic'


def _channel_row(r, e_pol, acquisition, fe):
    raw = (r.true + r.accidental + r.dark) * acquisition
    sifted = raw * sifted_fraction()
    qber = predict_qber(r.true, r.accidental, r.dark, e_pol).total if raw > 0 else None
    key = asymptotic_key(pooled_inputs(sifted, qber, acquisition, fe)) if raw > 0 else None
    return dict(label=r.label, raw=raw, sifted=sifted, qber=qber,
                secure=key.secure_bits if key else 0.0,
                skr_bits_per_s=key.rate_bits_per_s if key else 0.0,
                rates=r._asdict())


def key_report(scenario, mode=None):
    """Key analysis in the layout of the published key table.

    `aggregate` carries the link figures; `per_channel` rows are analytic
    predictions over the same acquisition time, asymptotic in every mode.
    """
    analysis = scenario.analysis
    mode = mode or analysis['mode']
    raw, qber, acquisition, origin = key_inputs(scenario)
    sifted = int(raw * sifted_fraction())
    fe = analysis['fe']
    asymptotic = asymptotic_key(pooled_inputs(sifted, qber, acquisition, fe))

    report = dict(mode=mode,
                  origin=origin,
                  loss_db=arm_loss(scenario.arm_a) + arm_loss(scenario.arm_b),
                  acquisition_time_s=acquisition,
                  sifted_rate=sifted / float(acquisition),
                  asymptotic_secure=asymptotic.secure_bits,
                  asymptotic_skr=asymptotic.rate_bits_per_s,
                  basis_split='pooled 50/50')

    if mode == 'finite':
        blocks = finite_key_blocks(sifted, qber, len(scenario.plan.pairs), analysis['block_policy'],
                                   analysis['s'], fe, analysis['ordering'])
        secure, skr = blocks.secure_bits, blocks.secure_bits / float(acquisition)
        report.update(block_policy=blocks.policy, ordering=analysis['ordering'],
                      blocks=[dict(m=m, secure=bits) for m, bits in blocks.blocks])
    else:
        secure, skr = asymptotic.secure_bits, asymptotic.rate_bits_per_s
    report['aggregate'] = dict(raw=raw, sifted=sifted, secure=secure, skr_bits_per_s=skr, qber=qber)

    rows = rates(scenario)
    if rows:
        breakdown = link_qber(rows, scenario.e_pol)
        report['qber_breakdown'] = dict(e_pol_pp=100 * breakdown.e_pol, e_acc_pp=100 * breakdown.e_accidental,
                                        e_dark_pp=100 * breakdown.e_dark, total_pp=100 * breakdown.total)
    report['per_channel'] = [_channel_row(r, scenario.e_pol, acquisition, fe) for r in rows]
    return report
