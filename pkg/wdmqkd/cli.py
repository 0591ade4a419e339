"""Command line surface: one Command class per subcommand.

    wdmqkd <command> --config=301km --out=out/ [--seed=N] [--mode=finite|asymptotic] [--channels=C42,C50]

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
import os
import sys
import time
import logging
import traceback as _traceback

from tornado.options import OptionParser, Error as OptionsError
from tornado.log import define_logging_options, enable_pretty_logging
from valideer import ValidationError

from . import logger
from . import scenario as _scenario
from .validated import validated
from .helpers import write_csv, write_json
from .config import load_config, override, build_scenario
from .source import (photon_energy, emitted_optical_power, generation_rate, spdc_spectrum,
                     spectral_peaks, lobe_fwhm, usable_span, channelize, channel_plan)
from .link import (link_loss_budget, arm_loss, dispersion_table, plan_compensation, sigma_c_range, pmd_bound,
                   pair_wavelengths)
from .detection import combine_jitter, gate_window
from .timetags import simulate_channel, match_events, tally, tally_outcomes, fit_coincidence_peak, write_stream
from .security import sample_bell_counts, bell_test, BELL_SETTINGS
from .optimizer import default_sweep, sweep_skr
from .errors import FitError


_log = logging.getLogger('wdmqkd')

OPTIONS = {"+config": "path",
           "+out": "path",
           "seed": "seed",
           "mode": "mode",
           "channels": "channels"}


class Command(object):
    name = None

    def __init__(self, options):
        self.options = dict(options)
        self.outputs = []
        self.reason = None
        self.summary = {}
        self._status = 0
        self._start = time.time()
        self._finish = None
        self.scenario = None

    def get_status(self):
        return self._status

    def run_time(self):
        return (self._finish or time.time()) - self._start

    def get_log_payload(self):
        return dict(config=self.options.get('config'),
                    hash=self.scenario.hash if self.scenario else None)

    @property
    def debug(self):
        return logger.DEBUG

    def echo(self, line):
        sys.stdout.write(line + '\n')

    def output(self, filename):
        """Path of an artifact inside --out; tracked so a failed run can remove it"""
        path = os.path.join(self.out, filename)
        self.outputs.append(path)
        return path

    @validated(OPTIONS)
    def prepare(self, options):
        self.out = options['out']
        config = override(load_config(options['config']),
                          seed=options.get('seed'), mode=options.get('mode'), channels=options.get('channels'))
        base_dir = os.path.dirname(os.path.abspath(options['config'])) if os.path.exists(options['config']) else None
        self.scenario = build_scenario(config, base_dir, name=os.path.basename(options['config']))
        if not os.path.isdir(self.out):
            os.makedirs(self.out)
        return options

    def run(self):
        raise NotImplementedError

    def report(self):
        s = self.scenario
        from . import __version__
        write_json(self.output('report.json'),
                   dict(command=self.name,
                        config_hash=s.hash,
                        config=s.config,
                        provenance=dict(tool='wdmqkd', version=__version__, seed=s.analysis['seed']),
                        summary=self.summary))

    def execute(self):
        try:
            self.prepare()
            self.run()
            self.report()

        except ValidationError as e:
            self._status = 1
            self.reason = str(e)
            if getattr(e, 'errors', None):
                self._log_error = dict(errors=['%s: %s' % item for item in e.errors])
            self.cleanup()

        except Exception:
            self._status = 2
            typ, value, tb = sys.exc_info()
            self.reason = '%s: %s' % (typ.__name__, value)
            self.log_exception(typ, value, tb)
            self.cleanup()

        self._finish = time.time()
        logger.handler(self)
        return self._status

    def log_exception(self, typ, value, tb):
        if self.debug:
            try:
                from pygments import highlight
                from pygments.lexers import get_lexer_by_name
                from pygments.formatters import TerminalFormatter

                tbtext = ''.join(_traceback.format_exception(typ, value, tb))
                lexer = get_lexer_by_name("pytb", stripall=True)
                formatter = TerminalFormatter()
                sys.stderr.write('\n' + highlight(tbtext, lexer, formatter) + '\n')
            except Exception:
                _traceback.print_tb(tb)
        logger.traceback((typ, value, tb), **self.get_log_payload())

    def cleanup(self):
        for path in reversed(self.outputs):
            for name in (path, path + '.json'):
                if os.path.exists(name):
                    os.remove(name)
        self.outputs = []


class Spectrum(Command):
    """Temperature-tuned SPDC curves from the degenerate point to T_d + 5"""
    name = 'spectrum'

    def run(self):
        source = self.scenario.source
        params, pump = source.waveguide, source.pump_wavelength
        grid = [1450.0 + 0.1 * i for i in range(2501)]
        offsets = range(6)
        curves, rows = [], []
        for offset in offsets:
            temperature = params.degenerate_temperature + offset
            spectrum = spdc_spectrum(temperature, params, grid, pump)
            curves.append(spectrum)
            short, long_ = spectral_peaks(temperature, params, pump)
            rows.append(dict(temperature=temperature, peak_short=short, peak_long=long_,
                             lobe_fwhm=lobe_fwhm(spectrum, pump), usable_span=usable_span(spectrum, 0.1)))

        write_csv(self.output('spectrum.csv'),
                  ['wavelength_nm'] + ['T%+d' % o for o in offsets],
                  [[wl] + [c[i].relative_intensity for c in curves] for i, wl in enumerate(grid)])
        pairs = self.scenario.plan.pairs
        signal, idler = pair_wavelengths(pairs[len(pairs) // 2]) if pairs else (2 * pump, 2 * pump)
        self.summary = dict(thermal_scale=params.thermal_scale,
                            grating_correction=params.grating_correction,
                            peaks=rows,
                            generation_rate=generation_rate(source),
                            channel_pair_rate=_scenario.pair_rate(self.scenario),
                            emitted_power_nw=emitted_optical_power(source.pump_power, source.brightness,
                                                                   signal, idler),
                            photon_energy_j=[photon_energy(signal), photon_energy(idler)])
        for row in rows:
            self.echo('T=%.1f degC  peaks %.1f / %.1f nm  lobe FWHM %.1f nm' % (
                row['temperature'], row['peak_short'], row['peak_long'], row['lobe_fwhm']))


class Channels(Command):
    name = 'channels'

    def run(self):
        s = self.scenario
        pump = s.source.pump_wavelength
        write_csv(self.output('channels.csv'),
                  ['label', 'signal_thz', 'idler_thz', 'signal_nm', 'idler_nm'],
                  [[p.label, p.signal_thz, p.idler_thz] + list(pair_wavelengths(p)) for p in s.plan.pairs])

        params = s.source.waveguide
        grid = [2 * pump - 150 + 0.05 * i for i in range(6001)]
        spectrum = spdc_spectrum(params.temperature, params, grid, pump)
        counts = dict(('%g GHz' % spacing, len(channelize(spectrum, pump, spacing, s.plan.channel_fwhm).pairs))
                      for spacing in (100.0, 200.0))
        self.summary = dict(pairs=[p.label for p in s.plan.pairs], grid_spacing=s.plan.grid_spacing,
                            channel_fwhm=s.plan.channel_fwhm, available=counts)
        self.echo('%d channel pairs: %s' % (len(s.plan.pairs), ' '.join(p.label for p in s.plan.pairs)))


class Budget(Command):
    name = 'budget'

    def run(self):
        s = self.scenario
        budget = link_loss_budget(s.arm_a, s.arm_b)
        write_csv(self.output('budget.csv'), ['item', 'loss_db'], budget.items + [('Total', budget.total)])
        self.summary = dict(items=dict(budget.items), total_db=budget.total,
                            arm_a_db=arm_loss(s.arm_a), arm_b_db=arm_loss(s.arm_b))
        for item, loss in budget.items:
            self.echo('%-16s %6.2f dB' % (item, loss))
        self.echo('%-16s %6.2f dB' % ('Total', budget.total))


class Dispersion(Command):
    name = 'dispersion'

    def run(self):
        s = self.scenario
        fwhm = s.plan.channel_fwhm
        rows = dispersion_table(s.plan.pairs, s.arm_a, s.arm_b, fwhm, s.sigma0)
        write_csv(self.output('dispersion.csv'),
                  ['DWDM channel'] + [p.label for p in s.plan.pairs],
                  [[label] + values for label, values in rows])

        target = channel_plan([s.config['link']['target']], s.source.pump_wavelength, s.plan.grid_spacing,
                              fwhm).pairs[0]
        plan = plan_compensation(s.arm_a, s.arm_b, s.catalog, target, s.plan.pairs, fwhm,
                                 threshold=s.threshold)
        self.summary = dict(
            fits=dict((kind, fit._asdict()) for kind, fit in s.fits.items()),
            plan=dict(counts=plan.counts, residual_ps=plan.residual, insertion_loss_db=plan.insertion_loss,
                      feasible=plan.feasible, profile_ps=plan.profile),
            sigma_c_range=sigma_c_range(s.plan.pairs, s.arm_a, fwhm),
            pmd_ps=pmd_bound(s.arm_a.length + s.arm_b.length, s.config['link']['pmd_coeff']),
            combined_jitter=combine_jitter(s.jitter) if s.jitter.components else None)
        self.echo('planner: %d DCM + %d DCF, residual %.1f ps at %s%s' % (
            plan.counts['DCM'], plan.counts['DCF'], plan.residual, target.label,
            '' if plan.feasible else ' (infeasible)'))
        for label, values in rows:
            self.echo('%-30s %s' % (label, ' '.join('%8.1f' % v for v in values)))


class Simulate(Command):
    """Monte Carlo timetags per channel, then coincidences, tallies and peak fits"""
    name = 'simulate'

    def run(self):
        s = self.scenario
        seed, duration = s.analysis['seed'], s.analysis['duration']
        G = _scenario.pair_rate(s)
        rows, totals = [], [0] * 4
        for index, pair in enumerate(s.plan.pairs):
            sim = simulate_channel(pair, G, s.arm_a, s.arm_b, s.detector_a, s.detector_b, s.e_pol, duration, seed,
                                   index, s.plan.channel_fwhm, s.sigma0, s.excess_jitter)
            for arm, stream in (('a', sim.stream_a), ('b', sim.stream_b)):
                write_stream(self.output('timetags_%s_%s.bin' % (pair.label, arm)), stream,
                             dict(seed=seed, config_hash=s.hash))
            window = gate_window(sim.deltaT, s.gate, s.gate_value)
            ia, ib = match_events(sim.stream_a, sim.stream_b, window, sim.offset)
            outcome = tally_outcomes(tally(sim.stream_a, sim.stream_b, ia, ib, window, sim.offset))
            try:
                fit = fit_coincidence_peak(sim.stream_a, sim.stream_b, offset=sim.offset)
                fwhm = fit.fit_fwhm
                write_csv(self.output('histogram_%s.csv' % pair.label), ['delay_ps', 'count'], fit.bins)
            except FitError as e:
                _log.warning('%s: %s', pair.label, e)
                fwhm = None
            rows.append([pair.label, len(sim.stream_a), len(sim.stream_b), outcome.raw, outcome.sifted,
                         outcome.qber_Z, outcome.qber_X, outcome.qber_total, fwhm, sim.deltaT])
            for i, value in enumerate((outcome.raw, outcome.sifted, outcome.errors_Z, outcome.errors_X)):
                totals[i] += value

        write_csv(self.output('simulate.csv'),
                  ['channel', 'events_a', 'events_b', 'raw', 'sifted', 'qber_Z', 'qber_X', 'qber', 'fit_fwhm_ps',
                   'predicted_fwhm_ps'], rows)
        raw, sifted, errors = totals[0], totals[1], totals[2] + totals[3]
        self.summary = dict(duration=duration, seed=seed, raw=raw, sifted=sifted,
                            qber=(errors / float(sifted)) if sifted else None,
                            channels=[dict(zip(('label', 'raw', 'sifted', 'qber', 'fit_fwhm_ps'),
                                               (r[0], r[3], r[4], r[7], r[8]))) for r in rows])
        self.echo('raw %d  sifted %d  qber %s' % (raw, sifted,
                                                 '%.4f' % self.summary['qber'] if sifted else 'undefined'))


class Keyrate(Command):
    name = 'keyrate'

    def run(self):
        report = _scenario.key_report(self.scenario)
        write_json(self.output('keyrate.json'), report)
        aggregate = report['aggregate']
        table = [('Loss (dB)', report['loss_db']),
                 ('Data acquisition time (s)', report['acquisition_time_s']),
                 ('QBER (%)', 100 * aggregate['qber']),
                 ('Raw key (bit)', aggregate['raw']),
                 ('Sifted key (bit)', aggregate['sifted']),
                 ('Secure key (bit)', aggregate['secure']),
                 ('Secure key rate (bit/s)', aggregate['skr_bits_per_s']),
                 ('Asymptotic key (bit)', report['asymptotic_secure']),
                 ('Asymptotic key rate (bit/s)', report['asymptotic_skr'])]
        write_csv(self.output('keyrate.csv'), ['item', 'value'], table)
        self.summary = dict((k, v) for k, v in report.items() if k != 'per_channel')
        for item, value in table:
            self.echo('%-30s %s' % (item, '%.6g' % value if value is not None else ''))


class Optimize(Command):
    name = 'optimize'

    def run(self):
        result = sweep_skr(default_sweep(self.scenario))
        write_csv(self.output('surface.csv'), ['rate', 'width', 'qber', 'skr'], result.points)
        self.summary = dict(best=result.best._asdict(), points=len(result.points))
        self.echo('optimum %.3g pairs/s at a %g ps gate: %.4g bits/s' % (result.best.rate, result.best.width,
                                                                        result.best.skr))


class Bell(Command):
    name = 'bell'

    def run(self):
        s = self.scenario
        visibility = 1 - 2 * s.e_pol
        counts = sample_bell_counts(BELL_SETTINGS, visibility, pairs=100000, seed=s.analysis['seed'])
        result = bell_test(counts)
        write_csv(self.output('bell.csv'), ['phi1', 'phi2', 'n_pp', 'n_pm', 'n_mp', 'n_mm', 'E'],
                  [list(setting) + [c['n_pp'], c['n_pm'], c['n_mp'], c['n_mm'], e]
                   for setting, c, e in zip(result.settings, counts, result.correlations)])
        self.summary = dict(visibility=visibility, correlations=result.correlations, s_value=result.s_value)
        self.echo('S = %.4f' % result.s_value)


COMMANDS = dict((c.name, c) for c in (Spectrum, Channels, Budget, Dispersion, Simulate, Keyrate, Optimize, Bell))


def option_parser():
    parser = OptionParser()
    parser.define('config', type=str, help='scenario file or bundled preset name (201km, 301km, 404km)')
    parser.define('out', type=str, default='out', help='output directory')
    parser.define('seed', type=str, help='unsigned 64 bit seed')
    parser.define('mode', type=str, help='finite or asymptotic')
    parser.define('channels', type=str, help='comma separated channel subset, e.g. C42,C50')
    define_logging_options(parser)
    return parser


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    command = argv[1] if len(argv) > 1 and not argv[1].startswith('-') else None
    parser = option_parser()
    try:
        # tornado stops parsing at the first positional argument
        args = parser.parse_command_line(argv[:1] + argv[(2 if command else 1):])
    except OptionsError as e:
        _log.error('%s', e)
        return 1
    enable_pretty_logging(options=parser, logger=_log)

    if command not in COMMANDS or args:
        _log.error('usage: wdmqkd {%s} --config=... --out=...' % ','.join(sorted(COMMANDS)))
        return 1

    options = dict((name, parser[name]) for name in ('config', 'out', 'seed', 'mode', 'channels'))
    return COMMANDS[command](options).execute()


if __name__ == '__main__':
    sys.exit(main())
