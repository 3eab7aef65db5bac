# Copyright (c) 2026 The riseff Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import argparse
import io
import os
import shutil
import sys
import tempfile
import time
from collections import namedtuple
from configparser import Error as ConfigParserError, \
    MissingSectionHeaderError

import numpy as np
from swift.common.utils import config_true_value, get_logger, readconf

from riseff import __version__
from riseff.common import ConfigError, config_list, multiprocess_collate, \
    resolve_logger
from riseff.fp_beamforming import PhaseOptimizer
from riseff.netmodel import FadingParams, default_ris_positions, \
    realize_channels, sample_topology, split_elements
from riseff.oracle import MAX_GRID_LINKS, GridSpec, baselines, \
    grid_power_search
from riseff.power_control import FAILURE, OK, PowerController
from riseff.system import SystemParams, random_phases, sum_rate, \
    total_power

SWEEPS = ('n-elements', 'pmax', 'rmin')

#: section flat config files are read into
CONF_SECTION = 'riseff'

CSV_COLUMNS = ['sweep_var', 'value', 'b', 'mean_ee_bits_per_hz_per_joule',
               'failure_rate', 'mean_sum_rate', 'mean_total_power_w',
               'trials']
ALGORITHM_COLUMNS = ['sweep_var', 'value', 'b', 'algorithm',
                     'mean_ee_bits_per_hz_per_joule', 'failure_rate',
                     'trials']
ALGORITHMS = ('main', 'no_ris', 'random_phase', 'grid_power')


def _fmt(value):
    return '%.12g' % value


def _positions(value):
    if isinstance(value, (list, tuple)):
        return [tuple(float(c) for c in point) for point in value]
    points = []
    for pair in str(value).split(','):
        if not pair.strip():
            continue
        x, _sep, y = pair.partition(':')
        points.append((float(x), float(y)))
    return points


def _format_positions(points):
    return ', '.join('%s:%s' % (_fmt(x), _fmt(y)) for x, y in points)


def _format_list(values):
    return ', '.join(_fmt(v) for v in values)


def _optional_float(value):
    if value in (None, '', 'none', 'None'):
        return None
    return float(value)


def _int_list(value):
    return config_list(value, int)


#: (key, parser, formatter, default) for every experiment setting
FIELDS = [
    ('links', int, str, '4'),
    ('area', config_list, _format_list, '200, 200'),
    ('ris_positions', _positions, _format_positions, None),
    ('d_min', float, _fmt, '20'),
    ('d_max', float, _fmt, '40'),
    ('rician_k', float, _fmt, '2'),
    ('pathloss_k', float, _fmt, '1e-3'),
    ('pathloss_exp', float, _fmt, '4'),
    ('ris_pathloss_exp', _optional_float,
     lambda v: '' if v is None else _fmt(v), ''),
    ('noise_dbm', float, _fmt, '-117'),
    ('circuit_dbm', float, _fmt, '15'),
    ('eta', float, _fmt, '0.8'),
    ('resolution_bits', _int_list, _format_list, '3, 6'),
    ('n_elements_sweep', _int_list, _format_list, '8, 16, 24, 32, 48, 64'),
    ('n_elements', int, str, '32'),
    ('pmax_dbm', float, _fmt, '20'),
    ('pmax_sweep_dbm', config_list, _format_list,
     '-10, -5, 0, 5, 10, 15, 20'),
    ('rmin', float, _fmt, '0'),
    ('rmin_values', config_list, _format_list, '0, 1, 2'),
    ('trials', int, str, '100'),
    ('seed', int, str, '0'),
    ('outer_tol', float, _fmt, '1e-3'),
    ('outer_max_iter', int, str, '10'),
    ('inner_tol', float, _fmt, '1e-4'),
    ('inner_max_iter', int, str, '20'),
    ('eps_max_iter', int, str, '10'),
    ('randomization_samples', int, str, '200'),
    ('sdp_tol', float, _fmt, '1e-7'),
    ('sdp_max_iter', int, str, '100'),
    ('dinkelbach_tol', float, _fmt, '1e-4'),
    ('dinkelbach_max_iter', int, str, '50'),
    ('dca_tol', float, _fmt, '1e-6'),
    ('dca_max_iter', int, str, '50'),
    ('power_start_step_db', float, _fmt, '5'),
    ('power_start_floor_dbm', float, _fmt, '-10'),
    ('worker_count', int, str, '1'),
    ('output_dir', str, str, '.'),
    ('log_level', str, str, 'INFO'),
    ('baselines', config_true_value, lambda v: 'true' if v else 'false',
     'true'),
    ('grid_baseline_points', int, str, '0'),
]

#: settings handed on to the optimizers
SOLVER_KEYS = ('inner_tol', 'inner_max_iter', 'eps_max_iter',
               'randomization_samples', 'sdp_tol', 'sdp_max_iter',
               'dinkelbach_tol', 'dinkelbach_max_iter', 'dca_tol',
               'dca_max_iter', 'power_start_step_db', 'power_start_floor_dbm',
               'log_level', 'log_name')


class ExperimentConfig(object):
    """
    Every setting of an experiment, parsed from a conf dict of strings.

    :raises ConfigError: a value does not parse or breaks an invariant
    """

    def __init__(self, conf=None):
        if conf is None:
            conf = {}
        self.path = conf.get('__file__')
        for key, parse, _format, default in FIELDS:
            raw = conf.get(key, default)
            try:
                value = parse(raw) if raw is not None else None
            except (TypeError, ValueError) as err:
                raise ConfigError(_('Bad value %(value)r for %(key)s: '
                                    '%(err)s') %
                                  {'value': raw, 'key': key, 'err': err},
                                  path=self.path)
            setattr(self, key, value)
        self.log_name = conf.get('log_name', 'riseff')
        if self.ris_positions is None:
            self.ris_positions = default_ris_positions(self.area)
        self.validate()

    def validate(self):
        def fail(message):
            raise ConfigError(message, path=self.path)
        if self.trials < 1:
            fail(_('trials must be >= 1'))
        if self.links < 1:
            fail(_('links must be >= 1'))
        if len(self.area) != 2:
            fail(_('area needs a width and a height'))
        for x, y in self.ris_positions:
            if not (0 <= x <= self.area[0] and 0 <= y <= self.area[1]):
                fail(_('RIS position %(x)g:%(y)g lies outside the area') %
                     {'x': x, 'y': y})
        for key in ('resolution_bits', 'n_elements_sweep', 'pmax_sweep_dbm',
                    'rmin_values'):
            if not getattr(self, key):
                fail(_('%s must not be empty') % key)
        if not 0 < self.eta <= 1:
            fail(_('eta must lie in (0, 1]'))
        if any(n < 0 for n in self.n_elements_sweep) or self.n_elements < 0:
            fail(_('element counts must be >= 0'))
        if any(n and not self.ris_positions
               for n in self.n_elements_sweep + [self.n_elements]):
            fail(_('RIS elements configured without RIS positions'))
        if self.worker_count < 1:
            fail(_('worker_count must be >= 1'))

    def to_conf(self):
        """dict of strings that parses back to this config"""
        conf = {}
        for key, _parse, format_value, _default in FIELDS:
            conf[key] = format_value(getattr(self, key))
        return conf

    def dump(self, path):
        conf = self.to_conf()
        with open(path, 'w') as f:
            for key, _parse, _format, _default in FIELDS:
                f.write('%s = %s\n' % (key, conf[key]))

    def solver_conf(self):
        conf = self.to_conf()
        conf['log_name'] = self.log_name
        return dict((k, conf[k]) for k in SOLVER_KEYS)

    def fading(self):
        return FadingParams(self.rician_k, self.pathloss_k, self.pathloss_exp,
                            self.ris_pathloss_exp)

    def system_params(self, point):
        return SystemParams.from_dbm(self.noise_dbm, self.circuit_dbm,
                                     point.b, point.pmax_dbm, point.rmin,
                                     links=self.links)


SweepPoint = namedtuple('SweepPoint', 'sweep_var value b n_elements '
                        'pmax_dbm rmin')

TrialResult = namedtuple('TrialResult', 'point trial seed ee sum_rate '
                         'total_power failure algorithms iterations '
                         'wall_time')

JointResult = namedtuple('JointResult', 'phase p ee sum_rate total_power '
                         'status trace iterations')


def sweep_points(config, sweep):
    """
    :returns: list of (file name, [SweepPoint]) in output order
    """
    if sweep == 'n-elements':
        points = [SweepPoint('n_elements', n, b, n, config.pmax_dbm,
                             config.rmin)
                  for n in config.n_elements_sweep
                  for b in config.resolution_bits]
        return [('fig2_n_elements.csv', points)]
    if sweep == 'pmax':
        files = []
        for r in config.rmin_values:
            points = [SweepPoint('pmax_dbm', pmax, b, config.n_elements,
                                 pmax, r)
                      for pmax in config.pmax_sweep_dbm
                      for b in config.resolution_bits]
            files.append(('fig3_pmax_rmin%s.csv' % _fmt(r), points))
        return files
    if sweep == 'rmin':
        points = [SweepPoint('rmin', r, b, config.n_elements,
                             config.pmax_dbm, r)
                  for r in config.rmin_values
                  for b in config.resolution_bits]
        return [('fig3_rmin.csv', points)]
    raise ValueError('unknown sweep %r, expected one of %s' %
                     (sweep, ', '.join(SWEEPS)))


def trial_seed(seed, trial):
    return int(seed) ^ int(trial)


def optimize_joint(chan, params, seed, eta=0.8, phase_optimizer=None,
                   power_controller=None, outer_tol=1e-3, outer_max_iter=10):
    """
    Alternate phase optimization and Dinkelbach power control.

    Starts from phases drawn with default_rng(seed) and the Dinkelbach
    solution at those phases. A round is kept only when it raises the
    energy efficiency; the loop ends when the relative gain drops below
    outer_tol. When no power allocation meets the rate targets at the
    random phases, the phases are first optimized at full power.

    :returns: JointResult with status 'ok' or 'failure'
    """
    if phase_optimizer is None:
        phase_optimizer = PhaseOptimizer()
    if power_controller is None:
        power_controller = PowerController()
    rng = np.random.default_rng(seed)
    phase = random_phases(chan.elements, eta, rng)
    power = power_controller.dinkelbach(chan, phase, params)
    if power.status == FAILURE and chan.elements:
        full = np.full(chan.links, params.p_max)
        rescue = phase_optimizer.optimize(chan, full, params, phase, rng)
        if rescue.status == OK:
            phase = rescue.phase
            power = power_controller.dinkelbach(chan, phase, params, full)
    if power.status == FAILURE:
        return JointResult(phase, power.p, 0.0, 0.0,
                           total_power(power.p, params, chan.elements),
                           FAILURE, [], 0)
    p, ee = power.p, power.ee
    trace = [ee]
    iteration = 0
    if chan.elements:
        for iteration in range(1, outer_max_iter + 1):
            phased = phase_optimizer.optimize(chan, p, params, phase, rng)
            if phased.status != OK:
                break
            powered = power_controller.dinkelbach(chan, phased.phase, params,
                                                  p, ladder=False)
            if powered.status != OK or powered.ee < ee:
                break
            gain = (powered.ee - ee) / max(ee, 1e-300)
            phase, p, ee = phased.phase, powered.p, powered.ee
            trace.append(ee)
            if gain < outer_tol:
                break
    return JointResult(phase, p, ee, sum_rate(chan, phase, p,
                                              params.noise_power),
                       total_power(p, params, chan.elements), OK, trace,
                       iteration)


class TrialRunner(object):
    """
    Runs one seeded realization of one sweep point. Built once per worker
    from a conf dict.
    """

    def __init__(self, conf, logger=None):
        self.config = ExperimentConfig(conf)
        self.logger = resolve_logger(logger or (conf,), 'trial')
        solver_conf = self.config.solver_conf()
        self.phase_optimizer = PhaseOptimizer(solver_conf, self.logger)
        self.power_controller = PowerController(solver_conf, self.logger)

    def realize(self, point, trial):
        """
        Topology and channels of a trial. Streams for topology, channels
        and phases are spawned from the trial seed, so every sweep point
        sees the same node placement for the same trial.

        :returns: (ChannelRealization, phase seed)
        """
        config = self.config
        seed = trial_seed(config.seed, trial)
        topo_ss, chan_ss, phase_ss = np.random.SeedSequence(seed).spawn(3)
        counts = split_elements(point.n_elements, len(config.ris_positions))
        topology = sample_topology(config.area, config.links,
                                   config.ris_positions, counts,
                                   (config.d_min, config.d_max),
                                   np.random.default_rng(topo_ss))
        chan = realize_channels(topology, config.fading(),
                                np.random.default_rng(chan_ss))
        return chan, int(phase_ss.generate_state(1)[0])

    def run_trial(self, point, trial):
        config = self.config
        start = time.time()
        chan, phase_seed = self.realize(point, trial)
        params = config.system_params(point)
        joint = optimize_joint(chan, params, phase_seed, config.eta,
                               self.phase_optimizer, self.power_controller,
                               config.outer_tol, config.outer_max_iter)
        failed = joint.status != OK
        algorithms = {'main': (joint.ee, failed)}
        if config.baselines:
            base = baselines(chan, params, np.random.default_rng(phase_seed),
                             config.eta, self.power_controller)
            algorithms['no_ris'] = (base.no_ris.ee,
                                    base.no_ris.status != OK)
            algorithms['random_phase'] = (base.random_phase.ee,
                                          base.random_phase.status != OK)
        if config.grid_baseline_points > 0 and \
                config.links <= MAX_GRID_LINKS:
            grid = grid_power_search(chan, joint.phase, params,
                                     GridSpec(config.grid_baseline_points,
                                              params.p_max))
            algorithms['grid_power'] = (grid.ee, grid.status != OK)
        elapsed = time.time() - start
        self.logger.debug(_('Trial %(trial)d at %(var)s=%(value)s b=%(b)d: '
                            'EE %(ee).6g (%(secs)0.2f seconds)') %
                          {'trial': trial, 'var': point.sweep_var,
                           'value': point.value, 'b': point.b,
                           'ee': joint.ee, 'secs': elapsed})
        return TrialResult(point, trial, trial_seed(config.seed, trial),
                           joint.ee, joint.sum_rate, joint.total_power,
                           failed, algorithms, joint.iterations, elapsed)


class SweepRunner(object):
    """
    Monte Carlo sweeps: farm trials out, aggregate per sweep point, write
    one CSV per figure plus the per-algorithm breakdown.
    """

    def __init__(self, conf, logger=None):
        self.conf = dict(conf)
        self.config = ExperimentConfig(self.conf)
        self.conf.update(self.config.to_conf())
        self.logger = resolve_logger(logger or (self.conf,), 'sweep')
        self.output_dir = self.config.output_dir
        self.worker_count = self.config.worker_count

    def check_output_dir(self):
        """
        :raises ConfigError: output directory missing or not writable
        """
        out = self.output_dir
        if not os.path.isdir(out):
            try:
                os.makedirs(out)
            except OSError as err:
                raise ConfigError(_('Unable to create output directory '
                                    '%(dir)s: %(err)s') %
                                  {'dir': out, 'err': err}, path=out)
        if not os.access(out, os.W_OK | os.X_OK):
            raise ConfigError(_('Output directory %s is not writable') % out,
                              path=out)

    def run_trials(self, points):
        items = [(point, trial) for point in points
                 for trial in range(self.config.trials)]
        results = multiprocess_collate(TrialRunner, (self.conf,),
                                       'run_trial', items, self.worker_count,
                                       self.logger)
        collected = [result for _item, result in results]
        lost = len(items) - len(collected)
        if lost:
            self.logger.error(_('%(lost)d of %(total)d trials failed to run') %
                              {'lost': lost, 'total': len(items)})
        return collected

    def get_aggregate_data(self, results):
        """
        Sums per sweep point, in trial order so the floating point
        reduction does not depend on worker scheduling.

        :returns: dict of SweepPoint -> dict of sums
        """
        aggr_data = {}
        for result in sorted(results, key=lambda r: r.trial):
            d = aggr_data.setdefault(result.point, {
                'trials': 0, 'failures': 0, 'ee': 0.0, 'successes': 0,
                'sum_rate': 0.0, 'total_power': 0.0, 'algorithms': {}})
            d['trials'] += 1
            d['ee'] += 0.0 if result.failure else result.ee
            if result.failure:
                d['failures'] += 1
            else:
                d['successes'] += 1
                d['sum_rate'] += result.sum_rate
                d['total_power'] += result.total_power
            for name, (ee, failed) in result.algorithms.items():
                a = d['algorithms'].setdefault(name, [0, 0.0, 0])
                a[0] += 1
                a[1] += 0.0 if failed else ee
                a[2] += 1 if failed else 0
        return aggr_data

    def get_final_info(self, aggr_data):
        """
        Means per sweep point. Failed trials count as zero energy
        efficiency; sum rate and power are averaged over successful trials.
        """
        final_info = {}
        for point, d in aggr_data.items():
            ok = d['successes']
            final_info[point] = {
                'mean_ee': d['ee'] / d['trials'],
                'failure_rate': float(d['failures']) / d['trials'],
                'mean_sum_rate': d['sum_rate'] / ok if ok else 0.0,
                'mean_total_power': d['total_power'] / ok if ok else 0.0,
                'trials': d['trials'],
                'algorithms': dict(
                    (name, (ee / n, float(fails) / n, n))
                    for name, (n, ee, fails) in d['algorithms'].items()),
            }
        return final_info

    def get_output(self, final_info, points):
        """
        :returns: a list of rows for the figure csv, column headers first,
                  then one row per sweep point in sweep order
        """
        output = [list(CSV_COLUMNS)]
        for point in points:
            d = final_info.get(point)
            if d is None:
                continue
            output.append([point.sweep_var, _fmt(point.value), str(point.b),
                           _fmt(d['mean_ee']), _fmt(d['failure_rate']),
                           _fmt(d['mean_sum_rate']),
                           _fmt(d['mean_total_power']), str(d['trials'])])
        return output

    def get_algorithm_output(self, final_info, points):
        output = [list(ALGORITHM_COLUMNS)]
        for point in points:
            d = final_info.get(point)
            if d is None:
                continue
            for name in ALGORITHMS:
                if name not in d['algorithms']:
                    continue
                ee, failure_rate, n = d['algorithms'][name]
                output.append([point.sweep_var, _fmt(point.value),
                               str(point.b), name, _fmt(ee),
                               _fmt(failure_rate), str(n)])
        return output

    def store_output(self, outputs):
        """
        Write every (file name, rows) pair into the output directory. Files
        are written in a scratch directory first and renamed into place.
        """
        working_dir = tempfile.mkdtemp(prefix='.riseff_tmp',
                                       dir=self.output_dir)
        written = []
        try:
            for name, rows in outputs:
                tmp_filename = os.path.join(working_dir, name)
                with open(tmp_filename, 'w', encoding='utf-8',
                          newline='\n') as f:
                    f.write(''.join(','.join(row) + '\n' for row in rows))
            for name, _rows in outputs:
                target = os.path.join(self.output_dir, name)
                os.replace(os.path.join(working_dir, name), target)
                written.append(target)
        finally:
            shutil.rmtree(working_dir, ignore_errors=True)
        return written

    def run_sweep(self, sweep):
        """
        :returns: list of (file name, rows) for the figure and algorithm
                  csv files of the sweep
        """
        outputs = []
        for name, points in sweep_points(self.config, sweep):
            results = self.run_trials(points)
            final_info = self.get_final_info(self.get_aggregate_data(results))
            outputs.append((name, self.get_output(final_info, points)))
            base = name[:-len('.csv')]
            outputs.append(('%s_algorithms.csv' % base,
                            self.get_algorithm_output(final_info, points)))
        return outputs

    def run_once(self, sweep):
        """
        Run a sweep and write its csv files.

        :returns: list of written paths
        """
        self.check_output_dir()
        start = time.time()
        self.logger.info(_('Beginning %(sweep)s sweep: %(trials)d trials per '
                           'point') %
                         {'sweep': sweep, 'trials': self.config.trials})
        outputs = self.run_sweep(sweep)
        written = self.store_output(outputs)
        self.logger.info(_('Sweep %(sweep)s done (%(mins)0.2f minutes)') %
                         {'sweep': sweep,
                          'mins': (time.time() - start) / 60})
        return written


def run_sweep(config, sweep='n-elements', logger=None):
    """
    :param config: ExperimentConfig or conf dict
    :returns: list of written csv paths
    """
    if isinstance(config, ExperimentConfig):
        conf = config.to_conf()
    else:
        conf = config
    return SweepRunner(conf, logger).run_once(sweep)


def load_conf(path, section_name=CONF_SECTION, defaults=None):
    """
    Read an experiment config file into a dict of strings.

    Files without a section header are flat ``key = value`` files and are
    read as the [riseff] section.

    :raises ConfigError: file is unreadable, malformed or lacks the section
    """
    try:
        with open(path) as f:
            text = f.read()
    except (IOError, OSError) as err:
        raise ConfigError(_('Unable to read config from %(path)s: %(err)s') %
                          {'path': path, 'err': err}, path=path)
    try:
        try:
            sections = readconf(io.StringIO(text), defaults=defaults)
        except MissingSectionHeaderError:
            flat = '[%s]\n%s' % (CONF_SECTION, text)
            sections = readconf(io.StringIO(flat), defaults=defaults)
    except (ConfigParserError, ValueError) as err:
        raise ConfigError(_('Unable to parse config %(path)s: %(err)s') %
                          {'path': path, 'err': err}, path=path)
    conf = sections.get(section_name)
    if not isinstance(conf, dict):
        raise ConfigError(_('Unable to find %(section)s config section in '
                            '%(path)s') %
                          {'section': section_name, 'path': path},
                          path=path)
    conf.setdefault('log_name', section_name)
    conf['__file__'] = path
    return conf


def make_parser():
    parser = argparse.ArgumentParser(
        prog='riseff-sweep',
        description='Monte Carlo energy-efficiency sweeps for RIS-aided '
                    'D2D networks.')
    parser.add_argument('--config', help='flat key = value config file')
    parser.add_argument('--sweep', choices=SWEEPS, default='n-elements',
                        help='sweep to run (default: %(default)s)')
    parser.add_argument('--trials', type=int, help='trials per point')
    parser.add_argument('--seed', type=int, help='base seed')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--workers', type=int, help='worker processes')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    return parser


def cli_main(args=None):
    """
    :returns: exit code, 0 on success
    """
    parser = make_parser()
    try:
        options = parser.parse_args(args)
    except SystemExit as err:
        return err.code
    try:
        if options.config:
            conf = load_conf(options.config)
        else:
            conf = {}
        for key, value in (('trials', options.trials),
                           ('seed', options.seed),
                           ('output_dir', options.out),
                           ('worker_count', options.workers)):
            if value is not None:
                conf[key] = str(value)
        conf.setdefault('log_name', CONF_SECTION)
        logger = get_logger(conf, log_to_console=True, log_route='sweep')
        runner = SweepRunner(conf, logger)
        written = runner.run_once(options.sweep)
    except ConfigError as err:
        sys.stderr.write('riseff-sweep: %s\n' % err)
        return 2
    except (IOError, OSError) as err:
        sys.stderr.write('riseff-sweep: %s\n' % err)
        return 1
    for path in written:
        print(path)
    return 0
