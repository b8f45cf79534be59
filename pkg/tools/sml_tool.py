# Copyright (c) 2023 SML Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function

import io
import logging
import sys
from collections import OrderedDict

import yaml

from sml.analytic import (report, honest_report, enumerate_states,
                          build_generator, dump_edges)
from sml.core.workspace import load_config, merge_config, create, \
    global_config, get_registered_modules
from sml.errors import SmlError
from sml.harness import (ENGINES, FIGURES, run_sweep, cross_validate,
                         find_threshold, check_threshold_monotonic, emit_csv,
                         load_csv, emit_plot_data)
from sml.model import parse_strategy
from sml.simulation import simulate
from sml.utils.check import check_writable
from sml.utils.cli import (ArgsParser, print_total_cfg, list_modules,
                           help_module, generate_config)

FORMAT = '%(asctime)s-%(levelname)s: %(message)s'
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


def _floats(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _names(text):
    return [v.strip() for v in text.split(',') if v.strip()]


def _open_out(path):
    if not path or path == '-':
        return sys.stdout, False
    check_writable(path)
    return io.open(path, 'w', encoding='utf-8', newline=''), True


def _write_yaml(data, path):
    stream, owned = _open_out(path)
    try:
        yaml.safe_dump(data, stream, default_flow_style=False,
                       sort_keys=False)
    finally:
        if owned:
            stream.close()


def flag_overrides(args):
    """Explicit subcommand flags as a config dict, `None` flags skipped."""
    mapping = [
        ('ModelConfig', 'delta_max', 'delta_max'),
        ('ModelConfig', 'rates', 'rates'),
        ('SimConfig', 'rounds', 'rounds'),
        ('SimConfig', 'blocks', 'blocks_per_round'),
        ('SimConfig', 'seed', 'seed'),
        ('SimConfig', 'workers', 'workers'),
        ('SweepSpec', 'workers', 'workers'),
        ('SimConfig', 'audit', 'audit'),
        ('SimConfig', 'trace_events', 'trace_events'),
        ('SweepSpec', 'engine', 'engine'),
        ('SweepSpec', 'strategies', 'strategies'),
        ('SweepSpec', 'alphas', 'alphas'),
        ('SweepSpec', 'thetas', 'thetas'),
    ]
    if getattr(args, 'point', False):
        mapping += [('ModelConfig', 'alpha', 'alpha'),
                    ('ModelConfig', 'theta', 'theta')]
    config = {}
    for module, dest, key in mapping:
        value = getattr(args, dest, None)
        if value is None or value is False:
            continue
        config.setdefault(module, {})[key] = value
    return config


def load_settings(args):
    """defaults < -c FILE < -o key=value < explicit flags"""
    if args.config:
        load_config(args.config)
    merge_config(args.opt)
    merge_config(flag_overrides(args))


def _point(args):
    model = create('ModelConfig')
    return model.params(), parse_strategy(args.strategy)


def run_analytic(args):
    params, flags = _point(args)
    if flags is None:
        rep = honest_report(params)
    else:
        rep = report(params, flags)
    logger.info("{} alpha={} theta={}: rr_m {:.6f}, tps {:.6f}, {} states"
                .format(args.strategy, params.alpha, params.theta, rep.rr_m,
                        rep.tps, rep.n_states))
    if args.dump_edges:
        if flags is None:
            logger.error("the honest baseline has no chain to dump")
            return EXIT_USAGE
        space = enumerate_states(flags, params.delta_max, params)
        stream, owned = _open_out(args.dump_edges)
        try:
            dump_edges(space, build_generator(params, flags, space), stream)
        finally:
            if owned:
                stream.close()

    summary = OrderedDict([
        ('strategy', args.strategy),
        ('alpha', params.alpha),
        ('theta', params.theta),
        ('delta_max', params.delta_max),
        ('rates', params.rates),
        ('rr_m', float(rep.rr_m)),
        ('rr_h', float(rep.revenue.rr_h)),
        ('tps', float(rep.tps)),
        ('rr_m_closed', float(rep.revenue_closed.rr_m)),
        ('tps_closed', float(rep.revenue_closed.tps)),
        ('tail_mass', float(rep.tail_mass)),
        ('n_states', rep.n_states),
    ])
    if rep.branch is not None:
        summary['ph_minus1'] = float(rep.branch.ph_minus1)
        summary['ph_tie_allhonest'] = float(rep.branch.ph_tie_allhonest)
        for n, value in sorted(rep.branch.ph_tie.items()):
            summary['ph_tie_{}'.format(n)] = float(value)
        summary['pf'] = float(rep.fork.pf)
        for n, value in sorted((rep.fork.pf_exact or {}).items()):
            summary['pf_exact_{}'.format(n)] = float(value)
    _write_yaml(dict(summary), args.out)
    return EXIT_OK


def run_simulate(args):
    params, flags = _point(args)
    config = create('SimConfig')
    trace = None
    if args.trace:
        if config.trace_events <= 0:
            config.trace_events = 10000
        trace, owned = _open_out(args.trace)
    try:
        sim = simulate(params, flags, config, trace=trace)
    finally:
        if args.trace and owned:
            trace.close()
    logger.info("{} alpha={} theta={}: rr_m {:.6f} +- {:.6f}, tps {:.6f} "
                "+- {:.6f} over {} rounds".format(
                    args.strategy, params.alpha, params.theta, sim.rr_m,
                    sim.rr_m_ci, sim.tps, sim.tps_ci, sim.rounds))
    summary = OrderedDict([
        ('strategy', args.strategy),
        ('alpha', params.alpha),
        ('theta', params.theta),
        ('rounds', sim.rounds),
        ('blocks_per_round', config.blocks_per_round),
        ('seed', config.seed),
        ('rr_m', sim.rr_m),
        ('rr_m_ci95', sim.rr_m_ci),
        ('tps', sim.tps),
        ('tps_ci95', sim.tps_ci),
    ])
    for n, value in sorted(sim.ph_tie_freq.items()):
        summary['ph_tie_{}'.format(n)] = value
    for n, value in sorted(sim.pf_freq.items()):
        summary['pf_{}'.format(n)] = value
    _write_yaml(dict(summary), args.out)
    return EXIT_OK


def _sweep_rows(args, engine=None):
    if getattr(args, 'input', None):
        rows = load_csv(args.input)
        logger.info("loaded {} rows from {}".format(len(rows), args.input))
        return rows
    if engine is not None:
        merge_config({'SweepSpec': {'engine': engine}})
    spec = create('SweepSpec')
    rows = run_sweep(spec, progress=not args.quiet)
    for row in rows:
        if row.error:
            logger.error("({}, {}, {}): {}".format(row.strategy, row.alpha,
                                                   row.theta, row.error))
    return rows


def run_sweep_cmd(args):
    rows = _sweep_rows(args)
    stream, owned = _open_out(args.out)
    try:
        emit_csv(rows, stream)
    finally:
        if owned:
            stream.close()
    if args.figure:
        stream, owned = _open_out(args.plot_out)
        try:
            emit_plot_data(rows, args.figure, stream)
        finally:
            if owned:
                stream.close()
    return EXIT_OK


def run_validate(args):
    rows = _sweep_rows(args, engine='both')
    result = cross_validate(rows, args.tolerance)
    logger.info("{} rows, max rr gap {:.6f} (mean {:.6f}), max tps gap "
                "{:.6f} (mean {:.6f}), tolerance {}".format(
                    result.rows_checked, result.max_rr_gap,
                    result.mean_rr_gap, result.max_tps_gap,
                    result.mean_tps_gap, result.tolerance))
    for v in result.violations:
        row = v.row
        if row.error:
            logger.error("violation ({}, {}, {}): {}".format(
                row.strategy, row.alpha, row.theta, row.error))
        else:
            logger.error("violation ({}, {}, {}): rr gap {:.6f}, tps gap "
                         "{:.6f}".format(row.strategy, row.alpha, row.theta,
                                         v.rr_gap, v.tps_gap))
    if args.out:
        emit_csv([v.row for v in result.violations], args.out)
    return EXIT_OK if result.ok else EXIT_VIOLATION


def run_threshold(args):
    rows = _sweep_rows(args)
    table = find_threshold(rows)
    lines = ['strategy\ttheta\tthreshold']
    for (strategy, theta), alpha in table.items():
        lines.append('{}\t{!r}\t{}'.format(strategy, theta,
                                           '-' if alpha is None else
                                           repr(alpha)))
    stream, owned = _open_out(args.out)
    try:
        stream.write('\n'.join(lines) + '\n')
    finally:
        if owned:
            stream.close()
    violations = check_threshold_monotonic(table, args.check)
    for t0, a0, t1, a1 in violations:
        logger.error("{} threshold rises from {} at theta={} to {} at "
                     "theta={}".format(args.check, a0, t0, a1, t1))
    return EXIT_VIOLATION if violations else EXIT_OK


def run_configure(args):
    if args.action == 'list':
        list_modules(args.category)
    elif args.action == 'help':
        help_module(args.module)
    elif args.action == 'generate':
        generate_config(args.modules, args.minimal)
    else:
        print_total_cfg(global_config)
    return EXIT_OK


def _add_point_args(parser):
    parser.set_defaults(point=True)
    parser.add_argument(
        "--strategy",
        default='LFT',
        help="S, L, F, T1, LF, LT, FT, LFT or honest")
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--theta", type=float, default=None)
    parser.add_argument("--delta-max", dest='delta_max', type=int,
                        default=None, help="chain truncation depth")
    parser.add_argument("--rates", choices=('event', 'block'), default=None,
                        help="count honest events or blocks")
    parser.add_argument("--out", default=None, help="output file, - for "
                        "stdout")


def _add_sim_args(parser):
    parser.add_argument("--rounds", type=int, default=None)
    parser.add_argument("--blocks", type=int, default=None,
                        help="blocks per round")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None,
                        help="worker count, SML_THREADS when unset")


def _add_grid_args(parser):
    parser.add_argument("--in", dest='input', default=None,
                        help="read rows from a sweep CSV instead")
    parser.add_argument("--strategy", dest='strategies', type=_names,
                        default=None, help="comma separated strategies")
    parser.add_argument("--alpha", dest='alphas', type=_floats,
                        default=None, help="comma separated alphas")
    parser.add_argument("--theta", dest='thetas', type=_floats,
                        default=None, help="comma separated thetas")
    parser.add_argument("--delta-max", dest='delta_max', type=int,
                        default=None)
    parser.add_argument("--rates", choices=('event', 'block'), default=None,
                        help="count honest events or blocks")
    _add_sim_args(parser)


def build_parser():
    parser = ArgsParser(
        add_config=False,
        description="Stubborn mining severity toolkit")
    parser.add_argument("--quiet", action='store_true',
                        help="warnings only, no progress bars")
    subparsers = parser.add_subparsers(dest='command')

    analytic = subparsers.add_parser(
        "analytic", help="solve the Markov model at one point")
    _add_point_args(analytic)
    analytic.add_argument("--dump-edges", dest='dump_edges', default=None,
                          help="write the generator edge list")
    analytic.set_defaults(func=run_analytic)

    sim = subparsers.add_parser(
        "simulate", help="Monte Carlo estimate at one point")
    _add_point_args(sim)
    _add_sim_args(sim)
    sim.add_argument("--audit", action='store_true',
                     help="check observed transitions against the chain")
    sim.add_argument("--trace", default=None,
                     help="write the event trace of round 0")
    sim.add_argument("--trace-events", dest='trace_events', type=int,
                     default=None)
    sim.set_defaults(func=run_simulate)

    sweep = subparsers.add_parser("sweep", help="evaluate a parameter grid")
    _add_grid_args(sweep)
    sweep.add_argument("--engine", choices=ENGINES, default=None)
    sweep.add_argument("--out", default=None, help="CSV file, - for stdout")
    sweep.add_argument("--figure", choices=FIGURES, default=None)
    sweep.add_argument("--plot-out", dest='plot_out', default=None,
                       help="plot data file of --figure")
    sweep.set_defaults(func=run_sweep_cmd)

    validate = subparsers.add_parser(
        "validate", help="compare analytic and simulated metrics")
    _add_grid_args(validate)
    validate.add_argument("--tolerance", type=float, default=0.005)
    validate.add_argument("--out", default=None,
                          help="write violating rows as CSV")
    validate.set_defaults(func=run_validate)

    threshold = subparsers.add_parser(
        "threshold", help="benefit thresholds and monotonicity check")
    _add_grid_args(threshold)
    threshold.add_argument("--engine", choices=ENGINES, default=None)
    threshold.add_argument("--check", default='LFT',
                           help="strategy whose threshold must not rise "
                           "with theta")
    threshold.add_argument("--out", default=None)
    threshold.set_defaults(func=run_threshold)

    configure = subparsers.add_parser(
        "configure", help="inspect registered modules")
    configure.set_defaults(func=run_configure)
    actions = configure.add_subparsers(dest='action')
    modules = list(get_registered_modules().keys())
    list_parser = actions.add_parser(
        "list", add_config=False, help="list available modules")
    list_parser.add_argument("--category", default=None)
    help_parser = actions.add_parser(
        "help", add_config=False, help="show options of a module")
    help_parser.add_argument("module", choices=modules)
    generate_parser = actions.add_parser(
        "generate", add_config=False, help="configuration template")
    generate_parser.add_argument("modules", nargs='+', choices=modules)
    generate_parser.add_argument(
        "--minimal", action='store_true', help="only required options")
    actions.add_parser(
        "analyze", add_config=False,
        help="print the merged configuration of -c/-o")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    if not hasattr(args, 'func') or (args.command == 'configure' and
                                     not args.action):
        parser.print_help()
        return EXIT_USAGE
    try:
        load_settings(args)
        return args.func(args)
    except (SmlError, ValueError, TypeError, AssertionError) as e:
        logger.error("{}: {}".format(type(e).__name__, e))
        return EXIT_USAGE


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO, format=FORMAT)
    sys.exit(main())
