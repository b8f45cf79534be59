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

import itertools
import logging
from collections import namedtuple

import tqdm

from sml.core.workspace import register
from sml.model import ModelConfig, parse_strategy
from sml.simulation import SimConfig
from sml.utils.check import check_threads
from sml.utils.parallel import ParallelMap, TaskError

__all__ = ['SweepSpec', 'SweepRow', 'COLUMNS', 'ENGINES', 'run_sweep',
           'evaluate_point']

logger = logging.getLogger(__name__)

ENGINES = ('analytic', 'simulate', 'both')
DEFAULT_ALPHAS = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45]
DEFAULT_THETAS = [0.01, 0.05, 0.10, 0.20]
DEFAULT_STRATEGIES = ['S', 'L', 'F', 'T1', 'LF', 'LT', 'FT', 'LFT']

COLUMNS = [
    'strategy', 'alpha', 'theta', 'rr_m_analytic', 'tps_analytic',
    'tail_mass', 'rr_m_sim', 'rr_m_sim_ci95', 'tps_sim', 'rounds',
    'blocks_per_round', 'seed', 'error'
]

SweepRow = namedtuple('SweepRow', COLUMNS)
SweepRow.__new__.__defaults__ = (None, ) * (len(COLUMNS) - 3)


def _as_config(cls, value):
    if isinstance(value, cls):
        return value
    if isinstance(value, dict):
        return cls(**value)
    # unresolved registry name, use the defaults
    return cls()


@register
class SweepSpec(object):
    """
    Parameter grid of a sweep

    Args:
        strategies (list): strategy names, 'honest' included
        alphas (list): computing powers of the malicious pool
        thetas (list): unintentional fork probabilities
        engine (str): analytic, simulate or both
        model (object): `ModelConfig` instance
        simulation (object): `SimConfig` instance
        workers (int): grid point workers, 0 reads SML_THREADS
    """
    __category__ = 'harness'
    __inject__ = ['model', 'simulation']

    def __init__(self,
                 strategies=DEFAULT_STRATEGIES,
                 alphas=DEFAULT_ALPHAS,
                 thetas=DEFAULT_THETAS,
                 engine='analytic',
                 model='ModelConfig',
                 simulation='SimConfig',
                 workers=0):
        super(SweepSpec, self).__init__()
        if not strategies or not alphas or not thetas:
            raise ValueError("sweep needs at least one strategy, alpha and "
                             "theta")
        for name in strategies:
            parse_strategy(name)
        for alpha in alphas:
            if not 0. < float(alpha) < .5:
                raise ValueError("alpha {} outside (0, 0.5)".format(alpha))
        for theta in thetas:
            if not 0. <= float(theta) < 1.:
                raise ValueError("theta {} outside [0, 1)".format(theta))
        if engine not in ENGINES:
            raise ValueError("engine must be one of {}, got '{}'".format(
                ENGINES, engine))
        self.strategies = [str(s) for s in strategies]
        self.alphas = [float(a) for a in alphas]
        self.thetas = [float(t) for t in thetas]
        self.engine = engine
        self.model = _as_config(ModelConfig, model)
        self.simulation = _as_config(SimConfig, simulation)
        self.workers = workers

    def grid(self):
        """Grid points in row order: strategy, then alpha, then theta."""
        return list(itertools.product(self.strategies, self.alphas,
                                      self.thetas))


def _strategy_label(flags):
    return 'honest' if flags is None else flags.name


def evaluate_point(model, simulation, engine, strategy, alpha, theta):
    """
    Evaluate one grid point with the requested engine(s).

    Returns:
        SweepRow
    """
    from sml.analytic import report, honest_report
    from sml.simulation import simulate

    flags = parse_strategy(strategy)
    params = model.params(alpha=alpha, theta=theta)
    values = {
        'strategy': _strategy_label(flags),
        'alpha': alpha,
        'theta': theta,
    }
    if engine in ('analytic', 'both'):
        rep = honest_report(params) if flags is None else report(params,
                                                                 flags)
        values.update(rr_m_analytic=rep.rr_m, tps_analytic=rep.tps,
                      tail_mass=rep.tail_mass)
    if engine in ('simulate', 'both'):
        sim = simulate(params, flags, simulation)
        values.update(rr_m_sim=sim.rr_m, rr_m_sim_ci95=sim.rr_m_ci,
                      tps_sim=sim.tps, rounds=simulation.rounds,
                      blocks_per_round=simulation.blocks_per_round,
                      seed=simulation.seed)
    return SweepRow(**values)


def _point_task(args):
    return evaluate_point(*args)


def run_sweep(spec, progress=True):
    """
    Evaluate every grid point of `spec`.

    Analytic points are spread over the worker pool. Simulated points run
    one after another since each already spreads its rounds over the pool.
    A failing point yields a row with its `error` column set.

    Returns:
        list of SweepRow in grid order
    """
    grid = spec.grid()
    tasks = [(spec.model, spec.simulation, spec.engine, s, a, t)
             for s, a, t in grid]
    workers = 1 if spec.engine != 'analytic' else check_threads(
        spec.workers)
    logger.info("sweep: {} points, engine {}, {} workers".format(
        len(tasks), spec.engine, workers))

    bar = tqdm.tqdm(total=len(tasks), disable=not progress)

    def _tick(idx, result, done):
        bar.update(1)

    results = ParallelMap(_point_task, workers, True)(tasks, _tick)
    bar.close()

    rows = []
    for (strategy, alpha, theta), result in zip(grid, results):
        if isinstance(result, TaskError):
            logger.warning("point ({}, {}, {}) failed: {}".format(
                strategy, alpha, theta, result.errmsg))
            flags = parse_strategy(strategy)
            result = SweepRow(_strategy_label(flags), alpha, theta,
                              error=result.errmsg)
        rows.append(result)
    return rows
