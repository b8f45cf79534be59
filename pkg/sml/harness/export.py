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

import csv
import io
import logging
import os
from collections import OrderedDict

import numpy as np

from sml.errors import IncompleteSlice
from .sweep import COLUMNS, SweepRow

__all__ = ['FIGURES', 'emit_csv', 'load_csv', 'plot_series',
           'emit_plot_data']

logger = logging.getLogger(__name__)

FIGURES = ('fig3', 'fig4', 'fig5', 'fig6')
FIG_STRATEGIES = ['S', 'L', 'F', 'T1', 'LF', 'LT', 'FT', 'LFT']
FIG_THETAS = [0.01, 0.05, 0.1, 0.2]

_INT_COLUMNS = ('rounds', 'blocks_per_round', 'seed')
_STR_COLUMNS = ('strategy', 'error')


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _open(path):
    if hasattr(path, 'write'):
        return path, False
    folder = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(folder):
        os.makedirs(folder)
    return io.open(path, 'w', encoding='utf-8', newline=''), True


def emit_csv(rows, path):
    """Header line, then one line per row in column order."""
    stream, owned = _open(path)
    try:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    finally:
        if owned:
            stream.close()


def _parse(name, text):
    if text == '':
        return None
    if name in _STR_COLUMNS:
        return text
    if name in _INT_COLUMNS:
        return int(text)
    return float(text)


def load_csv(path):
    if hasattr(path, 'read'):
        lines = path.read()
    else:
        with io.open(path, encoding='utf-8', newline='') as f:
            lines = f.read()
    reader = csv.reader(io.StringIO(lines))
    header = next(reader)
    assert header == COLUMNS, "unexpected CSV header {}".format(header)
    return [
        SweepRow(*[_parse(n, v) for n, v in zip(COLUMNS, record)])
        for record in reader if record
    ]


def _value(row, metric):
    analytic = getattr(row, metric + '_analytic')
    return analytic if analytic is not None else getattr(row,
                                                         metric + '_sim')


def _close(a, b):
    return abs(a - b) < 1e-9


def _strategy_order(name):
    if name in FIG_STRATEGIES:
        return FIG_STRATEGIES.index(name), name
    return len(FIG_STRATEGIES), name


def _strategy(row, key):
    return row.strategy == key[1]


def _theta(row, key):
    return _close(row.theta, key[1])


def _strategy_theta(row, key):
    strategy, theta = key[1]
    return row.strategy == strategy and _close(row.theta, theta)


def plot_series(rows, figure):
    """
    Columnar series of one figure.

    Returns:
        (alphas, OrderedDict series name -> list of values)
    """
    if figure not in FIGURES:
        raise ValueError("figure must be one of {}".format(FIGURES))
    rows = [r for r in rows if not r.error]
    if not rows:
        raise IncompleteSlice("no rows to plot for {}".format(figure))

    if figure == 'fig3':
        picked = [r for r in rows if r.rr_m_analytic is not None and
                  r.rr_m_sim is not None]
        names = sorted(set(r.strategy for r in picked),
                       key=_strategy_order)
        thetas = sorted(set(r.theta for r in picked))
        keys = []
        for s in names:
            for t in thetas:
                for metric in ('rr_m_analytic', 'rr_m_sim'):
                    name = '{}@theta={}_{}'.format(s, t, metric[5:])
                    keys.append((name, (s, t), metric))
        select = _strategy_theta
    elif figure == 'fig4':
        picked = [r for r in rows if _close(r.theta, 0.01)]
        keys = [(s, s, 'rr_m') for s in FIG_STRATEGIES]
        select = _strategy
    else:
        metric = 'rr_m' if figure == 'fig5' else 'tps'
        picked = [r for r in rows if r.strategy == 'LFT']
        keys = [('theta={}'.format(t), t, metric) for t in FIG_THETAS]
        select = _theta

    alphas = sorted(set(r.alpha for r in picked))
    if not alphas or not keys:
        raise IncompleteSlice("{} slice is empty".format(figure))
    series = OrderedDict()
    for key in keys:
        column = []
        for alpha in alphas:
            match = [r for r in picked if _close(r.alpha, alpha) and
                     select(r, key)]
            if not match:
                raise IncompleteSlice("{}: series {} lacks alpha={}".format(
                    figure, key[0], alpha))
            metric = key[2]
            value = getattr(match[0], metric) if metric.endswith(
                ('_analytic', '_sim')) else _value(match[0], metric)
            if value is None:
                raise IncompleteSlice("{}: series {} has no {} at "
                                      "alpha={}".format(figure, key[0],
                                                        metric, alpha))
            column.append(value)
        series[key[0]] = column
    return alphas, series


def emit_plot_data(rows, figure, path):
    """Tab separated columns: alpha first, then one column per series."""
    alphas, series = plot_series(rows, figure)
    stream, owned = _open(path)
    try:
        stream.write('\t'.join(['alpha'] + list(series)) + '\n')
        for i, alpha in enumerate(alphas):
            stream.write('\t'.join([_cell(alpha)] + [
                _cell(values[i]) for values in series.values()
            ]) + '\n')
    finally:
        if owned:
            stream.close()
    logger.info("{}: {} series over {} alpha points".format(
        figure, len(series), len(alphas)))
