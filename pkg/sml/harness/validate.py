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

import logging
from collections import OrderedDict, namedtuple

import numpy as np

from sml.errors import MissingEngineData

__all__ = ['Violation', 'ValidationReport', 'cross_validate',
           'find_threshold', 'check_threshold_monotonic']

logger = logging.getLogger(__name__)

Violation = namedtuple('Violation', ['row', 'rr_gap', 'tps_gap'])


class ValidationReport(
        namedtuple('ValidationReport', [
            'tolerance', 'rows_checked', 'max_rr_gap', 'mean_rr_gap',
            'max_tps_gap', 'mean_tps_gap', 'violations'
        ])):
    __slots__ = ()

    @property
    def ok(self):
        return not self.violations


def cross_validate(rows, tolerance=0.005):
    """
    Compare analytic and simulated metrics row by row.

    Rows whose point failed are reported as violations with no gap.
    A tolerance <= 0 reports every row.

    Raises:
        MissingEngineData: a successful row lacks one of the engines
    """
    rr_gaps, tps_gaps, violations = [], [], []
    for row in rows:
        if row.error:
            violations.append(Violation(row, None, None))
            continue
        if row.rr_m_analytic is None or row.rr_m_sim is None:
            raise MissingEngineData(
                "row ({}, {}, {}) lacks {} data, run the sweep with engine "
                "'both'".format(row.strategy, row.alpha, row.theta,
                                'analytic' if row.rr_m_analytic is None
                                else 'simulation'))
        rr_gap = abs(row.rr_m_analytic - row.rr_m_sim)
        tps_gap = abs(row.tps_analytic - row.tps_sim)
        rr_gaps.append(rr_gap)
        tps_gaps.append(tps_gap)
        if tolerance <= 0. or rr_gap > tolerance or tps_gap > tolerance:
            violations.append(Violation(row, rr_gap, tps_gap))

    def _stats(gaps):
        if not gaps:
            return 0., 0.
        return float(np.max(gaps)), float(np.mean(gaps))

    max_rr, mean_rr = _stats(rr_gaps)
    max_tps, mean_tps = _stats(tps_gaps)
    for v in violations:
        logger.debug("violation at ({}, {}, {}): rr gap {}, tps gap {}"
                     .format(v.row.strategy, v.row.alpha, v.row.theta,
                             v.rr_gap, v.tps_gap))
    return ValidationReport(tolerance, len(rows), max_rr, mean_rr, max_tps,
                            mean_tps, violations)


def _rr_m(row):
    return row.rr_m_analytic if row.rr_m_analytic is not None \
        else row.rr_m_sim


def find_threshold(rows):
    """
    Smallest grid alpha with rr_m > alpha per (strategy, theta).

    Returns:
        OrderedDict (strategy, theta) -> alpha, None where the pool never
        profits on the grid
    """
    table = OrderedDict()
    for row in sorted(rows, key=lambda r: (r.strategy, r.theta, r.alpha)):
        key = (row.strategy, row.theta)
        table.setdefault(key, None)
        rr = _rr_m(row)
        if table[key] is None and rr is not None and rr > row.alpha:
            table[key] = row.alpha
    return table


def check_threshold_monotonic(table, strategy='LFT'):
    """
    Pairs of consecutive thetas where the threshold of `strategy` rises.
    A missing threshold counts as above the grid.
    """
    points = sorted((theta, alpha) for (s, theta), alpha in table.items()
                    if s == strategy)
    inf = float('inf')
    violations = []
    for (t0, a0), (t1, a1) in zip(points, points[1:]):
        if (inf if a1 is None else a1) > (inf if a0 is None else a0):
            violations.append((t0, a0, t1, a1))
    return violations
