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

from collections import Counter, namedtuple

import numpy as np

__all__ = ['SimReport', 'aggregate_rounds', 'Z_95']

Z_95 = 1.959963984540054

SimReport = namedtuple('SimReport', [
    'rounds', 'rr_m', 'rr_m_std', 'rr_m_ci', 'tps', 'tps_std', 'tps_ci',
    'state_freq', 'ph_tie_freq', 'pf_freq', 'round_rr_m'
])
SimReport.__doc__ = """
Averages over rounds with standard deviations and normal 95% half-widths.
`state_freq` maps MarkovState to its share of events; `ph_tie_freq` and
`pf_freq` map N to observed tie race frequencies (None when unseen).
"""


def _summary(values):
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        # one round has no spread to estimate
        return float(values.mean()), 0., 0.
    std = float(values.std(ddof=1))
    return float(values.mean()), std, Z_95 * std / np.sqrt(len(values))


def _ratio(num, den):
    return {n: (num[n] / float(den[n]) if den[n] else None) for n in (2, 3)}


def aggregate_rounds(rounds):
    """
    Args:
        rounds (list): RoundStats of one parameter point

    Returns:
        SimReport
    """
    assert rounds, "no rounds to aggregate"
    rounds = sorted(rounds, key=lambda r: r.round_index)
    rr_m, rr_m_std, rr_m_ci = _summary([r.rr_m_hat for r in rounds])
    tps, tps_std, tps_ci = _summary([r.tps_hat for r in rounds])

    visits = Counter()
    ties, honest_wins = Counter(), Counter()
    blocks, included = Counter(), Counter()
    for r in rounds:
        visits.update(r.state_counts)
        ties.update(r.tie_entries)
        honest_wins.update(r.tie_honest_wins)
        blocks.update(r.tie_blocks)
        included.update(r.tie_blocks_included)
    total = float(sum(visits.values())) or 1.
    freq = {s: c / total for s, c in visits.items()}
    return SimReport(
        len(rounds), rr_m, rr_m_std, float(rr_m_ci), tps, tps_std,
        float(tps_ci), freq, _ratio(honest_wins, ties),
        _ratio(included, blocks), [r.rr_m_hat for r in rounds])
