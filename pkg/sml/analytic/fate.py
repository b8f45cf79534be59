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
"""
Eventual inclusion probabilities of blocks sitting at a role of a state.

A role names a block position the state fully determines: the aligned
leaf `a`, a representative honest leaf `h`, the private tip `p` of a
trailing (published) branch and the unpublished private blocks `u1..uk`
counted from the bottom. Every event maps each old role onto a linear
combination of roles of the successor state, which gives one linear
system over all (state, role) pairs with (0, 1) as its boundary.
"""

import logging
import warnings

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from sml.errors import SingularSystem
from sml.model import (Delta, MarkovState, Event, MpAction, LEAD,
                       TIE_PUBLISHED, TIE_ALL_HONEST, TRAIL)
from .chain import ALIGNED, honest_leaf_count, transition_outcomes

__all__ = ['FateTable', 'roles_of', 'outcome_fates', 'solve_fates']

logger = logging.getLogger(__name__)

ONE = None  # constant term key of a linear expression


def roles_of(state):
    kind = state.delta.kind
    if kind in (TRAIL, TIE_ALL_HONEST):
        return ['p', 'h']
    if kind == TIE_PUBLISHED:
        return ['a', 'h']
    k = state.delta.k
    roles = ['a']
    if honest_leaf_count(state) > 0:
        roles.append('h')
    return roles + ['u{}'.format(j) for j in range(1, k + 1)]


def _scale(expr, c):
    return {r: c * v for r, v in expr.items()}


def _new_block_counts(event, placement):
    """(blocks created, blocks landing on the aligned leaf)"""
    if event == Event.HP_BLOCK:
        return 1, 1 if placement == ALIGNED else 0
    return 2, {'A': 2, 'AH': 1, 'H': 0}[placement]


def outcome_fates(state, outcome, delta_max):
    """
    Role mapping of one outcome.

    Returns:
        (mapping, created): `mapping` sends each role of `state` to a
        linear expression over roles of `outcome.target`; `created` is
        the expression of the expected number of included blocks among
        those the event creates.
    """
    kind = state.delta.kind
    target = outcome.target
    roles = roles_of(state)
    m = honest_leaf_count(state)
    action = outcome.action

    if target == MarkovState.INITIAL and action in (
            MpAction.PUBLISH, MpAction.PUBLISH_ALL,
            MpAction.MINE_ON_NEW_PRIVATE):
        # the private-aligned side settles as the common chain
        mapping = {r: ({ONE: 0.} if r == 'h' else {ONE: 1.}) for r in roles}
        if action == MpAction.PUBLISH_ALL:
            return mapping, {ONE: 0.}
        return mapping, {ONE: 1.}

    if outcome.event == Event.MP_BLOCK:
        if kind == LEAD or action == MpAction.HOLD:
            k = state.delta.k if kind == LEAD else 0
            mapping = {r: {r: 1.} for r in roles}
            top = min(k + 1, delta_max)
            return mapping, {'u{}'.format(top): 1.}
        assert kind == TRAIL
        return {'p': {'p': 1.}, 'h': {'h': 1.}}, {'p': 1.}

    created, on_aligned = _new_block_counts(outcome.event, outcome.placement)
    on_honest = created - on_aligned
    share = float(on_honest) / m if m > 0 else 0.

    if action == MpAction.PUBLISH_ONE:
        k = state.delta.k
        mapping = {'a': {'a': 1., 'h': float(on_aligned)}}
        if 'h' in roles:
            mapping['h'] = {'h': share}
        mapping['u1'] = {'a': 1.}
        for j in range(2, k + 1):
            mapping['u{}'.format(j)] = {'u{}'.format(j - 1): 1.}
        return mapping, {'h': float(created)}

    if action == MpAction.ADOPT_PUBLIC:
        settle = {ONE: 1.} if target == MarkovState.INITIAL else \
            {'a': .5, 'h': .5}
        mapping = {r: {ONE: 0.} for r in roles}
        if 'h' in roles:
            mapping['h'] = _scale(settle, share)
        if kind == LEAD and on_aligned:
            mapping['a'] = _scale(settle, float(on_aligned))
        return mapping, _scale(settle, float(created))

    if action == MpAction.MINE_ON_PRIVATE:
        # the published private tip keeps racing one block behind
        tip = 'a' if kind == TIE_PUBLISHED else 'p'
        mapping = {tip: {'p': 1.}, 'h': {'h': share}}
        return mapping, {'h': float(created)}

    assert action == MpAction.MINE_ON_NEW_PRIVATE
    if outcome.placement == 'AH':
        mapping = {'a': {'a': 1.}, 'h': {'h': share}}
        return mapping, {'a': 1., 'h': 1.}
    # both fork blocks on the aligned leaf
    return {'a': {ONE: 1.}, 'h': {ONE: 0.}}, {'a': 1., 'h': 1.}


class FateTable(object):
    """
    Inclusion probability per (state, role).

    Args:
        space (StateSpace): states the table covers
        values (dict): (MarkovState, role) -> probability
    """

    def __init__(self, space, values):
        super(FateTable, self).__init__()
        self.space = space
        self.values = values

    def __call__(self, state, role):
        return self.values[(state, role)]

    def evaluate(self, state, expr):
        total = 0.
        for role, coef in expr.items():
            total += coef if role is ONE else coef * self.values[(state,
                                                                  role)]
        return total

    def ph_tie(self, n):
        """Exact probability the honest side wins a published tie."""
        state = MarkovState(Delta.TIE_PUBLISHED, n)
        if state not in self.space:
            return None
        return (n - 1) * self(state, 'h')

    def ph_trail(self, n=1):
        state = MarkovState(Delta.TRAIL_MINUS_ONE, n)
        if state not in self.space:
            return None
        return 1. - self(state, 'p')

    def held_block(self, n):
        """Inclusion of the block withheld at a published tie."""
        state = MarkovState(1, n)
        if state not in self.space:
            return None
        return self(state, 'u1')


def solve_fates(params, flags, space):
    """
    Solve the inclusion system of all (state, role) pairs.

    Returns:
        FateTable
    """
    params = params._replace(delta_max=space.delta_max)
    keys = []
    for state in space.states:
        for role in roles_of(state):
            keys.append((state, role))
    index = {key: i for i, key in enumerate(keys)}
    dim = len(keys)
    rows, cols, vals = list(range(dim)), list(range(dim)), [1.] * dim
    b = np.zeros(dim, dtype=np.float64)

    b[index[(MarkovState.INITIAL, 'a')]] = 1.
    for state in space.states:
        if state == MarkovState.INITIAL:
            continue
        for outcome in transition_outcomes(params, flags, state):
            prob = params.event_prob(outcome.rate)
            mapping, _ = outcome_fates(state, outcome, space.delta_max)
            for role in roles_of(state):
                row = index[(state, role)]
                for new_role, coef in mapping[role].items():
                    if new_role is ONE:
                        b[row] += prob * coef
                    elif coef != 0.:
                        col = index[(outcome.target, new_role)]
                        rows.append(row)
                        cols.append(col)
                        vals.append(-prob * coef)
    # duplicate entries are summed on conversion
    a = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("error", splinalg.MatrixRankWarning)
        try:
            x = splinalg.spsolve(a, b)
        except (splinalg.MatrixRankWarning, RuntimeError) as e:
            raise SingularSystem("inclusion system is singular: {}".format(
                e))
    if not np.all(np.isfinite(x)):
        raise SingularSystem("inclusion system has no finite solution")
    if np.any(x < -1e-9) or np.any(x > 1. + 1e-9):
        raise SingularSystem("inclusion probabilities out of [0, 1]: "
                             "min {:.3e}, max {:.3e}".format(x.min(),
                                                            x.max()))
    logger.debug("solved {} inclusion unknowns over {} states".format(
        dim, len(space)))
    return FateTable(space,
                     {key: float(np.clip(x[i], 0., 1.))
                      for key, i in index.items()})
