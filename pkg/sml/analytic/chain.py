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
import warnings
from collections import namedtuple, deque

import numpy as np
from scipy import linalg

from sml.errors import InconsistentSpace, SingularSystem
from sml.model import (Delta, MarkovState, Event, MpAction, decide_mp_action,
                       LEAD, TIE_PUBLISHED, TIE_ALL_HONEST, TRAIL,
                       FORK_CLASSES)

__all__ = [
    'Outcome', 'StateSpace', 'GeneratorMatrix', 'SteadyStateDistribution',
    'honest_leaf_count', 'transition_outcomes', 'enumerate_states',
    'build_generator', 'solve_steady_state', 'truncation_tail_mass',
    'dump_edges'
]

logger = logging.getLogger(__name__)

ALIGNED = 'aligned'
HONEST = 'honest'

# one branch of an event: `prob` is conditional on the event kind
Outcome = namedtuple(
    'Outcome', ['event', 'placement', 'prob', 'rate', 'action', 'target'])


def honest_leaf_count(state):
    """Public leaves that are not on the private branch."""
    if state.delta.kind in (TRAIL, TIE_ALL_HONEST):
        return state.n_leaves
    return state.n_leaves - 1


def _block_placements(params, state):
    m = honest_leaf_count(state)
    if state.delta.kind in (TRAIL, TIE_ALL_HONEST):
        return [(HONEST, 1.)]
    if m == 0:
        return [(ALIGNED, 1.)]
    gamma = params.gamma[state.n_leaves]
    return [(ALIGNED, gamma), (HONEST, 1. - gamma)]


def _fork_placements(params, state):
    m = honest_leaf_count(state)
    if state.delta.kind in (TRAIL, TIE_ALL_HONEST):
        return [('H', 1.)]
    if m == 0:
        return [('A', 1.)]
    return [(c, params.fork_prob(c, state.n_leaves)) for c in FORK_CLASSES]


def _target(flags, state, event, placement, action, delta_max):
    kind = state.delta.kind
    n = state.n_leaves
    fork = event == Event.HP_FORK
    new_leaves = 2 if fork else 1

    if event == Event.MP_BLOCK:
        if action == MpAction.HOLD:
            if kind == LEAD:
                return MarkovState(min(state.delta.k + 1, delta_max), n)
            return MarkovState(1, n)
        if kind == TRAIL:
            return MarkovState(Delta.TIE_ALL_HONEST, n)
        return MarkovState.INITIAL

    if action == MpAction.PUBLISH_ALL:
        return MarkovState.INITIAL
    if action == MpAction.PUBLISH_ONE:
        k = state.delta.k
        if k == 1:
            return MarkovState(Delta.TIE_PUBLISHED, new_leaves + 1)
        return MarkovState(k - 1, new_leaves + 1)
    if action == MpAction.ADOPT_PUBLIC:
        return MarkovState(0, new_leaves)
    if action == MpAction.MINE_ON_PRIVATE:
        return MarkovState(Delta.TRAIL_MINUS_ONE, new_leaves)
    assert action == MpAction.MINE_ON_NEW_PRIVATE
    if placement == 'AH':
        # one block on each side keeps the race alive
        return MarkovState(Delta.TIE_PUBLISHED, 2)
    return MarkovState(0, new_leaves)


def transition_outcomes(params, flags, state):
    """
    Enumerate every branch of every event from `state`.

    Returns:
        list of Outcome, the rates of which sum to params.total_rate
    """
    outcomes = []
    events = [(Event.MP_BLOCK, params.alpha, [(None, 1.)]),
              (Event.HP_BLOCK, params.p_beta1,
               _block_placements(params, state)),
              (Event.HP_FORK, params.beta2, _fork_placements(params, state))]
    for event, rate, placements in events:
        for placement, prob in placements:
            if prob <= 0. or rate <= 0.:
                continue
            on_private = placement in (ALIGNED, 'A', 'AH')
            action = decide_mp_action(flags, state, event, on_private)
            target = _target(flags, state, event, placement, action,
                             params.delta_max)
            outcomes.append(
                Outcome(event, placement, prob, rate * prob, action, target))
    return outcomes


class StateSpace(object):
    """
    Reachable (delta, N) states in deterministic order.

    Args:
        states (list): MarkovState list sorted by (delta rank, N)
        delta_max (int): truncation depth
        flags (StrategyFlags): strategy the space was built for
    """

    def __init__(self, states, delta_max, flags):
        super(StateSpace, self).__init__()
        self.states = sorted(states, key=lambda s: s.sort_key)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.delta_max = delta_max
        self.flags = flags

    def __len__(self):
        return len(self.states)

    def __contains__(self, state):
        return state in self.index

    def __iter__(self):
        return iter(self.states)


def enumerate_states(flags, delta_max, params=None):
    """
    Breadth-first closure of the transition rules from (0, 1).

    Placement probabilities do not change which targets exist, so a
    generic parameter set is used when `params` is omitted.
    """
    assert delta_max >= 3, "delta_max must be >= 3"
    if params is None:
        from sml.model import ModelParams
        params = ModelParams.derive(0.25, 0.1, delta_max=delta_max)
    else:
        params = params._replace(delta_max=delta_max)
    # a zero fork rate would hide fork-only states from the closure
    if params.beta2 <= 0.:
        params = params._replace(p_beta1=params.beta * 0.9,
                                 beta2=params.beta * 0.1)
    seen = {MarkovState.INITIAL}
    queue = deque([MarkovState.INITIAL])
    while queue:
        state = queue.popleft()
        for outcome in transition_outcomes(params, flags, state):
            if outcome.target not in seen:
                seen.add(outcome.target)
                queue.append(outcome.target)
    space = StateSpace(seen, delta_max, flags)
    logger.debug("strategy {}: {} states at delta_max={}".format(
        flags, len(space), delta_max))
    return space


class GeneratorMatrix(object):
    """
    Infinitesimal generator with its labelled edge list.

    Args:
        matrix (ndarray): dense generator, rows sum to zero
        edges (list): (from index, to index, rate, label), self-loops kept
        self_rate (ndarray): event rate folded into the diagonal per row
    """

    def __init__(self, matrix, edges, self_rate):
        super(GeneratorMatrix, self).__init__()
        self.matrix = matrix
        self.edges = edges
        self.self_rate = self_rate

    @property
    def dim(self):
        return self.matrix.shape[0]

    def edge_set(self, space):
        return set((space.states[i], space.states[j])
                   for i, j, _, _ in self.edges)


def _label(outcome):
    event = outcome.event.value
    if outcome.placement is not None:
        event = '{}@{}'.format(event, outcome.placement)
    return '{}/{}'.format(event, outcome.action.value)


def build_generator(params, flags, space):
    """
    Assemble the generator of the chain over `space`.

    Events leaving the state unchanged (including lead growth at the
    truncation depth) are self-loops and only show up in `self_rate`.
    """
    dim = len(space)
    q = np.zeros((dim, dim), dtype=np.float64)
    self_rate = np.zeros(dim, dtype=np.float64)
    edges = []
    for i, state in enumerate(space.states):
        for outcome in transition_outcomes(params, flags, state):
            j = space.index.get(outcome.target)
            if j is None:
                raise InconsistentSpace(
                    "transition {} -> {} ({}) leaves the state space".format(
                        state, outcome.target, _label(outcome)))
            edges.append((i, j, outcome.rate, _label(outcome)))
            if i == j:
                self_rate[i] += outcome.rate
            else:
                q[i, j] += outcome.rate
    q[np.diag_indices(dim)] = -q.sum(axis=1)
    return GeneratorMatrix(q, edges, self_rate)


class SteadyStateDistribution(object):
    def __init__(self, pi, residual):
        super(SteadyStateDistribution, self).__init__()
        self.pi = pi
        self.residual = residual

    def __getitem__(self, idx):
        return self.pi[idx]

    def prob(self, space, state):
        idx = space.index.get(state)
        return 0. if idx is None else float(self.pi[idx])


def solve_steady_state(q):
    """
    Solve pi Q = 0, sum(pi) = 1 with a dense LU factorisation, the last
    balance equation being replaced by the normalisation.
    """
    matrix = q.matrix if isinstance(q, GeneratorMatrix) else np.asarray(q)
    dim = matrix.shape[0]
    a = matrix.T.copy()
    a[-1, :] = 1.
    b = np.zeros(dim)
    b[-1] = 1.
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(a, check_finite=True)
            if np.any(np.abs(np.diag(lu)) < 1e-14):
                raise SingularSystem("zero pivot in balance equations")
            pi = linalg.lu_solve((lu, piv), b)
    except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as e:
        raise SingularSystem("balance equations are singular: {}".format(e))
    if np.any(pi < -1e-10):
        raise SingularSystem("negative stationary mass {:.3e}".format(
            pi.min()))
    pi = np.clip(pi, 0., None)
    pi /= pi.sum()
    residual = float(np.abs(pi.dot(matrix)).max())
    return SteadyStateDistribution(pi, residual)


def truncation_tail_mass(dist, space):
    """Stationary mass sitting at the truncation depth."""
    return float(
        sum(dist.pi[i] for i, s in enumerate(space.states)
            if s.is_lead and s.delta.k == space.delta_max))


def dump_edges(space, generator, stream):
    """Write `from  to  rate  label` lines, one edge per line."""
    for i, j, rate, label in generator.edges:
        stream.write('{}  {}  {!r}  {}\n'.format(space.states[i],
                                                 space.states[j], rate,
                                                 label))
