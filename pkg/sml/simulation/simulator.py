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
from collections import Counter

from sml.core.workspace import register
from sml.errors import InconsistentSpace, NonTermination, UnmappableTree
from sml.model import (Delta, MarkovState, Event, MpAction, TIE_PUBLISHED,
                       TRAIL, decide_mp_action)
from .rng import round_generator
from .tree import MP, HP, BlockTree

__all__ = ['SimConfig', 'RoundStats', 'ChainView', 'observe_markov_state',
           'run_round', 'simulate']

logger = logging.getLogger(__name__)

_BUFFER = 4096
_MAX_EVENT_FACTOR = 50


@register
class SimConfig(object):
    """
    Monte Carlo settings

    Args:
        rounds (int): independent rounds per parameter point
        blocks_per_round (int): blocks generated in each round
        seed (int): base seed, round i draws from SeedSequence([seed, i])
        workers (int): worker count, 0 reads SML_THREADS
        use_process (bool): run rounds in worker processes
        audit (bool): check every observed transition against the chain
        audit_depth (int): lead depth covered by the audit
        trace_events (int): events of round 0 written to the trace
    """
    __category__ = 'simulation'

    def __init__(self,
                 rounds: int=30,
                 blocks_per_round: int=1000000,
                 seed: int=42,
                 workers: int=0,
                 use_process: bool=True,
                 audit: bool=False,
                 audit_depth: int=60,
                 trace_events: int=0):
        super(SimConfig, self).__init__()
        self.rounds = rounds
        self.blocks_per_round = blocks_per_round
        self.seed = seed
        self.workers = workers
        self.use_process = use_process
        self.audit = audit
        self.audit_depth = audit_depth
        self.trace_events = trace_events


class RoundStats(object):
    """
    Counters of one round. Consensus, stale counts and simulated time
    cover the finalized prefix; `discarded` counts blocks created after
    the last final block.
    """

    def __init__(self, round_index):
        super(RoundStats, self).__init__()
        self.round_index = round_index
        self.events = 0
        self.sim_time = 0.
        self.consensus_mp = 0
        self.consensus_hp = 0
        self.stale_total = 0
        self.discarded = 0
        self.created = {MP: 0, HP: 0}
        self.state_counts = Counter()
        self.tie_entries = Counter()
        self.tie_honest_wins = Counter()
        self.tie_blocks = Counter()
        self.tie_blocks_included = Counter()

    @property
    def consensus_total(self):
        return self.consensus_mp + self.consensus_hp

    @property
    def rr_m_hat(self):
        total = self.consensus_total
        return self.consensus_mp / float(total) if total else 0.

    @property
    def tps_hat(self):
        return self.consensus_total / self.sim_time if self.sim_time \
            else 0.


class ChainView(object):
    """
    What the pools see: public leaves honest pools mine on, the leaf
    aligned with the private branch and the private branch itself.
    """

    def __init__(self, tree):
        super(ChainView, self).__init__()
        self.tree = tree
        self.leaves = [tree.anchor]
        self.aligned = tree.anchor
        self.mp_tip = tree.anchor
        self.private = []
        self.in_race = False

    def honest_leaves(self):
        return [l for l in self.leaves if l is not self.aligned]

    def settled(self):
        return len(self.leaves) == 1 and not self.private and \
            self.mp_tip is self.leaves[0]


def observe_markov_state(view):
    """
    Classify a chain view into its (delta, N) state.

    Raises:
        UnmappableTree: the view matches no state of the model
    """
    n = len(view.leaves)
    height = view.leaves[0].height
    if not 1 <= n <= 3 or any(l.height != height for l in view.leaves):
        raise UnmappableTree("{} public leaves at heights {}".format(
            n, [l.height for l in view.leaves]))
    mp_on_leaf = any(l is view.mp_tip for l in view.leaves)
    if view.private:
        k = view.mp_tip.height - height
        if k != len(view.private) or not any(l is view.aligned
                                             for l in view.leaves):
            raise UnmappableTree("private branch of {} blocks at lead {}"
                                 .format(len(view.private), k))
        return MarkovState(k, n)
    if mp_on_leaf:
        if view.in_race:
            if n < 2:
                raise UnmappableTree("published tie with a single leaf")
            return MarkovState(Delta.TIE_PUBLISHED, n)
        return MarkovState(0, n)
    if view.mp_tip.height == height:
        return MarkovState(Delta.TIE_ALL_HONEST, n)
    if view.mp_tip.height == height - 1:
        return MarkovState(Delta.TRAIL_MINUS_ONE, n)
    raise UnmappableTree("pool tip at height {} behind leaves at {}".format(
        view.mp_tip.height, height))


class _Draws(object):
    """Batched uniform and unit-rate exponential draws."""

    def __init__(self, rng):
        self.rng = rng
        self._refill()

    def _refill(self):
        self.buf = self.rng.random(_BUFFER)
        self.exp = self.rng.standard_exponential(_BUFFER)
        self.pos = 0
        self.exp_pos = 0

    def __call__(self):
        if self.pos == _BUFFER:
            self.buf = self.rng.random(_BUFFER)
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]

    def interval(self):
        if self.exp_pos == _BUFFER:
            self.exp = self.rng.standard_exponential(_BUFFER)
            self.exp_pos = 0
        self.exp_pos += 1
        return self.exp[self.exp_pos - 1]

    def pick(self, items):
        return items[min(int(self() * len(items)), len(items) - 1)]


def _place_hp_blocks(params, view, event, draw):
    """Parents of the honest block(s) and the placement class."""
    n = len(view.leaves)
    aligned = view.aligned
    honest = view.honest_leaves()
    if event == Event.HP_BLOCK:
        if aligned is not None and (not honest or
                                    draw() < params.gamma[n]):
            return [aligned], 'aligned'
        return [draw.pick(honest)], 'honest'
    if aligned is None:
        klass = 'H'
    elif not honest:
        klass = 'A'
    else:
        u = draw()
        if u < params.g_A[n]:
            klass = 'A'
        elif u < params.g_A[n] + params.g_AH[n]:
            klass = 'AH'
        else:
            klass = 'H'
    if klass == 'A':
        parents = [aligned, aligned]
    elif klass == 'AH':
        parents = [aligned, draw.pick(honest)]
    else:
        parents = [draw.pick(honest), draw.pick(honest)]
    return parents, klass


def _honest_event(view, event, draw):
    tree = view.tree
    if event == Event.MP_BLOCK:
        new = [tree.add(draw.pick(view.leaves), MP, True)]
    else:
        count = 1 if event == Event.HP_BLOCK else 2
        new = [
            tree.add(draw.pick(view.leaves), HP, True) for _ in range(count)
        ]
    view.leaves = new
    view.mp_tip = new[0]
    view.aligned = None
    return MpAction.PUBLISH


def _mp_block(view, flags, state):
    action = decide_mp_action(flags, state, Event.MP_BLOCK)
    tree = view.tree
    node = tree.add(view.mp_tip, MP, action != MpAction.HOLD)
    view.mp_tip = node
    if action == MpAction.HOLD:
        view.private.append(node)
    elif state.delta.kind != TRAIL:
        view.leaves = [node]
        view.aligned = node
    view.in_race = False
    return action, node


def _hp_event(params, view, flags, state, event, draw):
    parents, placement = _place_hp_blocks(params, view, event, draw)
    new = [view.tree.add(p, HP, True) for p in parents]
    on_private = parents[0] is view.aligned
    action = decide_mp_action(flags, state, event, on_private)

    if action == MpAction.ADOPT_PUBLIC:
        view.private = []
        view.mp_tip = draw.pick(new)
        view.aligned = view.mp_tip
        view.leaves = new
        view.in_race = False
    elif action == MpAction.PUBLISH_ALL:
        for b in view.private:
            b.published = True
        view.private = []
        view.leaves = [view.mp_tip]
        view.aligned = view.mp_tip
        view.in_race = False
    elif action == MpAction.PUBLISH_ONE:
        b = view.private.pop(0)
        b.published = True
        view.leaves = new + [b]
        view.aligned = b
        view.in_race = not view.private
    elif action == MpAction.MINE_ON_PRIVATE:
        view.leaves = new
        view.aligned = None
        view.in_race = False
    else:
        assert action == MpAction.MINE_ON_NEW_PRIVATE
        view.leaves = new
        if placement == 'AH':
            view.mp_tip = new[0]
            view.in_race = True
        else:
            view.mp_tip = draw.pick(new)
            view.in_race = False
        view.aligned = view.mp_tip
    return action


def _audit_edges(params, flags, depth):
    from sml.analytic import enumerate_states, build_generator
    params = params._replace(delta_max=depth)
    space = enumerate_states(flags, depth, params)
    return build_generator(params, flags, space).edge_set(space)


def run_round(params, flags, config, round_index, trace=None):
    """
    Simulate one round until `config.blocks_per_round` blocks are final.

    Args:
        params (ModelParams): model parameters
        flags (StrategyFlags): pool strategy, None for all-honest mining
        config (SimConfig): simulation settings
        round_index (int): index mixed into the round seed
        trace (file): optional stream receiving per-event lines

    Returns:
        RoundStats
    """
    draw = _Draws(round_generator(config.seed, round_index))
    tree = BlockTree()
    view = ChainView(tree)
    stats = RoundStats(round_index)
    edges = _audit_edges(params, flags, config.audit_depth) \
        if config.audit and flags is not None else None

    total = params.total_rate
    mp_cut = params.alpha / total
    hb_cut = (params.alpha + params.p_beta1) / total
    max_events = _MAX_EVENT_FACTOR * config.blocks_per_round
    created = 0
    events = 0
    clock = 0.
    pending_ties = []
    pending_blocks = []
    visits = Counter()

    while stats.consensus_total < config.blocks_per_round:
        if events >= max_events:
            raise NonTermination("round {} exceeded {} events".format(
                round_index, max_events))
        state = observe_markov_state(view)
        visits[state] += 1
        clock += draw.interval() / total
        u = draw()
        if u < mp_cut:
            event = Event.MP_BLOCK
        elif u < hb_cut:
            event = Event.HP_BLOCK
        else:
            event = Event.HP_FORK

        if flags is None:
            action = _honest_event(view, event, draw)
        elif event == Event.MP_BLOCK:
            action, node = _mp_block(view, flags, state)
            if state.delta.kind == TIE_PUBLISHED:
                pending_blocks.append((node, state.n_leaves))
        else:
            action = _hp_event(params, view, flags, state, event, draw)
        events += 1
        n_new = 2 if event == Event.HP_FORK else 1
        created += n_new
        stats.created[MP if event == Event.MP_BLOCK else HP] += n_new

        after = observe_markov_state(view)
        if after.delta.kind == TIE_PUBLISHED and \
                state.delta.kind != TIE_PUBLISHED:
            pending_ties.append((view.aligned, after.n_leaves))
        if trace is not None and events <= config.trace_events:
            trace.write('{}  {}  {}  {}\n'.format(events, event.value, state,
                                                  after))
        if edges is not None and (state, after) not in edges and \
                max(state.lead or 0, after.lead or 0) < config.audit_depth:
            raise InconsistentSpace(
                "observed transition {} -> {} ({}, {}) is not in the "
                "chain".format(state, after, event.value, action.value))

        if view.settled() and view.leaves[0] is not tree.anchor:
            confirmed = tree.finalize(view.leaves[0])
            for node, n in pending_ties:
                stats.tie_entries[n] += 1
                if node.id not in confirmed:
                    stats.tie_honest_wins[n] += 1
            for node, n in pending_blocks:
                stats.tie_blocks[n] += 1
                if node.id in confirmed:
                    stats.tie_blocks_included[n] += 1
            pending_ties = []
            pending_blocks = []
            stats.events = events
            stats.sim_time = clock
            stats.consensus_mp = tree.consensus[MP]
            stats.consensus_hp = tree.consensus[HP]
            stats.stale_total = created - stats.consensus_total
            stats.state_counts.update(visits)
            visits = Counter()

    stats.discarded = created - stats.consensus_total - stats.stale_total
    logger.debug("round {}: {} events, {} consensus blocks, rr_m={:.5f}"
                 .format(round_index, stats.events, stats.consensus_total,
                         stats.rr_m_hat))
    return stats


def _round_task(args):
    params, flags, config, round_index = args
    return run_round(params, flags, config, round_index)


def simulate(params, flags, config, trace=None):
    """
    Run all rounds of one parameter point and aggregate them.

    Rounds run on the worker pool; the result does not depend on the
    worker count.
    """
    from sml.utils.check import check_threads
    from sml.utils.parallel import ParallelMap, TaskError
    from sml.utils.stats import ProgressStats
    from .aggregate import aggregate_rounds

    first = 0
    rounds = []
    if trace is not None and config.trace_events > 0:
        rounds.append(run_round(params, flags, config, 0, trace))
        first = 1
    tasks = [(params, flags, config, i) for i in range(first, config.rounds)]
    progress = ProgressStats(20, ['rr_m', 'tps'], len(tasks))

    def _log(idx, result, done):
        if isinstance(result, TaskError):
            return
        progress.update({'rr_m': result.rr_m_hat, 'tps': result.tps_hat})
        logger.info("round: {}/{}, {}, eta: {}".format(
            done, len(tasks), progress.log(), progress.eta()))

    pmap = ParallelMap(_round_task, check_threads(config.workers),
                       config.use_process)
    for result in pmap(tasks, _log):
        if isinstance(result, TaskError):
            if result.exc is not None:
                raise result.exc
            raise RuntimeError("simulation round failed: {}".format(
                result.errmsg))
        rounds.append(result)
    return aggregate_rounds(rounds)
