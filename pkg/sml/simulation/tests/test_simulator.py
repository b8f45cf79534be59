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

import io
import unittest

from sml.errors import UnmappableTree
from sml.model import STRATEGIES, Delta, MarkovState, validate_params
from sml.analytic import (enumerate_states, solve_fates, report,
                          selfish_revenue_closed_form, build_generator,
                          solve_steady_state, solve_ph_tie)
from sml.simulation import (SimConfig, ChainView, BlockTree, MP, HP,
                            observe_markov_state, run_round, simulate)


def _config(**kwargs):
    cfg = dict(rounds=3, blocks_per_round=100000, seed=7, workers=1,
               use_process=False)
    cfg.update(kwargs)
    return SimConfig(**cfg)


class TestObserve(unittest.TestCase):
    def setUp(self):
        self.tree = BlockTree()
        self.view = ChainView(self.tree)

    def test_initial(self):
        self.assertEqual(observe_markov_state(self.view),
                         MarkovState.INITIAL)

    def test_lead_and_tie(self):
        root = self.tree.anchor
        p1 = self.tree.add(root, MP, False)
        self.view.private = [p1]
        self.view.mp_tip = p1
        self.assertEqual(str(observe_markov_state(self.view)), "(1,1)")
        h1 = self.tree.add(root, HP, True)
        p1.published = True
        self.view.private = []
        self.view.leaves = [h1, p1]
        self.view.aligned = p1
        self.view.in_race = True
        self.assertEqual(str(observe_markov_state(self.view)), "(0',2)")
        # honest pools move ahead, the pool keeps its branch
        h2 = self.tree.add(h1, HP, True)
        self.view.leaves = [h2]
        self.view.aligned = None
        self.view.in_race = False
        self.assertEqual(str(observe_markov_state(self.view)), "(-1,1)")
        p2 = self.tree.add(p1, MP, True)
        self.view.mp_tip = p2
        self.assertEqual(observe_markov_state(self.view).delta,
                         Delta.TIE_ALL_HONEST)

    def test_unmappable(self):
        root = self.tree.anchor
        self.view.leaves = [self.tree.add(root, HP, True) for _ in range(4)]
        with self.assertRaises(UnmappableTree):
            observe_markov_state(self.view)


class TestRounds(unittest.TestCase):
    def test_deterministic(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        cfg = _config(blocks_per_round=20000)
        a = run_round(params, STRATEGIES['LFT'], cfg, 3)
        b = run_round(params, STRATEGIES['LFT'], cfg, 3)
        self.assertEqual(
            (a.consensus_mp, a.consensus_hp, a.events, a.sim_time),
            (b.consensus_mp, b.consensus_hp, b.events, b.sim_time))
        c = run_round(params, STRATEGIES['LFT'], cfg, 4)
        self.assertNotEqual((a.consensus_mp, a.consensus_hp),
                            (c.consensus_mp, c.consensus_hp))

    def test_worker_count_invariance(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.05})
        one = simulate(params, STRATEGIES['F'],
                       _config(blocks_per_round=10000))
        two = simulate(params, STRATEGIES['F'],
                       _config(blocks_per_round=10000, workers=2))
        self.assertEqual(one.round_rr_m, two.round_rr_m)

    def test_conservation(self):
        params = validate_params({'alpha': 0.4, 'theta': 0.2})
        stats = run_round(params, STRATEGIES['T1'],
                          _config(blocks_per_round=50000), 0)
        self.assertGreaterEqual(stats.consensus_total, 50000)
        self.assertEqual(
            stats.consensus_total + stats.stale_total + stats.discarded,
            stats.created[MP] + stats.created[HP])
        self.assertLessEqual(stats.consensus_mp, stats.created[MP])
        self.assertLessEqual(stats.consensus_total, stats.events)
        self.assertGreater(stats.sim_time, 0.)

    def test_audit(self):
        params = validate_params({'alpha': 0.4, 'theta': 0.2})
        for name, flags in STRATEGIES.items():
            run_round(params, flags,
                      _config(blocks_per_round=20000, audit=True), 0)

    def test_trace(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        stream = io.StringIO()
        simulate(params, STRATEGIES['S'],
                 _config(rounds=2, blocks_per_round=2000, trace_events=50),
                 stream)
        lines = stream.getvalue().splitlines()
        self.assertEqual(len(lines), 50)
        fields = lines[0].split('  ')
        self.assertEqual(fields[0], '1')
        self.assertEqual(len(fields), 4)
        self.assertEqual(fields[2], '(0,1)')


class TestAgreement(unittest.TestCase):
    def test_honest(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        rep = simulate(params, None, _config(blocks_per_round=200000))
        self.assertAlmostEqual(rep.rr_m, 0.3, delta=0.01)
        self.assertAlmostEqual(rep.tps, 1., delta=0.01)
        self.assertEqual(rep.state_freq.keys() - {
            MarkovState(0, 1), MarkovState(0, 2)
        }, set())

    def test_attack_lowers_throughput(self):
        params = validate_params({'alpha': 0.4, 'theta': 0.2})
        cfg = _config(rounds=2, blocks_per_round=50000)
        attack = simulate(params, STRATEGIES['LFT'], cfg)
        honest = simulate(params, None, cfg)
        self.assertLess(attack.tps, honest.tps)
        self.assertGreaterEqual(honest.rr_m_std, 0.)

    def test_selfish_perfect_network(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.})
        rep = simulate(params, STRATEGIES['S'],
                       _config(blocks_per_round=200000))
        self.assertAlmostEqual(rep.rr_m, selfish_revenue_closed_form(0.3),
                               delta=0.01)

    def test_analytic(self):
        params = validate_params({'alpha': 0.35, 'theta': 0.1})
        cfg = _config(rounds=4, blocks_per_round=150000)
        for name in ('S', 'F', 'T1', 'LFT'):
            flags = STRATEGIES[name]
            rep = simulate(params, flags, cfg)
            analytic = report(params, flags)
            self.assertAlmostEqual(rep.rr_m, analytic.rr_m, delta=0.005,
                                   msg=name)
            self.assertAlmostEqual(rep.tps, analytic.tps, delta=0.005,
                                   msg=name)

    def test_counting_blocks(self):
        params = validate_params({
            'alpha': 0.35,
            'theta': 0.1,
            'rates': 'block'
        })
        cfg = _config(blocks_per_round=150000)
        rep = simulate(params, STRATEGIES['LFT'], cfg)
        analytic = report(params, STRATEGIES['LFT'])
        self.assertAlmostEqual(rep.rr_m, analytic.rr_m, delta=0.005)
        self.assertAlmostEqual(rep.tps, analytic.tps, delta=0.005)
        honest = simulate(params, None, cfg)
        self.assertAlmostEqual(honest.tps, 1. - 0.65 * 0.1, delta=0.01)
        self.assertAlmostEqual(honest.rr_m, 0.35 / 0.935, delta=0.01)

    def test_honest_grid(self):
        cfg = _config(rounds=2, blocks_per_round=50000)
        for alpha in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45):
            params = validate_params({'alpha': alpha, 'theta': 0.05})
            rep = simulate(params, None, cfg)
            self.assertAlmostEqual(rep.rr_m, alpha, delta=0.01, msg=alpha)

    def test_fork_win(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.01})
        flags = STRATEGIES['F']
        rep = simulate(params, flags, _config(blocks_per_round=200000))
        fork = report(params, flags).fork
        self.assertAlmostEqual(rep.pf_freq[2], fork.pf_exact[2], delta=0.02)
        # the closed form stops the race after one withheld block
        self.assertGreater(abs(rep.pf_freq[2] - fork.pf), 0.2)

    def test_state_frequencies(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.05})
        for name in ('S', 'LFT'):
            flags = STRATEGIES[name]
            space = enumerate_states(flags, 30, params)
            dist = solve_steady_state(build_generator(params, flags, space))
            rep = simulate(params, flags, _config(blocks_per_round=200000))
            gap = max(
                abs(rep.state_freq.get(s, 0.) - dist.pi[i])
                for i, s in enumerate(space.states))
            self.assertLess(gap, 0.005, name)

    def test_tie_race(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.05})
        for name in ('S', 'LT'):
            flags = STRATEGIES[name]
            rep = simulate(params, flags, _config(blocks_per_round=200000))
            fates = solve_fates(params, flags,
                                enumerate_states(flags, 30, params))
            self.assertAlmostEqual(rep.ph_tie_freq[2], fates.ph_tie(2),
                                   delta=0.02, msg=name)
            # lead races with L are built on the same tie value
            ph = solve_ph_tie(params, flags)
            self.assertAlmostEqual(rep.ph_tie_freq[2], ph.ph_tie[2],
                                   delta=0.02, msg=name)


class TestAggregate(unittest.TestCase):
    def test_single_round(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        rep = simulate(params, STRATEGIES['S'],
                       _config(rounds=1, blocks_per_round=5000))
        self.assertEqual(rep.rounds, 1)
        self.assertEqual(rep.rr_m_ci, 0.)
        self.assertEqual(rep.tps_ci, 0.)
        self.assertEqual(rep.rr_m_std, 0.)


if __name__ == '__main__':
    unittest.main()
