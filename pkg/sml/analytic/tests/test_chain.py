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

import numpy as np

from sml.errors import InconsistentSpace, SingularSystem
from sml.model import (STRATEGIES, Delta, MarkovState, Event, TRAIL,
                       TIE_ALL_HONEST, ModelParams, validate_params)
from sml.analytic import (StateSpace, enumerate_states, build_generator,
                          solve_steady_state, truncation_tail_mass,
                          transition_outcomes, dump_edges)


def _targets(params, flags, text, event):
    state = MarkovState.parse(text)
    return set(str(o.target) for o in transition_outcomes(params, flags,
                                                          state)
               if o.event == event)


class TestStateSpace(unittest.TestCase):
    def test_trail_states_need_t(self):
        for name, flags in STRATEGIES.items():
            space = enumerate_states(flags, 10)
            kinds = set(s.delta.kind for s in space)
            has_trail = TRAIL in kinds and TIE_ALL_HONEST in kinds
            self.assertEqual(has_trail, flags.T, name)
            self.assertIn(MarkovState.INITIAL, space)

    def test_tie_leaf_counts(self):
        space = enumerate_states(STRATEGIES['LFT'], 30)
        ties = set(s.n_leaves for s in space
                   if s.delta == Delta.TIE_PUBLISHED)
        self.assertEqual(ties, {2, 3})
        self.assertTrue(all(s.is_valid() for s in space))
        leads = [s.delta.k for s in space if s.is_lead]
        self.assertEqual(max(leads), 30)

    def test_order_deterministic(self):
        a = enumerate_states(STRATEGIES['FT'], 8)
        b = enumerate_states(STRATEGIES['FT'], 8)
        self.assertEqual(a.states, b.states)
        keys = [s.sort_key for s in a.states]
        self.assertEqual(keys, sorted(keys))
        self.assertEqual(len(a.index), len(a))


class TestTransitions(unittest.TestCase):
    def setUp(self):
        self.params = validate_params({'alpha': 0.3, 'theta': 0.05})

    def test_selfish_lead_two(self):
        flags = STRATEGIES['S']
        self.assertEqual(
            _targets(self.params, flags, "(2,3)", Event.HP_BLOCK), {"(0,1)"})
        self.assertEqual(
            _targets(self.params, flags, "(2,3)", Event.HP_FORK), {"(0,1)"})

    def test_lead_stubborn_lead_two(self):
        flags = STRATEGIES['L']
        self.assertEqual(
            _targets(self.params, flags, "(2,3)", Event.HP_BLOCK), {"(1,2)"})
        self.assertEqual(
            _targets(self.params, flags, "(2,3)", Event.HP_FORK), {"(1,3)"})

    def test_mp_block_extends_lead(self):
        for name, flags in STRATEGIES.items():
            for k in (0, 1, 4):
                n = 1 if k == 0 else 2
                self.assertEqual(
                    _targets(self.params, flags, "({},{})".format(k, n),
                             Event.MP_BLOCK), {"({},{})".format(k + 1, n)})

    def test_published_tie(self):
        t = STRATEGIES['T1']
        s = STRATEGIES['S']
        self.assertEqual(
            _targets(self.params, s, "(0',2)", Event.HP_BLOCK), {"(0,1)"})
        self.assertEqual(
            _targets(self.params, t, "(0',2)", Event.HP_BLOCK),
            {"(0,1)", "(-1,1)"})
        self.assertEqual(
            _targets(self.params, t, "(0',3)", Event.HP_FORK),
            {"(0,2)", "(0',2)", "(-1,2)"})
        self.assertEqual(
            _targets(self.params, STRATEGIES['F'], "(0',3)",
                     Event.MP_BLOCK), {"(1,3)"})

    def test_outcome_rates_partition_unity(self):
        space = enumerate_states(STRATEGIES['LFT'], 12)
        for state in space:
            total = sum(o.rate
                        for o in transition_outcomes(self.params,
                                                     STRATEGIES['LFT'],
                                                     state))
            self.assertAlmostEqual(total, 1., places=14)


class TestGenerator(unittest.TestCase):
    def test_rows(self):
        for theta in (0.01, 0.2):
            params = validate_params({
                'alpha': 0.35,
                'theta': theta,
                'delta_max': 12
            })
            for name, flags in STRATEGIES.items():
                space = enumerate_states(flags, 12, params)
                q = build_generator(params, flags, space)
                self.assertLess(np.abs(q.matrix.sum(axis=1)).max(), 1e-12)
                off = q.matrix.copy()
                np.fill_diagonal(off, 0.)
                self.assertGreaterEqual(off.min(), 0.)
                outflow = off.sum(axis=1) + q.self_rate
                self.assertLess(np.abs(outflow - 1.).max(), 1e-12, name)
                # every state is entered from somewhere
                inflow = off.sum(axis=0)
                self.assertTrue(np.all(inflow > 0.), name)

    def test_rows_counting_blocks(self):
        params = validate_params({'alpha': 0.35, 'theta': 0.2,
                                  'delta_max': 12, 'rates': 'block'})
        for name, flags in STRATEGIES.items():
            space = enumerate_states(flags, 12, params)
            q = build_generator(params, flags, space)
            off = q.matrix.copy()
            np.fill_diagonal(off, 0.)
            outflow = off.sum(axis=1) + q.self_rate
            self.assertLess(np.abs(outflow - params.total_rate).max(), 1e-12,
                            name)
            self.assertAlmostEqual(params.total_rate, 1. - 0.65 * 0.2,
                                   places=12)

    def test_missing_target(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        flags = STRATEGIES['S']
        space = enumerate_states(flags, 5)
        broken = StateSpace(
            [s for s in space if s != MarkovState(Delta.TIE_PUBLISHED, 3)],
            5, flags)
        with self.assertRaises(InconsistentSpace):
            build_generator(params._replace(delta_max=5), flags, broken)

    def test_edge_dump(self):
        params = ModelParams.derive(0.3, 0.05, delta_max=4)
        flags = STRATEGIES['T1']
        space = enumerate_states(flags, 4, params)
        q = build_generator(params, flags, space)
        stream = io.StringIO()
        dump_edges(space, q, stream)
        lines = stream.getvalue().splitlines()
        self.assertEqual(len(lines), len(q.edges))
        first = lines[0].split('  ')
        self.assertEqual(len(first), 4)
        self.assertIsInstance(MarkovState.parse(first[0]), MarkovState)


class TestSteadyState(unittest.TestCase):
    def test_two_state(self):
        dist = solve_steady_state(np.array([[-1., 1.], [1., -1.]]))
        np.testing.assert_allclose(dist.pi, [0.5, 0.5], atol=1e-15)

    def test_singular(self):
        with self.assertRaises(SingularSystem):
            solve_steady_state(np.zeros((3, 3)))

    def test_residual(self):
        for name, flags in STRATEGIES.items():
            params = validate_params({'alpha': 0.3, 'theta': 0.05})
            space = enumerate_states(flags, 30, params)
            dist = solve_steady_state(build_generator(params, flags, space))
            self.assertLessEqual(dist.residual, 1e-10)
            self.assertAlmostEqual(dist.pi.sum(), 1., places=10)
            self.assertGreaterEqual(dist.pi.min(), 0.)

    def test_tail_mass(self):
        flags = STRATEGIES['LFT']

        def tail(alpha, depth):
            params = validate_params({
                'alpha': alpha,
                'theta': 0.05,
                'delta_max': depth
            })
            space = enumerate_states(flags, depth, params)
            dist = solve_steady_state(build_generator(params, flags, space))
            return truncation_tail_mass(dist, space)

        self.assertLess(tail(0.05, 10), 1e-10)
        self.assertLess(tail(0.3, 30), 1e-6)
        self.assertLess(tail(0.45, 120), 1e-6)
        self.assertGreater(tail(0.45, 3), 1e-6)

    def test_depth_doubling(self):
        params = validate_params({'alpha': 0.3, 'theta': 0.1})
        flags = STRATEGIES['LFT']
        spaces = [enumerate_states(flags, d) for d in (30, 60)]
        dists = [
            solve_steady_state(
                build_generator(params._replace(delta_max=d), flags, s))
            for d, s in zip((30, 60), spaces)
        ]
        shared = [s for s in spaces[0] if s.lead is None or s.lead < 30]
        diff = max(
            abs(dists[0].prob(spaces[0], s) - dists[1].prob(spaces[1], s))
            for s in shared)
        self.assertLess(diff, 1e-8)


if __name__ == '__main__':
    unittest.main()
