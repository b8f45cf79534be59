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

import unittest

from sml.errors import UnreachableState
from sml.model import (StrategyFlags, STRATEGIES, parse_strategy, Delta,
                       MarkovState, Event, MpAction, decide_mp_action)


def _state(text):
    return MarkovState.parse(text)


class TestStrategyFlags(unittest.TestCase):
    def test_names(self):
        self.assertEqual(StrategyFlags().name, 'S')
        self.assertEqual(StrategyFlags(T=True).name, 'T1')
        self.assertEqual(str(StrategyFlags(1, 1, 1)), 'LFT')
        self.assertEqual(len(STRATEGIES), 8)

    def test_parse(self):
        self.assertEqual(parse_strategy('lf'), StrategyFlags(L=True, F=True))
        self.assertEqual(parse_strategy('T'), StrategyFlags(T=True))
        self.assertIsNone(parse_strategy('honest'))
        with self.assertRaises(ValueError):
            parse_strategy('XYZ')


class TestMarkovState(unittest.TestCase):
    def test_parse_str(self):
        for text in ["(0,1)", "(5,3)", "(0',2)", "(0'',1)", "(-1,2)"]:
            self.assertEqual(str(_state(text)), text)

    def test_order(self):
        states = [_state(t) for t in ["(2,1)", "(0,1)", "(-1,2)", "(0',2)",
                                      "(0'',1)", "(-1,1)"]]
        ordered = [str(s) for s in sorted(states, key=lambda s: s.sort_key)]
        self.assertEqual(
            ordered, ["(-1,1)", "(-1,2)", "(0'',1)", "(0',2)", "(0,1)",
                      "(2,1)"])

    def test_validity(self):
        self.assertFalse(MarkovState(Delta.TIE_PUBLISHED, 1).is_valid())
        self.assertFalse(MarkovState(3, 4).is_valid())
        self.assertTrue(MarkovState(3, 3).is_valid())


class TestDecision(unittest.TestCase):
    def setUp(self):
        self.selfish = STRATEGIES['S']

    def test_selfish_column(self):
        cases = [
            ("(0,1)", Event.MP_BLOCK, False, MpAction.HOLD),
            ("(0,1)", Event.HP_BLOCK, False, MpAction.ADOPT_PUBLIC),
            ("(0,2)", Event.MP_BLOCK, False, MpAction.HOLD),
            ("(1,1)", Event.HP_BLOCK, False, MpAction.PUBLISH_ONE),
            ("(2,1)", Event.HP_BLOCK, False, MpAction.PUBLISH_ALL),
            ("(2,2)", Event.HP_FORK, False, MpAction.PUBLISH_ALL),
            ("(5,3)", Event.HP_FORK, False, MpAction.PUBLISH_ONE),
            ("(0',2)", Event.MP_BLOCK, False, MpAction.PUBLISH),
            ("(0',2)", Event.HP_BLOCK, True, MpAction.MINE_ON_NEW_PRIVATE),
            ("(0',3)", Event.HP_BLOCK, False, MpAction.ADOPT_PUBLIC),
        ]
        for text, event, on_private, action in cases:
            self.assertEqual(
                decide_mp_action(self.selfish, _state(text), event,
                                 on_private), action, (text, event))

    def test_lead_stubborn(self):
        flags = STRATEGIES['L']
        self.assertEqual(
            decide_mp_action(flags, _state("(2,1)"), Event.HP_BLOCK),
            MpAction.PUBLISH_ONE)
        self.assertEqual(
            decide_mp_action(flags, _state("(3,2)"), Event.HP_FORK),
            MpAction.PUBLISH_ONE)

    def test_fork_stubborn(self):
        flags = STRATEGIES['F']
        self.assertEqual(
            decide_mp_action(flags, _state("(0',2)"), Event.MP_BLOCK),
            MpAction.HOLD)
        self.assertEqual(
            decide_mp_action(flags, _state("(0',3)"), Event.HP_BLOCK),
            MpAction.ADOPT_PUBLIC)

    def test_trail_stubborn(self):
        flags = STRATEGIES['T1']
        self.assertEqual(
            decide_mp_action(flags, _state("(0',2)"), Event.HP_BLOCK),
            MpAction.MINE_ON_PRIVATE)
        self.assertEqual(
            decide_mp_action(flags, _state("(-1,1)"), Event.MP_BLOCK),
            MpAction.PUBLISH)
        self.assertEqual(
            decide_mp_action(flags, _state("(-1,2)"), Event.HP_BLOCK),
            MpAction.ADOPT_PUBLIC)
        self.assertEqual(
            decide_mp_action(flags, _state("(0'',1)"), Event.HP_FORK),
            MpAction.MINE_ON_PRIVATE)

    def test_flags_do_not_overlap(self):
        # each flag only changes cells the others leave at the default
        probes = [("(2,1)", Event.HP_BLOCK, False),
                  ("(0',2)", Event.MP_BLOCK, False),
                  ("(0',3)", Event.HP_BLOCK, False)]
        for text, event, on_private in probes:
            base = decide_mp_action(self.selfish, _state(text), event,
                                    on_private)
            changed = [
                f for f in 'LFT'
                if decide_mp_action(STRATEGIES['T1' if f == 'T' else f],
                                    _state(text), event, on_private) != base
            ]
            self.assertEqual(len(changed), 1, text)
            combined = decide_mp_action(STRATEGIES['LFT'], _state(text),
                                        event, on_private)
            single = decide_mp_action(
                STRATEGIES['T1' if changed[0] == 'T' else changed[0]],
                _state(text), event, on_private)
            self.assertEqual(combined, single)

    def test_unreachable(self):
        with self.assertRaises(UnreachableState):
            decide_mp_action(self.selfish, _state("(-1,1)"), Event.MP_BLOCK)
        with self.assertRaises(UnreachableState):
            decide_mp_action(self.selfish,
                             MarkovState(Delta.TIE_PUBLISHED, 1),
                             Event.HP_BLOCK)


if __name__ == '__main__':
    unittest.main()
