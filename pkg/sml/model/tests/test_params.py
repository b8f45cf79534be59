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

from sml.errors import (AlphaOutOfRange, ThetaOutOfRange,
                        InconsistentForkTable)
from sml.model import ModelParams, validate_params, ModelConfig


class TestParams(unittest.TestCase):
    def test_derived_rates(self):
        p = validate_params({'alpha': 0.3, 'theta': 0.05})
        self.assertAlmostEqual(p.beta, 0.7, places=15)
        self.assertAlmostEqual(p.p_beta1, 0.665, places=15)
        self.assertAlmostEqual(p.beta2, 0.035, places=15)
        self.assertAlmostEqual(p.gamma[2], 0.5)
        self.assertAlmostEqual(p.g_AH[2], 0.5)
        self.assertAlmostEqual(p.g_A[3] + p.g_AH[3] + p.g_H[3], 1.)
        self.assertLess(abs(p.total_rate - 1.), 1e-15)

    def test_no_forks(self):
        p = validate_params({'alpha': 0.3, 'theta': 0.})
        self.assertEqual(p.beta2, 0.)
        self.assertAlmostEqual(p.p_beta1, 0.7)

    def test_ranges(self):
        with self.assertRaises(AlphaOutOfRange):
            validate_params({'alpha': 0.6, 'theta': 0.})
        with self.assertRaises(AlphaOutOfRange):
            validate_params({'alpha': 0., 'theta': 0.})
        with self.assertRaises(ThetaOutOfRange):
            validate_params({'alpha': 0.2, 'theta': 1.})
        with self.assertRaises(ValueError):
            validate_params({'alpha': 0.2, 'theta': 0., 'delta_max': 2})

    def test_delta_max_is_strict(self):
        for bad in (0, None, 3.5, '40', True):
            with self.assertRaises(ValueError, msg=repr(bad)):
                validate_params({'alpha': 0.2, 'delta_max': bad})
        p = validate_params({'alpha': 0.2, 'delta_max': 40.})
        self.assertEqual(p.delta_max, 40)
        self.assertIsInstance(p.delta_max, int)

    def test_block_rates(self):
        p = validate_params({'alpha': 0.3, 'theta': 0.05, 'rates': 'block'})
        self.assertEqual(p.rates, 'block')
        self.assertAlmostEqual(p.p_beta1, 0.7 * 0.9, places=15)
        self.assertAlmostEqual(p.beta2, 0.035, places=15)
        # a fork adds two blocks, so the block rate stays at one
        self.assertAlmostEqual(p.alpha + p.p_beta1 + 2. * p.beta2, 1.,
                               places=15)
        self.assertAlmostEqual(p.total_rate, 1. - 0.035, places=15)
        self.assertAlmostEqual(p.event_prob(p.alpha), 0.3 / 0.965,
                               places=15)
        self.assertEqual(validate_params({'alpha': 0.3}).rates, 'event')
        with self.assertRaises(ThetaOutOfRange):
            validate_params({'alpha': 0.3, 'theta': 0.5, 'rates': 'block'})
        with self.assertRaises(ValueError):
            validate_params({'alpha': 0.3, 'rates': 'blocks'})

    def test_fork_table(self):
        with self.assertRaises(InconsistentForkTable):
            validate_params({
                'alpha': 0.2,
                'theta': 0.1,
                'g': {'A': {2: 0.5}}
            })
        p = validate_params({
            'alpha': 0.2,
            'theta': 0.1,
            'gamma': {2: 0.6},
            'g': {'A': {2: 0.3}, 'AH': {2: 0.5}, 'H': {2: 0.2}}
        })
        self.assertEqual(p.fork_prob('H', 2), 0.2)
        self.assertEqual(p.gamma[2], 0.6)

    def test_config(self):
        cfg = ModelConfig(alpha=0.25, theta=0.02)
        p = cfg.params(alpha=0.4)
        self.assertEqual(p.alpha, 0.4)
        self.assertEqual(p.theta, 0.02)
        self.assertEqual(p.delta_max, 30)
        self.assertEqual(p.rates, 'event')
        p = ModelConfig(rates='block').params(theta=0.1)
        self.assertAlmostEqual(p.p_beta1, 0.7 * 0.8, places=15)
        self.assertIsInstance(ModelParams.derive(0.1, 0.), ModelParams)


if __name__ == '__main__':
    unittest.main()
