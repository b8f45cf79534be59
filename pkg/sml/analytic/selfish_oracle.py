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
Perfect-network selfish mining revenue, used to check the stubborn
chain at theta = 0.
"""

import numpy as np
from scipy import linalg

__all__ = ['selfish_revenue_closed_form', 'selfish_revenue_chain']


def selfish_revenue_closed_form(alpha, gamma=0.5):
    a = float(alpha)
    num = a * (1. - a)**2 * (4. * a + gamma * (1. - 2. * a)) - a**3
    den = 1. - a * (1. + (2. - a) * a)
    return num / den


def selfish_revenue_chain(alpha, gamma=0.5, max_lead=200):
    """
    Relative revenue from the embedded jump chain with per-transition
    block rewards.

    Index 0 is the settled state, 1 the published tie and 1 + k the
    private lead k.
    """
    beta = 1. - alpha
    dim = max_lead + 2
    p = np.zeros((dim, dim))
    # expected blocks each pool gets into the chain per visit
    gain_m = np.zeros(dim)
    gain_h = np.zeros(dim)

    def lead(k):
        return 1 + k if k > 0 else 0

    p[0, lead(1)] += alpha
    p[0, 0] += beta
    gain_h[0] = beta
    # tie: MP wins both, one each, or honest wins both
    p[1, 0] = 1.
    gain_m[1] = 2. * alpha + beta * gamma
    gain_h[1] = beta * gamma + 2. * beta * (1. - gamma)
    for k in range(1, max_lead + 1):
        i = lead(k)
        p[i, lead(min(k + 1, max_lead))] += alpha
        if k == 1:
            p[i, 1] += beta
        elif k == 2:
            p[i, 0] += beta
            gain_m[i] = 2. * beta
        else:
            p[i, lead(k - 1)] += beta
            gain_m[i] = beta

    a = p.T - np.eye(dim)
    a[-1, :] = 1.
    b = np.zeros(dim)
    b[-1] = 1.
    pi = linalg.solve(a, b)
    total_m = float(pi.dot(gain_m))
    return total_m / (total_m + float(pi.dot(gain_h)))
