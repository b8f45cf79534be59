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
import math
import numbers
from collections import namedtuple
from typing import Optional

from sml.core.workspace import register
from sml.errors import AlphaOutOfRange, ThetaOutOfRange, InconsistentForkTable

__all__ = ['ModelParams', 'validate_params', 'ModelConfig', 'FORK_CLASSES']

logger = logging.getLogger(__name__)

FORK_CLASSES = ('A', 'AH', 'H')
LEAF_COUNTS = (1, 2, 3)
ROW_TOLERANCE = 1e-12
RATE_READINGS = ('event', 'block')


class ModelParams(
        namedtuple('ModelParams', [
            'alpha', 'beta', 'theta', 'p_beta1', 'beta2', 'gamma', 'g_A',
            'g_AH', 'g_H', 'delta_max', 'rates'
        ])):
    """
    Rates and placement probabilities of the model.

    `gamma`, `g_A`, `g_AH` and `g_H` are tuples indexed by the number of
    leaves N (index 0 unused).

    `rates` names how honest events are counted. Under 'event' every
    honest event is one unit of rate, p_beta1 = beta(1 - theta) and the
    rates sum to 1. Under 'block' the block production rate is 1, a
    forking event yields two blocks, p_beta1 = beta(1 - 2 theta) and the
    event rates sum to 1 - beta theta.
    """
    __slots__ = ()

    @classmethod
    def derive(cls,
               alpha,
               theta,
               gamma=None,
               g=None,
               delta_max=30,
               rates='event'):
        """Derive all rates, no range checks."""
        beta = 1. - alpha
        gamma_t = [0., 1., 1. / 2, 1. / 3]
        if gamma is not None:
            for n, v in _as_table(gamma, 'gamma').items():
                gamma_t[n] = float(v)
        table = {c: [0.] * 4 for c in FORK_CLASSES}
        for n in LEAF_COUNTS:
            gm = gamma_t[n]
            table['A'][n] = gm * gm
            table['AH'][n] = 2. * gm * (1. - gm)
            table['H'][n] = (1. - gm) * (1. - gm)
        if g is not None:
            for c, row in g.items():
                if c not in table:
                    raise InconsistentForkTable(
                        "unknown fork class '{}', expected {}".format(
                            c, FORK_CLASSES))
                for n, v in _as_table(row, 'g_' + c).items():
                    table[c][n] = float(v)
        single = 1. - 2. * theta if rates == 'block' else 1. - theta
        return cls(alpha, beta, theta, beta * single, beta * theta,
                   tuple(gamma_t), tuple(table['A']), tuple(table['AH']),
                   tuple(table['H']), int(delta_max), rates)

    def fork_prob(self, klass, n):
        return getattr(self, 'g_' + klass)[n]

    @property
    def total_rate(self):
        return self.alpha + self.p_beta1 + self.beta2

    def event_prob(self, rate):
        """Probability that the next event has the given rate."""
        return rate / self.total_rate


def _as_table(value, name):
    """Accept {N: p}, [p1, p2, p3] or a scalar applied to N in {2, 3}."""
    if isinstance(value, dict):
        out = {int(k): v for k, v in value.items()}
    elif isinstance(value, (list, tuple)):
        assert len(value) == 3, "{} needs one value per N in 1..3".format(
            name)
        out = dict(zip(LEAF_COUNTS, value))
    else:
        out = {2: value, 3: value}
    for n in out:
        if n not in LEAF_COUNTS:
            raise InconsistentForkTable("{}: N must be in 1..3, got {}".format(
                name, n))
    return out


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError("{} must be a number, got {!r}".format(name, value))
    if not math.isfinite(value):
        raise ValueError("{} must be finite, got {}".format(name, value))
    return value


def _depth(value):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if not (isinstance(value, float) and value.is_integer()):
            raise ValueError(
                "delta_max must be an integer, got {!r}".format(value))
    value = int(value)
    if value < 3:
        raise ValueError("delta_max must be >= 3, got {}".format(value))
    return value


def validate_params(raw):
    """
    Validate raw model settings and derive the full parameter set.

    Args:
        raw (dict): alpha, theta and optionally gamma, g, delta_max, rates

    Returns:
        ModelParams
    """
    alpha = _finite('alpha', raw['alpha'])
    theta = _finite('theta', raw.get('theta', 0.))
    delta_max = _depth(raw.get('delta_max', 30))
    rates = raw.get('rates') or 'event'
    if rates not in RATE_READINGS:
        raise ValueError("rates must be one of {}, got {!r}".format(
            RATE_READINGS, rates))
    if not 0. < alpha < .5:
        raise AlphaOutOfRange(
            "alpha must lie in (0, 0.5), got {}".format(alpha))
    if not 0. <= theta < 1.:
        raise ThetaOutOfRange(
            "theta must lie in [0, 1), got {}".format(theta))
    if rates == 'block' and theta >= .5:
        raise ThetaOutOfRange(
            "theta must lie in [0, 0.5) when counting blocks, got {}".format(
                theta))

    params = ModelParams.derive(alpha, theta, raw.get('gamma'),
                                raw.get('g'), delta_max, rates)
    for n in LEAF_COUNTS:
        gm = params.gamma[n]
        if not 0. <= gm <= 1.:
            raise InconsistentForkTable("gamma({}) = {} is not a "
                                        "probability".format(n, gm))
        row = [params.fork_prob(c, n) for c in FORK_CLASSES]
        if any(p < 0. for p in row) or abs(sum(row) - 1.) > ROW_TOLERANCE:
            raise InconsistentForkTable(
                "fork placement row N={} sums to {!r}, expected 1".format(
                    n, sum(row)))
    logger.debug("model params: alpha={}, theta={}, p_beta1={}, beta2={}, "
                 "rates={}".format(alpha, theta, params.p_beta1,
                                   params.beta2, rates))
    return params


@register
class ModelConfig(object):
    """
    Model settings shared by both engines

    Args:
        alpha (float): computing power of the malicious pool
        theta (float): unintentional fork probability per honest event
        gamma (dict): N -> probability an honest block lands on the
            private-aligned leaf, default 1/N
        g (dict): fork placement table {A|AH|H: {N: probability}},
            default derived from gamma
        delta_max (int): truncation depth of the chain
        rates (str): 'event' counts every honest event once, 'block'
            normalizes the block rate so a forking event counts twice
    """
    __category__ = 'model'

    def __init__(self,
                 alpha: float=0.3,
                 theta: float=0.01,
                 gamma: Optional[dict]=None,
                 g: Optional[dict]=None,
                 delta_max: int=30,
                 rates: str='event'):
        super(ModelConfig, self).__init__()
        self.alpha = alpha
        self.theta = theta
        self.gamma = gamma
        self.g = g
        self.delta_max = delta_max
        self.rates = rates

    def params(self, alpha=None, theta=None):
        return validate_params({
            'alpha': self.alpha if alpha is None else alpha,
            'theta': self.theta if theta is None else theta,
            'gamma': self.gamma,
            'g': self.g,
            'delta_max': self.delta_max,
            'rates': self.rates,
        })
