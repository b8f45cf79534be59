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

from collections import namedtuple

from sml.core.workspace import serializable

__all__ = [
    'StrategyFlags', 'STRATEGIES', 'parse_strategy', 'Delta', 'MarkovState',
    'LEAD', 'TIE_PUBLISHED', 'TIE_ALL_HONEST', 'TRAIL'
]

LEAD = 'lead'
TIE_PUBLISHED = 'tie_published'
TIE_ALL_HONEST = 'tie_all_honest'
TRAIL = 'trail'


@serializable
class StrategyFlags(namedtuple('StrategyFlags', ['L', 'F', 'T'])):
    """
    Lead / equal-Fork / Trail-1 stubborn flags of the malicious pool.

    Args:
        L (bool): publish a single block when threatened at lead 2
        F (bool): withhold the tie breaking block at a published tie
        T (bool): keep mining the private branch one block behind
    """
    __slots__ = ()

    def __new__(cls, L=False, F=False, T=False):
        return super(StrategyFlags, cls).__new__(cls, bool(L), bool(F),
                                                 bool(T))

    @property
    def name(self):
        if not any(self):
            return 'S'
        name = ''.join(k for k, v in zip('LFT', self) if v)
        return 'T1' if name == 'T' else name

    def __str__(self):
        return self.name


STRATEGIES = dict((f.name, f) for f in [
    StrategyFlags(L, F, T)
    for L, F, T in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0),
                    (1, 0, 1), (0, 1, 1), (1, 1, 1)]
])


def parse_strategy(name):
    """
    Map a strategy name (S, L, F, T1, LF, LT, FT, LFT) to its flags.
    `T` is accepted for `T1`; 'honest' maps to None.
    """
    if isinstance(name, StrategyFlags):
        return name
    key = str(name).strip().upper()
    if key == 'HONEST':
        return None
    if key == 'T':
        key = 'T1'
    if key not in STRATEGIES:
        raise ValueError("unknown strategy '{}', expected one of {}".format(
            name, ', '.join(list(STRATEGIES) + ['honest'])))
    return STRATEGIES[key]


class Delta(namedtuple('Delta', ['kind', 'k'])):
    """Length difference between private and public branches."""
    __slots__ = ()

    @classmethod
    def lead(cls, k):
        assert k >= 0, "lead must be non-negative"
        return cls(LEAD, int(k))

    @property
    def rank(self):
        # -1 < 0'' < 0' < 0 < 1 < ...
        if self.kind == TRAIL:
            return 0
        if self.kind == TIE_ALL_HONEST:
            return 1
        if self.kind == TIE_PUBLISHED:
            return 2
        return 3 + self.k

    def __str__(self):
        if self.kind == TRAIL:
            return '-1'
        if self.kind == TIE_ALL_HONEST:
            return "0''"
        if self.kind == TIE_PUBLISHED:
            return "0'"
        return str(self.k)


Delta.TRAIL_MINUS_ONE = Delta(TRAIL, -1)
Delta.TIE_ALL_HONEST = Delta(TIE_ALL_HONEST, 0)
Delta.TIE_PUBLISHED = Delta(TIE_PUBLISHED, 0)


class MarkovState(namedtuple('MarkovState', ['delta', 'n_leaves'])):
    """
    Chain state (delta, N). N counts the public leaves honest pools mine on.
    """
    __slots__ = ()

    def __new__(cls, delta, n_leaves):
        if not isinstance(delta, Delta):
            delta = Delta.lead(delta)
        return super(MarkovState, cls).__new__(cls, delta, int(n_leaves))

    @property
    def sort_key(self):
        return (self.delta.rank, self.n_leaves)

    @property
    def is_lead(self):
        return self.delta.kind == LEAD

    @property
    def lead(self):
        return self.delta.k if self.is_lead else None

    def is_valid(self):
        if not 1 <= self.n_leaves <= 3:
            return False
        if self.delta.kind == TIE_PUBLISHED and self.n_leaves < 2:
            return False
        return True

    def __str__(self):
        return '({},{})'.format(self.delta, self.n_leaves)

    @classmethod
    def parse(cls, text):
        """Inverse of `str()`, e.g. "(0',2)" or "(-1,1)"."""
        body = text.strip()
        assert body[0] == '(' and body[-1] == ')', \
            "malformed state '{}'".format(text)
        d, n = body[1:-1].rsplit(',', 1)
        d = d.strip()
        if d == '-1':
            delta = Delta.TRAIL_MINUS_ONE
        elif d == "0''":
            delta = Delta.TIE_ALL_HONEST
        elif d == "0'":
            delta = Delta.TIE_PUBLISHED
        else:
            delta = Delta.lead(int(d))
        return cls(delta, int(n))


MarkovState.INITIAL = MarkovState(Delta.lead(0), 1)
