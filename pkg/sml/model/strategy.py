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

from enum import Enum

from sml.errors import UnreachableState
from .state import LEAD, TIE_PUBLISHED, TIE_ALL_HONEST, TRAIL

__all__ = ['Event', 'MpAction', 'decide_mp_action']


class Event(Enum):
    MP_BLOCK = 'mp_block'
    HP_BLOCK = 'hp_block'
    HP_FORK = 'hp_fork'


class MpAction(Enum):
    HOLD = 'hold'
    PUBLISH_ONE = 'publish_one'
    PUBLISH_ALL = 'publish_all'
    PUBLISH = 'publish'
    MINE_ON_PRIVATE = 'mine_on_private'
    ADOPT_PUBLIC = 'adopt_public'
    MINE_ON_NEW_PRIVATE = 'mine_on_new_private'


def _unreachable(flags, state, event):
    raise UnreachableState("state {} with event {} is unreachable under "
                           "strategy {}".format(state, event.value, flags))


def decide_mp_action(flags, state, event, on_private=False):
    """
    Decision table of the malicious pool.

    Selfish mining is the default column; the L, F and T flags replace it
    in the cells they deviate in, and never in the same cell.

    Args:
        flags (StrategyFlags): strategy of the malicious pool
        state (MarkovState): state right before the event
        event (Event): block generation event
        on_private (bool): honest block(s) of the event landed on the
            private-aligned leaf (only looked at for published ties)

    Returns:
        MpAction
    """
    if not state.is_valid():
        _unreachable(flags, state, event)
    kind = state.delta.kind

    if event == Event.MP_BLOCK:
        if kind == LEAD:
            return MpAction.HOLD
        if kind == TIE_PUBLISHED:
            return MpAction.HOLD if flags.F else MpAction.PUBLISH
        # 0'' and -1 only exist for trail-stubborn pools
        if not flags.T:
            _unreachable(flags, state, event)
        return MpAction.PUBLISH

    if kind == LEAD:
        k = state.delta.k
        if k == 0:
            return MpAction.ADOPT_PUBLIC
        if k == 2:
            return MpAction.PUBLISH_ONE if flags.L else MpAction.PUBLISH_ALL
        return MpAction.PUBLISH_ONE
    if kind == TIE_PUBLISHED:
        if on_private:
            return MpAction.MINE_ON_NEW_PRIVATE
        return MpAction.MINE_ON_PRIVATE if flags.T else MpAction.ADOPT_PUBLIC
    if not flags.T:
        _unreachable(flags, state, event)
    if kind == TIE_ALL_HONEST:
        return MpAction.MINE_ON_PRIVATE
    assert kind == TRAIL
    # two blocks behind: the trail race is lost
    return MpAction.ADOPT_PUBLIC
