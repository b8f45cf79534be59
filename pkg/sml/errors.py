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

__all__ = [
    'SmlError', 'AlphaOutOfRange', 'ThetaOutOfRange', 'InconsistentForkTable',
    'UnreachableState', 'InconsistentSpace', 'SingularSystem',
    'SingularTieSystem', 'NonTermination', 'UnmappableTree',
    'MissingEngineData', 'IncompleteSlice'
]


class SmlError(Exception):
    """Base class of all errors raised by the toolkit."""


class AlphaOutOfRange(SmlError, ValueError):
    pass


class ThetaOutOfRange(SmlError, ValueError):
    pass


class InconsistentForkTable(SmlError, ValueError):
    pass


class UnreachableState(SmlError):
    """(state, event) pair outside the decision table of the strategy."""


class InconsistentSpace(SmlError):
    """A transition leads outside the enumerated state space."""


class SingularSystem(SmlError):
    pass


class SingularTieSystem(SmlError):
    pass


class NonTermination(SmlError):
    """Simulation round exceeded its event budget."""


class UnmappableTree(SmlError):
    pass


class MissingEngineData(SmlError):
    pass


class IncompleteSlice(SmlError):
    pass
