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

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import logging
import os
import sys

logger = logging.getLogger(__name__)

__all__ = ['check_threads', 'check_writable']


def _env_threads():
    env = os.environ.get('SML_THREADS')
    if not env:
        return None
    try:
        value = int(env)
        if value > 0:
            return value
    except ValueError:
        pass
    logger.warning("ignoring SML_THREADS={!r}, expected a positive "
                   "integer".format(env))
    return None


def check_threads(workers=0):
    """
    Resolve the worker count. SML_THREADS caps an explicit positive value
    and replaces a missing one, the CPU count is the last fallback.
    """
    cap = _env_threads()
    if workers and workers > 0:
        if cap is not None and cap < workers:
            logger.info("capping {} workers to SML_THREADS={}".format(
                workers, cap))
            return cap
        return int(workers)
    if cap is not None:
        return cap
    return os.cpu_count() or 1


def check_writable(path):
    """
    Log error and exit when the output directory of `path` cannot be
    written.
    """
    folder = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(folder):
        os.makedirs(folder)
    if not os.access(folder, os.W_OK):
        logger.error("output directory {} is not writable".format(folder))
        sys.exit(1)
