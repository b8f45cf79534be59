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

import collections
import datetime
import time

import numpy as np

__all__ = ['SmoothedValue', 'ProgressStats']


class SmoothedValue(object):
    """Window median and running mean of a metric."""

    def __init__(self, window_size):
        super(SmoothedValue, self).__init__()
        self.window = collections.deque(maxlen=window_size)
        self.total = 0.
        self.count = 0

    def add(self, value):
        self.window.append(value)
        self.total += value
        self.count += 1

    @property
    def median(self):
        return float(np.median(self.window)) if self.window else 0.

    @property
    def mean(self):
        return self.total / self.count if self.count else 0.


class ProgressStats(object):
    """
    Smoothed per-task metrics and the time left over a known number of
    tasks.

    Args:
        window_size (int): tasks covered by the median
        keys (list): metric names, in log order
        total (int): number of tasks
    """

    def __init__(self, window_size, keys, total):
        super(ProgressStats, self).__init__()
        self.metrics = collections.OrderedDict(
            (key, SmoothedValue(window_size)) for key in keys)
        self.task_time = SmoothedValue(window_size)
        self.total = total
        self.done = 0
        self.last = time.time()

    def update(self, values):
        now = time.time()
        self.task_time.add(now - self.last)
        self.last = now
        self.done += 1
        for key, metric in self.metrics.items():
            if key in values:
                metric.add(values[key])

    def eta(self):
        left = max(self.total - self.done, 0)
        return str(datetime.timedelta(seconds=int(self.task_time.mean *
                                                  left)))

    def log(self):
        return ', '.join('{}: {:.6f}'.format(key, metric.median)
                         for key, metric in self.metrics.items()
                         if metric.count)
