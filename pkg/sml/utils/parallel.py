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
# function:
#   map a function over a list of tasks with thread or process workers,
#   results come back in task order

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function

import sys
import uuid
import queue
import logging
import traceback

logger = logging.getLogger(__name__)

__all__ = ['EndSignal', 'TaskError', 'ParallelMap']


class EndSignal(object):
    def __init__(self, errno=0, errmsg=''):
        self.errno = errno
        self.errmsg = errmsg


class TaskError(object):
    """Failure of a single task, returned in place of its result."""

    def __init__(self, index, errmsg, exc=None):
        self.index = index
        self.errmsg = errmsg
        self.exc = exc

    def __repr__(self):
        return 'TaskError({}, {!r})'.format(self.index, self.errmsg)


def _consume(id, fn, inq, outq):
    """Fetch tasks from 'inq', run them and put results to 'outq'"""
    while True:
        item = inq.get()
        if isinstance(item, EndSignal):
            outq.put(item)
            break
        idx, task = item
        try:
            outq.put((idx, fn(task)))
        except Exception as e:
            logger.debug("consumer[{}] task {} failed: {}".format(id, idx,
                                                                  e))
            outq.put((idx, TaskError(idx, "{}: {}".format(
                type(e).__name__, e), e)))
    logger.debug("consumer[{}] exits".format(id))


class ParallelMap(object):
    """
    Run `fn` over tasks with multiple workers (threads or processes).

    Args:
        fn (callable): task function, must be picklable with processes
        worker_num (int): number of workers, <= 1 runs inline
        use_process (bool): use processes instead of threads
        poll_interval (float): seconds between liveness checks of the
            workers while no result arrives

    Notes:
        a task raising an exception yields a TaskError at its position,
        so does every task lost with a worker that died
    """

    def __init__(self, fn, worker_num=1, use_process=False,
                 poll_interval=1.):
        super(ParallelMap, self).__init__()
        if use_process and sys.platform == "win32":
            logger.info("Use multi-thread workers instead of "
                        "multi-process workers on Windows.")
            use_process = False
        self._fn = fn
        self._worker_num = max(int(worker_num), 1)
        self._use_process = use_process
        self._poll_interval = poll_interval

    def __call__(self, tasks, callback=None):
        tasks = list(tasks)
        if self._worker_num == 1 or len(tasks) <= 1:
            return self._run_inline(tasks, callback)

        if self._use_process:
            from multiprocessing import Process as Worker
            from multiprocessing import Queue
        else:
            from queue import Queue
            from threading import Thread as Worker
        inq = Queue()
        outq = Queue()
        worker_num = min(self._worker_num, len(tasks))
        id = str(uuid.uuid4())[-3:]
        workers = []
        for i in range(worker_num):
            w = Worker(
                target=_consume,
                args=('consumer-' + id + '_' + str(i), self._fn, inq, outq))
            w.daemon = True
            w.start()
            workers.append(w)
        for item in enumerate(tasks):
            inq.put(item)
        for _ in range(worker_num):
            inq.put(EndSignal())

        results = [None] * len(tasks)
        received = [False] * len(tasks)
        stopped = 0
        done = 0
        while stopped < worker_num:
            try:
                item = outq.get(timeout=self._poll_interval)
            except queue.Empty:
                if any(w.is_alive() for w in workers):
                    continue
                logger.error("{} of {} workers died without finishing"
                             .format(worker_num - stopped, worker_num))
                break
            if isinstance(item, EndSignal):
                stopped += 1
                continue
            idx, result = item
            results[idx] = result
            received[idx] = True
            done += 1
            if callback is not None:
                callback(idx, result, done)
        for w in workers:
            w.join()
        for idx, ok in enumerate(received):
            if not ok:
                results[idx] = TaskError(idx, "worker exited before "
                                         "returning a result")
        return results

    def _run_inline(self, tasks, callback):
        results = []
        for idx, task in enumerate(tasks):
            try:
                result = self._fn(task)
            except Exception as e:
                logger.debug(traceback.format_exc())
                result = TaskError(idx, "{}: {}".format(
                    type(e).__name__, e), e)
            results.append(result)
            if callback is not None:
                callback(idx, result, idx + 1)
        return results
