# Copyright (c) 2026 The riseff Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import multiprocessing
import queue
import time

from swift.common.utils import get_logger

#: logger name when a conf does not set log_name
LOG_NAME = 'riseff'


class PlacementError(Exception):
    def __init__(self, pair_index=None, attempts=None):
        self.pair_index = pair_index
        self.attempts = attempts
        super(PlacementError, self).__init__(
            'could not place receiver %s within %s attempts' %
            (pair_index, attempts))


class CoLocatedError(ValueError):
    def __init__(self, distance=None):
        self.distance = distance
        super(CoLocatedError, self).__init__(
            'nodes are co-located (distance %r)' % (distance,))


class DimensionMismatch(ValueError):
    pass


class NotHermitian(ValueError):
    def __init__(self, error=None):
        self.error = error
        super(NotHermitian, self).__init__(
            'matrix is not Hermitian (max deviation %r)' % (error,))


class NotPositiveSemidefinite(ValueError):
    def __init__(self, min_eigenvalue=None):
        self.min_eigenvalue = min_eigenvalue
        super(NotPositiveSemidefinite, self).__init__(
            'matrix is not positive semidefinite (min eigenvalue %r)' %
            (min_eigenvalue,))


class ConfigError(ValueError):
    def __init__(self, message, path=None):
        self.path = path
        super(ConfigError, self).__init__(message)


def resolve_logger(logger, log_route):
    """Accept either a logger or a (conf,) tuple to build one from."""
    if logger is None:
        logger = ({},)
    if isinstance(logger, tuple):
        conf = dict(logger[0] or {})
        conf.setdefault('log_name', LOG_NAME)
        return get_logger(conf, *logger[1:], log_route=log_route)
    return logger


def config_list(value, cast=float):
    """Parse a comma separated config value."""
    if isinstance(value, (list, tuple)):
        return [cast(x) for x in value]
    return [cast(x.strip()) for x in str(value).split(',') if x.strip()]


def multiprocess_collate(processor_klass, processor_args, processor_method,
                         items_to_process, worker_count, logger=None):
    '''
    Run processor_klass(*processor_args).processor_method(*item) for every
    item and yield (item, result) pairs as they complete.

    With worker_count <= 1 everything runs in the calling process. Items
    whose processing raised are logged and skipped.
    '''
    if worker_count <= 1:
        p = processor_klass(*processor_args)
        method = getattr(p, processor_method)
        for item in items_to_process:
            try:
                ret = method(*item)
            except Exception as err:
                if logger:
                    logger.exception(err)
                continue
            yield item, ret
        return
    results = []
    in_queue = multiprocessing.Queue()
    out_queue = multiprocessing.Queue()
    for _junk in range(worker_count):
        p = multiprocessing.Process(target=collate_worker,
                                    args=(processor_klass,
                                          processor_args,
                                          processor_method,
                                          in_queue,
                                          out_queue))
        p.start()
        results.append(p)
    for x in items_to_process:
        in_queue.put(x)
    for _junk in range(worker_count):
        in_queue.put(None)  # tell the worker to end
    while True:
        try:
            item, data = out_queue.get_nowait()
        except queue.Empty:
            time.sleep(.01)
        else:
            if isinstance(data, Exception):
                if logger:
                    logger.exception(data)
            else:
                yield item, data
        if not any(r.is_alive() for r in results) and out_queue.empty():
            # all the workers are done and nothing is in the queue
            break


def collate_worker(processor_klass, processor_args, processor_method, in_queue,
                   out_queue):
    '''worker process for multiprocess_collate'''
    p = processor_klass(*processor_args)
    while True:
        item = in_queue.get()
        if item is None:
            # no more work to process
            break
        try:
            method = getattr(p, processor_method)
        except AttributeError:
            return
        try:
            ret = method(*item)
        except Exception as err:
            ret = err
        out_queue.put((item, ret))
