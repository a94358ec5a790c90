# analysis_app/workers.py
"""Fixed pool of worker threads fed through a queue.

Numerical kernels in numpy/scipy release the GIL, so independent scan cells
and reduction probes overlap. Results come back tagged with their input index
and are assembled by the calling thread only.
"""
import logging
import queue
import threading

from common.errors import ConfigError
from common.protocol import MAX_WORKERS

logger = logging.getLogger(__name__)

_STOP = object()


class Worker(threading.Thread):
    def __init__(self, fn, tasks, results, name):
        super().__init__(name=name, daemon=True)
        self.fn = fn
        self.tasks = tasks
        self.results = results

    def run(self):
        while True:
            task = self.tasks.get()
            if task is _STOP:
                break
            index, item = task
            try:
                self.results.put((index, self.fn(item), None))
            except Exception as e:  # handed back to the caller with its index
                logger.debug("[%s] item %d failed: %s", self.name, index, e)
                self.results.put((index, None, e))


def run_ordered(fn, items, max_workers=MAX_WORKERS):
    """Apply fn to every item; returns [(result, error)] in input order."""
    items = list(items)
    if isinstance(max_workers, bool) or int(max_workers) != max_workers or max_workers < 1:
        raise ConfigError(f"max_workers must be an integer >= 1, got {max_workers}", field="workers")
    if not items:
        return []
    if max_workers == 1:
        out = []
        for item in items:
            try:
                out.append((fn(item), None))
            except Exception as e:
                out.append((None, e))
        return out

    tasks = queue.Queue()
    results = queue.Queue()
    workers = [Worker(fn, tasks, results, f"worker-{i}") for i in range(min(max_workers, len(items)))]
    for index, item in enumerate(items):
        tasks.put((index, item))
    for _ in workers:
        tasks.put(_STOP)
    for w in workers:
        w.start()

    ordered = [None] * len(items)
    for _ in range(len(items)):
        index, result, error = results.get()
        ordered[index] = (result, error)
    for w in workers:
        w.join()
    logger.debug("%d items done on %d workers", len(items), len(workers))
    return ordered
