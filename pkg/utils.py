import os
import time
import logging
from contextlib import contextmanager
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


def configure_logging(level="INFO"):
    """Set up root logging once for CLI and server entry points."""
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def worker_count(threads):
    """0 means one worker per CPU."""
    if threads and threads > 0:
        return threads
    return os.cpu_count() or 1


def ordered_map(fn, items, threads=1):
    """Map `fn` over `items` on a bounded pool; results come back in input order."""
    workers = worker_count(threads)
    if workers == 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, items)


@contextmanager
def timed(timings, name):
    """Record wall time of a block into `timings[name]` (seconds)."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = time.perf_counter() - start
        logger.debug(f"{name} took {timings[name]:.3f}s")
