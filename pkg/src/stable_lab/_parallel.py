"""Seeded substreams and a thread-capped block map.

Every batch is cut into fixed-size blocks.  Block ``i`` draws from the stream
seeded by ``(seed, i)``, so results do not depend on how many workers ran.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 4096
THREADS_ENV = "STABLE_LAB_THREADS"


def _key(seed):
    if isinstance(seed, (tuple, list)):
        return [k for part in seed for k in _key(part)]
    return [int(seed)]


def substream(seed, index):
    """Generator for block ``index`` of the batch rooted at ``seed``.

    ``seed`` may be an int or a tuple of ints (e.g. ``(seed, m)``).
    """
    return np.random.default_rng(np.random.SeedSequence(_key(seed) + [int(index)]))


def as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def max_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def block_sizes(n, block=BLOCK_SIZE):
    full, rest = divmod(int(n), block)
    sizes = [block] * full
    if rest:
        sizes.append(rest)
    return sizes


def map_blocks(func, n, seed, block=BLOCK_SIZE):
    """Call ``func(size, rng)`` once per block and return the results in block order."""
    sizes = block_sizes(n, block)
    jobs = [(size, substream(seed, i)) for i, size in enumerate(sizes)]
    workers = min(max_threads(), len(jobs)) or 1
    if workers == 1:
        return [func(size, rng) for size, rng in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: func(*job), jobs))
