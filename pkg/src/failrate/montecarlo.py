"""Reproducible chunked Monte Carlo.

Trials are cut into fixed-size chunks. Chunk ``i`` of stream ``s`` draws from
``np.random.SeedSequence(seed, spawn_key=(s, i))``, so every trial sees the same
random numbers no matter how many workers run the chunks or in what order they
finish. Results are reassembled in chunk order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 1 << 15


def chunk_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def chunk_sizes(trials: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(trials, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunks(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    trials: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
    chunk: int = CHUNK,
) -> np.ndarray:
    """Concatenate ``fn(rng, size)`` over all chunks of ``trials``.

    ``fn`` must return an array whose first axis has length ``size``.
    numpy releases the GIL inside its samplers, so threads give real speedup.
    """
    sizes = chunk_sizes(trials, chunk)
    jobs = [(chunk_rng(seed, stream, i), size) for i, size in enumerate(sizes)]
    if workers <= 1 or len(jobs) <= 1:
        parts = [fn(rng, size) for rng, size in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)
