"""Replicate execution.

Replicate ``j`` of an experiment tagged ``tag`` always uses the seed
``derive_seed(root_seed, tag, j)``, and results are collected into slots
indexed by ``j``.  The worker count therefore never changes any output.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

from .graphs import build
from .rng import derive_seed


def replicate_seeds(root_seed: int, tag: str, n: int) -> list[int]:
    return [derive_seed(root_seed, tag, j) for j in range(n)]


@lru_cache(maxsize=8)
def _graph(spec_str: str):
    return build(spec_str)


def _run_chunk(fn, spec_str, seeds, kwargs):
    g = _graph(spec_str)
    return [fn(g, s, **kwargs) for s in seeds]


def map_replicates(fn, g, seeds, workers: int = 1, **kwargs) -> list:
    """``[fn(g, seed, **kwargs) for seed in seeds]``, possibly across processes.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    seeds = list(seeds)
    workers = max(1, int(workers))
    if workers == 1 or len(seeds) < 2:
        return [fn(g, s, **kwargs) for s in seeds]
    n_chunks = min(len(seeds), 4 * workers)
    bounds = [round(i * len(seeds) / n_chunks) for i in range(n_chunks + 1)]
    chunks = [seeds[a:b] for a, b in zip(bounds, bounds[1:])]
    spec_str = str(g.spec)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_run_chunk, [fn] * len(chunks), [spec_str] * len(chunks), chunks, [kwargs] * len(chunks)))
    return [r for part in parts for r in part]


def default_workers() -> int:
    return int(os.environ.get("PERCOLAB_WORKERS", "1"))
