"""Deterministic replicate loops.

Replicate ``r`` always draws from stream ``(seed, stream_offset + r)``, so the
stacked result does not depend on how replicates are spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .errors import DomainError
from .heavy_tail import make_rng

__all__ = ["map_replicates"]


def _run_block(fn: Callable, seed: int, indices: range) -> list:
    return [fn(make_rng(seed, r)) for r in indices]


def map_replicates(
    fn: Callable,
    seed: int,
    replicates: int,
    workers: int = 1,
    stream_offset: int = 0,
) -> np.ndarray:
    """Evaluate ``fn(rng_r)`` for ``r < replicates`` and stack the results in order.

    ``fn`` must be picklable when ``workers > 1`` (module-level callables and
    the runner dataclasses are).
    """
    replicates = int(replicates)
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    if int(workers) < 1:
        raise DomainError("workers must be >= 1")
    lo, hi = stream_offset, stream_offset + replicates
    if workers == 1:
        out = _run_block(fn, seed, range(lo, hi))
    else:
        n_blocks = min(replicates, 4 * int(workers))
        edges = np.linspace(lo, hi, n_blocks + 1).astype(int)
        blocks = [range(a, b) for a, b in zip(edges[:-1], edges[1:])]
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            parts = pool.map(_run_block, [fn] * len(blocks), [seed] * len(blocks), blocks)
            out = [x for part in parts for x in part]
    return np.asarray(out)
